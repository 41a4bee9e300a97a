#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ifenn/errors.hpp"
#include "ifenn/training.hpp"

namespace ifenn::train {

std::string to_string(NormMode m) {
  switch (m) {
    case NormMode::kMinMax01: return "minmax01";
    case NormMode::kMinMax11: return "minmax11";
    case NormMode::kStandardize: return "standardize";
  }
  return "?";
}

NormMode norm_mode_from_string(const std::string& name) {
  if (name == "minmax01") return NormMode::kMinMax01;
  if (name == "minmax11") return NormMode::kMinMax11;
  if (name == "standardize") return NormMode::kStandardize;
  throw InvalidArgument("unknown normalization mode: " + name);
}

ChannelStats fit_channel(NormMode mode, std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("cannot fit normalization on an empty channel");
  ChannelStats s;
  if (mode == NormMode::kStandardize) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= double(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= double(values.size());
    s.shift = mean;
    s.scale = var > 0.0 ? std::sqrt(var) : 1.0;
    return s;
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  if (mode == NormMode::kMinMax01) {
    s.shift = *lo;
    s.scale = range > 0.0 ? range : 1.0;
  } else {
    // 2 (x - min) / range - 1 = (x - mid) / (range / 2)
    s.shift = 0.5 * (*lo + *hi);
    s.scale = range > 0.0 ? 0.5 * range : 1.0;
  }
  return s;
}

void fit_normalization(Dataset& ds, NormMode mode) {
  if (ds.train.empty()) throw InvalidArgument("normalization needs a non-empty training split");
  std::vector<double> load, strain;
  std::vector<std::vector<double>> labels(ds.n_c);
  for (std::size_t i : ds.train) {
    const auto l = ds.case_load(i), s = ds.case_strain(i), y = ds.case_labels(i);
    load.insert(load.end(), l.begin(), l.end());
    strain.insert(strain.end(), s.begin(), s.end());
    for (std::size_t k = 0; k < y.size(); ++k) labels[k % ds.n_c].push_back(y[k]);
  }
  NormalizationSpec spec;
  spec.mode = mode;
  spec.load = fit_channel(mode, load);
  spec.strain = fit_channel(mode, strain);
  for (const auto& c : labels) spec.labels.push_back(fit_channel(mode, c));
  ds.normalization = spec;
}

void save_normalization(const std::string& path, const NormalizationSpec& spec) {
  std::ofstream os(path);
  if (!os) throw InvalidArgument("cannot write " + path);
  os.precision(17);
  os << "mode = " << to_string(spec.mode) << "\n";
  os << "load = " << spec.load.shift << " " << spec.load.scale << "\n";
  os << "strain = " << spec.strain.shift << " " << spec.strain.scale << "\n";
  os << "components = " << spec.labels.size() << "\n";
  for (std::size_t c = 0; c < spec.labels.size(); ++c) {
    os << "label" << c << " = " << spec.labels[c].shift << " " << spec.labels[c].scale << "\n";
  }
}

NormalizationSpec load_normalization(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw NotFound("normalization file " + path + " not found");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '#') continue;
    if (eq == std::string::npos) throw FormatError("bad normalization line: " + line);
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(' ') + 1);
    kv[key] = line.substr(eq + 1);
  }
  auto stats = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(path + " lacks " + key);
    std::istringstream vs(it->second);
    ChannelStats c;
    if (!(vs >> c.shift >> c.scale) || c.scale == 0.0) throw FormatError(path + ": bad entry " + key);
    return c;
  };
  NormalizationSpec spec;
  auto mode = kv.find("mode");
  if (mode == kv.end()) throw FormatError(path + " lacks mode");
  std::string m = mode->second;
  m.erase(0, m.find_first_not_of(' '));
  try {
    spec.mode = norm_mode_from_string(m);
  } catch (const InvalidArgument& e) {
    throw FormatError(e.what());
  }
  spec.load = stats("load");
  spec.strain = stats("strain");
  const auto n = kv.count("components") ? std::stoul(kv["components"]) : 0ul;
  for (std::size_t c = 0; c < n; ++c) spec.labels.push_back(stats("label" + std::to_string(c)));
  return spec;
}

}  // namespace ifenn::train
