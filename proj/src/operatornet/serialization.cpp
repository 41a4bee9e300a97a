#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "ifenn/errors.hpp"
#include "ifenn/operatornet.hpp"

namespace ifenn::net {

std::string format_architecture(const ModelConfig& config) {
  std::ostringstream os;
  os << "components = " << config.components << "\n";
  for (std::size_t i = 0; i < config.branches.size(); ++i) {
    const auto& b = config.branches[i];
    os << "branch" << i + 1 << " = input " << b.input_size << " gru " << b.gru_layers << " hidden " << b.hidden
       << " norm " << b.norm_channels << " fc " << b.fc_layers << " out " << b.out_size << "\n";
  }
  const auto& t = config.trunk;
  os << "trunk = input " << t.input_size << " fc " << t.fc_layers << " hidden " << t.hidden << " out " << t.out_size
     << "\n";
  return os.str();
}

namespace {

std::map<std::string, std::size_t> parse_fields(const std::string& value, const std::string& key) {
  std::istringstream is(value);
  std::map<std::string, std::size_t> out;
  std::string name;
  while (is >> name) {
    long long v = -1;
    if (!(is >> v) || v < 0) throw FormatError("architecture entry " + key + ": bad value for " + name);
    out[name] = std::size_t(v);
  }
  return out;
}

std::size_t field(const std::map<std::string, std::size_t>& f, const char* name, const std::string& key) {
  auto it = f.find(name);
  if (it == f.end()) throw FormatError("architecture entry " + key + " lacks " + name);
  return it->second;
}

}  // namespace

ModelConfig parse_architecture(const std::string& text) {
  ModelConfig cfg;
  std::map<std::size_t, BranchConfig> branches;
  bool have_trunk = false;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("architecture line without '=': " + line);
    std::string key = line.substr(0, eq);
    key.erase(std::remove(key.begin(), key.end(), ' '), key.end());
    const std::string value = line.substr(eq + 1);
    if (key == "components") {
      cfg.components = std::stoul(value);
    } else if (key == "trunk") {
      const auto f = parse_fields(value, key);
      cfg.trunk = {field(f, "input", key), field(f, "fc", key), field(f, "hidden", key), field(f, "out", key)};
      have_trunk = true;
    } else if (key.rfind("branch", 0) == 0) {
      const auto f = parse_fields(value, key);
      const std::size_t idx = std::stoul(key.substr(6));
      branches[idx] = {field(f, "input", key), field(f, "gru", key),  field(f, "hidden", key),
                       field(f, "norm", key),  field(f, "fc", key),   field(f, "out", key)};
    } else {
      throw FormatError("unknown architecture key " + key);
    }
  }
  if (!have_trunk) throw FormatError("architecture lacks a trunk entry");
  std::size_t expect = 1;
  for (auto& [idx, b] : branches) {
    if (idx != expect++) throw FormatError("architecture branches are not numbered 1..n");
    cfg.branches.push_back(b);
  }
  cfg.validate();
  return cfg;
}

void OperatorModel::save(const std::string& path) const {
  std::vector<ad::NamedTensor> entries;
  const auto params = parameters();
  const auto names = parameter_names();
  for (std::size_t i = 0; i < params.size(); ++i) {
    entries.push_back({names[i], params[i].shape(), {params[i].data().begin(), params[i].data().end()}});
  }
  const std::size_t C = components();
  entries.push_back({"buffer.output_scale", {C}, out_scale_});
  entries.push_back({"buffer.output_shift", {C}, out_shift_});
  entries.push_back({"buffer.frame_lo", {3}, {frame_lo_.begin(), frame_lo_.end()}});
  entries.push_back({"buffer.frame_hi", {3}, {frame_hi_.begin(), frame_hi_.end()}});
  ad::save_checkpoint(path, entries);

  std::ofstream os(path + ".arch");
  if (!os) throw InvalidArgument("cannot write " + path + ".arch");
  os << "# operator network architecture\n" << format_architecture(config_);
  os << "# parameters = " << parameter_count() << "\n";
}

OperatorModel OperatorModel::load(const std::string& path) {
  std::ifstream arch(path + ".arch");
  if (!arch) throw NotFound("architecture sidecar " + path + ".arch not found");
  std::stringstream text;
  text << arch.rdbuf();
  OperatorModel model(parse_architecture(text.str()), 0);

  const auto entries = ad::load_checkpoint(path);
  std::map<std::string, const ad::NamedTensor*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;
  auto lookup = [&](const std::string& name) -> const ad::NamedTensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("checkpoint " + path + " lacks " + name);
    return *it->second;
  };

  auto params = model.parameters();
  const auto names = model.parameter_names();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = lookup(names[i]);
    if (e.shape != params[i].shape()) {
      throw FormatError("checkpoint entry " + names[i] + " has shape " + ad::to_string(e.shape) + ", expected " +
                        ad::to_string(params[i].shape()));
    }
    std::copy(e.values.begin(), e.values.end(), params[i].mutable_data().begin());
  }
  const auto& scale = lookup("buffer.output_scale");
  const auto& shift = lookup("buffer.output_shift");
  model.set_output_scaling(scale.values, shift.values);
  const auto& lo = lookup("buffer.frame_lo");
  const auto& hi = lookup("buffer.frame_hi");
  if (lo.values.size() != 3 || hi.values.size() != 3) throw FormatError("checkpoint frame buffers must have 3 entries");
  model.frame_lo_ = {lo.values[0], lo.values[1], lo.values[2]};
  model.frame_hi_ = {hi.values[0], hi.values[1], hi.values[2]};
  return model;
}

}  // namespace ifenn::net
