#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "ifenn/binary_io.hpp"
#include "ifenn/errors.hpp"
#include "ifenn/training.hpp"

namespace ifenn::train {
namespace {

constexpr std::uint32_t kDatasetVersion = 1;

struct CaseData {
  bool ok = false;
  std::string error;
  std::vector<double> load, strain, labels;
};

CaseData label_case(const Experiment& e, const LoadCase& c, bool with_u) {
  CaseData d;
  const auto states = simulate_case(e, c);
  const std::size_t nn = e.mesh.node_count(), dim = e.mesh.dim();
  const double z0 = fem::z_offset(e.material);
  for (int k = 0; k < e.n_steps; ++k) {
    const auto& prev = states[k];
    const auto& next = states[k + 1];
    const auto l = e.load_samples(c, next.time);
    const auto s = e.strain_sensors.sample(prev.strain_trace);
    d.load.insert(d.load.end(), l.begin(), l.end());
    d.strain.insert(d.strain.end(), s.begin(), s.end());
    for (std::size_t n = 0; n < nn; ++n) {
      d.labels.push_back(next.z[n] - z0);
      if (with_u) {
        for (std::size_t a = 0; a < dim; ++a) d.labels.push_back(next.u[n * dim + a]);
      }
    }
  }
  d.ok = true;
  return d;
}

std::string join_ids(const std::vector<std::size_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  return os.str();
}

std::vector<std::size_t> parse_ids(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::size_t> out;
  long long v;
  while (is >> v) {
    if (v < 0) throw FormatError("negative index in dataset sidecar");
    out.push_back(std::size_t(v));
  }
  if (!is.eof()) throw FormatError("bad index list in dataset sidecar: " + s);
  return out;
}

std::string format_stats(const ChannelStats& c) {
  std::ostringstream os;
  os.precision(17);
  os << c.shift << " " << c.scale;
  return os.str();
}

ChannelStats parse_stats(const std::string& s) {
  std::istringstream is(s);
  ChannelStats c;
  if (!(is >> c.shift >> c.scale)) throw FormatError("bad normalization entry: " + s);
  return c;
}

}  // namespace

std::span<const double> Dataset::case_load(std::size_t i) const {
  return std::span<const double>(load).subspan(i * n_t * n_l, n_t * n_l);
}

std::span<const double> Dataset::case_strain(std::size_t i) const {
  return std::span<const double>(strain).subspan(i * n_t * n_s, n_t * n_s);
}

std::span<const double> Dataset::case_labels(std::size_t i) const {
  const std::size_t m = n_t * n_n * n_c;
  return std::span<const double>(labels).subspan(i * m, m);
}

std::vector<mesh::Point> Dataset::nodes() const {
  std::vector<mesh::Point> out(n_n, mesh::Point{0.0, 0.0, 0.0});
  for (std::size_t n = 0; n < n_n; ++n)
    for (std::size_t d = 0; d < n_d; ++d) out[n][d] = coords[n * n_d + d];
  return out;
}

std::size_t Dataset::index_of(std::size_t case_id) const {
  auto it = std::find(case_ids.begin(), case_ids.end(), case_id);
  if (it == case_ids.end()) throw NotFound("case id " + std::to_string(case_id) + " is not in the dataset");
  return std::size_t(it - case_ids.begin());
}

void Dataset::validate() const {
  const std::size_t nc = n_cases();
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw FormatError("dataset: " + what);
  };
  check(n_d >= 1 && n_d <= 3, "coordinate dimension must be 1..3");
  check(times.size() == n_t, "times length differs from N_t");
  check(load.size() == nc * n_t * n_l, "load block has the wrong size");
  check(strain.size() == nc * n_t * n_s, "strain block has the wrong size");
  check(labels.size() == nc * n_t * n_n * n_c, "label block has the wrong size");
  check(coords.size() == n_n * n_d, "coordinate block has the wrong size");
  std::vector<int> seen(nc, 0);
  for (const auto* split : {&train, &validation, &test}) {
    for (std::size_t i : *split) {
      check(i < nc, "split index out of range");
      ++seen[i];
    }
  }
  check(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }),
        "splits must be disjoint and cover every case");
  check(normalization.labels.size() == n_c, "normalization needs one label channel per component");
}

void assign_splits(Dataset& ds, std::size_t n_test, std::uint64_t seed) {
  const std::size_t nc = ds.n_cases();
  if (n_test >= nc) throw InvalidArgument("test split leaves no training cases");
  std::vector<std::size_t> order(nc);
  for (std::size_t i = 0; i < nc; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t rest = nc - n_test;
  // 4:1 train:validation, at least one training case
  const std::size_t n_val = rest >= 2 ? std::max<std::size_t>(1, (rest + 2) / 5) : 0;
  ds.test.assign(order.begin(), order.begin() + n_test);
  ds.validation.assign(order.begin() + n_test, order.begin() + n_test + n_val);
  ds.train.assign(order.begin() + n_test + n_val, order.end());
  for (auto* s : {&ds.train, &ds.validation, &ds.test}) std::sort(s->begin(), s->end());
}

Dataset label_dataset(const Experiment& e, const std::vector<LoadCase>& cases, const LabelOptions& options) {
  if (cases.empty()) throw InvalidArgument("label_dataset needs at least one case");
  e.validate();
  std::vector<CaseData> data(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      try {
        data[i] = label_case(e, cases[i], options.include_displacement);
      } catch (const std::exception& ex) {
        data[i].error = ex.what();
      }
    }
  };
  const unsigned nthreads = std::max(1u, std::min<unsigned>(options.threads, unsigned(cases.size())));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  Dataset ds;
  ds.family = to_string(e.family);
  ds.seed = options.split_seed;
  ds.n_t = std::size_t(e.n_steps);
  ds.n_l = e.load_size();
  ds.n_s = e.strain_size();
  ds.n_n = e.mesh.node_count();
  ds.n_d = e.mesh.dim();
  ds.n_c = options.include_displacement ? 1 + ds.n_d : 1;
  for (int k = 1; k <= e.n_steps; ++k) ds.times.push_back(k * e.dt);
  for (std::size_t n = 0; n < ds.n_n; ++n) {
    const auto& p = e.mesh.node(n);
    for (std::size_t d = 0; d < ds.n_d; ++d) ds.coords.push_back(p[d]);
  }
  for (std::size_t i = 0; i < cases.size(); ++i) {
    auto& d = data[i];
    if (!d.ok) {
      ds.failures.push_back({cases[i].id, d.error});
      continue;
    }
    ds.case_ids.push_back(cases[i].id);
    ds.load.insert(ds.load.end(), d.load.begin(), d.load.end());
    ds.strain.insert(ds.strain.end(), d.strain.begin(), d.strain.end());
    ds.labels.insert(ds.labels.end(), d.labels.begin(), d.labels.end());
    d = CaseData{};
  }
  if (ds.case_ids.empty()) {
    throw SolverError("every case failed; first: case " + std::to_string(ds.failures.front().first) + ": " +
                          ds.failures.front().second,
                      0.0);
  }
  assign_splits(ds, std::min(options.n_test, ds.n_cases() - 1), options.split_seed);
  fit_normalization(ds, options.norm_mode);
  ds.validate();
  return ds;
}

void save_dataset(const std::string& path, const Dataset& ds) {
  ds.validate();
  {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidArgument("cannot write " + path);
    binio::write_magic(os, "IFND");
    binio::write_u32(os, kDatasetVersion);
    for (std::size_t v : {ds.n_cases(), ds.n_t, ds.n_l, ds.n_s, ds.n_n, ds.n_c, ds.n_d}) binio::write_u64(os, v);
    binio::write_f64_block(os, ds.times);
    binio::write_f64_block(os, ds.load);
    binio::write_f64_block(os, ds.strain);
    binio::write_f64_block(os, ds.labels);
    binio::write_f64_block(os, ds.coords);
    if (!os) throw InvalidArgument("write failed: " + path);
  }
  std::ofstream meta(path + ".meta");
  if (!meta) throw InvalidArgument("cannot write " + path + ".meta");
  meta << "family = " << ds.family << "\n";
  meta << "seed = " << ds.seed << "\n";
  meta << "case_ids = " << join_ids(ds.case_ids) << "\n";
  meta << "train = " << join_ids(ds.train) << "\n";
  meta << "validation = " << join_ids(ds.validation) << "\n";
  meta << "test = " << join_ids(ds.test) << "\n";
  meta << "normalization.mode = " << to_string(ds.normalization.mode) << "\n";
  meta << "normalization.load = " << format_stats(ds.normalization.load) << "\n";
  meta << "normalization.strain = " << format_stats(ds.normalization.strain) << "\n";
  for (std::size_t c = 0; c < ds.normalization.labels.size(); ++c) {
    meta << "normalization.label" << c << " = " << format_stats(ds.normalization.labels[c]) << "\n";
  }
  for (const auto& [id, msg] : ds.failures) {
    std::string flat = msg;
    std::replace(flat.begin(), flat.end(), '\n', ' ');
    meta << "failed." << id << " = " << flat << "\n";
  }
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw NotFound("dataset " + path + " not found");
  Dataset ds;
  binio::expect_magic(is, "IFND");
  const auto version = binio::read_u32(is);
  if (version != kDatasetVersion) throw FormatError("unsupported dataset version " + std::to_string(version));
  const std::size_t nc = binio::read_u64(is);
  ds.n_t = binio::read_u64(is);
  ds.n_l = binio::read_u64(is);
  ds.n_s = binio::read_u64(is);
  ds.n_n = binio::read_u64(is);
  ds.n_c = binio::read_u64(is);
  ds.n_d = binio::read_u64(is);
  if (nc > (1u << 24) || ds.n_t > (1u << 20) || ds.n_n > (1u << 26) || ds.n_c > 16 || ds.n_d > 3) {
    throw FormatError("dataset header of " + path + " has implausible counts");
  }
  ds.times = binio::read_f64_block(is, ds.n_t);
  ds.load = binio::read_f64_block(is, nc * ds.n_t * ds.n_l);
  ds.strain = binio::read_f64_block(is, nc * ds.n_t * ds.n_s);
  ds.labels = binio::read_f64_block(is, nc * ds.n_t * ds.n_n * ds.n_c);
  ds.coords = binio::read_f64_block(is, ds.n_n * ds.n_d);

  std::ifstream meta(path + ".meta");
  if (!meta) throw NotFound("dataset sidecar " + path + ".meta not found");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(meta, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) {
      // empty lists are written as "key = " and trimmed by some editors
      const auto bare = line.find(" =");
      if (bare == std::string::npos) throw FormatError("bad dataset sidecar line: " + line);
      kv[line.substr(0, bare)] = "";
      continue;
    }
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("dataset sidecar lacks " + key);
    return it->second;
  };
  ds.family = get("family");
  ds.seed = std::stoull(get("seed"));
  ds.case_ids = parse_ids(get("case_ids"));
  ds.train = parse_ids(get("train"));
  ds.validation = parse_ids(get("validation"));
  ds.test = parse_ids(get("test"));
  if (ds.case_ids.size() != nc) throw FormatError("dataset sidecar case count differs from the binary header");
  ds.normalization.mode = norm_mode_from_string(get("normalization.mode"));
  ds.normalization.load = parse_stats(get("normalization.load"));
  ds.normalization.strain = parse_stats(get("normalization.strain"));
  for (std::size_t c = 0; c < ds.n_c; ++c) {
    ds.normalization.labels.push_back(parse_stats(get("normalization.label" + std::to_string(c))));
  }
  for (const auto& [key, value] : kv) {
    if (key.rfind("failed.", 0) == 0) ds.failures.push_back({std::stoull(key.substr(7)), value});
  }
  ds.validate();
  return ds;
}

}  // namespace ifenn::train
