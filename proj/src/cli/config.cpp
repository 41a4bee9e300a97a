#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ifenn/cli.hpp"
#include "ifenn/errors.hpp"

namespace ifenn::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_known(const std::string& key) {
  const auto& keys = known_keys();
  return std::any_of(keys.begin(), keys.end(), [&](const KeyInfo& k) { return k.key == key; });
}

}  // namespace

const std::vector<KeyInfo>& known_keys() {
  static const std::vector<KeyInfo> keys = {
      {"experiment.family", "cube | tube | excavation"},
      {"experiment.dt", "time step [s]"},
      {"experiment.n_steps", "number of time steps N_t"},
      {"experiment.enforce_bc", "hard Dirichlet wrapper on the network output"},
      // cube
      {"experiment.dim", "cube: 2 or 3"},
      {"experiment.nodes_per_side", "cube: nodes per edge"},
      {"experiment.side", "cube: edge length [m]"},
      {"experiment.load_sensors_per_axis", "cube: load sensors per in-plane axis"},
      {"experiment.strain_sensors_per_axis", "cube: strain sensors per axis"},
      // tube
      {"experiment.radial_divisions", "tube: elements through the wall"},
      {"experiment.angular_divisions", "tube: elements around the half annulus"},
      {"experiment.r_inner", "tube: inner radius [m]"},
      {"experiment.r_outer", "tube: outer radius [m]"},
      {"experiment.load_sensors_per_wall", "tube: load sensors on each wall"},
      {"experiment.strain_sensors_radial", "tube: strain sensors through the wall"},
      {"experiment.strain_sensors_angular", "tube: strain sensors around"},
      // excavation
      {"experiment.width", "excavation: domain width [m]"},
      {"experiment.depth", "excavation: domain depth [m]"},
      {"experiment.divisions_x", "excavation: elements along x"},
      {"experiment.divisions_y", "excavation: elements along y"},
      {"experiment.excavation_width", "excavation: width of the excavated surface [m]"},
      {"experiment.strain_sensors_x", "excavation: strain sensors along x"},
      {"experiment.strain_sensors_y", "excavation: strain sensors along y"},
      // load families
      {"load.mean", "Gaussian field mean"},
      {"load.stddev", "Gaussian field standard deviation"},
      {"load.correlation_length", "Gaussian spatial correlation length"},
      {"load.correlation_time", "Gaussian temporal correlation (fraction of the horizon)"},
      {"load.control_x", "Gaussian control points along x"},
      {"load.control_y", "Gaussian control points along y"},
      {"load.control_t", "Gaussian control points in time"},
      {"load.q0_min", "tube: lower bound of the mean wall flux"},
      {"load.q0_max", "tube: upper bound of the mean wall flux"},
      {"load.q1_min", "tube: lower bound of the flux amplitude"},
      {"load.q1_max", "tube: upper bound of the flux amplitude"},
      {"load.omega_t_min", "tube: lower bound of the temporal frequency [cycles per horizon]"},
      {"load.omega_t_max", "tube: upper bound of the temporal frequency"},
      {"load.omega_r_min", "tube: lower bound of the angular wave number"},
      {"load.omega_r_max", "tube: upper bound of the angular wave number"},
      // dataset
      {"data.cases", "number of load cases"},
      {"data.n_test", "cases held out for testing"},
      {"data.seed", "load case seed"},
      {"data.split_seed", "split shuffle seed"},
      {"data.norm", "minmax01 | minmax11 | standardize"},
      {"data.threads", "labeling worker threads"},
      {"data.include_displacement", "append displacement components to the labels"},
      // network
      {"model.variant", "ifenn (load + strain branches) | surrogate (load branch only)"},
      {"model.seed", "parameter initialization seed"},
      {"branch_load.input", "N_l: auto or the load sensor count"},
      {"branch_load.gru_layers", "N_GRU of the load branch"},
      {"branch_load.hidden", "N_H of the load branch"},
      {"branch_load.norm_channels", "N_ch of the load branch, 0 = no group norm"},
      {"branch_load.fc_layers", "N_FC of the load branch"},
      {"branch_load.out", "D_out of the load branch"},
      {"branch_strain.input", "N_s: auto or the strain sensor count"},
      {"branch_strain.gru_layers", "N_GRU of the strain branch"},
      {"branch_strain.hidden", "N_H of the strain branch"},
      {"branch_strain.norm_channels", "N_ch of the strain branch, 0 = no group norm"},
      {"branch_strain.fc_layers", "N_FC of the strain branch"},
      {"branch_strain.out", "D_out of the strain branch"},
      {"trunk.input", "N_d: auto or the mesh dimension"},
      {"trunk.fc_layers", "N_FC of the trunk"},
      {"trunk.hidden", "N_H of the trunk"},
      {"trunk.out", "D_out of the trunk (sum of the branch outputs)"},
      // training
      {"train.epochs", "training epochs"},
      {"train.batch_size", "load cases per batch N_b"},
      {"train.loss", "l2 | l2norm | sse | mse"},
      {"train.schedule", "auto, or explicit breakpoints epoch:rate,epoch:rate"},
      {"train.lr", "peak learning rate of the auto schedule"},
      {"train.lr_start", "warm-up start rate of the auto schedule"},
      {"train.lr_end", "final rate of the auto schedule"},
      {"train.warm_fraction", "warm-up share of the epochs in the auto schedule"},
      {"train.hold_fraction", "hold share of the epochs in the auto schedule"},
      {"train.seed", "minibatch shuffle seed"},
      {"train.keep_best", "restore the best validation epoch"},
      {"train.log_every", "progress line interval in epochs"},
      // evaluation and coupling
      {"eval.bins", "histogram bins of the test errors"},
      {"ifenn.case", "case id, or p10 / p50 / p90 of the test errors"},
      {"ifenn.transport", "inprocess | file"},
      {"ifenn.timeout_ms", "file transport wait limit"},
      {"ifenn.vtk", "write VTK error fields for every step"},
      {"ifenn.vtk_cap", "cap of the relative error fields"},
      {"stability.case", "case id, or p10 / p50 / p90"},
      {"stability.switch_field", "last step fed the reference field"},
      {"stability.switch_strain", "last step fed the reference strain"},
      {"fem.case", "case id of the monolithic run"},
      {"fem.load_scale", "factor on every prescribed load and boundary value"},
      {"fem.vtk", "write VTK fields for every step"},
      {"bench.cases", "load cases timed by the benchmark"},
  };
  return keys;
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c;
  std::istringstream is(text);
  std::string line, section;
  int no = 0;
  while (std::getline(is, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string name = trim(line.substr(0, eq));
    if (name.empty()) throw ConfigError(where + ": missing key");
    const std::string key = section.empty() ? name : section + "." + name;
    if (!is_known(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw NotFound("config file " + path + " not found");
  std::stringstream text;
  text << is.rdbuf();
  return parse(text.str(), path);
}

void Config::set(const std::string& key, const std::string& value) {
  if (!is_known(key)) throw ConfigError("unknown key '" + key + "'");
  values_[key] = value;
}

void Config::set_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not section.key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::merge(const Config& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing setting '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("setting '" + key + "' = '" + v + "' is not a number");
}

long long Config::get_int(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("setting '" + key + "' = '" + v + "' is not an integer");
}

std::size_t Config::get_size(const std::string& key) const {
  const long long x = get_int(key);
  if (x < 0) throw ConfigError("setting '" + key + "' must not be negative");
  return std::size_t(x);
}

bool Config::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("setting '" + key + "' = '" + v + "' is not a boolean");
}

std::string Config::echo() const {
  std::ostringstream os;
  std::string section;
  for (const auto& [key, value] : values_) {
    const auto dot = key.find('.');
    const std::string s = key.substr(0, dot);
    if (s != section) {
      os << (section.empty() ? "" : "\n") << "[" << s << "]\n";
      section = s;
    }
    os << key.substr(dot + 1) << " = " << value << "\n";
  }
  return os.str();
}

Config resolve(const std::string& preset_name, const std::string& config_file,
               const std::vector<std::string>& overrides) {
  Config c = preset(preset_name);
  if (!config_file.empty()) c.merge(Config::load(config_file));
  for (const auto& o : overrides) c.set_override(o);
  return c;
}

// ---- builders ----------------------------------------------------------------

namespace {

int get_positive(const Config& c, const std::string& key) {
  const long long v = c.get_int(key);
  if (v < 1) throw ConfigError("setting '" + key + "' must be at least 1");
  return int(v);
}

train::GaussianFieldSpec gaussian_of(const Config& c) {
  train::GaussianFieldSpec g;
  g.mean = c.get_double("load.mean");
  g.stddev = c.get_double("load.stddev");
  g.correlation_length = c.get_double("load.correlation_length");
  g.correlation_time = c.get_double("load.correlation_time");
  g.control_x = get_positive(c, "load.control_x");
  g.control_y = get_positive(c, "load.control_y");
  g.control_t = get_positive(c, "load.control_t");
  return g;
}

std::size_t resolve_input(const Config& c, const std::string& key, std::size_t actual, const char* symbol) {
  const auto& v = c.get(key);
  if (v == "auto") return actual;
  const std::size_t n = c.get_size(key);
  if (n != actual) {
    throw ConfigError(std::string(symbol) + " mismatch: " + key + " = " + std::to_string(n) +
                      " but the experiment provides " + std::to_string(actual));
  }
  return n;
}

net::BranchConfig branch_of(const Config& c, const std::string& s, std::size_t input) {
  net::BranchConfig b;
  b.input_size = input;
  b.gru_layers = c.get_size(s + ".gru_layers");
  b.hidden = c.get_size(s + ".hidden");
  b.norm_channels = c.get_size(s + ".norm_channels");
  b.fc_layers = c.get_size(s + ".fc_layers");
  b.out_size = c.get_size(s + ".out");
  return b;
}

}  // namespace

train::Experiment build_experiment(const Config& c) {
  const auto& family = c.get("experiment.family");
  train::Experiment e;
  try {
    if (family == "cube") {
      train::CubeOptions o;
      o.dim = int(c.get_int("experiment.dim"));
      o.nodes_per_side = int(c.get_int("experiment.nodes_per_side"));
      o.side = c.get_double("experiment.side");
      o.dt = c.get_double("experiment.dt");
      o.n_steps = int(c.get_int("experiment.n_steps"));
      o.load_sensors_per_axis = get_positive(c, "experiment.load_sensors_per_axis");
      o.strain_sensors_per_axis = get_positive(c, "experiment.strain_sensors_per_axis");
      o.gaussian = gaussian_of(c);
      e = train::make_cube_experiment(o);
    } else if (family == "tube") {
      train::TubeOptions o;
      o.radial_divisions = get_positive(c, "experiment.radial_divisions");
      o.angular_divisions = get_positive(c, "experiment.angular_divisions");
      o.r_inner = c.get_double("experiment.r_inner");
      o.r_outer = c.get_double("experiment.r_outer");
      o.dt = c.get_double("experiment.dt");
      o.n_steps = int(c.get_int("experiment.n_steps"));
      o.load_sensors_per_wall = get_positive(c, "experiment.load_sensors_per_wall");
      o.strain_sensors_radial = get_positive(c, "experiment.strain_sensors_radial");
      o.strain_sensors_angular = get_positive(c, "experiment.strain_sensors_angular");
      auto& r = o.ranges;
      r.q0_min = c.get_double("load.q0_min");
      r.q0_max = c.get_double("load.q0_max");
      r.q1_min = c.get_double("load.q1_min");
      r.q1_max = c.get_double("load.q1_max");
      r.omega_t_min = c.get_double("load.omega_t_min");
      r.omega_t_max = c.get_double("load.omega_t_max");
      r.omega_r_min = c.get_double("load.omega_r_min");
      r.omega_r_max = c.get_double("load.omega_r_max");
      e = train::make_tube_experiment(o);
    } else if (family == "excavation") {
      train::ExcavationOptions o;
      o.width = c.get_double("experiment.width");
      o.depth = c.get_double("experiment.depth");
      o.divisions_x = get_positive(c, "experiment.divisions_x");
      o.divisions_y = get_positive(c, "experiment.divisions_y");
      o.excavation_width = c.get_double("experiment.excavation_width");
      o.dt = c.get_double("experiment.dt");
      o.n_steps = int(c.get_int("experiment.n_steps"));
      o.strain_sensors_x = get_positive(c, "experiment.strain_sensors_x");
      o.strain_sensors_y = get_positive(c, "experiment.strain_sensors_y");
      o.gaussian = gaussian_of(c);
      e = train::make_excavation_experiment(o);
    } else {
      throw ConfigError("experiment.family must be cube, tube or excavation, got '" + family + "'");
    }
  } catch (const InvalidArgument& err) {
    throw ConfigError(std::string("experiment: ") + err.what());
  }
  e.enforce_bc = c.get_bool("experiment.enforce_bc");
  return e;
}

net::ModelConfig build_model_config(const Config& c, const train::Experiment& e) {
  const auto& variant = c.get("model.variant");
  if (variant != "ifenn" && variant != "surrogate") {
    throw ConfigError("model.variant must be ifenn or surrogate, got '" + variant + "'");
  }
  net::ModelConfig m;
  m.branches.push_back(branch_of(c, "branch_load", resolve_input(c, "branch_load.input", e.load_size(), "N_l")));
  if (variant == "ifenn") {
    m.branches.push_back(
        branch_of(c, "branch_strain", resolve_input(c, "branch_strain.input", e.strain_size(), "N_s")));
  }
  m.trunk.input_size = resolve_input(c, "trunk.input", e.mesh.dim(), "N_d");
  m.trunk.fc_layers = c.get_size("trunk.fc_layers");
  m.trunk.hidden = c.get_size("trunk.hidden");
  m.trunk.out_size = c.get_size("trunk.out");
  const bool disp = c.get_bool("data.include_displacement");
  if (variant == "surrogate" && !disp) throw ConfigError("the surrogate variant needs data.include_displacement = true");
  m.components = disp ? 1 + e.mesh.dim() : 1;
  try {
    m.validate();
  } catch (const InvalidArgument& err) {
    throw ConfigError(std::string("network: ") + err.what());
  }
  return m;
}

train::TrainOptions build_train_options(const Config& c) {
  train::TrainOptions o;
  o.epochs = int(c.get_int("train.epochs"));
  if (o.epochs < 1) throw ConfigError("train.epochs must be at least 1");
  o.batch_size = c.get_size("train.batch_size");
  if (o.batch_size == 0) throw ConfigError("train.batch_size must be at least 1");
  try {
    o.loss = train::loss_kind_from_string(c.get("train.loss"));
  } catch (const InvalidArgument& err) {
    throw ConfigError(err.what());
  }
  const auto& sched = c.get("train.schedule");
  if (sched == "auto") {
    const double wf = c.get_double("train.warm_fraction"), hf = c.get_double("train.hold_fraction");
    if (wf < 0.0 || hf < 0.0 || wf + hf > 1.0) {
      throw ConfigError("train.warm_fraction and train.hold_fraction must be non-negative and sum to at most 1");
    }
    const int warm = int(wf * o.epochs), hold = int(hf * o.epochs);
    try {
      o.schedule = train::LrSchedule::warm_hold_decay(c.get_double("train.lr_start"), c.get_double("train.lr"),
                                                      c.get_double("train.lr_end"), warm, hold, o.epochs);
    } catch (const InvalidArgument& err) {
      throw ConfigError(std::string("train schedule: ") + err.what());
    }
  } else {
    o.schedule = train::LrSchedule::parse(sched);
  }
  try {
    o.schedule.validate();
  } catch (const InvalidArgument& err) {
    throw ConfigError(std::string("train.schedule: ") + err.what());
  }
  o.seed = std::uint64_t(c.get_int("train.seed"));
  o.keep_best = c.get_bool("train.keep_best");
  o.log_every = int(c.get_int("train.log_every"));
  return o;
}

train::LabelOptions build_label_options(const Config& c) {
  train::LabelOptions o;
  o.include_displacement = c.get_bool("data.include_displacement");
  o.n_test = c.get_size("data.n_test");
  o.split_seed = std::uint64_t(c.get_int("data.split_seed"));
  try {
    o.norm_mode = train::norm_mode_from_string(c.get("data.norm"));
  } catch (const InvalidArgument& err) {
    throw ConfigError(err.what());
  }
  o.threads = unsigned(std::max<long long>(1, c.get_int("data.threads")));
  return o;
}

coupling::StabilityConfig build_stability(const Config& c, int n_steps) {
  coupling::StabilityConfig s;
  s.switch_field = int(c.get_int("stability.switch_field"));
  s.switch_strain = int(c.get_int("stability.switch_strain"));
  try {
    s.validate(n_steps);
  } catch (const InvalidArgument& err) {
    throw ConfigError(err.what());
  }
  return s;
}

}  // namespace ifenn::cli
