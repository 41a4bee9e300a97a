#include "ifenn/cli.hpp"
#include "ifenn/errors.hpp"

namespace ifenn::cli {
namespace {

using Entries = std::vector<std::pair<const char*, const char*>>;

// Shared by every preset; family presets override what differs.
const Entries kCommon = {
    {"experiment.enforce_bc", "true"},
    {"experiment.dim", "2"},
    {"experiment.nodes_per_side", "11"},
    {"experiment.side", "1"},
    {"experiment.load_sensors_per_axis", "8"},
    {"experiment.strain_sensors_per_axis", "8"},
    {"experiment.radial_divisions", "6"},
    {"experiment.angular_divisions", "16"},
    {"experiment.r_inner", "1"},
    {"experiment.r_outer", "2"},
    {"experiment.load_sensors_per_wall", "16"},
    {"experiment.strain_sensors_radial", "8"},
    {"experiment.strain_sensors_angular", "8"},
    {"experiment.width", "20"},
    {"experiment.depth", "10"},
    {"experiment.divisions_x", "20"},
    {"experiment.divisions_y", "10"},
    {"experiment.excavation_width", "8"},
    {"experiment.strain_sensors_x", "12"},
    {"experiment.strain_sensors_y", "6"},
    {"load.mean", "0"},
    {"load.stddev", "1500"},
    {"load.correlation_length", "0.35"},
    {"load.correlation_time", "0.3"},
    {"load.control_x", "5"},
    {"load.control_y", "5"},
    {"load.control_t", "6"},
    {"load.q0_min", "-4000"},
    {"load.q0_max", "4000"},
    {"load.q1_min", "0"},
    {"load.q1_max", "4000"},
    {"load.omega_t_min", "0.5"},
    {"load.omega_t_max", "3"},
    {"load.omega_r_min", "0.5"},
    {"load.omega_r_max", "4"},
    {"data.cases", "60"},
    {"data.n_test", "10"},
    {"data.seed", "7"},
    {"data.split_seed", "11"},
    {"data.norm", "minmax01"},
    {"data.threads", "1"},
    {"data.include_displacement", "false"},
    {"model.variant", "ifenn"},
    {"model.seed", "3"},
    {"branch_load.input", "auto"},
    {"branch_load.gru_layers", "1"},
    {"branch_load.hidden", "32"},
    {"branch_load.norm_channels", "0"},
    {"branch_load.fc_layers", "2"},
    {"branch_load.out", "32"},
    {"branch_strain.input", "auto"},
    {"branch_strain.gru_layers", "1"},
    {"branch_strain.hidden", "32"},
    {"branch_strain.norm_channels", "8"},
    {"branch_strain.fc_layers", "2"},
    {"branch_strain.out", "32"},
    {"trunk.input", "auto"},
    {"trunk.fc_layers", "3"},
    {"trunk.hidden", "64"},
    {"trunk.out", "64"},
    {"train.epochs", "1500"},
    {"train.batch_size", "16"},
    {"train.loss", "l2"},
    {"train.schedule", "auto"},
    {"train.lr", "3e-3"},
    {"train.lr_start", "3e-4"},
    {"train.lr_end", "1.5e-4"},
    {"train.warm_fraction", "0.05"},
    {"train.hold_fraction", "0.3333"},
    {"train.seed", "5"},
    {"train.keep_best", "true"},
    {"train.log_every", "100"},
    {"eval.bins", "10"},
    {"ifenn.case", "p50"},
    {"ifenn.transport", "inprocess"},
    {"ifenn.timeout_ms", "10000"},
    {"ifenn.vtk", "true"},
    {"ifenn.vtk_cap", "0.05"},
    {"stability.case", "p50"},
    {"stability.switch_field", "7"},
    {"stability.switch_strain", "14"},
    {"fem.case", "0"},
    {"fem.load_scale", "1"},
    {"fem.vtk", "true"},
    {"bench.cases", "3"},
};

const Entries kCube = {
    {"experiment.family", "cube"},
    {"experiment.dt", "900"},
    {"experiment.n_steps", "20"},
};

const Entries kTube = {
    {"experiment.family", "tube"},
    {"experiment.dt", "3000"},
    {"experiment.n_steps", "20"},
    {"train.loss", "sse"},
};

const Entries kExcavation = {
    {"experiment.family", "excavation"},
    {"experiment.enforce_bc", "false"},
    {"experiment.dt", "1.5e5"},
    {"experiment.n_steps", "20"},
    {"load.mean", "2e-6"},
    {"load.stddev", "1e-6"},
    {"load.correlation_length", "1"},
    {"load.correlation_time", "0.25"},
    {"load.control_x", "1"},
    {"load.control_y", "1"},
    {"load.control_t", "8"},
    {"train.loss", "sse"},
};

// Paper-scale profiles: network and training hyperparameters of the
// published case studies. Geometry stays on the analogs supported here.
const Entries kCubePaper = {
    {"experiment.dim", "3"},
    {"experiment.dt", "180"},
    {"experiment.n_steps", "100"},
    {"data.cases", "1000"},
    {"data.n_test", "100"},
    {"branch_load.gru_layers", "2"},
    {"branch_load.hidden", "200"},
    {"branch_load.norm_channels", "0"},
    {"branch_load.fc_layers", "1"},
    {"branch_load.out", "200"},
    {"branch_strain.gru_layers", "2"},
    {"branch_strain.hidden", "50"},
    {"branch_strain.norm_channels", "25"},
    {"branch_strain.fc_layers", "1"},
    {"branch_strain.out", "50"},
    {"trunk.fc_layers", "4"},
    {"trunk.hidden", "200"},
    {"trunk.out", "250"},
    {"train.epochs", "24000"},
    {"train.loss", "l2"},
    {"train.lr", "1e-3"},
    {"train.lr_start", "1e-4"},
    {"train.lr_end", "1e-5"},
    {"train.log_every", "500"},
    {"stability.switch_field", "30"},
    {"stability.switch_strain", "60"},
};

const Entries kTubePaper = {
    {"experiment.dt", "500"},
    {"experiment.n_steps", "120"},
    {"experiment.radial_divisions", "16"},
    {"experiment.angular_divisions", "64"},
    {"experiment.load_sensors_per_wall", "64"},
    {"experiment.strain_sensors_radial", "8"},
    {"experiment.strain_sensors_angular", "64"},
    {"data.cases", "1000"},
    {"data.n_test", "100"},
    {"branch_load.gru_layers", "2"},
    {"branch_load.hidden", "64"},
    {"branch_load.norm_channels", "0"},
    {"branch_load.fc_layers", "1"},
    {"branch_load.out", "64"},
    {"branch_strain.gru_layers", "2"},
    {"branch_strain.hidden", "64"},
    {"branch_strain.norm_channels", "32"},
    {"branch_strain.fc_layers", "1"},
    {"branch_strain.out", "64"},
    {"trunk.fc_layers", "4"},
    {"trunk.hidden", "256"},
    {"trunk.out", "128"},
    {"train.epochs", "24000"},
    {"train.loss", "sse"},
    {"train.lr", "1e-3"},
    {"train.lr_start", "1e-4"},
    {"train.lr_end", "1e-5"},
    {"train.log_every", "500"},
    {"stability.switch_field", "40"},
    {"stability.switch_strain", "80"},
};

const Entries kTubeSurrogatePaper = {
    {"model.variant", "surrogate"},
    {"data.include_displacement", "true"},
    {"branch_load.gru_layers", "2"},
    {"branch_load.hidden", "84"},
    {"branch_load.norm_channels", "0"},
    {"branch_load.fc_layers", "1"},
    {"branch_load.out", "84"},
    {"trunk.fc_layers", "4"},
    {"trunk.hidden", "332"},
    {"trunk.out", "84"},
};

const Entries kExcavationPaper = {
    {"experiment.dt", "5e4"},
    {"experiment.n_steps", "60"},
    {"experiment.divisions_x", "60"},
    {"experiment.divisions_y", "30"},
    {"experiment.strain_sensors_x", "73"},
    {"experiment.strain_sensors_y", "8"},
    {"load.control_t", "16"},
    {"data.cases", "700"},
    {"data.n_test", "100"},
    {"branch_load.gru_layers", "2"},
    {"branch_load.hidden", "64"},
    {"branch_load.norm_channels", "0"},
    {"branch_load.fc_layers", "1"},
    {"branch_load.out", "64"},
    {"branch_strain.gru_layers", "2"},
    {"branch_strain.hidden", "64"},
    {"branch_strain.norm_channels", "32"},
    {"branch_strain.fc_layers", "1"},
    {"branch_strain.out", "64"},
    {"trunk.fc_layers", "4"},
    {"trunk.hidden", "256"},
    {"trunk.out", "128"},
    {"train.epochs", "8000"},
    {"train.loss", "sse"},
    {"train.lr", "1e-3"},
    {"train.lr_start", "1e-4"},
    {"train.lr_end", "1e-5"},
    {"train.log_every", "200"},
    {"stability.switch_field", "20"},
    {"stability.switch_strain", "40"},
};

void apply(Config& c, const Entries& entries) {
  for (const auto& [k, v] : entries) c.set(k, v);
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"cube", "tube", "excavation", "cube-paper", "tube-paper", "tube-surrogate-paper", "excavation-paper"};
}

Config preset(const std::string& name) {
  Config c;
  apply(c, kCommon);
  if (name == "cube") {
    apply(c, kCube);
  } else if (name == "tube") {
    apply(c, kTube);
  } else if (name == "excavation") {
    apply(c, kExcavation);
  } else if (name == "cube-paper") {
    apply(c, kCube);
    apply(c, kCubePaper);
  } else if (name == "tube-paper") {
    apply(c, kTube);
    apply(c, kTubePaper);
  } else if (name == "tube-surrogate-paper") {
    apply(c, kTube);
    apply(c, kTubePaper);
    apply(c, kTubeSurrogatePaper);
  } else if (name == "excavation-paper") {
    apply(c, kExcavation);
    apply(c, kExcavationPaper);
  } else {
    std::string all;
    for (const auto& n : preset_names()) all += (all.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "' (available: " + all + ")");
  }
  return c;
}

}  // namespace ifenn::cli
