#include "ifenn/coupling.hpp"
#include "ifenn/errors.hpp"

namespace ifenn::coupling {

NetworkPredictor::NetworkPredictor(const net::OperatorModel& model, train::NormalizationSpec normalization,
                                   const train::Experiment& experiment, train::LoadCase load_case)
    : model_(model), norm_(std::move(normalization)), experiment_(&experiment), case_(std::move(load_case)) {
  const auto& cfg = model_.config();
  if (cfg.branches.size() != 2) throw ConfigError("the hybrid loop needs a model with load and strain branches");
  if (cfg.branches[0].input_size != experiment.load_size()) {
    throw ConfigError("load branch expects " + std::to_string(cfg.branches[0].input_size) +
                      " sensors, experiment has N_l = " + std::to_string(experiment.load_size()));
  }
  if (cfg.branches[1].input_size != experiment.strain_size()) {
    throw ConfigError("strain branch expects " + std::to_string(cfg.branches[1].input_size) +
                      " sensors, experiment has N_s = " + std::to_string(experiment.strain_size()));
  }
  if (norm_.labels.size() != model_.components()) {
    throw ConfigError("normalization has " + std::to_string(norm_.labels.size()) + " label channels, model has " +
                      std::to_string(model_.components()) + " components");
  }
  model_.set_nodes(experiment.mesh.nodes());
  model_.set_bc(experiment.bc());
}

void NetworkPredictor::reset() {
  load_hist_.clear();
  strain_hist_.clear();
  times_.clear();
  lengths_.clear();
}

std::vector<double> NetworkPredictor::predict(int step, double time, std::span<const double> strain) {
  if (std::size_t(step) != times_.size() + 1) {
    throw InvalidArgument("network predictor expects step " + std::to_string(times_.size() + 1) + ", got " +
                          std::to_string(step));
  }
  const std::size_t nl = experiment_->load_size(), ns = experiment_->strain_size();
  if (strain.size() != ns) throw InvalidArgument("strain payload has the wrong size");
  for (double v : experiment_->load_samples(case_, time)) load_hist_.push_back(norm_.load.normalize(v));
  for (double v : strain) strain_hist_.push_back(norm_.strain.normalize(v));
  times_.push_back(time);
  const std::size_t T = times_.size();
  lengths_.push_back(T);

  const std::vector<ad::Tensor> inputs{ad::Tensor::from({1, T, nl}, load_hist_),
                                       ad::Tensor::from({1, T, ns}, strain_hist_)};
  const auto out = model_.forward(inputs, times_, net::OutputSpace::physical);
  const std::size_t N = out.dim(2), C = out.dim(3);
  const auto data = out.data();
  std::vector<double> z(N);
  for (std::size_t n = 0; n < N; ++n) z[n] = data[((T - 1) * N + n) * C];
  return z;
}

OraclePredictor::OraclePredictor(std::vector<fem::TransientState> states, double z_offset)
    : states_(std::move(states)), offset_(z_offset) {}

std::vector<double> OraclePredictor::predict(int step, double, std::span<const double>) {
  if (step < 1 || std::size_t(step) >= states_.size()) {
    throw InvalidArgument("oracle has no state for step " + std::to_string(step));
  }
  std::vector<double> z = states_[step].z;
  for (double& v : z) v -= offset_;
  return z;
}

}  // namespace ifenn::coupling
