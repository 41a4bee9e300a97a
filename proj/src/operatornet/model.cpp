#include <algorithm>
#include <cmath>

#include "ifenn/errors.hpp"
#include "ifenn/operatornet.hpp"

namespace ifenn::net {

OperatorModel::OperatorModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  Rng rng(seed);
  const std::size_t C = config_.components;
  for (const auto& bc : config_.branches) {
    Branch br;
    br.config = bc;
    std::size_t in = bc.input_size;
    for (std::size_t l = 0; l < bc.gru_layers; ++l) {
      br.grus.push_back(GruCell::create(in, bc.hidden, rng));
      in = bc.hidden;
    }
    if (bc.norm_channels > 0) {
      br.norm_gamma = Tensor::parameter({bc.hidden}, std::vector<double>(bc.hidden, 1.0));
      br.norm_beta = Tensor::parameter({bc.hidden}, std::vector<double>(bc.hidden, 0.0));
    }
    br.mlp = Mlp::create(bc.hidden, bc.hidden, bc.out_size * C, bc.fc_layers, rng);
    branches_.push_back(std::move(br));
  }
  const auto& tc = config_.trunk;
  trunk_ = Mlp::create(tc.input_size, tc.hidden, tc.out_size * C, tc.fc_layers, rng);
  bias_ = Tensor::parameter({C}, std::vector<double>(C, 0.0));
  out_scale_.assign(C, 1.0);
  out_shift_.assign(C, 0.0);
}

void OperatorModel::set_nodes(std::vector<mesh::Point> nodes) {
  if (nodes.empty()) throw InvalidArgument("model needs at least one query node");
  nodes_ = std::move(nodes);
}

void OperatorModel::set_coordinate_frame(const mesh::Point& lo, const mesh::Point& hi) {
  for (std::size_t d = 0; d < config_.trunk.input_size; ++d) {
    if (!(hi[d] > lo[d])) throw InvalidArgument("coordinate frame must have positive extent on every trunk axis");
  }
  frame_lo_ = lo;
  frame_hi_ = hi;
}

void OperatorModel::set_output_scaling(std::vector<double> scale, std::vector<double> shift) {
  if (scale.size() != components() || shift.size() != components()) {
    throw InvalidArgument("output scaling needs one entry per component");
  }
  for (double s : scale) {
    if (!(s != 0.0) || !std::isfinite(s)) throw InvalidArgument("output scale must be finite and nonzero");
  }
  out_scale_ = std::move(scale);
  out_shift_ = std::move(shift);
}

Tensor OperatorModel::trunk_forward() const {
  if (nodes_.empty()) throw InvalidArgument("model query nodes are not set");
  const std::size_t nd = config_.trunk.input_size;
  std::vector<double> x(nodes_.size() * nd);
  for (std::size_t n = 0; n < nodes_.size(); ++n) {
    for (std::size_t d = 0; d < nd; ++d) {
      x[n * nd + d] = 2.0 * (nodes_[n][d] - frame_lo_[d]) / (frame_hi_[d] - frame_lo_[d]) - 1.0;
    }
  }
  return trunk_.forward(Tensor::from({nodes_.size(), nd}, std::move(x)));
}

std::vector<Tensor> OperatorModel::branch_forward(const std::vector<Tensor>& inputs) const {
  if (inputs.size() != branches_.size()) {
    throw InvalidArgument("model expects " + std::to_string(branches_.size()) + " branch inputs, got " +
                          std::to_string(inputs.size()));
  }
  std::vector<Tensor> outs;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (i > 0 && (inputs[i].rank() != 3 || inputs[i].dim(0) != inputs[0].dim(0) || inputs[i].dim(1) != inputs[0].dim(1))) {
      throw InvalidArgument("branch inputs disagree on batch or time size");
    }
    outs.push_back(branches_[i].forward(inputs[i]));
  }
  return outs;
}

Tensor OperatorModel::raw_forward(const std::vector<Tensor>& inputs) const {
  return ad::merge_reduce(branch_forward(inputs), trunk_forward(), bias_, components());
}

Tensor OperatorModel::forward(const std::vector<Tensor>& inputs, std::span<const double> times,
                              OutputSpace space) const {
  const Tensor raw = raw_forward(inputs);
  const std::size_t T = raw.dim(1), N = raw.dim(2), C = raw.dim(3);
  if (times.size() != T) throw InvalidArgument("forward needs one time value per step");
  std::vector<double> s(N * C, 1.0), o(T * N * C, 0.0);
  if (!bc_.empty()) {
    s = bc_.slope(nodes_, C);
    o = bc_.offset(nodes_, times, C);
  }
  // physical: G = (a N + b) S + O; normalized: (G - b) / a
  std::vector<double> slope(N * C), offset(T * N * C);
  for (std::size_t i = 0; i < N * C; ++i) {
    const std::size_t c = i % C;
    const double a = out_scale_[c], b = out_shift_[c];
    slope[i] = space == OutputSpace::physical ? a * s[i] : s[i];
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t k = t * N * C + i;
      offset[k] = space == OutputSpace::physical ? b * s[i] + o[k] : (b * s[i] + o[k] - b) / a;
    }
  }
  return ad::nodal_affine(raw, slope, offset);
}

std::vector<Tensor> OperatorModel::parameters() const {
  std::vector<Tensor> p;
  for (const auto& br : branches_) {
    for (const auto& cell : br.grus) {
      for (const Tensor* t : cell.parameters()) p.push_back(*t);
    }
    if (br.config.norm_channels > 0) {
      p.push_back(br.norm_gamma);
      p.push_back(br.norm_beta);
    }
    for (const auto& layer : br.mlp.layers) {
      p.push_back(layer.weight);
      p.push_back(layer.bias);
    }
  }
  for (const auto& layer : trunk_.layers) {
    p.push_back(layer.weight);
    p.push_back(layer.bias);
  }
  p.push_back(bias_);
  return p;
}

std::vector<std::string> OperatorModel::parameter_names() const {
  static const char* gru_names[] = {"w_xr", "w_xz", "w_xh", "w_hr", "w_hz", "w_hh", "b_r", "b_z", "b_h"};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    const auto& br = branches_[i];
    const std::string pre = "branch" + std::to_string(i + 1) + ".";
    for (std::size_t l = 0; l < br.grus.size(); ++l) {
      for (const char* g : gru_names) names.push_back(pre + "gru" + std::to_string(l + 1) + "." + g);
    }
    if (br.config.norm_channels > 0) {
      names.push_back(pre + "norm.gamma");
      names.push_back(pre + "norm.beta");
    }
    for (std::size_t l = 0; l < br.mlp.layers.size(); ++l) {
      names.push_back(pre + "fc" + std::to_string(l + 1) + ".weight");
      names.push_back(pre + "fc" + std::to_string(l + 1) + ".bias");
    }
  }
  for (std::size_t l = 0; l < trunk_.layers.size(); ++l) {
    names.push_back("trunk.fc" + std::to_string(l + 1) + ".weight");
    names.push_back("trunk.fc" + std::to_string(l + 1) + ".bias");
  }
  names.push_back("merge.bias");
  return names;
}

std::size_t OperatorModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.numel();
  return n;
}

void copy_parameters(const OperatorModel& from, OperatorModel& to) {
  auto src = from.parameters();
  auto dst = to.parameters();
  if (src.size() != dst.size()) throw InvalidArgument("models have different architectures");
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i].shape() != dst[i].shape()) throw InvalidArgument("models have different parameter shapes");
    auto d = dst[i].mutable_data();
    std::copy(src[i].data().begin(), src[i].data().end(), d.begin());
  }
  to.frame_lo_ = from.frame_lo_;
  to.frame_hi_ = from.frame_hi_;
  to.out_scale_ = from.out_scale_;
  to.out_shift_ = from.out_shift_;
}

}  // namespace ifenn::net
