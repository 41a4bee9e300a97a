#pragma once

// Operator network: GRU-stacked branches, MLP trunk, concatenation merge with
// per-component inner products, and hard Dirichlet enforcement on the output.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ifenn/mesh.hpp"
#include "ifenn/tensor.hpp"

namespace ifenn::net {

using ad::Tensor;
using Rng = std::mt19937_64;

/// Glorot-uniform weights of shape [fan_in, fan_out].
Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng);

struct GruCell {
  std::size_t input = 0;
  std::size_t hidden = 0;
  // Row-vector convention: gate = x W_x + h W_h + b.
  Tensor w_xr, w_xz, w_xh;  // [input, hidden]
  Tensor w_hr, w_hz, w_hh;  // [hidden, hidden]
  Tensor b_r, b_z, b_h;     // [hidden]

  static GruCell create(std::size_t input, std::size_t hidden, Rng& rng);
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
};

/// One GRU step for a batch: x [B, input], h_prev [B, hidden] -> [B, hidden].
Tensor gru_step(const GruCell& cell, const Tensor& x, const Tensor& h_prev);

/// Runs a cell over a whole sequence [B, T, input] from a zero hidden state
/// and returns every hidden state as [B, T, hidden].
Tensor gru_sequence(const GruCell& cell, const Tensor& seq);

struct Dense {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]
};

/// Fully connected stack; tanh after every layer except the last.
struct Mlp {
  std::vector<Dense> layers;

  static Mlp create(std::size_t input, std::size_t width, std::size_t output, std::size_t n_layers, Rng& rng);
  Tensor forward(const Tensor& x) const;  // [m, in] -> [m, out]
  std::size_t input_size() const;
  std::size_t output_size() const;
};

struct BranchConfig {
  std::size_t input_size = 0;   // N_l or N_s
  std::size_t gru_layers = 1;   // N_GRU
  std::size_t hidden = 0;       // N_H
  std::size_t norm_channels = 0;  // N_ch, 0 disables group norm
  std::size_t fc_layers = 1;    // N_FC
  std::size_t out_size = 0;     // D_out_i per component

  void validate(const std::string& what) const;
};

struct TrunkConfig {
  std::size_t input_size = 0;  // N_d
  std::size_t fc_layers = 1;   // N_FC_T
  std::size_t hidden = 0;
  std::size_t out_size = 0;    // D_out per component

  void validate() const;
};

struct ModelConfig {
  std::vector<BranchConfig> branches;
  TrunkConfig trunk;
  std::size_t components = 1;  // N_c

  /// Throws InvalidArgument when the widths do not fit together.
  void validate() const;
  std::string describe() const;
};

struct Branch {
  BranchConfig config;
  std::vector<GruCell> grus;
  Tensor norm_gamma, norm_beta;  // [hidden], only with norm_channels > 0
  Mlp mlp;

  /// [B, T, input] -> [B, T, out_size * components]
  Tensor forward(const Tensor& seq) const;
};

/// Hard Dirichlet enforcement on output component `component`:
///   G = N * prod_i l_i + sum_i (1 - l_i) g_i
struct BcPart {
  std::string name;
  std::size_t component = 0;
  std::function<double(const mesh::Point&)> ell;
  std::function<double(const mesh::Point&, double)> g;
};

struct BcEnforcement {
  std::vector<BcPart> parts;

  bool empty() const noexcept { return parts.empty(); }
  /// prod_i l_i at each node, laid out [n * components + c].
  std::vector<double> slope(std::span<const mesh::Point> nodes, std::size_t components) const;
  /// sum_i (1 - l_i) g_i for each time, laid out [(t * N + n) * components + c].
  std::vector<double> offset(std::span<const mesh::Point> nodes, std::span<const double> times,
                             std::size_t components) const;
  /// Applies the wrapper to plain values raw[(t * N + n) * C + c].
  std::vector<double> apply(std::span<const double> raw, std::span<const mesh::Point> nodes,
                            std::span<const double> times, std::size_t components) const;
};

enum class OutputSpace { physical, normalized };

class OperatorModel {
 public:
  OperatorModel() = default;
  OperatorModel(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  std::size_t components() const noexcept { return config_.components; }

  /// Query nodes for the trunk; coordinates are mapped to [-1, 1] with the
  /// bounding box captured by set_coordinate_frame.
  void set_nodes(std::vector<mesh::Point> nodes);
  const std::vector<mesh::Point>& nodes() const noexcept { return nodes_; }
  void set_coordinate_frame(const mesh::Point& lo, const mesh::Point& hi);

  /// Per-component affine map from network units to physical units.
  void set_output_scaling(std::vector<double> scale, std::vector<double> shift);
  std::span<const double> output_scale() const noexcept { return out_scale_; }
  std::span<const double> output_shift() const noexcept { return out_shift_; }

  void set_bc(BcEnforcement bc) { bc_ = std::move(bc); }
  const BcEnforcement& bc() const noexcept { return bc_; }

  Tensor trunk_forward() const;  // [N, D * C]
  std::vector<Tensor> branch_forward(const std::vector<Tensor>& inputs) const;
  /// Merge output before any output transform: [B, T, N, C].
  Tensor raw_forward(const std::vector<Tensor>& inputs) const;

  /// Full model: one input per branch [B, T, F_i]; times[t] is the physical
  /// time of step t, used by the Dirichlet data. In normalized space the
  /// result is (G - shift) / scale.
  Tensor forward(const std::vector<Tensor>& inputs, std::span<const double> times,
                 OutputSpace space = OutputSpace::physical) const;

  std::vector<Tensor> parameters() const;
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_count() const;

  const std::vector<Branch>& branches() const noexcept { return branches_; }
  const Mlp& trunk() const noexcept { return trunk_; }
  const Tensor& merge_bias() const noexcept { return bias_; }

  /// Writes "<path>" (IFNC checkpoint) and "<path>.arch" (architecture text).
  void save(const std::string& path) const;
  static OperatorModel load(const std::string& path);

 private:
  ModelConfig config_;
  std::vector<Branch> branches_;
  Mlp trunk_;
  Tensor bias_;  // [C]
  std::vector<mesh::Point> nodes_;
  mesh::Point frame_lo_{0, 0, 0}, frame_hi_{1, 1, 1};
  std::vector<double> out_scale_, out_shift_;
  BcEnforcement bc_;

  friend void copy_parameters(const OperatorModel& from, OperatorModel& to);
};

/// Copies parameter values between two models of identical configuration.
void copy_parameters(const OperatorModel& from, OperatorModel& to);

/// Parses the text written to "<path>.arch".
ModelConfig parse_architecture(const std::string& text);
std::string format_architecture(const ModelConfig& config);

}  // namespace ifenn::net
