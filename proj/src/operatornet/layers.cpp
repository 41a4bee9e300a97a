#include <sstream>

#include "ifenn/errors.hpp"
#include "ifenn/operatornet.hpp"

namespace ifenn::net {

Mlp Mlp::create(std::size_t input, std::size_t width, std::size_t output, std::size_t n_layers, Rng& rng) {
  if (n_layers == 0) throw InvalidArgument("MLP needs at least one layer");
  if (input == 0 || output == 0 || (n_layers > 1 && width == 0)) throw InvalidArgument("MLP sizes must be positive");
  Mlp m;
  std::size_t in = input;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::size_t out = l + 1 == n_layers ? output : width;
    m.layers.push_back({glorot(in, out, rng), Tensor::parameter({out}, std::vector<double>(out, 0.0))});
    in = out;
  }
  return m;
}

Tensor Mlp::forward(const Tensor& x) const {
  Tensor y = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    y = ad::linear(y, layers[l].weight, layers[l].bias);
    if (l + 1 < layers.size()) y = ad::tanh(y);
  }
  return y;
}

std::size_t Mlp::input_size() const { return layers.front().weight.dim(0); }
std::size_t Mlp::output_size() const { return layers.back().weight.dim(1); }

void BranchConfig::validate(const std::string& what) const {
  if (input_size == 0 || gru_layers == 0 || hidden == 0 || fc_layers == 0 || out_size == 0) {
    throw InvalidArgument(what + ": sizes and layer counts must be positive");
  }
  if (norm_channels > 0 && hidden % norm_channels != 0) {
    throw InvalidArgument(what + ": N_ch=" + std::to_string(norm_channels) + " does not divide N_H=" +
                          std::to_string(hidden));
  }
}

void TrunkConfig::validate() const {
  if (input_size == 0 || input_size > 3) throw InvalidArgument("trunk input size must be 1, 2 or 3");
  if (fc_layers == 0 || out_size == 0) throw InvalidArgument("trunk sizes must be positive");
  if (fc_layers > 1 && hidden == 0) throw InvalidArgument("trunk hidden width must be positive");
}

void ModelConfig::validate() const {
  if (branches.empty()) throw InvalidArgument("model needs at least one branch");
  if (components == 0) throw InvalidArgument("model needs at least one output component");
  std::size_t total = 0;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    branches[i].validate("branch " + std::to_string(i + 1));
    total += branches[i].out_size;
  }
  trunk.validate();
  if (trunk.out_size != total) {
    throw InvalidArgument("trunk output " + std::to_string(trunk.out_size) + " must equal the sum of branch outputs " +
                          std::to_string(total));
  }
}

std::string ModelConfig::describe() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const auto& b = branches[i];
    os << "branch " << i + 1 << ": in " << b.input_size << ", GRU " << b.gru_layers << "x" << b.hidden;
    if (b.norm_channels) os << ", group norm " << b.norm_channels;
    os << ", FC " << b.fc_layers << ", out " << b.out_size << "\n";
  }
  os << "trunk: in " << trunk.input_size << ", FC " << trunk.fc_layers << "x" << trunk.hidden << ", out "
     << trunk.out_size << "\ncomponents: " << components << "\n";
  return os.str();
}

Tensor Branch::forward(const Tensor& seq) const {
  if (seq.rank() != 3 || seq.dim(2) != config.input_size) {
    throw InvalidArgument("branch input must be [B, T, " + std::to_string(config.input_size) + "], got " +
                          ad::to_string(seq.shape()));
  }
  const std::size_t B = seq.dim(0), T = seq.dim(1);
  Tensor h = seq;
  for (const auto& cell : grus) h = gru_sequence(cell, h);
  Tensor flat = ad::reshape(h, {B * T, config.hidden});
  if (config.norm_channels > 0) flat = ad::group_norm(flat, config.norm_channels, norm_gamma, norm_beta);
  const Tensor out = mlp.forward(flat);
  return ad::reshape(out, {B, T, out.dim(1)});
}

}  // namespace ifenn::net
