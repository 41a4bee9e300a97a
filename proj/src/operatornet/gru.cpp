#include <cmath>

#include "ifenn/errors.hpp"
#include "ifenn/operatornet.hpp"

namespace ifenn::net {

Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> w(fan_in * fan_out);
  for (auto& v : w) v = dist(rng);
  return Tensor::parameter({fan_in, fan_out}, std::move(w));
}

GruCell GruCell::create(std::size_t input, std::size_t hidden, Rng& rng) {
  if (input == 0 || hidden == 0) throw InvalidArgument("GRU sizes must be positive");
  GruCell c;
  c.input = input;
  c.hidden = hidden;
  c.w_xr = glorot(input, hidden, rng);
  c.w_xz = glorot(input, hidden, rng);
  c.w_xh = glorot(input, hidden, rng);
  c.w_hr = glorot(hidden, hidden, rng);
  c.w_hz = glorot(hidden, hidden, rng);
  c.w_hh = glorot(hidden, hidden, rng);
  const std::vector<double> zero(hidden, 0.0);
  c.b_r = Tensor::parameter({hidden}, zero);
  c.b_z = Tensor::parameter({hidden}, zero);
  c.b_h = Tensor::parameter({hidden}, zero);
  return c;
}

std::vector<Tensor*> GruCell::parameters() {
  return {&w_xr, &w_xz, &w_xh, &w_hr, &w_hz, &w_hh, &b_r, &b_z, &b_h};
}

std::vector<const Tensor*> GruCell::parameters() const {
  return {&w_xr, &w_xz, &w_xh, &w_hr, &w_hz, &w_hh, &b_r, &b_z, &b_h};
}

Tensor gru_step(const GruCell& cell, const Tensor& x, const Tensor& h_prev) {
  if (x.rank() != 2 || x.dim(1) != cell.input) {
    throw InvalidArgument("GRU input must be [B, " + std::to_string(cell.input) + "], got " + ad::to_string(x.shape()));
  }
  if (h_prev.rank() != 2 || h_prev.dim(0) != x.dim(0) || h_prev.dim(1) != cell.hidden) {
    throw InvalidArgument("GRU hidden state must be [B, " + std::to_string(cell.hidden) + "], got " +
                          ad::to_string(h_prev.shape()));
  }
  const Tensor r = ad::sigmoid(ad::add(ad::linear(x, cell.w_xr, cell.b_r), ad::matmul(h_prev, cell.w_hr)));
  const Tensor z = ad::sigmoid(ad::add(ad::linear(x, cell.w_xz, cell.b_z), ad::matmul(h_prev, cell.w_hz)));
  const Tensor cand =
      ad::tanh(ad::add(ad::matmul(ad::mul(r, h_prev), cell.w_hh), ad::linear(x, cell.w_xh, cell.b_h)));
  return ad::add(ad::mul(z, h_prev), ad::mul(ad::one_minus(z), cand));
}

Tensor gru_sequence(const GruCell& cell, const Tensor& seq) {
  if (seq.rank() != 3) throw InvalidArgument("GRU sequence must be [B, T, F]");
  const std::size_t B = seq.dim(0), T = seq.dim(1);
  if (T == 0) throw InvalidArgument("GRU sequence is empty");
  Tensor h = Tensor::zeros({B, cell.hidden});
  std::vector<Tensor> steps;
  steps.reserve(T);
  for (std::size_t t = 0; t < T; ++t) {
    h = gru_step(cell, ad::time_slice(seq, t), h);
    steps.push_back(h);
  }
  return ad::stack_time(steps);
}

}  // namespace ifenn::net
