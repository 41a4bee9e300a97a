#include "ifenn/errors.hpp"
#include "ifenn/operatornet.hpp"

namespace ifenn::net {

std::vector<double> BcEnforcement::slope(std::span<const mesh::Point> nodes, std::size_t components) const {
  std::vector<double> s(nodes.size() * components, 1.0);
  for (const auto& part : parts) {
    if (part.component >= components) throw InvalidArgument("BC part " + part.name + " targets a missing component");
    for (std::size_t n = 0; n < nodes.size(); ++n) s[n * components + part.component] *= part.ell(nodes[n]);
  }
  return s;
}

std::vector<double> BcEnforcement::offset(std::span<const mesh::Point> nodes, std::span<const double> times,
                                          std::size_t components) const {
  const std::size_t N = nodes.size();
  std::vector<double> o(times.size() * N * components, 0.0);
  for (const auto& part : parts) {
    if (part.component >= components) throw InvalidArgument("BC part " + part.name + " targets a missing component");
    for (std::size_t n = 0; n < N; ++n) {
      const double w = 1.0 - part.ell(nodes[n]);
      if (w == 0.0) continue;
      for (std::size_t t = 0; t < times.size(); ++t) {
        o[(t * N + n) * components + part.component] += w * part.g(nodes[n], times[t]);
      }
    }
  }
  return o;
}

std::vector<double> BcEnforcement::apply(std::span<const double> raw, std::span<const mesh::Point> nodes,
                                         std::span<const double> times, std::size_t components) const {
  const std::size_t N = nodes.size();
  if (raw.size() != times.size() * N * components) throw InvalidArgument("BC input has the wrong length");
  const auto s = slope(nodes, components);
  const auto o = offset(nodes, times, components);
  std::vector<double> out(raw.size());
  for (std::size_t t = 0; t < times.size(); ++t) {
    for (std::size_t i = 0; i < N * components; ++i) {
      const std::size_t k = t * N * components + i;
      out[k] = raw[k] * s[i] + o[k];
    }
  }
  return out;
}

}  // namespace ifenn::net
