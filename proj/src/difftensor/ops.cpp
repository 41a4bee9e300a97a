#include <cmath>

#include "ifenn/errors.hpp"
#include "ifenn/tensor.hpp"

namespace ifenn::ad {
namespace {

// Wraps a freshly computed value; attaches parents and the backward closure
// only when a tape is active and some parent needs gradients.
Tensor finish(Shape shape, std::vector<double> value, std::vector<const Tensor*> parents,
              std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  Tape* tape = active_tape();
  bool needs = false;
  for (const auto* p : parents) needs = needs || p->requires_grad();
  if (tape && needs) {
    node->requires_grad = true;
    for (const auto* p : parents) node->parents.push_back(p->node());
    node->backward = std::move(backward_fn);
    tape->record(node);
  }
  return Tensor(std::move(node));
}

// Gradient buffer of parent i, or nullptr when it does not take gradients.
double* pgrad(Node& n, std::size_t i) {
  auto& p = *n.parents[i];
  if (!p.requires_grad) return nullptr;
  return p.ensure_grad().data();
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (!t.defined() || t.rank() != rank) {
    throw InvalidArgument(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                          (t.defined() ? to_string(t.shape()) : "undefined"));
  }
}

enum class Broadcast { kSame, kLeftScalar, kRightScalar };

Broadcast classify(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (a.numel() == 1) return Broadcast::kLeftScalar;
  if (b.numel() == 1) return Broadcast::kRightScalar;
  throw InvalidArgument(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                        to_string(b.shape()));
}

template <class Fwd, class DA, class DB>
Tensor binary(const Tensor& a, const Tensor& b, const char* op, Fwd fwd, DA da, DB db) {
  const auto mode = classify(a, b, op);
  const Shape shape = mode == Broadcast::kLeftScalar ? b.shape() : a.shape();
  const std::size_t n = numel(shape);
  auto av = a.data();
  auto bv = b.data();
  auto ai = [mode](std::size_t i) { return mode == Broadcast::kLeftScalar ? 0 : i; };
  auto bi = [mode](std::size_t i) { return mode == Broadcast::kRightScalar ? 0 : i; };
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[ai(i)], bv[bi(i)]);
  return finish(shape, std::move(out), {&a, &b}, [mode, n, ai, bi, da, db](Node& self) {
    const auto& A = self.parents[0]->value;
    const auto& B = self.parents[1]->value;
    double* ga = pgrad(self, 0);
    double* gb = pgrad(self, 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = self.grad[i];
      if (ga) ga[ai(i)] += g * da(A[ai(i)], B[bi(i)]);
      if (gb) gb[bi(i)] += g * db(A[ai(i)], B[bi(i)]);
    }
    (void)mode;
  });
}

template <class Fwd, class Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv) {
  const std::size_t n = a.numel();
  auto av = a.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i]);
  return finish(a.shape(), std::move(out), {&a}, [n, deriv](Node& self) {
    double* ga = pgrad(self, 0);
    if (!ga) return;
    const auto& x = self.parents[0]->value;
    for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[i] * deriv(x[i], self.value[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw InvalidArgument("matmul: inner dimensions differ " + to_string(a.shape()) + " x " +
                          to_string(b.shape()));
  }
  auto A = a.data();
  auto B = b.data();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = B.data() + p * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return finish({m, n}, std::move(out), {&a, &b}, [m, k, n](Node& self) {
    const auto& A = self.parents[0]->value;
    const auto& B = self.parents[1]->value;
    const auto& G = self.grad;
    if (double* ga = pgrad(self, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += G[i * n + j] * B[p * n + j];
          ga[i * k + p] += s;
        }
      }
    }
    if (double* gb = pgrad(self, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A[i * k + p];
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * G[i * n + j];
        }
      }
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  Tensor y = matmul(x, w);
  require_rank(bias, 1, "linear bias");
  const std::size_t m = y.dim(0), n = y.dim(1);
  if (bias.dim(0) != n) throw InvalidArgument("linear: bias length does not match output width");
  std::vector<double> out(y.data().begin(), y.data().end());
  auto bv = bias.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
  }
  return finish({m, n}, std::move(out), {&y, &bias}, [m, n](Node& self) {
    if (double* gy = pgrad(self, 0)) {
      for (std::size_t i = 0; i < m * n; ++i) gy[i] += self.grad[i];
    }
    if (double* gb = pgrad(self, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) gb[j] += self.grad[i * n + j];
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor one_minus(const Tensor& a) {
  return unary(a, [](double x) { return 1.0 - x; }, [](double, double) { return -1.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  const std::size_t n = a.numel();
  return finish({}, {s}, {&a}, [n](Node& self) {
    if (double* ga = pgrad(self, 0)) {
      for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw InvalidArgument("mean of an empty tensor");
  return mul_scalar(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor l2_norm(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  const double norm = std::sqrt(s);
  const std::size_t n = a.numel();
  return finish({}, {norm}, {&a}, [n](Node& self) {
    double* ga = pgrad(self, 0);
    const double r = self.value[0];
    if (!ga || r == 0.0) return;
    const auto& x = self.parents[0]->value;
    for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[0] * x[i] / r;
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.numel()) {
    throw InvalidArgument("reshape: " + to_string(a.shape()) + " -> " + to_string(shape));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  const std::size_t n = a.numel();
  return finish(std::move(shape), std::move(out), {&a}, [n](Node& self) {
    if (double* ga = pgrad(self, 0)) {
      for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[i];
    }
  });
}

Tensor concat_last(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw InvalidArgument("concat_last: no inputs");
  const Shape& first = parts[0].shape();
  if (first.empty()) throw InvalidArgument("concat_last: scalar input");
  const Shape lead(first.begin(), first.end() - 1);
  std::size_t rows = numel(lead);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin())) {
      throw InvalidArgument("concat_last: leading dimensions differ " + to_string(first) + " vs " +
                            to_string(s));
    }
    widths.push_back(s.back());
    total += s.back();
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t q = 0; q < parts.size(); ++q) {
    auto v = parts[q].data();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < widths[q]; ++j) out[r * total + offset + j] = v[r * widths[q] + j];
    }
    offset += widths[q];
  }
  Shape shape = lead;
  shape.push_back(total);
  std::vector<const Tensor*> ptrs;
  for (const auto& p : parts) ptrs.push_back(&p);
  return finish(std::move(shape), std::move(out), ptrs, [rows, total, widths](Node& self) {
    std::size_t offset = 0;
    for (std::size_t q = 0; q < widths.size(); ++q) {
      if (double* g = pgrad(self, q)) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t j = 0; j < widths[q]; ++j) g[r * widths[q] + j] += self.grad[r * total + offset + j];
        }
      }
      offset += widths[q];
    }
  });
}

Tensor time_slice(const Tensor& seq, std::size_t t) {
  require_rank(seq, 3, "time_slice");
  const std::size_t B = seq.dim(0), T = seq.dim(1), F = seq.dim(2);
  if (t >= T) throw InvalidArgument("time_slice: step out of range");
  auto v = seq.data();
  std::vector<double> out(B * F);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t f = 0; f < F; ++f) out[b * F + f] = v[(b * T + t) * F + f];
  }
  return finish({B, F}, std::move(out), {&seq}, [B, T, F, t](Node& self) {
    if (double* g = pgrad(self, 0)) {
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t f = 0; f < F; ++f) g[(b * T + t) * F + f] += self.grad[b * F + f];
      }
    }
  });
}

Tensor stack_time(const std::vector<Tensor>& steps) {
  if (steps.empty()) throw InvalidArgument("stack_time: no steps");
  require_rank(steps[0], 2, "stack_time");
  const std::size_t B = steps[0].dim(0), F = steps[0].dim(1), T = steps.size();
  std::vector<double> out(B * T * F);
  std::vector<const Tensor*> ptrs;
  for (std::size_t t = 0; t < T; ++t) {
    if (steps[t].shape() != steps[0].shape()) throw InvalidArgument("stack_time: step shapes differ");
    auto v = steps[t].data();
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t f = 0; f < F; ++f) out[(b * T + t) * F + f] = v[b * F + f];
    }
    ptrs.push_back(&steps[t]);
  }
  return finish({B, T, F}, std::move(out), ptrs, [B, T, F](Node& self) {
    for (std::size_t t = 0; t < T; ++t) {
      double* g = pgrad(self, t);
      if (!g) continue;
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t f = 0; f < F; ++f) g[b * F + f] += self.grad[(b * T + t) * F + f];
      }
    }
  });
}

Tensor group_norm(const Tensor& x, std::size_t groups, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  require_rank(x, 2, "group_norm");
  const std::size_t m = x.dim(0), F = x.dim(1);
  if (groups == 0 || F % groups != 0) {
    throw InvalidArgument("group_norm: " + std::to_string(F) + " features not divisible into " +
                          std::to_string(groups) + " groups");
  }
  if (gamma.numel() != F || beta.numel() != F) throw InvalidArgument("group_norm: gamma/beta length");
  const std::size_t G = F / groups;  // features per group
  auto xv = x.data();
  auto gv = gamma.data();
  auto bv = beta.data();
  std::vector<double> xhat(m * F);
  std::vector<double> inv_std(m * groups);
  std::vector<double> out(m * F);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t g = 0; g < groups; ++g) {
      const std::size_t base = r * F + g * G;
      double mu = 0.0;
      for (std::size_t j = 0; j < G; ++j) mu += xv[base + j];
      mu /= G;
      double var = 0.0;
      for (std::size_t j = 0; j < G; ++j) var += (xv[base + j] - mu) * (xv[base + j] - mu);
      var /= G;
      const double is = 1.0 / std::sqrt(var + eps);
      inv_std[r * groups + g] = is;
      for (std::size_t j = 0; j < G; ++j) {
        const std::size_t f = g * G + j;
        xhat[base + j] = (xv[base + j] - mu) * is;
        out[base + j] = xhat[base + j] * gv[f] + bv[f];
      }
    }
  }
  return finish({m, F}, std::move(out), {&x, &gamma, &beta},
                [m, F, G, groups, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                  const auto& gam = self.parents[1]->value;
                  double* gx = pgrad(self, 0);
                  double* gg = pgrad(self, 1);
                  double* gb = pgrad(self, 2);
                  const auto& dy = self.grad;
                  for (std::size_t r = 0; r < m; ++r) {
                    for (std::size_t g = 0; g < groups; ++g) {
                      const std::size_t base = r * F + g * G;
                      double sum_d = 0.0, sum_dx = 0.0;
                      for (std::size_t j = 0; j < G; ++j) {
                        const std::size_t f = g * G + j;
                        const double d = dy[base + j] * gam[f];
                        sum_d += d;
                        sum_dx += d * xhat[base + j];
                        if (gg) gg[f] += dy[base + j] * xhat[base + j];
                        if (gb) gb[f] += dy[base + j];
                      }
                      if (!gx) continue;
                      const double is = inv_std[r * groups + g];
                      for (std::size_t j = 0; j < G; ++j) {
                        const std::size_t f = g * G + j;
                        const double d = dy[base + j] * gam[f];
                        gx[base + j] += is * (d - sum_d / G - xhat[base + j] * sum_dx / G);
                      }
                    }
                  }
                });
}

Tensor merge_reduce(const std::vector<Tensor>& branches, const Tensor& trunk, const Tensor& bias,
                    std::size_t components) {
  if (branches.empty()) throw InvalidArgument("merge_reduce: no branches");
  require_rank(trunk, 2, "merge_reduce trunk");
  const std::size_t C = components;
  if (C == 0) throw InvalidArgument("merge_reduce: zero components");
  const std::size_t B = branches[0].rank() == 3 ? branches[0].dim(0) : 0;
  const std::size_t T = branches[0].rank() == 3 ? branches[0].dim(1) : 0;
  std::vector<std::size_t> dims;
  std::size_t D = 0;
  for (const auto& br : branches) {
    require_rank(br, 3, "merge_reduce branch");
    if (br.dim(0) != B || br.dim(1) != T) throw InvalidArgument("merge_reduce: branch batch/time differ");
    if (br.dim(2) % C != 0) throw InvalidArgument("merge_reduce: branch width not divisible by components");
    dims.push_back(br.dim(2) / C);
    D += br.dim(2) / C;
  }
  const std::size_t N = trunk.dim(0);
  if (trunk.dim(1) != C * D) {
    throw InvalidArgument("merge_reduce: trunk width " + std::to_string(trunk.dim(1)) + " != " +
                          std::to_string(C * D));
  }
  if (bias.numel() != C) throw InvalidArgument("merge_reduce: bias must have one entry per component");

  // Gather branch outputs into concat[bt][c][k].
  const std::size_t BT = B * T;
  std::vector<double> cat(BT * C * D);
  {
    std::size_t koff = 0;
    for (std::size_t q = 0; q < branches.size(); ++q) {
      auto v = branches[q].data();
      const std::size_t Dq = dims[q];
      for (std::size_t bt = 0; bt < BT; ++bt) {
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t k = 0; k < Dq; ++k) cat[(bt * C + c) * D + koff + k] = v[bt * C * Dq + c * Dq + k];
        }
      }
      koff += Dq;
    }
  }
  auto tr = trunk.data();
  auto bs = bias.data();
  std::vector<double> out(BT * N * C);
  for (std::size_t bt = 0; bt < BT; ++bt) {
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t c = 0; c < C; ++c) {
        const double* a = cat.data() + (bt * C + c) * D;
        const double* t = tr.data() + n * C * D + c * D;
        double s = bs[c];
        for (std::size_t k = 0; k < D; ++k) s += a[k] * t[k];
        out[(bt * N + n) * C + c] = s;
      }
    }
  }

  std::vector<const Tensor*> ptrs;
  for (const auto& br : branches) ptrs.push_back(&br);
  ptrs.push_back(&trunk);
  ptrs.push_back(&bias);
  const std::size_t nb = branches.size();
  return finish({B, T, N, C}, std::move(out), ptrs,
                [=, cat = std::move(cat)](Node& self) {
                  const auto& G = self.grad;
                  const auto& tr = self.parents[nb]->value;
                  double* gt = pgrad(self, nb);
                  double* gbias = pgrad(self, nb + 1);
                  std::vector<double> gcat(BT * C * D, 0.0);
                  for (std::size_t bt = 0; bt < BT; ++bt) {
                    for (std::size_t n = 0; n < N; ++n) {
                      for (std::size_t c = 0; c < C; ++c) {
                        const double g = G[(bt * N + n) * C + c];
                        if (g == 0.0) continue;
                        if (gbias) gbias[c] += g;
                        const double* a = cat.data() + (bt * C + c) * D;
                        const double* t = tr.data() + n * C * D + c * D;
                        double* ga = gcat.data() + (bt * C + c) * D;
                        for (std::size_t k = 0; k < D; ++k) ga[k] += g * t[k];
                        if (gt) {
                          double* gtt = gt + n * C * D + c * D;
                          for (std::size_t k = 0; k < D; ++k) gtt[k] += g * a[k];
                        }
                      }
                    }
                  }
                  std::size_t koff = 0;
                  for (std::size_t q = 0; q < nb; ++q) {
                    const std::size_t Dq = dims[q];
                    if (double* gq = pgrad(self, q)) {
                      for (std::size_t bt = 0; bt < BT; ++bt) {
                        for (std::size_t c = 0; c < C; ++c) {
                          for (std::size_t k = 0; k < Dq; ++k) {
                            gq[bt * C * Dq + c * Dq + k] += gcat[(bt * C + c) * D + koff + k];
                          }
                        }
                      }
                    }
                    koff += Dq;
                  }
                });
}

Tensor nodal_affine(const Tensor& x, std::span<const double> slope, std::span<const double> offset) {
  require_rank(x, 4, "nodal_affine");
  const std::size_t B = x.dim(0), T = x.dim(1), N = x.dim(2), C = x.dim(3);
  if (slope.size() != N * C) throw InvalidArgument("nodal_affine: slope must be [N, C]");
  if (offset.size() != T * N * C) throw InvalidArgument("nodal_affine: offset must be [T, N, C]");
  auto xv = x.data();
  std::vector<double> out(xv.size());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < N * C; ++i) {
        const std::size_t idx = (b * T + t) * N * C + i;
        out[idx] = xv[idx] * slope[i] + offset[t * N * C + i];
      }
    }
  }
  std::vector<double> s(slope.begin(), slope.end());
  return finish(x.shape(), std::move(out), {&x}, [B, T, N, C, s = std::move(s)](Node& self) {
    double* g = pgrad(self, 0);
    if (!g) return;
    for (std::size_t bt = 0; bt < B * T; ++bt) {
      for (std::size_t i = 0; i < N * C; ++i) g[bt * N * C + i] += self.grad[bt * N * C + i] * s[i];
    }
  });
}

}  // namespace ifenn::ad
