#include <cmath>

#include "ifenn/errors.hpp"
#include "ifenn/training.hpp"

namespace ifenn::train {

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::kL2: return "l2";
    case LossKind::kL2Norm: return "l2norm";
    case LossKind::kSSE: return "sse";
    case LossKind::kMSE: return "mse";
  }
  return "?";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "l2") return LossKind::kL2;
  if (name == "l2norm") return LossKind::kL2Norm;
  if (name == "sse") return LossKind::kSSE;
  if (name == "mse") return LossKind::kMSE;
  throw InvalidArgument("unknown loss kind: " + name);
}

double compute_loss(LossKind kind, std::span<const double> y_pred, std::span<const double> y_true) {
  if (y_pred.size() != y_true.size()) throw InvalidArgument("loss operands differ in size");
  if (y_true.empty()) throw InvalidArgument("loss of empty arrays");
  double sse = 0.0, yy = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double e = y_true[i] - y_pred[i];
    sse += e * e;
    yy += y_true[i] * y_true[i];
  }
  switch (kind) {
    case LossKind::kL2: return std::sqrt(sse);
    case LossKind::kSSE: return sse;
    case LossKind::kMSE: return sse / double(y_true.size());
    case LossKind::kL2Norm:
      if (yy == 0.0) throw InvalidArgument("l2norm loss with an all-zero target");
      return std::sqrt(sse / yy);
  }
  return 0.0;
}

ad::Tensor loss_tensor(LossKind kind, const ad::Tensor& y_pred, const ad::Tensor& y_true) {
  if (y_pred.shape() != y_true.shape()) {
    throw InvalidArgument("loss operands differ in shape: " + ad::to_string(y_pred.shape()) + " vs " +
                          ad::to_string(y_true.shape()));
  }
  const ad::Tensor e = ad::sub(y_true, y_pred);
  switch (kind) {
    case LossKind::kL2: return ad::l2_norm(e);
    case LossKind::kSSE: return ad::sum(ad::square(e));
    case LossKind::kMSE: return ad::mean(ad::square(e));
    case LossKind::kL2Norm: {
      double yy = 0.0;
      for (double v : y_true.data()) yy += v * v;
      if (yy == 0.0) throw InvalidArgument("l2norm loss with an all-zero target");
      return ad::mul_scalar(ad::l2_norm(e), 1.0 / std::sqrt(yy));
    }
  }
  return {};
}

}  // namespace ifenn::train
