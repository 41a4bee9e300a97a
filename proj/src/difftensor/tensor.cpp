#include <sstream>

#include "ifenn/errors.hpp"
#include "ifenn/tensor.hpp"

namespace ifenn::ad {
namespace {

thread_local Tape* g_active_tape = nullptr;

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> values, bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw InvalidArgument("tensor data length " + std::to_string(values.size()) +
                          " does not match shape " + to_string(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

std::vector<double>& Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const auto n = ad::numel(shape);
  return Tensor(make_node(std::move(shape), std::vector<double>(n, value), false));
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  return Tensor(make_node(std::move(shape), std::move(values), false));
}

Tensor Tensor::scalar(double value) { return Tensor(make_node({}, {value}, false)); }

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  auto node = make_node(std::move(shape), std::move(values), true);
  node->ensure_grad();
  return Tensor(std::move(node));
}

std::span<const double> Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->value.size(), 0.0);
}

double Tensor::item() const {
  if (numel() != 1) throw InvalidArgument("item() on tensor of shape " + to_string(shape()));
  return node_->value[0];
}

Tensor Tensor::detached() const { return Tensor::from(shape(), node_->value); }

void Tape::backward(const Tensor& root) {
  if (!root.defined() || root.numel() != 1) {
    throw InvalidArgument("backward() needs a scalar root");
  }
  if (!root.requires_grad()) {
    // Root does not depend on any parameter: every gradient stays as is.
    nodes_.clear();
    return;
  }
  root.node()->ensure_grad()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (n.grad.empty() || !n.backward) continue;
    n.backward(n);
  }
  nodes_.clear();
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }

TapeScope::~TapeScope() {
  if (g_active_tape) g_active_tape->clear();
  g_active_tape = previous_;
}

Tape* active_tape() noexcept { return g_active_tape; }

void backward(const Tensor& root) {
  if (!g_active_tape) throw InvalidArgument("backward() without an active tape");
  g_active_tape->backward(root);
}

}  // namespace ifenn::ad
