#pragma once

// Dense row-major float64 tensors with tape-based reverse-mode
// differentiation. Operations record onto the thread's active Tape only when
// one of their inputs requires gradients; without an active tape every
// operation is a plain, re-entrant forward computation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ifenn::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily, same length as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  /// Pushes this node's grad into its parents' grads.
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);
  /// Leaf tensor that accumulates gradients across backward passes.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->value.size(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  std::span<const double> data() const { return node_->value; }
  /// Mutable view for in-place parameter updates and initialization.
  std::span<double> mutable_data() { return node_->value; }
  /// Gradient buffer; all zeros when nothing has flowed into it yet.
  std::span<const double> grad() const;
  void zero_grad();
  double item() const;

  /// Same shape and values, detached from any graph.
  Tensor detached() const;

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Ordered record of the operations executed while it is active.
class Tape {
 public:
  void record(std::shared_ptr<Node> node) { nodes_.push_back(std::move(node)); }
  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Reverse sweep from a scalar root; gradients accumulate on every
  /// reachable parameter. Recorded nodes are released afterwards.
  void backward(const Tensor& root);

 private:
  std::vector<std::shared_ptr<Node>> nodes_;
};

/// Activates a tape on the current thread for its lifetime.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape() noexcept;

/// Backward through the active tape. Throws InvalidArgument for a non-scalar
/// root or when no tape is active.
void backward(const Tensor& root);

// ---- primitives (ops.cpp) ------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);           // [m,k] x [k,n]
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);  // x w + bias, bias [n]
Tensor add(const Tensor& a, const Tensor& b);              // same shape, or either scalar
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);
Tensor one_minus(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor square(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// sqrt(sum a^2); the gradient at a == 0 is taken as zero.
Tensor l2_norm(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
/// Concatenation along the last axis; leading dimensions must agree.
Tensor concat_last(const std::vector<Tensor>& parts);
/// [B, T, F] -> [B, F] at step t.
Tensor time_slice(const Tensor& seq, std::size_t t);
/// T tensors of [B, F] -> [B, T, F].
Tensor stack_time(const std::vector<Tensor>& steps);
/// Rows of x [m, F] split into `groups` contiguous channels, each standardized
/// with biased variance, then scaled/shifted per feature by gamma/beta [F].
Tensor group_norm(const Tensor& x, std::size_t groups, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);
/// out[b,t,n,c] = sum_k concat[b,t,k,c] * trunk[n, c*D + k] + bias[c], where
/// branch i has shape [B,T,D_i*C] laid out component-major (c*D_i + k) and
/// concat stacks the branches' k ranges in order; D = sum D_i.
Tensor merge_reduce(const std::vector<Tensor>& branches, const Tensor& trunk, const Tensor& bias,
                    std::size_t components);
/// x [B,T,N,C] -> x * slope[n,c] + offset[t,n,c]; slope/offset are constants.
Tensor nodal_affine(const Tensor& x, std::span<const double> slope, std::span<const double> offset);

// ---- optimizer (adam.cpp) -------------------------------------------------

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  long step = 0;
};

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options = {});

  /// One bias-corrected update using the parameters' current gradients.
  /// Throws TrainingDiverged when a gradient is not finite.
  void step(double learning_rate);
  void zero_grad();

  const OptimizerState& state() const noexcept { return state_; }
  const std::vector<Tensor>& params() const noexcept { return params_; }

 private:
  std::vector<Tensor> params_;
  AdamOptions options_;
  OptimizerState state_;
};

// ---- checkpoint (checkpoint.cpp) -------------------------------------------

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

/// "IFNC" magic, version byte, manifest of (name, shape) entries, then one
/// little-endian float64 block per entry in manifest order.
void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& entries);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

inline constexpr std::uint8_t kCheckpointVersion = 1;

}  // namespace ifenn::ad
