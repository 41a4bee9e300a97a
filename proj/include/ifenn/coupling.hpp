#pragma once

// Staggered hybrid solver: each step the mechanics side hands the strain
// trace at the strain sensors to a field predictor, receives the coupled
// field at every node, and solves the mechanics-only system with it.

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ifenn/experiment.hpp"
#include "ifenn/fem.hpp"
#include "ifenn/operatornet.hpp"
#include "ifenn/training.hpp"

namespace ifenn::coupling {

// ---- channel ------------------------------------------------------------------

enum class Transport { kInProcess, kFile };

/// Two-party exchange with a strict order per step: write_strain,
/// read_strain, write_field, read_field. Anything else is a ProtocolError.
/// The file transport stores each payload as "strain_NNN.bin" /
/// "field_NNN.bin" (little-endian count + float64 block) and signals it with
/// a one-byte ".ready" marker.
class CouplingChannel {
 public:
  static CouplingChannel in_process();
  static CouplingChannel file(const std::string& directory,
                              std::chrono::milliseconds timeout = std::chrono::milliseconds(10000));

  Transport transport() const noexcept { return transport_; }
  const std::string& directory() const noexcept { return dir_; }

  void write_strain(std::span<const double> values);
  std::vector<double> read_strain();
  void write_field(std::span<const double> values);
  std::vector<double> read_field();

  /// Completed exchanges (field reads).
  std::uint64_t sequence() const noexcept { return sequence_; }
  std::uint64_t strain_writes() const noexcept { return strain_writes_; }
  std::uint64_t field_reads() const noexcept { return sequence_; }

 private:
  enum class State { kIdle, kStrainReady, kAwaitField, kFieldReady };
  CouplingChannel(Transport t, std::string dir, std::chrono::milliseconds timeout);
  void expect(State s, const char* op) const;
  std::string payload_path(const char* kind) const;
  void put(const char* kind, std::span<const double> values, std::vector<double>& buffer);
  std::vector<double> take(const char* kind, std::vector<double>& buffer);

  Transport transport_;
  std::string dir_;
  std::chrono::milliseconds timeout_;
  State state_ = State::kIdle;
  std::uint64_t sequence_ = 0;
  std::uint64_t strain_writes_ = 0;
  std::vector<double> strain_buf_, field_buf_;
};

// ---- predictors ---------------------------------------------------------------

/// Network side of the loop. `strain` is tr(eps) of state step-1 at the
/// strain sensors; the result is the coupled field increment (T - T0 or p)
/// of state `step` at every node.
class FieldPredictor {
 public:
  virtual ~FieldPredictor() = default;
  virtual std::vector<double> predict(int step, double time, std::span<const double> strain) = 0;
  /// Forget any history before a new run.
  virtual void reset() {}
};

/// Operator network evaluated on the full input prefix every step.
class NetworkPredictor : public FieldPredictor {
 public:
  NetworkPredictor(const net::OperatorModel& model, train::NormalizationSpec normalization,
                   const train::Experiment& experiment, train::LoadCase load_case);
  std::vector<double> predict(int step, double time, std::span<const double> strain) override;
  void reset() override;

  /// Sequence length fed to the network at each call.
  const std::vector<std::size_t>& input_lengths() const noexcept { return lengths_; }

 private:
  net::OperatorModel model_;
  train::NormalizationSpec norm_;
  const train::Experiment* experiment_;
  train::LoadCase case_;
  std::vector<double> load_hist_, strain_hist_, times_;
  std::vector<std::size_t> lengths_;
};

/// Returns the coupled field of a reference state sequence, ignoring the
/// strain input.
class OraclePredictor : public FieldPredictor {
 public:
  OraclePredictor(std::vector<fem::TransientState> states, double z_offset);
  std::vector<double> predict(int step, double time, std::span<const double> strain) override;

 private:
  std::vector<fem::TransientState> states_;
  double offset_;
};

class ZeroPredictor : public FieldPredictor {
 public:
  explicit ZeroPredictor(std::size_t nodes) : nodes_(nodes) {}
  std::vector<double> predict(int, double, std::span<const double>) override {
    return std::vector<double>(nodes_, 0.0);
  }

 private:
  std::size_t nodes_;
};

// ---- driver -------------------------------------------------------------------

struct IfennResult {
  std::vector<fem::TransientState> states;  // 0 .. n_steps
  std::vector<fem::StepStats> stats;         // mechanics-only solves
  double inference_seconds = 0.0;
  double seconds = 0.0;
};

/// Staggered run over n_steps (the experiment's count when negative).
/// Solver errors are re-thrown with the failing step in the message.
IfennResult run_ifenn(const train::Experiment& e, const train::LoadCase& c, FieldPredictor& predictor,
                      CouplingChannel& channel, int n_steps = -1, const fem::SolveOptions& solve = {});

// ---- stability harness --------------------------------------------------------

/// Steps up to switch_field feed the reference field to the mechanics solve;
/// steps up to switch_strain feed the reference strain trace to the
/// network. Later steps use the hybrid values. n_steps + 1 means never.
struct StabilityConfig {
  int switch_field = 1;
  int switch_strain = 1;

  /// 1 <= switch_field <= switch_strain <= n_steps + 1.
  void validate(int n_steps) const;
};

struct StabilityResult {
  std::vector<double> z_error;       // L2^t of the predicted field, steps 1..N
  std::vector<double> strain_error;  // L2^t of the nodal strain trace, steps 1..N
  std::vector<fem::TransientState> states;
};

StabilityResult run_stability_study(const train::Experiment& e, const train::LoadCase& c, FieldPredictor& predictor,
                                    const std::vector<fem::TransientState>& reference, const StabilityConfig& cfg);

// ---- comparison ---------------------------------------------------------------

/// Per-step and per-run errors of a hybrid run against the monolithic one.
/// Components: 0 = coupled field increment, 1.. = displacement axes; the
/// displacement entry compares the full vector field.
struct Comparison {
  std::vector<std::string> names;            // "z", "u_x", "u_y", ("u_z")
  std::vector<std::vector<double>> l2_t;     // [component][step 1..N]
  std::vector<double> l2_lc;                 // [component]
  std::vector<double> eps_tol;               // [component]
  std::vector<double> u_l2_t;                // displacement vector, per step
  double u_l2_lc = 0.0;
  /// eps_rel of the field increment per step, [step 1..N][node].
  std::vector<std::vector<double>> z_eps_rel;
};

/// Throws InvalidArgument for differing step or node counts.
Comparison compare_vs_monolithic(const train::Experiment& e, const std::vector<fem::TransientState>& hybrid,
                                 const std::vector<fem::TransientState>& monolithic);

/// VTK fields of one step: both solutions and eps_rel capped at `cap`.
void write_error_vtk(const std::string& path, const train::Experiment& e, const fem::TransientState& hybrid,
                     const fem::TransientState& monolithic, double cap = 0.05);

/// Surrogate substitution: every field of every step from a network
/// trained with displacement labels (load branch only).
std::vector<fem::TransientState> run_surrogate(const net::OperatorModel& model,
                                               const train::NormalizationSpec& normalization,
                                               const train::Experiment& e, const train::LoadCase& c);

}  // namespace ifenn::coupling
