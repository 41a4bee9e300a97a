#pragma once

// Labeled datasets, normalization, loss functions, error metrics, learning
// rate schedules and the training loop for the operator network.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ifenn/experiment.hpp"
#include "ifenn/operatornet.hpp"

namespace ifenn::train {

// ---- normalization ----------------------------------------------------------

enum class NormMode { kMinMax01, kMinMax11, kStandardize };

std::string to_string(NormMode m);
/// "minmax01", "minmax11" or "standardize". Throws InvalidArgument.
NormMode norm_mode_from_string(const std::string& name);

/// x_normalized = (x - shift) / scale.
struct ChannelStats {
  double shift = 0.0;
  double scale = 1.0;

  double normalize(double x) const { return (x - shift) / scale; }
  double denormalize(double x) const { return x * scale + shift; }
};

/// Statistics of one channel. A constant channel gets scale 1 so that it
/// maps to a constant instead of dividing by zero. Throws InvalidArgument
/// for empty input.
ChannelStats fit_channel(NormMode mode, std::span<const double> values);

struct NormalizationSpec {
  NormMode mode = NormMode::kMinMax01;
  ChannelStats load;
  ChannelStats strain;
  std::vector<ChannelStats> labels;  // one per output component
};

/// Plain-text "key = value" form; written next to checkpoints so that the
/// coupling driver normalizes inputs like the training run did.
void save_normalization(const std::string& path, const NormalizationSpec& spec);
/// Throws NotFound or FormatError.
NormalizationSpec load_normalization(const std::string& path);

// ---- dataset ----------------------------------------------------------------

struct LabelOptions {
  /// Append displacement components to the labels (surrogate training).
  bool include_displacement = false;
  /// Cases held out for testing; the rest is split 4:1 train:validation.
  std::size_t n_test = 0;
  std::uint64_t split_seed = 0;
  NormMode norm_mode = NormMode::kMinMax01;
  unsigned threads = 1;
};

/// Input k of a case pairs the load at t_{k+1} with tr(eps) of state k; the
/// label is the coupled field of state k+1 (T - T0 or p), followed by the
/// displacement components when requested. Values are physical.
struct Dataset {
  std::string family;
  std::uint64_t seed = 0;
  std::size_t n_t = 0, n_l = 0, n_s = 0, n_n = 0, n_c = 0, n_d = 0;
  std::vector<std::size_t> case_ids;
  std::vector<double> times;   // [N_t], t_1 .. t_N
  std::vector<double> load;    // [case][N_t][N_l]
  std::vector<double> strain;  // [case][N_t][N_s]
  std::vector<double> labels;  // [case][N_t][N_n][N_c]
  std::vector<double> coords;  // [N_n][N_d]
  std::vector<std::size_t> train, validation, test;  // positions into case_ids
  NormalizationSpec normalization;
  std::vector<std::pair<std::size_t, std::string>> failures;  // (case id, error)

  std::size_t n_cases() const noexcept { return case_ids.size(); }
  std::span<const double> case_load(std::size_t i) const;
  std::span<const double> case_strain(std::size_t i) const;
  std::span<const double> case_labels(std::size_t i) const;
  std::vector<mesh::Point> nodes() const;
  /// Position of a case id. Throws NotFound.
  std::size_t index_of(std::size_t case_id) const;

  /// Shapes, split disjointness and coverage. Throws FormatError.
  void validate() const;
};

/// Runs the monolithic solver for every case (in parallel over cases when
/// threads > 1), samples inputs and labels, assigns splits and fits the
/// normalization on the training split. Failing cases are recorded in
/// `failures` and left out.
Dataset label_dataset(const Experiment& e, const std::vector<LoadCase>& cases, const LabelOptions& options = {});

/// Seeded shuffle; the first n_test go to test, the remainder is split 4:1.
void assign_splits(Dataset& ds, std::size_t n_test, std::uint64_t seed);
/// Refits the normalization from the training split only.
void fit_normalization(Dataset& ds, NormMode mode);

/// Binary "IFND" file plus a "<path>.meta" text sidecar (splits,
/// normalization, case ids, failures).
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

// ---- losses -----------------------------------------------------------------

enum class LossKind { kL2, kL2Norm, kSSE, kMSE };

std::string to_string(LossKind k);
/// "l2", "l2norm", "sse" or "mse". Throws InvalidArgument.
LossKind loss_kind_from_string(const std::string& name);

/// Throws InvalidArgument on shape mismatch or L2Norm with zero target.
double compute_loss(LossKind kind, std::span<const double> y_pred, std::span<const double> y_true);
ad::Tensor loss_tensor(LossKind kind, const ad::Tensor& y_pred, const ad::Tensor& y_true);

// ---- metrics ----------------------------------------------------------------

/// ||y_true - y_pred|| / ||y_true||; the plain error norm when y_true = 0.
double l2_step(std::span<const double> y_pred, std::span<const double> y_true);
/// Root mean square of a list of per-step (or per-case) values.
double rms(std::span<const double> values);
/// 1e-5 of the largest |y_true|.
double epsilon_tolerance(std::span<const double> y_true);
/// |e| / (|y_true| + eps_tol) per entry.
std::vector<double> relative_error(std::span<const double> y_pred, std::span<const double> y_true, double eps_tol);

struct ComponentMetrics {
  std::vector<double> l2_t;  // per step
  double l2_lc = 0.0;
};

struct CaseMetrics {
  std::size_t case_id = 0;
  std::vector<ComponentMetrics> components;
};

struct MetricReport {
  std::vector<CaseMetrics> cases;
  std::vector<double> l2_all;   // per component
  std::vector<double> eps_tol;  // per component, over all cases
};

/// Both arrays are [case][N_t][N_n][N_c]; each component is evaluated
/// separately.
MetricReport compute_metrics(std::span<const double> y_pred, std::span<const double> y_true,
                             std::span<const std::size_t> case_ids, std::size_t n_t, std::size_t n_n,
                             std::size_t n_c);

/// Nearest-rank percentile over (score, id) pairs; among equal scores the
/// lowest id is returned.
std::size_t percentile_case(std::span<const double> scores, std::span<const std::size_t> ids, double percent);

// ---- learning rate ----------------------------------------------------------

/// Piecewise-linear rate over (epoch, rate) breakpoints, held constant
/// outside the first and last breakpoint.
struct LrSchedule {
  std::vector<std::pair<double, double>> breakpoints;

  static LrSchedule constant(double rate);
  /// Linear warm-up from start to peak, hold, then linear decay to end.
  static LrSchedule warm_hold_decay(double start, double peak, double end, int warm_epochs, int hold_epochs,
                                    int total_epochs);
  /// "epoch:rate,epoch:rate,...". Throws ConfigError.
  static LrSchedule parse(const std::string& text);
  std::string format() const;

  double rate(int epoch) const;
  /// Sorted epochs, non-negative finite rates. Throws InvalidArgument.
  void validate() const;
};

// ---- training ---------------------------------------------------------------

struct TrainOptions {
  LossKind loss = LossKind::kL2;
  LrSchedule schedule = LrSchedule::constant(1e-3);
  int epochs = 100;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  /// Restore the parameters of the best validation epoch at the end.
  bool keep_best = true;
  /// Progress line every n epochs (0 = silent).
  int log_every = 0;
  std::ostream* log = nullptr;
};

struct EpochRecord {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> history;
  int best_epoch = -1;
  double best_validation = 0.0;
  double seconds = 0.0;
};

/// Query nodes, trunk coordinate frame and output scaling from the dataset.
void prepare_model(net::OperatorModel& model, const Dataset& ds);

/// Branch inputs of the given cases, normalized: load first, then strain
/// when the model has a second branch. Shapes [B, N_t, N].
std::vector<ad::Tensor> branch_inputs(const net::OperatorModel& model, const Dataset& ds,
                                      std::span<const std::size_t> cases);

/// Minibatch Adam on the normalized labels. Throws TrainingDiverged with the
/// epoch index when a loss or gradient turns non-finite.
TrainReport train(net::OperatorModel& model, const Dataset& ds, const TrainOptions& options);

/// Loss of the given cases in normalized space, averaged over batches.
double evaluate_loss(const net::OperatorModel& model, const Dataset& ds, std::span<const std::size_t> cases,
                     LossKind kind, std::size_t batch_size);

/// Physical predictions [case][N_t][N_n][N_c] for the given cases.
std::vector<double> predict(const net::OperatorModel& model, const Dataset& ds, std::span<const std::size_t> cases);

struct TestReport {
  MetricReport metrics;
  std::vector<double> scores;  // L2^LC of component 0 per test case
  std::vector<std::size_t> ids;
  std::vector<double> histogram_edges;
  std::vector<std::size_t> histogram_counts;
  std::size_t p10 = 0, p50 = 0, p90 = 0;
};

/// Metrics on denormalized predictions of the test split. Throws
/// InvalidArgument when the split is empty.
TestReport evaluate_testset(const net::OperatorModel& model, const Dataset& ds, std::size_t bins = 10);

}  // namespace ifenn::train
