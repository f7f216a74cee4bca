#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cproj/elm.hpp"
#include "cproj/kernel_store.hpp"
#include "cproj/kinematics.hpp"
#include "cproj/landmarks.hpp"
#include "cproj/metrics.hpp"
#include "cproj/projection.hpp"
#include "cproj/recording.hpp"
#include "cproj/smoothing.hpp"

namespace corrproj {

struct EvaluationConfig {
  std::vector<std::size_t> sizes{50, 250, 1000};
  std::size_t candidates = 10; // L
  std::size_t backward_neighbors = 10; // M
  /// Similarity radius in human space; unset picks the 10th percentile of
  /// held-out nearest-landmark distances.
  std::optional<double> delta;
  double epsilon_deg = 10.0;
  std::size_t motion_frames = 120;
  double motion_fps = 30.0;
  std::size_t latency_queries = 100000;
  /// Larger L = M for the latency comparison.
  std::size_t latency_wide = 50;
  std::size_t similarity_queries = 2000;
  std::uint64_t seed = 1;
  std::size_t k = 16;
  double lambda = kDefaultElmRegularization;
  SmootherParams smoothing;
  SynthesisOptions synthesis;
  LandmarkOptions landmark_options;
  /// Relative tolerance on the landmark count reached for each size.
  double size_tolerance = 0.05;
  /// Allowed relative increase of mean M_avg from one size to the next.
  double sweep_slack = 0.10;
  /// Quality bound: per-frame M_max below this many degrees...
  double quality_bound_deg = 10.0;
  /// ...on at least this fraction of motion frames...
  double quality_fraction = 0.95;
  /// ...with mean M_avg below this.
  double quality_mean_avg_deg = 5.0;
  double latency_budget_ms = 0.1;
  /// Identity: M_avg below this many degrees on at least this fraction of
  /// landmarks, within the time budget.
  double identity_bound_deg = 2.0;
  double identity_fraction = 0.99;
  double identity_budget_s = 30.0;
  /// Exact-solver optimality against the barycentric grid.
  std::size_t exact_queries = 200;
  std::size_t exact_candidates = 10;
  std::size_t exact_backward = 6;
  std::size_t grid_resolution = 8;
  std::size_t elm_sets = 50;
  double elm_budget_s = 5.0;
  std::size_t smoother_streams = 100;
  std::size_t blob_seeds = 20;

  /// Throws invalid-configuration when a field is out of range.
  void validate() const;
};

struct PoseCase {
  std::string name;
  DeviationReport report;
};

struct MotionFrame {
  std::size_t frame = 0;
  double t = 0.0;
  DeviationReport raw; // projection alone
  DeviationReport smoothed; // projection followed by the smoother
};

struct MotionTrace {
  std::string pose;
  std::vector<MotionFrame> frames;
};

struct LatencyStats {
  std::size_t candidates = 0;
  std::size_t backward_neighbors = 0;
  std::size_t queries = 0;
  double mean_ms = 0.0;
  double p99_ms = 0.0;
};

struct SweepRow {
  std::size_t target = 0;
  std::size_t landmarks = 0;
  double bandwidth = 0.0;
  std::size_t search_runs = 0;
  double mean_m_max = 0.0;
  double mean_m_avg = 0.0;
};

struct SimilarityStats {
  double delta = 0.0;
  double epsilon_deg = 0.0;
  std::size_t probed = 0; // held-out frames examined
  std::size_t queries = 0; // frames within delta of the landmark set
  std::size_t passed = 0; // of those, M_max below epsilon
  double worst_m_max = 0.0;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  nlohmann::json values = nlohmann::json::object();
};

struct BenchReport {
  std::string schema;
  std::size_t landmarks = 0;
  std::vector<PoseCase> poses;
  std::vector<MotionTrace> motions;
  std::vector<LatencyStats> latency;
  std::vector<SweepRow> sweep;
  std::optional<SimilarityStats> similarity;
  std::vector<CriterionResult> criteria;

  bool passed() const;
};

/// Deviation of the projection of every benchmark pose from the pose itself.
/// Throws invalid-configuration when the schema has no benchmark poses.
std::vector<PoseCase> run_pose_suite(const ProjectionEngine& engine, const SkeletonSchema& schema);

/// Rest-to-pose motions, linearly interpolated in joint space over `frames`
/// frames, pushed through FK, projection and the smoother, and compared
/// with the IK of each frame.
std::vector<MotionTrace> run_motion_suite(const ProjectionEngine& engine, const SkeletonSchema& schema,
    std::size_t frames, const SmootherParams& smoothing = {}, double fps = 30.0);

/// Mean raw M_max / M_avg over every frame of the traces.
SweepRow summarize_motions(const std::vector<MotionTrace>& traces);

/// Per-query wall-clock timing of relaxed projection over pre-generated
/// queries.
LatencyStats measure_latency(const ProjectionEngine& engine, const std::vector<HumanPose>& queries);

/// Latency at L = M = each entry of `widths` on the same store.
std::vector<LatencyStats> run_latency(std::shared_ptr<const KernelStore> store, const std::vector<HumanPose>& queries,
    const std::vector<std::size_t>& widths);

/// Held-out frames within `delta` of the nearest human landmark are
/// projected and compared with their IK; without delta the radius is the
/// 10th percentile of the nearest-landmark distances.
SimilarityStats run_similarity_suite(const ProjectionEngine& engine, const Recording& held_out,
    std::optional<double> delta, double epsilon_deg, std::size_t max_queries);

/// A store whose landmark count is close to `target`, extracted from the
/// recording by searching the mean-shift bandwidth.
struct SizedStore {
  BandwidthSearch search;
  std::shared_ptr<const KernelStore> store;
  double build_seconds = 0.0; // landmarks at the found bandwidth plus kernels
};
SizedStore store_for_size(const Recording& recording, const SkeletonSchema& schema, std::size_t target,
    const EvaluationConfig& config);

using ProgressFn = std::function<void(std::string_view)>;

/// Builds a store per configured size and reports mean motion-suite error
/// for each. The stores are returned through `stores` when non-null.
std::vector<SweepRow> run_size_sweep(const Recording& recording, const SkeletonSchema& schema,
    const EvaluationConfig& config, std::vector<SizedStore>* stores = nullptr, const ProgressFn& progress = {});

/// Held-out frames for latency and similarity: a fresh synthetic recording
/// with a different seed.
Recording held_out_recording(const SkeletonSchema& schema, const EvaluationConfig& config);

/// Randomly drawn frames of `recording` (with replacement), as queries.
std::vector<HumanPose> sample_queries(const Recording& recording, std::size_t count, std::uint64_t seed);

/// Pose, motion, latency and similarity suites on an existing store, plus
/// every criterion that does not need the size sweep.
BenchReport run_store_bench(std::shared_ptr<const KernelStore> store, const EvaluationConfig& config,
    const ProgressFn& progress = {});

/// The full protocol: synthesize a recording, sweep the landmark sizes,
/// then run every suite on the largest store.
BenchReport run_protocol(const SkeletonSchema& schema, const EvaluationConfig& config, const ProgressFn& progress = {});

/// Relaxed projection of every human landmark against its own humanoid
/// side. `setup_seconds` is added to the measured loop time.
CriterionResult check_identity(
    const ProjectionEngine& engine, const EvaluationConfig& config, double setup_seconds = 0.0);

/// Exact-mode per-cluster optimum against every point of the barycentric
/// grid, on queries drawn from `held_out`.
CriterionResult check_exact_optimality(
    std::shared_ptr<const KernelStore> store, const Recording& held_out, const EvaluationConfig& config);

/// ELM interpolation on random training sets with hidden = N.
CriterionResult check_elm_interpolation(const EvaluationConfig& config);

/// Smoother against the scalar recurrence, plus the deadband freeze.
CriterionResult check_smoother(const EvaluationConfig& config);

/// Mean shift on two well separated Gaussian blobs.
CriterionResult check_mean_shift_recovery(const EvaluationConfig& config);

/// Fills the criteria that follow from the report sections (quality bound,
/// size convergence, latency), keeping any others already present.
void evaluate_criteria(BenchReport& report, const EvaluationConfig& config);

nlohmann::json to_json(const BenchReport& report);
/// One trace as CSV with the metrics header; raw and smoothed columns.
std::string motion_csv(const MotionTrace& trace);

} // namespace corrproj
