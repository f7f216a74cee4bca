#include "cproj/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "cproj/error.hpp"
#include "cproj/mean_shift.hpp"

namespace corrproj {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(const ProgressFn& progress, const std::string& msg) {
  if (progress) {
    progress(msg);
  }
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

double percentile(std::vector<double> values, double q) {
  require(!values.empty(), ErrorKind::InvalidArgument, "percentile of an empty set");
  const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(values.size() - 1)));
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx), values.end());
  return values[idx];
}

ProjectionEngine make_engine(std::shared_ptr<const KernelStore> store, std::size_t l, std::size_t m) {
  ProjectionParams p;
  p.candidates = std::min(l, store->size());
  p.backward_neighbors = std::min(m, store->size());
  return ProjectionEngine(std::move(store), p);
}

nlohmann::json report_json(const DeviationReport& r) {
  return {{"m_max", r.m_max}, {"m_avg", r.m_avg}};
}

} // namespace

void EvaluationConfig::validate() const {
  const auto check = [](bool ok, const std::string& msg) {
    require(ok, ErrorKind::InvalidConfiguration, msg);
  };
  check(!sizes.empty(), "at least one landmark size is required");
  check(std::all_of(sizes.begin(), sizes.end(), [](std::size_t s) { return s >= 1; }), "landmark sizes must be >= 1");
  check(std::is_sorted(sizes.begin(), sizes.end()), "landmark sizes must be ascending");
  check(candidates >= 1 && backward_neighbors >= 1, "L and M must be >= 1");
  check(!delta || (std::isfinite(*delta) && *delta > 0.0), "delta must be > 0");
  check(epsilon_deg > 0.0, "epsilon must be > 0");
  check(motion_frames >= 2, "motions need at least two frames");
  check(motion_fps > 0.0, "motion fps must be > 0");
  check(latency_queries >= 1, "latency needs at least one query");
  check(k >= 1, "k must be >= 1");
  check(lambda >= 0.0, "lambda must be >= 0");
  check(size_tolerance > 0.0, "size tolerance must be > 0");
  check(sweep_slack >= 0.0, "sweep slack must be >= 0");
  check(exact_queries >= 1 && exact_candidates >= 1 && exact_backward >= 1, "exact check needs queries, L and M");
  check(grid_resolution >= 1, "grid resolution must be >= 1");
}

bool BenchReport::passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& c) { return c.passed; });
}

std::vector<PoseCase> run_pose_suite(const ProjectionEngine& engine, const SkeletonSchema& schema) {
  require(!schema.benchmark_poses().empty(), ErrorKind::InvalidConfiguration,
      "schema " + schema.name() + " has no benchmark poses");
  std::vector<PoseCase> out;
  for (const auto& p : schema.benchmark_poses()) {
    const HumanoidConfig truth{p.angles};
    const auto r = engine.project(forward_kinematics(truth, schema));
    out.push_back({p.name, deviation(r.r_star, truth)});
  }
  return out;
}

std::vector<MotionTrace> run_motion_suite(const ProjectionEngine& engine, const SkeletonSchema& schema,
    std::size_t frames, const SmootherParams& smoothing, double fps) {
  require(!schema.benchmark_poses().empty(), ErrorKind::InvalidConfiguration,
      "schema " + schema.name() + " has no benchmark poses");
  require(frames >= 2, ErrorKind::InvalidArgument, "a motion needs at least two frames");
  const Eigen::VectorXd rest = schema.rest_config().angles;
  std::vector<MotionTrace> out;
  for (const auto& p : schema.benchmark_poses()) {
    MotionTrace trace{p.name, {}};
    Smoother smoother(smoothing);
    HumanoidConfig previous = schema.rest_config();
    for (std::size_t f = 0; f < frames; ++f) {
      const double s = static_cast<double>(f) / static_cast<double>(frames - 1);
      const HumanoidConfig target{rest + s * (p.angles - rest)};
      const HumanPose h = forward_kinematics(target, schema);
      IkOptions ik;
      ik.previous = &previous;
      const HumanoidConfig truth = inverse_kinematics(h, schema, ik);
      previous = truth;
      const auto r = engine.project(h);
      const HumanoidConfig smoothed = smoother.step(r.r_star);
      trace.frames.push_back({f, static_cast<double>(f) / fps, deviation(r.r_star, truth), deviation(smoothed, truth)});
    }
    out.push_back(std::move(trace));
  }
  return out;
}

SweepRow summarize_motions(const std::vector<MotionTrace>& traces) {
  SweepRow row;
  std::size_t n = 0;
  for (const auto& t : traces) {
    for (const auto& f : t.frames) {
      row.mean_m_max += f.raw.m_max;
      row.mean_m_avg += f.raw.m_avg;
      ++n;
    }
  }
  if (n > 0) {
    row.mean_m_max /= static_cast<double>(n);
    row.mean_m_avg /= static_cast<double>(n);
  }
  return row;
}

LatencyStats measure_latency(const ProjectionEngine& engine, const std::vector<HumanPose>& queries) {
  require(!queries.empty(), ErrorKind::InvalidArgument, "latency needs at least one query");
  std::vector<double> ms;
  ms.reserve(queries.size());
  double sink = 0.0;
  for (const auto& q : queries) {
    const auto start = Clock::now();
    const auto r = engine.project_relaxed(q);
    const auto stop = Clock::now();
    sink += r.deviation;
    ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
  }
  LatencyStats s;
  s.candidates = engine.params().candidates;
  s.backward_neighbors = engine.params().backward_neighbors;
  s.queries = queries.size();
  s.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
  s.p99_ms = percentile(std::move(ms), 0.99);
  // Keeps the projections observable.
  if (std::isnan(sink)) {
    throw_error(ErrorKind::NumericFailure, "latency run produced NaN deviations");
  }
  return s;
}

std::vector<LatencyStats> run_latency(std::shared_ptr<const KernelStore> store, const std::vector<HumanPose>& queries,
    const std::vector<std::size_t>& widths) {
  require(store != nullptr, ErrorKind::EngineInvalid, "latency run has no kernel store");
  std::vector<LatencyStats> out;
  for (const std::size_t w : widths) {
    require(w >= 1 && w <= store->size(), ErrorKind::InvalidArgument,
        "latency width " + std::to_string(w) + " exceeds the store size " + std::to_string(store->size()));
    out.push_back(measure_latency(make_engine(store, w, w), queries));
  }
  return out;
}

SimilarityStats run_similarity_suite(const ProjectionEngine& engine, const Recording& held_out,
    std::optional<double> delta, double epsilon_deg, std::size_t max_queries) {
  require(!held_out.frames.empty(), ErrorKind::InvalidArgument, "similarity suite needs held-out frames");
  require(max_queries >= 1, ErrorKind::InvalidArgument, "similarity suite needs at least one query");
  const KernelStore& store = engine.store();
  const std::size_t n = held_out.frames.size();
  const std::size_t probes = std::min(n, max_queries);
  std::vector<std::size_t> rows;
  std::vector<double> nearest;
  for (std::size_t i = 0; i < probes; ++i) {
    const std::size_t row = i * n / probes;
    rows.push_back(row);
    nearest.push_back(store.nearest_human(held_out.frames[row].pose, 1).front().distance);
  }
  SimilarityStats s;
  require(!delta || *delta > 0.0, ErrorKind::InvalidArgument, "delta must be > 0");
  s.delta = delta ? *delta : percentile(nearest, 0.10);
  s.epsilon_deg = epsilon_deg;
  s.probed = probes;
  for (std::size_t i = 0; i < probes; ++i) {
    if (nearest[i] > s.delta) {
      continue;
    }
    const HumanPose h{held_out.frames[rows[i]].pose};
    const auto truth = inverse_kinematics(h, store.schema());
    const auto d = deviation(engine.project(h).r_star, truth);
    ++s.queries;
    s.worst_m_max = std::max(s.worst_m_max, d.m_max);
    if (d.m_max < epsilon_deg) {
      ++s.passed;
    }
  }
  return s;
}

SizedStore store_for_size(const Recording& recording, const SkeletonSchema& schema, std::size_t target,
    const EvaluationConfig& config) {
  SizedStore out;
  out.search = bandwidth_for_count(recording.as_matrix(), target, config.landmark_options, config.size_tolerance);
  const auto start = Clock::now();
  LandmarkOptions opts = config.landmark_options;
  opts.bandwidth = out.search.bandwidth;
  LandmarkSet set = build_landmarks(recording, schema, opts);
  require(set.size() >= 1, ErrorKind::NumericFailure, "landmark extraction produced no landmarks");
  const std::size_t k = std::min(config.k, set.size());
  out.store = std::make_shared<const KernelStore>(KernelStore::build(std::move(set), k, config.lambda, config.seed));
  out.build_seconds = seconds_since(start);
  return out;
}

std::vector<SweepRow> run_size_sweep(const Recording& recording, const SkeletonSchema& schema,
    const EvaluationConfig& config, std::vector<SizedStore>* stores, const ProgressFn& progress) {
  config.validate();
  std::vector<SweepRow> rows;
  for (const std::size_t target : config.sizes) {
    const auto start = Clock::now();
    SizedStore sized = store_for_size(recording, schema, target, config);
    const ProjectionEngine engine = make_engine(sized.store, config.candidates, config.backward_neighbors);
    SweepRow row = summarize_motions(run_motion_suite(engine, schema, config.motion_frames, config.smoothing, config.motion_fps));
    row.target = target;
    row.landmarks = sized.store->size();
    row.bandwidth = sized.search.bandwidth;
    row.search_runs = sized.search.runs;
    rows.push_back(row);
    report(progress, "size " + std::to_string(target) + ": " + std::to_string(row.landmarks) + " landmarks, mean M_avg " +
                         fmt(row.mean_m_avg) + " deg (" + fmt(seconds_since(start), 3) + " s)");
    if (stores != nullptr) {
      stores->push_back(std::move(sized));
    }
  }
  return rows;
}

Recording held_out_recording(const SkeletonSchema& schema, const EvaluationConfig& config) {
  SynthesisOptions opts = config.synthesis;
  opts.seed = config.seed + 1;
  opts.duration_s = std::min(opts.duration_s, 120.0);
  return synthesize_recording(schema, opts).recording;
}

std::vector<HumanPose> sample_queries(const Recording& recording, std::size_t count, std::uint64_t seed) {
  require(!recording.frames.empty(), ErrorKind::InvalidArgument, "cannot sample queries from an empty recording");
  std::mt19937_64 gen(seed);
  std::vector<HumanPose> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back({recording.frames[gen() % recording.frames.size()].pose});
  }
  return out;
}

BenchReport run_store_bench(std::shared_ptr<const KernelStore> store, const EvaluationConfig& config,
    const ProgressFn& progress) {
  require(store != nullptr, ErrorKind::EngineInvalid, "bench has no kernel store");
  config.validate();
  const SkeletonSchema& schema = store->schema();
  BenchReport rep;
  rep.schema = schema.name();
  rep.landmarks = store->size();
  const ProjectionEngine engine = make_engine(store, config.candidates, config.backward_neighbors);

  rep.poses = run_pose_suite(engine, schema);
  rep.motions = run_motion_suite(engine, schema, config.motion_frames, config.smoothing, config.motion_fps);
  report(progress, "pose and motion suites done");

  const Recording held = held_out_recording(schema, config);
  rep.similarity = run_similarity_suite(engine, held, config.delta, config.epsilon_deg, config.similarity_queries);

  const auto queries = sample_queries(held, config.latency_queries, config.seed + 2);
  rep.latency.push_back(measure_latency(engine, queries));
  const std::size_t wide = std::min(config.latency_wide, store->size());
  if (wide > std::max(config.candidates, config.backward_neighbors)) {
    // Wide run on a tenth of the queries.
    const std::vector<HumanPose> some(queries.begin(),
        queries.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, queries.size() / 10)));
    rep.latency.push_back(measure_latency(make_engine(store, wide, wide), some));
  }
  report(progress, "latency: mean " + fmt(rep.latency.front().mean_ms) + " ms over " +
                       std::to_string(rep.latency.front().queries) + " queries");

  rep.criteria.push_back(check_elm_interpolation(config));
  rep.criteria.push_back(check_identity(engine, config));
  rep.criteria.push_back(check_exact_optimality(store, held, config));
  rep.criteria.push_back(check_smoother(config));
  rep.criteria.push_back(check_mean_shift_recovery(config));
  report(progress, "self checks done");
  evaluate_criteria(rep, config);
  return rep;
}

BenchReport run_protocol(const SkeletonSchema& schema, const EvaluationConfig& config, const ProgressFn& progress) {
  config.validate();
  SynthesisOptions opts = config.synthesis;
  opts.seed = config.seed;
  const auto start = Clock::now();
  const Recording recording = synthesize_recording(schema, opts).recording;
  report(progress, "recording: " + std::to_string(recording.frames.size()) + " frames");

  std::vector<SizedStore> stores;
  const auto sweep = run_size_sweep(recording, schema, config, &stores, progress);
  BenchReport rep = run_store_bench(stores.back().store, config, progress);
  rep.sweep = sweep;
  // Identity also pays for building the largest store.
  for (auto& c : rep.criteria) {
    if (c.id == 2) {
      c = check_identity(make_engine(stores.back().store, config.candidates, config.backward_neighbors), config,
          stores.back().build_seconds);
    }
  }
  evaluate_criteria(rep, config);
  report(progress, "protocol finished in " + fmt(seconds_since(start), 3) + " s");
  return rep;
}

CriterionResult check_identity(const ProjectionEngine& engine, const EvaluationConfig& config, double setup_seconds) {
  const auto start = Clock::now();
  const KernelStore& store = engine.store();
  std::size_t good = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto r = engine.project_relaxed(HumanPose{store.human(i)});
    const auto d = deviation(r.r_star, HumanoidConfig{store.humanoid(i)});
    good += d.m_avg < config.identity_bound_deg ? 1 : 0;
    worst = std::max(worst, d.m_avg);
  }
  const double elapsed = setup_seconds + seconds_since(start);
  const double frac = static_cast<double>(good) / static_cast<double>(store.size());
  CriterionResult c{2, "identity", frac >= config.identity_fraction && elapsed < config.identity_budget_s,
      std::to_string(good) + "/" + std::to_string(store.size()) + " landmarks with M_avg < " +
          fmt(config.identity_bound_deg) + " deg (worst " + fmt(worst) + "), " + fmt(elapsed, 3) + " s"};
  c.values = {{"landmarks", store.size()}, {"passed", good}, {"worst_m_avg", worst}, {"seconds", elapsed}};
  return c;
}

namespace {

// Every weight vector with entries in {0, 1/res, ..., 1} summing to one.
void grid_points(std::size_t dims, std::size_t res, std::vector<Eigen::VectorXd>& out) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dims));
  const auto fill = [&](auto&& self, std::size_t d, std::size_t left) -> void {
    if (d + 1 == dims) {
      w(static_cast<Eigen::Index>(d)) = static_cast<double>(left) / static_cast<double>(res);
      out.push_back(w);
      return;
    }
    for (std::size_t u = 0; u <= left; ++u) {
      w(static_cast<Eigen::Index>(d)) = static_cast<double>(u) / static_cast<double>(res);
      self(self, d + 1, left - u);
    }
  };
  fill(fill, 0, res);
}

} // namespace

CriterionResult check_exact_optimality(
    std::shared_ptr<const KernelStore> store, const Recording& held_out, const EvaluationConfig& config) {
  require(store != nullptr, ErrorKind::EngineInvalid, "exact check has no kernel store");
  ProjectionParams p;
  p.candidates = std::min(config.exact_candidates, store->size());
  p.backward_neighbors = std::min(config.exact_backward, store->size());
  p.mode = ProjectionMode::Exact;
  p.grid_resolution = config.grid_resolution;
  const ProjectionEngine engine(store, p);
  std::vector<Eigen::VectorXd> grid;
  grid_points(p.backward_neighbors, config.grid_resolution, grid);

  const auto queries = sample_queries(held_out, config.exact_queries, config.seed + 3);
  std::size_t clusters = 0;
  std::size_t violations = 0;
  double worst_gap = -std::numeric_limits<double>::infinity();
  for (const auto& q : queries) {
    for (const auto& cl : engine.clusters(q)) {
      const double optimum = engine.optimize_cluster(cl, q).objective;
      const Eigen::MatrixXd v = engine.cluster_vertices(cl, q);
      double grid_min = std::numeric_limits<double>::infinity();
      for (const auto& w : grid) {
        grid_min = std::min(grid_min, engine.back_projected_deviation(cl, v.transpose() * w, q));
      }
      ++clusters;
      worst_gap = std::max(worst_gap, optimum - grid_min);
      violations += optimum > grid_min ? 1 : 0;
    }
  }
  CriterionResult c{6, "exact-solver optimality", violations == 0,
      std::to_string(clusters - violations) + "/" + std::to_string(clusters) + " clusters at or below the grid minimum (" +
          std::to_string(grid.size()) + " grid points, L=" + std::to_string(p.candidates) + ", M=" +
          std::to_string(p.backward_neighbors) + "), largest optimum - grid gap " + fmt(worst_gap)};
  c.values = {{"queries", queries.size()}, {"clusters", clusters}, {"violations", violations},
      {"grid_points", grid.size()}, {"worst_gap", worst_gap}};
  return c;
}

CriterionResult check_elm_interpolation(const EvaluationConfig& config) {
  constexpr double kLambda = 1e-8;
  constexpr double kBound = 1e-4;
  const auto start = Clock::now();
  std::mt19937_64 gen(config.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const std::size_t m = 24;
  const std::size_t n = 10;
  double worst = 0.0;
  std::size_t good = 0;
  for (std::size_t set = 0; set < config.elm_sets; ++set) {
    // Both kernel shapes of the store: human -> humanoid and back.
    const bool forward = set % 2 == 0;
    const std::size_t in = forward ? m : n;
    const std::size_t out = forward ? n : m;
    const std::size_t count = 1 + static_cast<std::size_t>(gen() % 32);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(in));
    Eigen::MatrixXd t(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(out));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x.data()[i] = unit(gen);
    }
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      t.data()[i] = unit(gen);
    }
    const ElmKernel kernel = train_elm(x, t, count, kLambda, config.seed + set);
    double residual = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      residual = std::max(residual, (kernel.predict(x.row(i).transpose()) - t.row(i).transpose()).cwiseAbs().maxCoeff());
    }
    worst = std::max(worst, residual);
    good += residual < kBound ? 1 : 0;
  }
  const double elapsed = seconds_since(start);
  CriterionResult c{1, "ELM interpolation", worst < kBound && elapsed < config.elm_budget_s,
      std::to_string(good) + "/" + std::to_string(config.elm_sets) + " sets with residual < 1e-4, max residual " +
          fmt(worst) + ", " + fmt(elapsed, 3) + " s"};
  c.values = {{"sets", config.elm_sets}, {"passed", good}, {"max_residual", worst}, {"seconds", elapsed}};
  return c;
}

CriterionResult check_smoother(const EvaluationConfig& config) {
  constexpr double kTol = 1e-12;
  std::mt19937_64 gen(config.seed + 7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  std::size_t freeze_breaks = 0;
  std::size_t frozen_frames = 0;
  for (std::size_t k = 0; k < config.smoother_streams; ++k) {
    SmootherParams p{unit(gen), unit(gen), k % 4 == 0 ? 0.0 : 0.2 * unit(gen)};
    Smoother sm(p);
    double s = 0.0;
    double b = 0.0;
    double prev_out = 0.0;
    double y = 0.0;
    for (std::size_t t = 0; t < 60; ++t) {
      y += 0.3 * (unit(gen) - 0.5) + (t % 20 < 10 ? 0.05 : -0.05);
      double expect = y;
      if (t == 0) {
        s = y;
        b = 0.0;
      } else {
        const double level = p.alpha * y + (1.0 - p.alpha) * (s + b);
        if (std::abs(level - s) < p.eta) {
          b = (1.0 - p.gamma) * b;
          expect = s;
        } else {
          b = p.gamma * (level - s) + (1.0 - p.gamma) * b;
          s = level;
          expect = s;
        }
      }
      Eigen::VectorXd in(1);
      in(0) = y;
      const double got = sm.step(in)(0);
      worst = std::max(worst, std::abs(got - expect));
      if (t > 0 && sm.frozen()) {
        ++frozen_frames;
        freeze_breaks += got != prev_out ? 1 : 0;
      }
      prev_out = got;
    }
  }
  CriterionResult c{7, "smoother correctness", worst <= kTol && freeze_breaks == 0,
      "max deviation from the recurrence " + fmt(worst) + " over " + std::to_string(config.smoother_streams) +
          " streams; " + std::to_string(frozen_frames) + " frozen frames, " + std::to_string(freeze_breaks) +
          " changed output"};
  c.values = {{"streams", config.smoother_streams}, {"max_error", worst}, {"frozen_frames", frozen_frames},
      {"freeze_breaks", freeze_breaks}};
  return c;
}

CriterionResult check_mean_shift_recovery(const EvaluationConfig& config) {
  constexpr double kSigma = 0.5;
  constexpr double kSeparation = 10.0;
  constexpr double kBandwidth = 2.0;
  constexpr double kRadius = 0.25;
  constexpr Eigen::Index kPerBlob = 150;
  std::size_t good = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < config.blob_seeds; ++k) {
    std::mt19937_64 gen(config.seed * 1000 + k);
    std::normal_distribution<double> noise(0.0, kSigma);
    Eigen::MatrixXd pts(2 * kPerBlob, 2);
    Eigen::MatrixXd centers(2, 2);
    centers << 0.0, 0.0, kSeparation, 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      pts.row(i) = centers.row(i < kPerBlob ? 0 : 1);
      pts(i, 0) += noise(gen);
      pts(i, 1) += noise(gen);
    }
    const Eigen::MatrixXd modes = mean_shift(pts, kBandwidth, 500, 1e-8);
    bool ok = modes.rows() == 2;
    for (Eigen::Index c = 0; ok && c < 2; ++c) {
      double d = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < modes.rows(); ++j) {
        d = std::min(d, (modes.row(j) - centers.row(c)).norm());
      }
      worst = std::max(worst, d);
      ok = d < kRadius;
    }
    good += ok ? 1 : 0;
  }
  CriterionResult c{8, "mean-shift recovery", good == config.blob_seeds,
      std::to_string(good) + "/" + std::to_string(config.blob_seeds) +
          " seeds with exactly two modes near the centers, worst distance " + fmt(worst)};
  c.values = {{"seeds", config.blob_seeds}, {"passed", good}, {"worst_distance", worst}};
  return c;
}

void evaluate_criteria(BenchReport& rep, const EvaluationConfig& config) {
  std::erase_if(rep.criteria, [](const CriterionResult& c) { return c.id >= 3 && c.id <= 5; });
  if (!rep.motions.empty()) {
    std::size_t frames = 0;
    std::size_t good = 0;
    double avg = 0.0;
    for (const auto& t : rep.motions) {
      for (const auto& f : t.frames) {
        ++frames;
        good += f.smoothed.m_max < config.quality_bound_deg ? 1 : 0;
        avg += f.smoothed.m_avg;
      }
    }
    avg /= static_cast<double>(std::max<std::size_t>(frames, 1));
    const double frac = static_cast<double>(good) / static_cast<double>(std::max<std::size_t>(frames, 1));
    rep.criteria.push_back({3, "quality bound",
        frac >= config.quality_fraction && avg < config.quality_mean_avg_deg,
        std::to_string(good) + "/" + std::to_string(frames) + " frames with M_max < " + fmt(config.quality_bound_deg) +
            " deg, mean M_avg " + fmt(avg) + " deg, " + std::to_string(rep.landmarks) + " landmarks"});
  }
  if (rep.sweep.size() >= 2) {
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < rep.sweep.size(); ++i) {
      if (i > 0 && rep.sweep[i].mean_m_avg > rep.sweep[i - 1].mean_m_avg * (1.0 + config.sweep_slack)) {
        ok = false;
      }
      detail += (i > 0 ? ", " : "") + std::to_string(rep.sweep[i].landmarks) + ": " + fmt(rep.sweep[i].mean_m_avg);
    }
    rep.criteria.push_back({4, "landmark-size convergence", ok, "mean M_avg by size " + detail});
  }
  if (!rep.latency.empty()) {
    const LatencyStats& base = rep.latency.front();
    bool ok = base.mean_ms < config.latency_budget_ms;
    std::string detail = "L=M=" + std::to_string(base.candidates) + " mean " + fmt(base.mean_ms) + " ms, p99 " +
                         fmt(base.p99_ms) + " ms";
    if (rep.latency.size() >= 2) {
      const LatencyStats& wide = rep.latency.back();
      ok = ok && wide.mean_ms > base.mean_ms;
      detail += "; L=M=" + std::to_string(wide.candidates) + " mean " + fmt(wide.mean_ms) + " ms";
    } else {
      ok = false;
      detail += "; no wide run";
    }
    rep.criteria.push_back({5, "latency", ok, detail});
  }
  std::stable_sort(rep.criteria.begin(), rep.criteria.end(),
      [](const CriterionResult& a, const CriterionResult& b) { return a.id < b.id; });
}

nlohmann::json to_json(const BenchReport& rep) {
  nlohmann::json poses = nlohmann::json::array();
  for (const auto& p : rep.poses) {
    poses.push_back({{"name", p.name}, {"m_max", p.report.m_max}, {"m_avg", p.report.m_avg}});
  }
  nlohmann::json motions = nlohmann::json::array();
  for (const auto& t : rep.motions) {
    double worst = 0.0;
    double avg = 0.0;
    for (const auto& f : t.frames) {
      worst = std::max(worst, f.smoothed.m_max);
      avg += f.smoothed.m_avg;
    }
    avg /= static_cast<double>(std::max<std::size_t>(t.frames.size(), 1));
    motions.push_back({{"pose", t.pose}, {"frames", t.frames.size()}, {"max_m_max", worst}, {"mean_m_avg", avg},
        {"final", report_json(t.frames.back().smoothed)}});
  }
  nlohmann::json latency = nlohmann::json::array();
  for (const auto& l : rep.latency) {
    latency.push_back({{"L", l.candidates}, {"M", l.backward_neighbors}, {"queries", l.queries}, {"mean_ms", l.mean_ms},
        {"p99_ms", l.p99_ms}});
  }
  nlohmann::json sweep = nlohmann::json::array();
  for (const auto& s : rep.sweep) {
    sweep.push_back({{"target", s.target}, {"landmarks", s.landmarks}, {"bandwidth", s.bandwidth},
        {"search_runs", s.search_runs}, {"mean_m_max", s.mean_m_max}, {"mean_m_avg", s.mean_m_avg}});
  }
  nlohmann::json criteria = nlohmann::json::array();
  for (const auto& c : rep.criteria) {
    criteria.push_back(
        {{"id", c.id}, {"name", c.name}, {"passed", c.passed}, {"detail", c.detail}, {"values", c.values}});
  }
  nlohmann::json doc = {{"format", "cproj.bench"}, {"version", 1}, {"schema", rep.schema},
      {"landmarks", rep.landmarks}, {"poses", poses}, {"motions", motions}, {"latency", latency}, {"sweep", sweep},
      {"criteria", criteria}, {"passed", rep.passed()}};
  if (rep.similarity) {
    const auto& s = *rep.similarity;
    doc["similarity"] = {{"delta", s.delta}, {"epsilon_deg", s.epsilon_deg}, {"probed", s.probed},
        {"queries", s.queries}, {"passed", s.passed}, {"worst_m_max", s.worst_m_max}};
  }
  return doc;
}

std::string motion_csv(const MotionTrace& trace) {
  std::string out = metrics_csv_header() + ",raw_m_max,raw_m_avg\n";
  for (const auto& f : trace.frames) {
    const std::string raw = metrics_csv_row(f.frame, f.t, f.raw);
    // Reuse the row formatter for the raw columns: drop its frame and t.
    const std::size_t cut = raw.find(',', raw.find(',') + 1);
    out += metrics_csv_row(f.frame, f.t, f.smoothed) + raw.substr(cut) + "\n";
  }
  return out;
}

} // namespace corrproj
