#include <sstream>

#include <gtest/gtest.h>

#include "cproj/bench.hpp"
#include "cproj/error.hpp"
#include "test_util.hpp"

using namespace corrproj;

namespace {

std::shared_ptr<const KernelStore> small_store() {
  static const auto store = [] {
    const auto s = desk_schema();
    SynthesisOptions so;
    so.duration_s = 120.0;
    LandmarkOptions opt;
    opt.bandwidth = 0.25;
    return std::make_shared<const KernelStore>(
        KernelStore::build(build_landmarks(synthesize_recording(s, so).recording, s, opt), 16, 1e-6, 1));
  }();
  return store;
}

EvaluationConfig quick_config() {
  EvaluationConfig c;
  c.motion_frames = 12;
  c.latency_queries = 300;
  c.similarity_queries = 100;
  c.exact_queries = 4;
  c.exact_candidates = 3;
  c.exact_backward = 3;
  c.grid_resolution = 4;
  c.elm_sets = 6;
  c.smoother_streams = 5;
  c.blob_seeds = 2;
  c.synthesis.duration_s = 30.0;
  return c;
}

std::vector<CorrespondencePair> benchmark_pairs(const SkeletonSchema& s) {
  std::vector<CorrespondencePair> pairs;
  for (const auto& p : s.benchmark_poses()) {
    const HumanoidConfig c{p.angles};
    pairs.push_back({forward_kinematics(c, s), c});
  }
  return pairs;
}

} // namespace

TEST(Bench, StoreBenchReport) {
  const auto store = small_store();
  const auto cfg = quick_config();
  std::vector<std::string> progress;
  const auto rep = run_store_bench(store, cfg, [&](std::string_view m) { progress.emplace_back(m); });
  EXPECT_FALSE(progress.empty());
  EXPECT_EQ(rep.schema, "desk");
  EXPECT_EQ(rep.landmarks, store->size());
  EXPECT_EQ(rep.poses.size(), 8u);
  ASSERT_EQ(rep.motions.size(), 8u);
  for (const auto& m : rep.motions) {
    ASSERT_EQ(m.frames.size(), cfg.motion_frames);
    EXPECT_DOUBLE_EQ(m.frames.back().t, 11.0 / cfg.motion_fps);
  }
  ASSERT_EQ(rep.latency.size(), 2u);
  EXPECT_EQ(rep.latency[0].candidates, 10u);
  EXPECT_EQ(rep.latency[0].queries, 300u);
  EXPECT_EQ(rep.latency[1].candidates, 50u);
  EXPECT_EQ(rep.latency[1].queries, 30u);
  ASSERT_TRUE(rep.similarity.has_value());
  EXPECT_LE(rep.similarity->passed, rep.similarity->queries);
  EXPECT_LE(rep.similarity->queries, rep.similarity->probed);

  std::vector<int> ids;
  for (const auto& c : rep.criteria) {
    ids.push_back(c.id);
  }
  EXPECT_EQ(ids, (std::vector<int>{1, 2, 3, 5, 6, 7, 8}));

  const auto doc = to_json(rep);
  EXPECT_EQ(doc["format"], "cproj.bench");
  EXPECT_EQ(doc["landmarks"], store->size());
  EXPECT_EQ(doc["poses"].size(), 8u);
  EXPECT_EQ(doc["criteria"].size(), 7u);
  EXPECT_EQ(doc["passed"], rep.passed());
  EXPECT_TRUE(doc.contains("similarity"));
}

TEST(Bench, BenchmarkPairStoreReproducesPoses) {
  const auto s = desk_schema();
  const auto store = std::make_shared<const KernelStore>(
      KernelStore::build(landmarks_from_pairs(s, benchmark_pairs(s)), 8, 0.0, 1));
  ProjectionParams p;
  p.candidates = 1;
  p.backward_neighbors = 1;
  const ProjectionEngine engine(store, p);
  for (const auto& c : run_pose_suite(engine, s)) {
    EXPECT_LT(c.report.m_max, 1e-3) << c.name;
  }
}

TEST(Bench, MotionEndsAtPose) {
  const auto s = desk_schema();
  auto pairs = benchmark_pairs(s);
  pairs.push_back({forward_kinematics(s.rest_config(), s), s.rest_config()});
  const auto store = std::make_shared<const KernelStore>(KernelStore::build(landmarks_from_pairs(s, pairs), 9, 0.0, 1));
  ProjectionParams p;
  p.candidates = 3;
  p.backward_neighbors = 3;
  const ProjectionEngine engine(store, p);
  const auto traces = run_motion_suite(engine, s, 5, {1.0, 0.0, 0.0});
  ASSERT_EQ(traces.size(), 8u);
  for (const auto& t : traces) {
    EXPECT_LT(t.frames.front().raw.m_max, 1.0) << t.pose;
    EXPECT_EQ(t.frames.back().raw.m_max, t.frames.back().smoothed.m_max);
  }
  const auto csv = motion_csv(traces.front());
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "frame,t,m_max,m_avg,raw_m_max,raw_m_avg");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
  }
  EXPECT_EQ(rows, 5u);
}

TEST(Bench, EvaluateCriteriaFromSections) {
  EvaluationConfig cfg;
  BenchReport rep;
  rep.landmarks = 3;
  rep.sweep = {{50, 50, 0.3, 1, 6.0, 3.0}, {250, 250, 0.2, 1, 5.0, 3.2}, {1000, 1000, 0.1, 1, 4.0, 2.0}};
  rep.latency = {{10, 10, 100, 0.05, 0.09}, {50, 50, 10, 0.3, 0.5}};
  rep.criteria.push_back({1, "x", true, "", {}});
  evaluate_criteria(rep, cfg);
  ASSERT_EQ(rep.criteria.size(), 3u);
  EXPECT_EQ(rep.criteria[1].id, 4);
  EXPECT_TRUE(rep.criteria[1].passed); // 3.2 <= 3.0 * 1.1
  EXPECT_TRUE(rep.criteria[2].passed);

  rep.sweep[1].mean_m_avg = 3.4;
  rep.latency[1].mean_ms = 0.01;
  evaluate_criteria(rep, cfg);
  ASSERT_EQ(rep.criteria.size(), 3u);
  EXPECT_FALSE(rep.criteria[1].passed);
  EXPECT_FALSE(rep.criteria[2].passed);
  EXPECT_FALSE(rep.passed());
}

TEST(Bench, SelfChecks) {
  const auto cfg = quick_config();
  const auto smoother = check_smoother(cfg);
  EXPECT_EQ(smoother.id, 7);
  EXPECT_TRUE(smoother.passed) << smoother.detail;
  const auto blobs = check_mean_shift_recovery(cfg);
  EXPECT_EQ(blobs.id, 8);
  EXPECT_TRUE(blobs.passed) << blobs.detail;
  EXPECT_EQ(check_elm_interpolation(cfg).id, 1);
}

TEST(Bench, LatencyOnSingleLandmark) {
  const auto s = desk_schema();
  const HumanoidConfig c{s.benchmark_poses()[0].angles};
  const auto store = std::make_shared<const KernelStore>(
      KernelStore::build(landmarks_from_pairs(s, {{forward_kinematics(c, s), c}}), 1, 1e-8, 1));
  const std::vector<HumanPose> q{forward_kinematics(c, s), forward_kinematics(s.rest_config(), s)};
  const auto stats = run_latency(store, q, {1});
  ASSERT_EQ(stats.size(), 1u);
  EXPECT_EQ(stats[0].queries, 2u);
  EXPECT_GT(stats[0].mean_ms, 0.0);
  EXPECT_GE(stats[0].p99_ms, 0.0);
  EXPECT_THROW(run_latency(store, q, {2}), Error);
}

TEST(Bench, SimilarityRadius) {
  const auto store = small_store();
  const ProjectionEngine engine(store, {});
  Recording rec;
  for (std::size_t i = 0; i < 10; ++i) {
    rec.frames.push_back({0.1 * static_cast<double>(i), store->human(i)});
  }
  const auto s = run_similarity_suite(engine, rec, 1e-9, 10.0, 100);
  EXPECT_EQ(s.probed, 10u);
  EXPECT_EQ(s.queries, 10u);
  EXPECT_EQ(s.passed, 10u);
  EXPECT_THROW(run_similarity_suite(engine, Recording{}, {}, 10.0, 10), Error);
}

TEST(Bench, ConfigValidation) {
  const auto bad = [](auto mutate) {
    EvaluationConfig c;
    mutate(c);
    try {
      c.validate();
    } catch (const Error& e) {
      return e.kind() == ErrorKind::InvalidConfiguration;
    }
    return false;
  };
  EXPECT_NO_THROW(EvaluationConfig{}.validate());
  EXPECT_TRUE(bad([](EvaluationConfig& c) { c.sizes.clear(); }));
  EXPECT_TRUE(bad([](EvaluationConfig& c) { c.sizes = {250, 50}; }));
  EXPECT_TRUE(bad([](EvaluationConfig& c) { c.candidates = 0; }));
  EXPECT_TRUE(bad([](EvaluationConfig& c) { c.delta = -1.0; }));
  EXPECT_TRUE(bad([](EvaluationConfig& c) { c.motion_frames = 1; }));
  EXPECT_TRUE(bad([](EvaluationConfig& c) { c.lambda = -1e-6; }));
}

TEST(Bench, SchemaWithoutPoses) {
  auto doc = to_json(desk_schema());
  doc["benchmark_poses"] = nlohmann::json::array();
  const auto s = schema_from_json(doc);
  const auto d = desk_schema();
  const auto store = std::make_shared<const KernelStore>(
      KernelStore::build(landmarks_from_pairs(s, benchmark_pairs(d)), 4, 1e-6, 1));
  ProjectionParams p;
  p.candidates = 2;
  p.backward_neighbors = 2;
  const ProjectionEngine engine(store, p);
  try {
    run_pose_suite(engine, s);
    FAIL() << "expected invalid-configuration";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidConfiguration);
  }
  EXPECT_THROW(run_motion_suite(engine, s, 10), Error);
  EXPECT_THROW(run_store_bench(nullptr, {}), Error);
}
