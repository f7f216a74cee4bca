#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "cproj/error.hpp"
#include "cproj/metrics.hpp"
#include "cproj/projection.hpp"
#include "test_util.hpp"

using namespace corrproj;

namespace {

Recording recording(double seconds, std::uint64_t seed) {
  SynthesisOptions so;
  so.duration_s = seconds;
  so.seed = seed;
  return synthesize_recording(desk_schema(), so).recording;
}

std::shared_ptr<const KernelStore> store_from(const Recording& rec, double bandwidth, double lambda) {
  LandmarkOptions opt;
  opt.bandwidth = bandwidth;
  auto set = build_landmarks(rec, desk_schema(), opt);
  return std::make_shared<const KernelStore>(KernelStore::build(std::move(set), 16, lambda, 1));
}

// Twenty landmarks from FK of random in-limit configurations.
std::shared_ptr<const KernelStore> twenty_store() {
  static const auto store = [] {
    const auto s = desk_schema();
    std::mt19937_64 gen(21);
    std::vector<CorrespondencePair> pairs;
    for (int i = 0; i < 20; ++i) {
      HumanoidConfig c{Eigen::VectorXd(10)};
      for (std::size_t j = 0; j < 10; ++j) {
        std::uniform_real_distribution<double> u(s.joints()[j].min, s.joints()[j].max);
        c.angles(static_cast<Eigen::Index>(j)) = u(gen);
      }
      pairs.push_back({forward_kinematics(c, s), c});
    }
    return std::make_shared<const KernelStore>(KernelStore::build(landmarks_from_pairs(s, pairs), 6, 1e-6, 2));
  }();
  return store;
}

std::vector<HumanPose> held_out_queries(std::size_t count) {
  const auto rec = recording(120.0, 2);
  std::vector<HumanPose> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back({rec.frames[i * rec.frames.size() / count].pose});
  }
  return out;
}

} // namespace

TEST(Projection, ChooseClusterExamples) {
  const std::vector<double> a{0.5, 0.2, 0.9};
  EXPECT_EQ(choose_cluster(a), 1u);
  const std::vector<double> tie{0.3, 0.3};
  const std::vector<double> dist{0.1, 0.4};
  EXPECT_EQ(choose_cluster(tie, dist), 0u);
  const std::vector<double> dist2{0.4, 0.1};
  EXPECT_EQ(choose_cluster(tie, dist2), 1u);
  EXPECT_EQ(choose_cluster(tie), 0u);
  const std::vector<double> bad{0.1, std::numeric_limits<double>::quiet_NaN()};
  try {
    choose_cluster(bad);
    FAIL() << "expected numeric-failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NumericFailure);
    EXPECT_NE(std::string(e.what()).find("cluster 1"), std::string::npos);
  }
}

TEST(Projection, ChooseClusterMatchesScan) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> coarse(0, 4);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 12);
    std::vector<double> dev(n), dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      dev[i] = coarse(gen) * 0.25; // coarse values force ties
      dist[i] = coarse(gen) * 0.5;
    }
    std::size_t want = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (dev[i] < dev[want] || (dev[i] == dev[want] && dist[i] < dist[want])) {
        want = i;
      }
    }
    EXPECT_EQ(choose_cluster(dev, dist), want);
  }
}

TEST(Projection, IdentityAtLandmarkWithSingleCandidate) {
  const auto store = store_from(recording(120.0, 1), 0.25, 0.0);
  ProjectionParams p;
  p.candidates = 1;
  p.backward_neighbors = 1;
  const ProjectionEngine engine(store, p);
  for (std::size_t i = 0; i < store->size(); ++i) {
    const auto r = engine.project_relaxed(HumanPose{store->human(i)});
    EXPECT_EQ(r.chosen_cluster, i);
    EXPECT_LT((r.r_star.angles - store->humanoid(i)).cwiseAbs().maxCoeff(), 1e-3) << i;
  }
}

TEST(Projection, RelaxedEqualsExhaustiveEnumeration) {
  const auto store = twenty_store();
  const std::size_t n = store->size();
  ProjectionParams p;
  p.candidates = n;
  p.backward_neighbors = n;
  const ProjectionEngine engine(store, p);
  const auto schema = store->schema();
  for (const auto& q : held_out_queries(40)) {
    // Every forward kernel proposes, every backward kernel vouches.
    double best = std::numeric_limits<double>::infinity();
    double best_dist = 0.0;
    std::size_t best_j = 0;
    Eigen::VectorXd best_cand;
    for (std::size_t j = 0; j < n; ++j) {
      const Eigen::VectorXd cand = store->forward(j).predict(q.data);
      double dev = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k) {
        dev = std::min(dev, (store->backward(k).predict(cand) - q.data).norm());
      }
      const double dist = (store->human(j) - q.data).norm();
      if (dev < best || (dev == best && (dist < best_dist || (dist == best_dist && j < best_j)))) {
        best = dev;
        best_dist = dist;
        best_j = j;
        best_cand = cand;
      }
    }
    const auto r = engine.project_relaxed(q);
    EXPECT_EQ(r.chosen_cluster, best_j);
    EXPECT_NEAR(r.deviation, best, 1e-12);
    EXPECT_LT((r.r_star.angles - schema.clamp(HumanoidConfig{best_cand}).angles).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Projection, ExactSingleNeighborIsThatLandmark) {
  const auto store = twenty_store();
  ProjectionParams p;
  p.candidates = 5;
  p.backward_neighbors = 1;
  p.mode = ProjectionMode::Exact;
  const ProjectionEngine engine(store, p);
  for (const auto& q : held_out_queries(10)) {
    const auto r = engine.project_exact(q);
    ASSERT_EQ(r.weights.size(), 1);
    EXPECT_EQ(r.weights(0), 1.0);
    ASSERT_EQ(r.support.size(), 1u);
    const std::size_t nb = r.support[0];
    EXPECT_LT((r.r_star.angles - store->humanoid(nb)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(r.deviation, (store->backward(nb).predict(store->humanoid(nb)) - q.data).norm(), 1e-12);
  }
}

TEST(Projection, ExactBeatsItsGridAndVertices) {
  const auto store = twenty_store();
  ProjectionParams p;
  p.candidates = 4;
  p.backward_neighbors = 4;
  p.mode = ProjectionMode::Exact;
  const ProjectionEngine engine(store, p);
  const auto grid = oracle::simplex_grid(4, 8);
  EXPECT_EQ(grid.size(), 165u); // C(11, 3)
  for (const auto& q : held_out_queries(15)) {
    const auto r = engine.project_exact(q);
    EXPECT_NEAR(r.weights.sum(), 1.0, 1e-12);
    EXPECT_GE(r.weights.minCoeff(), 0.0);
    for (const auto& cl : engine.clusters(q)) {
      double grid_min = std::numeric_limits<double>::infinity();
      for (const auto& w : grid) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(10);
        for (std::size_t k = 0; k < 4; ++k) {
          x += w[k] * store->humanoid(cl.neighbors[k]);
        }
        double dev = std::numeric_limits<double>::infinity();
        for (const std::size_t nb : cl.neighbors) {
          dev = std::min(dev, (store->backward(nb).predict(x) - q.data).norm());
        }
        grid_min = std::min(grid_min, dev);
      }
      EXPECT_LE(engine.optimize_cluster(cl, q).objective, grid_min);
      EXPECT_LE(r.deviation, grid_min);
    }
  }
}

TEST(Projection, CandidateBasis) {
  const auto store = twenty_store();
  ProjectionParams p;
  p.candidates = 3;
  p.backward_neighbors = 3;
  p.mode = ProjectionMode::Exact;
  p.basis = CombinationBasis::Candidates;
  const ProjectionEngine engine(store, p);
  const auto q = held_out_queries(1).front();
  const auto cl = engine.clusters(q).front();
  const auto v = engine.cluster_vertices(cl, q);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(v.row(static_cast<Eigen::Index>(k)).transpose(), store->forward(cl.neighbors[k]).predict(q.data));
  }
  EXPECT_NO_THROW(engine.project(q));
}

TEST(Projection, ClustersAreOrderedAndSized) {
  const auto store = twenty_store();
  const ProjectionEngine engine(store, {});
  const auto q = held_out_queries(3)[1];
  const auto cl = engine.clusters(q);
  ASSERT_EQ(cl.size(), 10u);
  for (std::size_t j = 0; j < cl.size(); ++j) {
    EXPECT_EQ(cl[j].neighbors.size(), 10u);
    if (j > 0) {
      EXPECT_LE(cl[j - 1].seed_distance, cl[j].seed_distance);
    }
  }
}

TEST(Projection, DeterministicAndWithinLimits) {
  const auto store = twenty_store();
  for (const auto mode : {ProjectionMode::Relaxed, ProjectionMode::Exact}) {
    ProjectionParams p;
    p.candidates = 5;
    p.backward_neighbors = 5;
    p.mode = mode;
    const ProjectionEngine engine(store, p);
    std::mt19937_64 gen(4);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
      Eigen::VectorXd raw(24);
      for (Eigen::Index i = 0; i < raw.size(); ++i) {
        raw(i) = g(gen);
      }
      const auto q = normalize_bones(raw);
      const auto a = engine.project(q);
      const auto b = engine.project(q);
      EXPECT_EQ(a.r_star.angles, b.r_star.angles);
      EXPECT_EQ(a.deviation, b.deviation);
      EXPECT_TRUE(store->schema().within_limits(a.r_star));
    }
  }
}

TEST(Projection, Errors) {
  const auto store = twenty_store();
  ProjectionParams p;
  p.candidates = 21;
  EXPECT_THROW(ProjectionEngine(store, p), Error);
  try {
    ProjectionEngine(nullptr, ProjectionParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EngineInvalid);
  }
  const ProjectionEngine empty;
  EXPECT_FALSE(empty.valid());
  try {
    empty.project(HumanPose{Eigen::VectorXd::Zero(24)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EngineInvalid);
  }
  const ProjectionEngine engine(store, {});
  EXPECT_THROW(engine.project(HumanPose{Eigen::VectorXd::Zero(6)}), Error);
  Eigen::VectorXd nan = Eigen::VectorXd::Zero(24);
  nan(3) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(engine.project(HumanPose{nan}), Error);
}

TEST(Projection, CapturedPosesOnLargeStore) {
  // Frames of the capture the landmarks came from.
  const auto rec = recording(300.0, 1);
  const auto store = store_from(rec, 0.12, kDefaultElmRegularization);
  ASSERT_GE(store->size(), 900u);
  const ProjectionEngine engine(store, {});
  const auto s = store->schema();
  std::mt19937_64 gen(12);
  std::uniform_int_distribution<std::size_t> pick(0, rec.frames.size() - 1);
  double worst = 0.0;
  for (int i = 0; i < 300; ++i) {
    const HumanPose q{rec.frames[pick(gen)].pose};
    worst = std::max(worst, deviation(engine.project(q).r_star, inverse_kinematics(q, s)).m_max);
  }
  EXPECT_LT(worst, 10.0);
}
