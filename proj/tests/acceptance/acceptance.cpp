// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "cproj/bench.hpp"
#include "cproj/mean_shift.hpp"
#include "oracles/oracles.hpp"

using namespace corrproj;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

oracle::Vec vec(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

oracle::Mat mat(const Eigen::MatrixXd& m) {
  oracle::Mat out(static_cast<std::size_t>(m.rows()), oracle::Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
    }
  }
  return out;
}

int failures = 0;

void verdict(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("criterion %d %s: %s (%s)\n", id, name, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  failures += ok ? 0 : 1;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::shared_ptr<const KernelStore> sized_store(const Recording& rec, const SkeletonSchema& s, std::size_t target,
    const EvaluationConfig& cfg, double* seconds) {
  const auto t0 = Clock::now();
  auto sized = store_for_size(rec, s, target, cfg);
  if (seconds != nullptr) {
    *seconds = sized.build_seconds;
  }
  std::fprintf(stderr, "  size %zu: %zu landmarks (%.1f s)\n", target, sized.store->size(), since(t0));
  return sized.store;
}

struct MotionErrors {
  std::vector<oracle::Deviation> raw;
  std::vector<oracle::Deviation> smoothed;
};

// Rest to each benchmark pose in joint space, through FK, projection and the
// smoother, scored against IK with the previous frame as branch hint.
MotionErrors motions(const ProjectionEngine& engine, const SkeletonSchema& s, std::size_t frames) {
  MotionErrors out;
  const Eigen::VectorXd rest = s.rest_config().angles;
  for (const auto& p : s.benchmark_poses()) {
    Smoother smoother;
    HumanoidConfig previous = s.rest_config();
    for (std::size_t f = 0; f < frames; ++f) {
      const double u = static_cast<double>(f) / static_cast<double>(frames - 1);
      const HumanPose h = forward_kinematics(HumanoidConfig{rest + u * (p.angles - rest)}, s);
      IkOptions ik;
      ik.previous = &previous;
      const HumanoidConfig truth = inverse_kinematics(h, s, ik);
      previous = truth;
      const Eigen::VectorXd r = engine.project(h).r_star.angles;
      out.raw.push_back(oracle::deviation(vec(r), vec(truth.angles)));
      out.smoothed.push_back(oracle::deviation(vec(smoother.step(r)), vec(truth.angles)));
    }
  }
  return out;
}

ProjectionEngine engine_for(std::shared_ptr<const KernelStore> store, std::size_t l, std::size_t m,
    ProjectionMode mode = ProjectionMode::Relaxed) {
  ProjectionParams p;
  p.candidates = l;
  p.backward_neighbors = m;
  p.mode = mode;
  return ProjectionEngine(std::move(store), p);
}

void elm_interpolation() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  int good = 0;
  for (int set = 0; set < 50; ++set) {
    const Eigen::Index in = set % 2 == 0 ? 24 : 10;
    const Eigen::Index out = set % 2 == 0 ? 10 : 24;
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(gen() % 32);
    Eigen::MatrixXd x(n, in), t(n, out);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x.data()[i] = unit(gen);
    }
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      t.data()[i] = unit(gen);
    }
    const auto kernel = train_elm(x, t, static_cast<std::size_t>(n), 1e-8, 1000 + static_cast<std::uint64_t>(set));
    const auto h = oracle::hidden_matrix(mat(x), mat(kernel.hidden_weights()), vec(kernel.hidden_biases()));
    const auto beta = mat(kernel.output_weights());
    double residual = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      for (std::size_t c = 0; c < beta[0].size(); ++c) {
        double y = 0.0;
        for (std::size_t k = 0; k < beta.size(); ++k) {
          y += h[i][k] * beta[k][c];
        }
        residual = std::max(residual, std::abs(y - t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c))));
      }
    }
    worst = std::max(worst, residual);
    good += residual < 1e-4 ? 1 : 0;
  }
  const double secs = since(t0);
  verdict(1, "ELM interpolation", good == 50 && secs < 5.0,
      std::to_string(good) + "/50 sets below 1e-4, max residual " + num(worst) + ", " + num(secs) + " s");
}

void identity(std::shared_ptr<const KernelStore> store, double build_seconds) {
  const auto engine = engine_for(store, 10, 10);
  const auto t0 = Clock::now();
  std::size_t good = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < store->size(); ++i) {
    const auto r = engine.project_relaxed(HumanPose{store->human(i)});
    const double avg = oracle::deviation(vec(r.r_star.angles), vec(store->humanoid(i))).m_avg;
    worst = std::max(worst, avg);
    good += avg < 2.0 ? 1 : 0;
  }
  const double secs = build_seconds + since(t0);
  const double frac = static_cast<double>(good) / static_cast<double>(store->size());
  verdict(2, "identity", frac >= 0.99 && secs < 30.0,
      std::to_string(good) + "/" + std::to_string(store->size()) + " landmarks with M_avg < 2 deg, worst " + num(worst) +
          " deg, " + num(secs) + " s including extraction and training");
}

void quality(const ProjectionEngine& engine, const SkeletonSchema& s) {
  const auto m = motions(engine, s, 120);
  std::size_t good = 0;
  double avg = 0.0;
  for (const auto& d : m.smoothed) {
    good += d.m_max < 10.0 ? 1 : 0;
    avg += d.m_avg;
  }
  avg /= static_cast<double>(m.smoothed.size());
  const double frac = static_cast<double>(good) / static_cast<double>(m.smoothed.size());
  verdict(3, "quality bound", frac >= 0.95 && avg < 5.0,
      std::to_string(good) + "/" + std::to_string(m.smoothed.size()) + " frames with M_max < 10 deg, mean M_avg " +
          num(avg) + " deg, " + std::to_string(engine.store().size()) + " landmarks");
}

void convergence(const std::vector<std::shared_ptr<const KernelStore>>& stores, const SkeletonSchema& s) {
  std::vector<double> means;
  std::string detail = "mean M_avg by size";
  for (const auto& store : stores) {
    const auto m = motions(engine_for(store, 10, 10), s, 120);
    double avg = 0.0;
    for (const auto& d : m.raw) {
      avg += d.m_avg;
    }
    means.push_back(avg / static_cast<double>(m.raw.size()));
    detail += " " + std::to_string(store->size()) + ": " + num(means.back());
  }
  bool ok = means.size() >= 2;
  for (std::size_t i = 1; i < means.size(); ++i) {
    ok = ok && means[i] <= 1.10 * means[i - 1];
  }
  verdict(4, "landmark-size convergence", ok, detail);
}

double mean_latency_ms(const ProjectionEngine& engine, const std::vector<HumanPose>& queries) {
  double sink = 0.0;
  const auto t0 = Clock::now();
  for (const auto& q : queries) {
    sink += engine.project_relaxed(q).deviation;
  }
  const double ms = since(t0) * 1000.0 / static_cast<double>(queries.size());
  if (!std::isfinite(sink)) {
    std::fprintf(stderr, "non-finite deviations in the latency run\n");
  }
  return ms;
}

std::vector<HumanPose> draw(const Recording& rec, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> pick(0, rec.frames.size() - 1);
  std::vector<HumanPose> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back({rec.frames[pick(gen)].pose});
  }
  return out;
}

void latency(std::shared_ptr<const KernelStore> store, const Recording& held) {
  const auto queries = draw(held, 100000, 7);
  const double narrow = mean_latency_ms(engine_for(store, 10, 10), queries);
  const std::vector<HumanPose> some(queries.begin(), queries.begin() + 10000);
  const double wide = mean_latency_ms(engine_for(store, 50, 50), some);
  verdict(5, "latency", narrow < 0.1 && wide > narrow,
      "L=M=10 mean " + num(narrow) + " ms over 1e5 queries, L=M=50 mean " + num(wide) + " ms");
}

void exact_optimality(std::shared_ptr<const KernelStore> store, const Recording& held) {
  constexpr std::size_t kM = 6;
  const auto engine = engine_for(store, 10, kM, ProjectionMode::Exact);
  const auto grid = oracle::simplex_grid(kM, 8);
  std::size_t clusters = 0, violations = 0;
  double worst_gap = -std::numeric_limits<double>::infinity();
  for (const auto& q : draw(held, 200, 8)) {
    for (const auto& cl : engine.clusters(q)) {
      ++clusters;
      std::vector<Eigen::VectorXd> vertex;
      for (const std::size_t nb : cl.neighbors) {
        vertex.push_back(store->humanoid(nb));
      }
      double grid_min = std::numeric_limits<double>::infinity();
      for (const auto& w : grid) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(store->schema().config_dim()));
        for (std::size_t k = 0; k < kM; ++k) {
          x += w[k] * vertex[k];
        }
        for (const std::size_t nb : cl.neighbors) {
          const auto back = vec(store->backward(nb).predict(x));
          double d2 = 0.0;
          for (std::size_t i = 0; i < back.size(); ++i) {
            d2 += (back[i] - q.data(static_cast<Eigen::Index>(i))) * (back[i] - q.data(static_cast<Eigen::Index>(i)));
          }
          grid_min = std::min(grid_min, std::sqrt(d2));
        }
      }
      const double gap = engine.optimize_cluster(cl, q).objective - grid_min;
      worst_gap = std::max(worst_gap, gap);
      violations += gap > 1e-12 ? 1 : 0;
    }
  }
  verdict(6, "exact-solver optimality", violations == 0,
      std::to_string(violations) + " of " + std::to_string(clusters) + " clusters above the " +
          std::to_string(grid.size()) + "-point grid minimum, worst gap " + num(worst_gap));
}

void smoother() {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> step(0.0, 0.2);
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    const SmootherParams p{unit(gen), unit(gen), s % 2 == 0 ? 0.0 : 0.1 * unit(gen)};
    Smoother lib(p);
    oracle::ScalarSmoother ref{p.alpha, p.gamma, p.eta};
    double y = 0.0;
    for (int i = 0; i < 500; ++i) {
      y += step(gen);
      worst = std::max(worst, std::abs(lib.step(Eigen::VectorXd::Constant(1, y))(0) - ref.step(y)));
    }
  }
  // Jitter inside eta / (2 alpha) around a settled level never moves it.
  bool frozen = true;
  for (int s = 0; s < 100; ++s) {
    const SmootherParams p{0.2 + 0.8 * unit(gen), unit(gen), 0.05 + 0.2 * unit(gen)};
    Smoother lib(p);
    const Eigen::VectorXd base = Eigen::VectorXd::Constant(1, step(gen));
    lib.step(base);
    std::uniform_real_distribution<double> jitter(-p.eta / (2.0 * p.alpha), p.eta / (2.0 * p.alpha));
    for (int i = 0; i < 200; ++i) {
      const Eigen::VectorXd y = base.array() + jitter(gen);
      frozen = frozen && lib.step(y) == base;
    }
  }
  verdict(7, "smoother correctness", worst <= 1e-12 && frozen,
      "max deviation from the scalar recurrence " + num(worst) + " over 100 streams, deadband " +
          (frozen ? "held" : "broke"));
}

void mean_shift_recovery() {
  const oracle::Mat centers{{0.0, 0.0}, {10.0, 0.0}};
  int good = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pts = oracle::blobs(centers, 150, 0.5, seed);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()), 2);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      m(static_cast<Eigen::Index>(i), 0) = pts[i][0];
      m(static_cast<Eigen::Index>(i), 1) = pts[i][1];
    }
    const auto modes = mean_shift(m, 2.0, 500, 1e-8);
    bool ok = modes.rows() == 2;
    for (const auto& c : centers) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index r = 0; r < modes.rows(); ++r) {
        best = std::min(best, std::hypot(modes(r, 0) - c[0], modes(r, 1) - c[1]));
      }
      worst = std::max(worst, best);
      ok = ok && best < 0.25;
    }
    good += ok ? 1 : 0;
  }
  verdict(8, "mean-shift recovery", good == 20,
      std::to_string(good) + "/20 seeds with two modes within 0.25, worst distance " + num(worst));
}

} // namespace

int main() {
  const auto t0 = Clock::now();
  const auto s = desk_schema();
  EvaluationConfig cfg;

  elm_interpolation();

  std::fprintf(stderr, "building stores\n");
  SynthesisOptions so;
  so.duration_s = 300.0;
  so.seed = 1;
  const Recording rec = synthesize_recording(s, so).recording;
  std::vector<std::shared_ptr<const KernelStore>> stores;
  double build_seconds = 0.0;
  for (const std::size_t target : {50, 250, 1000}) {
    stores.push_back(sized_store(rec, s, target, cfg, target == 1000 ? &build_seconds : nullptr));
  }
  const auto big = stores.back();

  identity(big, build_seconds);
  quality(engine_for(big, 10, 10), s);
  convergence(stores, s);

  SynthesisOptions ho;
  ho.duration_s = 120.0;
  ho.seed = 2;
  const Recording held = synthesize_recording(s, ho).recording;
  latency(big, held);
  exact_optimality(big, held);
  smoother();
  mean_shift_recovery();

  std::printf("%d of 8 criteria failed, %.1f s\n", failures, since(t0));
  return failures == 0 ? 0 : 1;
}
