#include <random>

#include <benchmark/benchmark.h>

#include "cproj/bench.hpp"
#include "cproj/knn.hpp"

using namespace corrproj;

namespace {

struct Fixture {
  std::shared_ptr<const KernelStore> store;
  std::vector<HumanPose> queries;
};

// About 1000 landmarks from a five minute synthetic capture.
const Fixture& fixture() {
  static const Fixture f = [] {
    const auto s = desk_schema();
    SynthesisOptions so;
    const auto rec = synthesize_recording(s, so).recording;
    LandmarkOptions opt;
    opt.bandwidth = 0.12;
    Fixture out;
    out.store = std::make_shared<const KernelStore>(KernelStore::build(build_landmarks(rec, s, opt), 16, 1e-6, 1));
    so.seed = 2;
    so.duration_s = 60.0;
    out.queries = sample_queries(synthesize_recording(s, so).recording, 1024, 3);
    return out;
  }();
  return f;
}

void BM_ProjectRelaxed(benchmark::State& state) {
  const auto& f = fixture();
  ProjectionParams p;
  p.candidates = static_cast<std::size_t>(state.range(0));
  p.backward_neighbors = p.candidates;
  const ProjectionEngine engine(f.store, p);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(engine.project_relaxed(f.queries[i++ % f.queries.size()]));
  }
  state.counters["landmarks"] = static_cast<double>(f.store->size());
}
BENCHMARK(BM_ProjectRelaxed)->Arg(1)->Arg(10)->Arg(50)->Unit(benchmark::kMicrosecond);

void BM_ProjectExact(benchmark::State& state) {
  const auto& f = fixture();
  ProjectionParams p;
  p.candidates = 10;
  p.backward_neighbors = static_cast<std::size_t>(state.range(0));
  p.mode = ProjectionMode::Exact;
  const ProjectionEngine engine(f.store, p);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(engine.project_exact(f.queries[i++ % f.queries.size()]));
  }
}
BENCHMARK(BM_ProjectExact)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_TrainElm(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd x(n, 24), t(n, 10);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x.data()[i] = u(gen);
  }
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    t.data()[i] = u(gen);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_elm(x, t, static_cast<std::size_t>(n), 1e-6, 1));
  }
}
BENCHMARK(BM_TrainElm)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

void BM_Knn(benchmark::State& state) {
  const auto& f = fixture();
  const Eigen::MatrixXd pts = f.store->landmarks().human_matrix();
  const ScanIndex scan(pts);
  const KdTree tree(pts);
  const bool use_tree = state.range(0) == 1;
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& q = f.queries[i++ % f.queries.size()].data;
    benchmark::DoNotOptimize(use_tree ? tree.knn(q, 10) : scan.knn(q, 10));
  }
  state.SetLabel(use_tree ? "kd-tree" : "scan");
}
BENCHMARK(BM_Knn)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();
