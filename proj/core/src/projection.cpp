#include "cproj/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "cproj/error.hpp"

namespace corrproj {

namespace {

using Clock = std::chrono::steady_clock;

// Calls fn(weights) for every point of the barycentric grid with the given
// resolution over `dims` vertices.
template <typename Fn>
void for_each_grid_point(std::size_t dims, std::size_t resolution, Fn&& fn) {
  std::vector<std::size_t> counts(dims, 0);
  Eigen::VectorXd w(static_cast<Eigen::Index>(dims));
  const auto recurse = [&](auto&& self, std::size_t slot, std::size_t remaining) -> void {
    if (slot + 1 == dims) {
      counts[slot] = remaining;
      for (std::size_t i = 0; i < dims; ++i) {
        w(static_cast<Eigen::Index>(i)) = static_cast<double>(counts[i]) / static_cast<double>(resolution);
      }
      fn(w);
      return;
    }
    for (std::size_t c = 0; c <= remaining; ++c) {
      counts[slot] = c;
      self(self, slot + 1, remaining - c);
    }
  };
  recurse(recurse, 0, resolution);
}

} // namespace

std::size_t choose_cluster(std::span<const double> deviations, std::span<const double> seed_distances) {
  require(!deviations.empty(), ErrorKind::InvalidArgument, "choose_cluster needs at least one deviation");
  require(seed_distances.empty() || seed_distances.size() == deviations.size(), ErrorKind::InvalidArgument,
      "seed distances must match deviations");
  std::size_t best = 0;
  for (std::size_t j = 0; j < deviations.size(); ++j) {
    if (std::isnan(deviations[j])) {
      throw_error(ErrorKind::NumericFailure, "deviation of cluster " + std::to_string(j) + " is NaN");
    }
    if (j == 0) {
      continue;
    }
    if (deviations[j] < deviations[best]) {
      best = j;
    } else if (deviations[j] == deviations[best] && !seed_distances.empty() &&
               seed_distances[j] < seed_distances[best]) {
      best = j;
    }
  }
  return best;
}

ProjectionEngine::ProjectionEngine(std::shared_ptr<const KernelStore> store, ProjectionParams params)
    : store_(std::move(store)), params_(params) {
  require(store_ != nullptr && store_->size() > 0, ErrorKind::EngineInvalid, "projection engine has no kernel store");
  const std::size_t n = store_->size();
  require(params_.candidates >= 1 && params_.candidates <= n, ErrorKind::InvalidArgument,
      "L = " + std::to_string(params_.candidates) + " must lie in [1, " + std::to_string(n) + "]");
  require(params_.backward_neighbors >= 1 && params_.backward_neighbors <= n, ErrorKind::InvalidArgument,
      "M = " + std::to_string(params_.backward_neighbors) + " must lie in [1, " + std::to_string(n) + "]");
  require(params_.grid_resolution >= 1, ErrorKind::InvalidArgument, "grid resolution must be >= 1");
}

const KernelStore& ProjectionEngine::store() const {
  require(store_ != nullptr, ErrorKind::EngineInvalid, "projection engine has no kernel store");
  return *store_;
}

void ProjectionEngine::check_query(const HumanPose& query) const {
  require(store_ != nullptr, ErrorKind::EngineInvalid, "projection engine has no kernel store");
  if (query.dim() != store_->schema().human_dim()) {
    throw_error(ErrorKind::InvalidArgument, "query has dimension " + std::to_string(query.dim()) + ", expected " +
                                                std::to_string(store_->schema().human_dim()));
  }
  require(query.data.allFinite(), ErrorKind::InvalidArgument, "query contains NaN or Inf");
}

ProjectionResult ProjectionEngine::project(const HumanPose& query) const {
  return params_.mode == ProjectionMode::Exact ? project_exact(query) : project_relaxed(query);
}

std::vector<Cluster> ProjectionEngine::clusters(const HumanPose& query) const {
  check_query(query);
  const auto seeds = store_->nearest_human(query.data, params_.candidates);
  std::vector<Cluster> out;
  out.reserve(seeds.size());
  for (const auto& s : seeds) {
    Cluster c;
    c.seed = s.index;
    c.seed_distance = s.distance;
    c.candidate = store_->forward(s.index).predict(query.data);
    for (const auto& nb : store_->nearest_humanoid(c.candidate, params_.backward_neighbors)) {
      c.neighbors.push_back(nb.index);
    }
    out.push_back(std::move(c));
  }
  return out;
}

ProjectionResult ProjectionEngine::project_relaxed(const HumanPose& query) const {
  const auto start = Clock::now();
  check_query(query);
  const KernelStore& store = *store_;
  const auto n = static_cast<Eigen::Index>(store.schema().config_dim());
  const auto m = static_cast<Eigen::Index>(store.schema().human_dim());

  thread_local std::vector<Neighbor> seeds;
  thread_local std::vector<std::vector<Neighbor>> nbrs;
  thread_local Eigen::MatrixXd candidates;
  store.human_index().knn_into(query.data, params_.candidates, seeds);

  candidates.resize(n, static_cast<Eigen::Index>(seeds.size()));
  for (std::size_t j = 0; j < seeds.size(); ++j) {
    auto col = candidates.col(static_cast<Eigen::Index>(j));
    store.forward(seeds[j].index).predict_into(query.data, col);
    if (!col.allFinite()) {
      throw_error(ErrorKind::NumericFailure,
          "forward kernel " + std::to_string(seeds[j].index) + " produced a non-finite candidate");
    }
  }
  store.humanoid_index().knn_batch(candidates, params_.backward_neighbors, nbrs);

  Eigen::VectorXd back(m);
  double best_dev = std::numeric_limits<double>::infinity();
  std::size_t best_j = 0;
  std::size_t best_backward = 0;
  for (std::size_t j = 0; j < seeds.size(); ++j) {
    const auto candidate = candidates.col(static_cast<Eigen::Index>(j));
    double dev = std::numeric_limits<double>::infinity();
    std::size_t via = nbrs[j].front().index;
    for (const auto& nb : nbrs[j]) {
      store.backward(nb.index).predict_into(candidate, back);
      const double d = (back - query.data).norm();
      if (d < dev) {
        dev = d;
        via = nb.index;
      }
    }
    if (std::isnan(dev)) {
      throw_error(ErrorKind::NumericFailure, "deviation of cluster " + std::to_string(seeds[j].index) + " is NaN");
    }
    // Seeds arrive in ascending (distance, index) order, so strict
    // improvement reproduces choose_cluster's tie-breaks.
    if (dev < best_dev || j == 0) {
      best_dev = dev;
      best_j = j;
      best_backward = via;
    }
  }
  const std::size_t best_seed = seeds[best_j].index;
  const Eigen::VectorXd best_candidate = candidates.col(static_cast<Eigen::Index>(best_j));

  ProjectionResult r;
  r.r_star.angles = best_candidate;
  store.schema().clamp_in_place(r.r_star.angles);
  r.deviation = best_dev;
  r.chosen_cluster = best_seed;
  r.chosen_backward = best_backward;
  r.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start);
  return r;
}

Eigen::MatrixXd ProjectionEngine::cluster_vertices(const Cluster& cluster, const HumanPose& query) const {
  const KernelStore& store = this->store();
  Eigen::MatrixXd v(static_cast<Eigen::Index>(cluster.neighbors.size()),
      static_cast<Eigen::Index>(store.schema().config_dim()));
  for (std::size_t k = 0; k < cluster.neighbors.size(); ++k) {
    const std::size_t idx = cluster.neighbors[k];
    if (params_.basis == CombinationBasis::Landmarks) {
      v.row(static_cast<Eigen::Index>(k)) = store.humanoid(idx).transpose();
    } else {
      v.row(static_cast<Eigen::Index>(k)) = store.forward(idx).predict(query.data).transpose();
    }
  }
  return v;
}

double ProjectionEngine::back_projected_deviation(
    const Cluster& cluster, const Eigen::Ref<const Eigen::VectorXd>& x, const HumanPose& query) const {
  const KernelStore& store = this->store();
  Eigen::VectorXd back(static_cast<Eigen::Index>(store.schema().human_dim()));
  double best = std::numeric_limits<double>::infinity();
  for (const std::size_t idx : cluster.neighbors) {
    store.backward(idx).predict_into(x, back);
    best = std::min(best, (back - query.data).norm());
  }
  return best;
}

ProjectionEngine::ClusterOptimum ProjectionEngine::optimize_cluster(const Cluster& cluster, const HumanPose& query) const {
  const Eigen::MatrixXd vertices = cluster_vertices(cluster, query);
  const std::size_t dims = cluster.neighbors.size();
  Eigen::VectorXd point(vertices.cols());
  const auto objective = [&](const Eigen::VectorXd& w) {
    point.noalias() = vertices.transpose() * w;
    return back_projected_deviation(cluster, point, query);
  };

  ClusterOptimum best;
  best.objective = std::numeric_limits<double>::infinity();
  for_each_grid_point(dims, params_.grid_resolution, [&](const Eigen::VectorXd& w) {
    const double f = objective(w);
    if (f < best.objective) {
      best.objective = f;
      best.weights = w;
    }
  });

  // Pairwise mass transfers keep the weights on the simplex.
  double step = 1.0 / static_cast<double>(params_.grid_resolution);
  Eigen::VectorXd trial(best.weights.size());
  for (std::size_t round = 0; round < params_.refine_steps && dims > 1; ++round) {
    double round_best = best.objective;
    Eigen::VectorXd round_weights;
    for (std::size_t from = 0; from < dims; ++from) {
      const double available = best.weights(static_cast<Eigen::Index>(from));
      if (available <= 0.0) {
        continue;
      }
      const double delta = std::min(step, available);
      for (std::size_t to = 0; to < dims; ++to) {
        if (to == from) {
          continue;
        }
        trial = best.weights;
        trial(static_cast<Eigen::Index>(from)) -= delta;
        trial(static_cast<Eigen::Index>(to)) += delta;
        if (trial(static_cast<Eigen::Index>(from)) < 0.0) {
          trial(static_cast<Eigen::Index>(from)) = 0.0;
        }
        const double f = objective(trial);
        if (f < round_best) {
          round_best = f;
          round_weights = trial;
        }
      }
    }
    if (round_weights.size() > 0) {
      best.objective = round_best;
      best.weights = round_weights;
    } else {
      step *= 0.5;
    }
  }
  best.point = vertices.transpose() * best.weights;
  return best;
}

ProjectionResult ProjectionEngine::project_exact(const HumanPose& query) const {
  const auto start = Clock::now();
  const auto cl = clusters(query);

  // The objective is symmetric in the neighbors, so clusters are solved over
  // their sorted neighbor set and identical sets are solved once.
  std::map<std::vector<std::size_t>, ClusterOptimum> cache;
  std::vector<const ClusterOptimum*> optima;
  std::vector<std::vector<std::size_t>> supports;
  std::vector<double> deviations;
  std::vector<double> distances;
  for (const auto& c : cl) {
    Cluster canonical = c;
    std::sort(canonical.neighbors.begin(), canonical.neighbors.end());
    auto it = cache.find(canonical.neighbors);
    if (it == cache.end()) {
      it = cache.emplace(canonical.neighbors, optimize_cluster(canonical, query)).first;
    }
    optima.push_back(&it->second);
    supports.push_back(canonical.neighbors);
    deviations.push_back(it->second.objective);
    distances.push_back(c.seed_distance);
  }
  const std::size_t j = choose_cluster(deviations, distances);

  ProjectionResult r;
  r.r_star.angles = optima[j]->point;
  store_->schema().clamp_in_place(r.r_star.angles);
  r.deviation = optima[j]->objective;
  r.chosen_cluster = cl[j].seed;
  r.weights = optima[j]->weights;
  r.support = supports[j];
  r.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start);
  return r;
}

} // namespace corrproj
