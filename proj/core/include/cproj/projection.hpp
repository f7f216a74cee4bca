#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cproj/kernel_store.hpp"
#include "cproj/knn.hpp"

namespace corrproj {

enum class ProjectionMode {
  /// Pick the best forward-kernel candidate by its back-projected deviation.
  Relaxed,
  /// Optimize convex weights over each candidate's humanoid neighborhood.
  Exact,
};

/// What the exact solver combines with its simplex weights.
enum class CombinationBasis {
  /// The neighbor landmarks' humanoid configurations (default).
  Landmarks,
  /// The neighbor landmarks' forward-kernel predictions at the query.
  Candidates,
};

struct ProjectionParams {
  std::size_t candidates = 10; // L
  std::size_t backward_neighbors = 10; // M
  ProjectionMode mode = ProjectionMode::Relaxed;
  CombinationBasis basis = CombinationBasis::Landmarks;
  /// Barycentric grid resolution of the exact solver (weights in 1/resolution steps).
  std::size_t grid_resolution = 8;
  /// Local descent rounds after the grid search.
  std::size_t refine_steps = 50;
};

/// One candidate cluster of a query.
struct Cluster {
  std::size_t seed = 0; // landmark whose forward kernel produced the candidate
  double seed_distance = 0.0; // human-space distance from the query to that landmark
  Eigen::VectorXd candidate; // forward(seed)(h*), unclamped
  std::vector<std::size_t> neighbors; // M nearest humanoid landmarks of the candidate
};

struct ProjectionResult {
  HumanoidConfig r_star;
  /// Back-projected deviation of the chosen point (human-space norm).
  double deviation = 0.0;
  /// Landmark index seeding the winning cluster.
  std::size_t chosen_cluster = 0;
  /// Relaxed mode: landmark whose backward kernel attained the deviation.
  std::size_t chosen_backward = 0;
  /// Exact mode: simplex weights over `support`, the winning cluster's
  /// neighbor landmarks in ascending index order.
  Eigen::VectorXd weights;
  std::vector<std::size_t> support;
  std::chrono::nanoseconds elapsed{0};
};

/// Index of the smallest deviation. Ties go to the smaller seed distance,
/// then the lower index. Throws numeric-failure on NaN.
std::size_t choose_cluster(std::span<const double> deviations, std::span<const double> seed_distances = {});

/// Immutable projection operator from human poses to humanoid configurations.
/// Safe to query from several threads at once.
class ProjectionEngine {
 public:
  ProjectionEngine() = default;
  ProjectionEngine(std::shared_ptr<const KernelStore> store, ProjectionParams params);

  const KernelStore& store() const;
  const ProjectionParams& params() const noexcept {
    return params_;
  }
  bool valid() const noexcept {
    return store_ != nullptr;
  }

  /// Dispatches on params().mode.
  ProjectionResult project(const HumanPose& query) const;
  ProjectionResult project_relaxed(const HumanPose& query) const;
  ProjectionResult project_exact(const HumanPose& query) const;

  /// The L candidate clusters of a query, in ascending seed distance.
  std::vector<Cluster> clusters(const HumanPose& query) const;

  /// Vertices the exact solver combines for a cluster (one per row).
  Eigen::MatrixXd cluster_vertices(const Cluster& cluster, const HumanPose& query) const;

  /// min_k || backward(neighbor_k)(x) - h* || for a humanoid point x.
  double back_projected_deviation(
      const Cluster& cluster, const Eigen::Ref<const Eigen::VectorXd>& x, const HumanPose& query) const;

  struct ClusterOptimum {
    Eigen::VectorXd weights;
    Eigen::VectorXd point;
    double objective = 0.0;
  };
  /// Exact-mode optimum of one cluster: grid search then local descent on
  /// the simplex.
  ClusterOptimum optimize_cluster(const Cluster& cluster, const HumanPose& query) const;

 private:
  void check_query(const HumanPose& query) const;

  std::shared_ptr<const KernelStore> store_;
  ProjectionParams params_;
};

} // namespace corrproj
