#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace corrproj {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;

  bool operator==(const Neighbor&) const = default;
};

/// Exact Euclidean nearest-neighbor index over a fixed point set.
///
/// Results are ordered by ascending distance with ties broken by the lower
/// point index. Sets smaller than kBruteForceBelow are scanned linearly.
class KdTree {
 public:
  static constexpr std::size_t kBruteForceBelow = 64;

  KdTree() = default;
  /// `points` holds one point per row.
  explicit KdTree(const Eigen::MatrixXd& points, std::size_t leaf_size = 12);

  std::size_t size() const noexcept {
    return count_;
  }
  std::size_t dim() const noexcept {
    return dim_;
  }
  Eigen::Map<const Eigen::VectorXd> point(std::size_t i) const;

  /// The k nearest points; k is clamped to size().
  std::vector<Neighbor> knn(const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k) const;
  void knn_into(const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k, std::vector<Neighbor>& out) const;

  /// Every point within `radius` (inclusive), in ascending index order.
  std::vector<Neighbor> radius(const Eigen::Ref<const Eigen::VectorXd>& query, double radius) const;
  void radius_into(
      const Eigen::Ref<const Eigen::VectorXd>& query, double radius, std::vector<Neighbor>& out) const;

 private:
  struct Node {
    // Leaf when split_dim < 0; [begin, end) indexes order_.
    int split_dim = -1;
    double split = 0.0;
    std::size_t begin = 0, end = 0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end, std::size_t leaf_size);
  double sq_dist(std::size_t slot, const double* q) const;
  void search_knn(std::size_t node, const double* q, std::size_t k, std::vector<std::pair<double, std::size_t>>& heap,
      double* offsets, double rd) const;
  void search_radius(std::size_t node, const double* q, double r2, std::vector<Neighbor>& out) const;

  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> coords_; // row-major, original order
  std::vector<double> packed_; // row-major, tree order
  std::vector<std::size_t> order_; // tree slot -> original index
  std::vector<Node> nodes_;
};

/// Exact kNN by dense scan, tuned for small point sets in moderate
/// dimension where a tree cannot prune.
///
/// Squared distances are first estimated in single precision on centered
/// coordinates as |p|^2 - 2 p.q + |q|^2, so a batch of queries costs one
/// matrix product. Every point whose estimate is within the rounding bound
/// of the k-th best is then re-measured in double precision, so results
/// (and tie order) equal those of KdTree.
class ScanIndex {
 public:
  ScanIndex() = default;
  /// `points` holds one point per row.
  explicit ScanIndex(const Eigen::MatrixXd& points);

  std::size_t size() const noexcept {
    return count_;
  }
  std::size_t dim() const noexcept {
    return dim_;
  }
  Eigen::Map<const Eigen::VectorXd> point(std::size_t i) const;

  std::vector<Neighbor> knn(const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k) const;
  void knn_into(const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k, std::vector<Neighbor>& out) const;
  /// One result list per column of `queries`.
  void knn_batch(const Eigen::Ref<const Eigen::MatrixXd>& queries, std::size_t k,
      std::vector<std::vector<Neighbor>>& out) const;

 private:
  void select(const float* estimate, const double* query, double error, std::size_t k,
      std::vector<Neighbor>& out) const;

  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  Eigen::VectorXd center_;
  Eigen::MatrixXf points_; // centered, one point per row
  Eigen::VectorXf sq_norms_;
  std::vector<double> rows_; // row-major, exact
  double max_sq_norm_ = 0.0;
};

/// Reference O(N) scan with the same ordering contract.
std::vector<Neighbor> brute_force_knn(
    const Eigen::MatrixXd& points, const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k);

} // namespace corrproj
