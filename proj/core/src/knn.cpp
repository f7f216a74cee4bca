#include "cproj/knn.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "cproj/error.hpp"

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace corrproj {

namespace {

using HeapEntry = std::pair<double, std::size_t>; // (squared distance, index)

// Max-heap on (distance, index): the top is the current worst neighbor.
bool heap_less(const HeapEntry& a, const HeapEntry& b) {
  return a < b;
}

void finish(std::vector<HeapEntry>& heap, std::vector<Neighbor>& out) {
  std::sort(heap.begin(), heap.end());
  out.clear();
  out.reserve(heap.size());
  for (const auto& [d2, i] : heap) {
    out.push_back({i, std::sqrt(d2)});
  }
}

} // namespace

KdTree::KdTree(const Eigen::MatrixXd& points, std::size_t leaf_size)
    : count_(static_cast<std::size_t>(points.rows())), dim_(static_cast<std::size_t>(points.cols())) {
  require(points.allFinite(), ErrorKind::InvalidArgument, "kNN points contain NaN or Inf");
  coords_.resize(count_ * dim_);
  for (std::size_t i = 0; i < count_; ++i) {
    for (std::size_t d = 0; d < dim_; ++d) {
      coords_[i * dim_ + d] = points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d));
    }
  }
  order_.resize(count_);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (count_ >= kBruteForceBelow) {
    nodes_.reserve(2 * count_ / std::max<std::size_t>(leaf_size, 1) + 1);
    build(0, count_, std::max<std::size_t>(leaf_size, 1));
  }
  packed_.resize(count_ * dim_);
  for (std::size_t s = 0; s < count_; ++s) {
    std::copy_n(&coords_[order_[s] * dim_], dim_, &packed_[s * dim_]);
  }
}

Eigen::Map<const Eigen::VectorXd> KdTree::point(std::size_t i) const {
  return {&coords_[i * dim_], static_cast<Eigen::Index>(dim_)};
}

std::size_t KdTree::build(std::size_t begin, std::size_t end, std::size_t leaf_size) {
  const std::size_t id = nodes_.size();
  nodes_.push_back({});
  if (end - begin <= leaf_size) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  // Split on the widest dimension at the median.
  int best_dim = 0;
  double best_spread = -1.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    double lo = coords_[order_[begin] * dim_ + d];
    double hi = lo;
    for (std::size_t s = begin + 1; s < end; ++s) {
      const double v = coords_[order_[s] * dim_ + d];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > best_spread) {
      best_spread = hi - lo;
      best_dim = static_cast<int>(d);
    }
  }
  if (best_spread <= 0.0) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  const std::size_t mid = begin + (end - begin) / 2;
  const auto bd = static_cast<std::size_t>(best_dim);
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
      order_.begin() + static_cast<std::ptrdiff_t>(end),
      [&](std::size_t a, std::size_t b) { return coords_[a * dim_ + bd] < coords_[b * dim_ + bd]; });
  const double split = coords_[order_[mid] * dim_ + bd];
  const std::size_t left = build(begin, mid, leaf_size);
  const std::size_t right = build(mid, end, leaf_size);
  Node& n = nodes_[id];
  n.split_dim = best_dim;
  n.split = split;
  n.left = left;
  n.right = right;
  n.begin = begin;
  n.end = end;
  return id;
}

double KdTree::sq_dist(std::size_t slot, const double* q) const {
  const double* p = &packed_[slot * dim_];
  double acc = 0.0;
  for (std::size_t d = 0; d < dim_; ++d) {
    const double diff = p[d] - q[d];
    acc += diff * diff;
  }
  return acc;
}

void KdTree::search_knn(std::size_t node, const double* q, std::size_t k, std::vector<HeapEntry>& heap,
    double* offsets, double rd) const {
  const Node& n = nodes_[node];
  if (n.split_dim < 0) {
    for (std::size_t s = n.begin; s < n.end; ++s) {
      if (heap.size() < k) {
        heap.emplace_back(sq_dist(s, q), order_[s]);
        std::push_heap(heap.begin(), heap.end(), heap_less);
        continue;
      }
      // Partial sums may stop once strictly past the current worst.
      const double bound = heap.front().first;
      const double* p = &packed_[s * dim_];
      double acc = 0.0;
      for (std::size_t d = 0; d < dim_ && acc <= bound; ++d) {
        const double diff = p[d] - q[d];
        acc += diff * diff;
      }
      const HeapEntry e{acc, order_[s]};
      if (e < heap.front()) {
        std::pop_heap(heap.begin(), heap.end(), heap_less);
        heap.back() = e;
        std::push_heap(heap.begin(), heap.end(), heap_less);
      }
    }
    return;
  }
  const auto d = static_cast<std::size_t>(n.split_dim);
  const double diff = q[d] - n.split;
  const std::size_t near = diff < 0.0 ? n.left : n.right;
  const std::size_t far = diff < 0.0 ? n.right : n.left;
  search_knn(near, q, k, heap, offsets, rd);
  // rd is a lower bound on the squared distance to the far cell. Equal
  // distances must still be visited so index tie-breaks stay exact.
  const double old = offsets[d];
  const double far_rd = rd - old * old + diff * diff;
  if (heap.size() < k || far_rd <= heap.front().first) {
    offsets[d] = diff;
    search_knn(far, q, k, heap, offsets, far_rd);
    offsets[d] = old;
  }
}

void KdTree::knn_into(const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k, std::vector<Neighbor>& out) const {
  require(static_cast<std::size_t>(query.size()) == dim_, ErrorKind::InvalidArgument, "kNN query has wrong dimension");
  k = std::min(k, count_);
  thread_local std::vector<HeapEntry> heap;
  heap.clear();
  if (k == 0) {
    out.clear();
    return;
  }
  thread_local std::vector<double> qbuf;
  qbuf.assign(query.data(), query.data() + query.size());
  if (nodes_.empty()) {
    heap.reserve(count_);
    for (std::size_t s = 0; s < count_; ++s) {
      heap.emplace_back(sq_dist(s, qbuf.data()), order_[s]);
    }
    std::partial_sort(heap.begin(), heap.begin() + static_cast<std::ptrdiff_t>(k), heap.end());
    heap.resize(k);
  } else {
    heap.reserve(k + 1);
    thread_local std::vector<double> offsets;
    offsets.assign(dim_, 0.0);
    search_knn(0, qbuf.data(), k, heap, offsets.data(), 0.0);
  }
  finish(heap, out);
}

std::vector<Neighbor> KdTree::knn(const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k) const {
  std::vector<Neighbor> out;
  knn_into(query, k, out);
  return out;
}

void KdTree::search_radius(std::size_t node, const double* q, double r2, std::vector<Neighbor>& out) const {
  const Node& n = nodes_[node];
  if (n.split_dim < 0) {
    for (std::size_t s = n.begin; s < n.end; ++s) {
      const double d2 = sq_dist(s, q);
      if (d2 <= r2) {
        out.push_back({order_[s], d2});
      }
    }
    return;
  }
  const double diff = q[n.split_dim] - n.split;
  if (diff < 0.0) {
    search_radius(n.left, q, r2, out);
    if (diff * diff <= r2) {
      search_radius(n.right, q, r2, out);
    }
  } else {
    search_radius(n.right, q, r2, out);
    if (diff * diff <= r2) {
      search_radius(n.left, q, r2, out);
    }
  }
}

void KdTree::radius_into(
    const Eigen::Ref<const Eigen::VectorXd>& query, double radius, std::vector<Neighbor>& out) const {
  require(static_cast<std::size_t>(query.size()) == dim_, ErrorKind::InvalidArgument,
      "radius query has wrong dimension");
  out.clear();
  thread_local std::vector<double> qbuf;
  qbuf.assign(query.data(), query.data() + query.size());
  const double r2 = radius * radius;
  if (nodes_.empty()) {
    for (std::size_t s = 0; s < count_; ++s) {
      const double d2 = sq_dist(s, qbuf.data());
      if (d2 <= r2) {
        out.push_back({order_[s], d2});
      }
    }
  } else if (count_ > 0) {
    search_radius(0, qbuf.data(), r2, out);
  }
  std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
  for (auto& n : out) {
    n.distance = std::sqrt(n.distance);
  }
}

std::vector<Neighbor> KdTree::radius(const Eigen::Ref<const Eigen::VectorXd>& query, double r) const {
  std::vector<Neighbor> out;
  radius_into(query, r, out);
  return out;
}

ScanIndex::ScanIndex(const Eigen::MatrixXd& points)
    : count_(static_cast<std::size_t>(points.rows())), dim_(static_cast<std::size_t>(points.cols())) {
  require(points.allFinite(), ErrorKind::InvalidArgument, "kNN points contain NaN or Inf");
  rows_.resize(count_ * dim_);
  for (std::size_t i = 0; i < count_; ++i) {
    for (std::size_t j = 0; j < dim_; ++j) {
      rows_[i * dim_ + j] = points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  center_ = count_ > 0 ? Eigen::VectorXd(points.colwise().mean().transpose())
                       : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
  points_ = (points.rowwise() - center_.transpose()).cast<float>();
  sq_norms_ = points_.rowwise().squaredNorm();
  max_sq_norm_ = count_ > 0 ? static_cast<double>(sq_norms_.maxCoeff()) : 0.0;
}

Eigen::Map<const Eigen::VectorXd> ScanIndex::point(std::size_t i) const {
  return {&rows_[i * dim_], static_cast<Eigen::Index>(dim_)};
}

namespace {

std::size_t count_at_most(const float* v, std::size_t n, float t) {
  std::size_t c = 0;
  std::size_t i = 0;
#if defined(__AVX512F__)
  const __m512 tv = _mm512_set1_ps(t);
  for (; i + 16 <= n; i += 16) {
    c += static_cast<std::size_t>(__builtin_popcount(_mm512_cmp_ps_mask(_mm512_loadu_ps(v + i), tv, _CMP_LE_OQ)));
  }
#endif
  for (; i < n; ++i) {
    c += v[i] <= t ? 1 : 0;
  }
  return c;
}

// Indices of the values <= t, in ascending order. `out` needs room for n.
std::size_t indices_at_most(const float* v, std::size_t n, float t, std::uint32_t* out) {
  std::size_t c = 0;
  std::size_t i = 0;
#if defined(__AVX512F__)
  const __m512 tv = _mm512_set1_ps(t);
  const __m512i step = _mm512_set1_epi32(16);
  __m512i idx = _mm512_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15);
  for (; i + 16 <= n; i += 16) {
    const __mmask16 m = _mm512_cmp_ps_mask(_mm512_loadu_ps(v + i), tv, _CMP_LE_OQ);
    if (m != 0) {
      _mm512_mask_compressstoreu_epi32(out + c, m, idx);
      c += static_cast<std::size_t>(__builtin_popcount(m));
    }
    idx = _mm512_add_epi32(idx, step);
  }
#endif
  for (; i < n; ++i) {
    out[c] = static_cast<std::uint32_t>(i);
    c += v[i] <= t ? 1 : 0;
  }
  return c;
}

// Bound on |estimate - exact| for squared distances: coordinate rounding to
// float plus the expanded single-precision evaluation, with ample headroom.
double estimate_error(std::size_t dim, double max_sq_norm, double query_sq) {
  return 8.0 * static_cast<double>(dim + 8) * static_cast<double>(std::numeric_limits<float>::epsilon()) *
         (max_sq_norm + query_sq + 1.0);
}

} // namespace

void ScanIndex::select(const float* estimate, const double* query, double error, std::size_t k,
    std::vector<Neighbor>& out) const {
  const std::size_t n = count_;
  const std::size_t d = dim_;
  const auto exact = [&](std::size_t i) {
    const double* p = &rows_[i * d];
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = p[j] - query[j];
      acc += diff * diff;
    }
    return acc;
  };
  thread_local std::vector<HeapEntry> picked;
  picked.clear();
  if (k >= n) {
    for (std::size_t i = 0; i < n; ++i) {
      picked.emplace_back(exact(i), i);
    }
    finish(picked, out);
    return;
  }
  // Bisect for a threshold with at least k (and not many more) estimates
  // below it; every true neighbor then lies within 2 * error above it.
  const Eigen::Map<const Eigen::VectorXf> values(estimate, static_cast<Eigen::Index>(n));
  float lo = values.minCoeff();
  float hi = values.maxCoeff();
  for (int it = 0; it < 64; ++it) {
    const float mid = lo + 0.5f * (hi - lo);
    if (!(mid > lo && mid < hi)) {
      break;
    }
    const std::size_t below = count_at_most(estimate, n, mid);
    if (below >= k) {
      hi = mid;
      if (below <= 3 * k) {
        break;
      }
    } else {
      lo = mid;
    }
  }
  const float limit = std::nextafter(
      static_cast<float>(static_cast<double>(hi) + 2.0 * error), std::numeric_limits<float>::infinity());
  thread_local std::vector<std::uint32_t> survivors;
  survivors.resize(n);
  const std::size_t count = indices_at_most(estimate, n, limit, survivors.data());
  for (std::size_t s = 0; s < count; ++s) {
    picked.emplace_back(exact(survivors[s]), survivors[s]);
  }
  std::partial_sort(picked.begin(), picked.begin() + static_cast<std::ptrdiff_t>(k), picked.end());
  picked.resize(k);
  finish(picked, out);
}

void ScanIndex::knn_into(
    const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k, std::vector<Neighbor>& out) const {
  require(static_cast<std::size_t>(query.size()) == dim_, ErrorKind::InvalidArgument, "kNN query has wrong dimension");
  k = std::min(k, count_);
  if (k == 0) {
    out.clear();
    return;
  }
  thread_local Eigen::VectorXf q;
  thread_local Eigen::VectorXf estimate;
  q = (query - center_).cast<float>();
  const double q_sq = (query - center_).squaredNorm();
  estimate.noalias() = points_ * q;
  estimate = (sq_norms_.array() - 2.0f * estimate.array() + q.squaredNorm()).matrix();
  thread_local std::vector<double> exact_query;
  exact_query.assign(query.data(), query.data() + query.size());
  select(estimate.data(), exact_query.data(), estimate_error(dim_, max_sq_norm_, q_sq), k, out);
}

std::vector<Neighbor> ScanIndex::knn(const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k) const {
  std::vector<Neighbor> out;
  knn_into(query, k, out);
  return out;
}

void ScanIndex::knn_batch(const Eigen::Ref<const Eigen::MatrixXd>& queries, std::size_t k,
    std::vector<std::vector<Neighbor>>& out) const {
  require(static_cast<std::size_t>(queries.rows()) == dim_, ErrorKind::InvalidArgument,
      "kNN queries have wrong dimension");
  const auto count = static_cast<std::size_t>(queries.cols());
  out.resize(count);
  k = std::min(k, count_);
  if (k == 0) {
    for (auto& o : out) {
      o.clear();
    }
    return;
  }
  thread_local Eigen::MatrixXd exact;
  thread_local Eigen::MatrixXf q;
  thread_local Eigen::MatrixXf estimate;
  exact = queries;
  q = (exact.colwise() - center_).cast<float>();
  estimate.noalias() = points_ * q;
  for (std::size_t c = 0; c < count; ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    const double q_sq = (exact.col(col) - center_).squaredNorm();
    estimate.col(col) = (sq_norms_.array() - 2.0f * estimate.col(col).array() + q.col(col).squaredNorm()).matrix();
    select(estimate.col(col).data(), exact.col(col).data(), estimate_error(dim_, max_sq_norm_, q_sq), k, out[c]);
  }
}

std::vector<Neighbor> brute_force_knn(
    const Eigen::MatrixXd& points, const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t k) {
  std::vector<HeapEntry> all;
  all.reserve(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    all.emplace_back((points.row(i).transpose() - query).squaredNorm(), static_cast<std::size_t>(i));
  }
  std::sort(all.begin(), all.end());
  all.resize(std::min(k, all.size()));
  std::vector<Neighbor> out;
  finish(all, out);
  return out;
}

} // namespace corrproj
