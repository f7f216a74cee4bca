#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "cproj/elm.hpp"
#include "cproj/knn.hpp"
#include "cproj/landmarks.hpp"

namespace corrproj {

/// Forward (human -> humanoid) and backward (humanoid -> human) ELM kernels,
/// one of each per landmark, plus exact kNN indexes over both sides.
///
/// forward(i) is trained on the k nearest human-space landmarks of landmark i
/// (itself included); backward(i) on the k nearest humanoid-space landmarks.
/// Every kernel has k hidden units and seed (store seed XOR i).
class KernelStore {
 public:
  static KernelStore build(LandmarkSet landmarks, std::size_t k, double lambda, std::uint64_t seed);

  const LandmarkSet& landmarks() const noexcept {
    return landmarks_;
  }
  const SkeletonSchema& schema() const noexcept {
    return landmarks_.schema;
  }
  std::size_t size() const noexcept {
    return forward_.size();
  }
  std::size_t k() const noexcept {
    return k_;
  }
  double lambda() const noexcept {
    return lambda_;
  }
  std::uint64_t seed() const noexcept {
    return seed_;
  }

  const ElmKernel& forward(std::size_t i) const {
    return forward_[i];
  }
  const ElmKernel& backward(std::size_t i) const {
    return backward_[i];
  }
  /// Landmarks the forward / backward kernel of landmark i was trained on.
  const std::vector<std::size_t>& forward_support(std::size_t i) const {
    return forward_support_[i];
  }
  const std::vector<std::size_t>& backward_support(std::size_t i) const {
    return backward_support_[i];
  }

  const Eigen::VectorXd& human(std::size_t i) const {
    return landmarks_.pairs[i].human.data;
  }
  const Eigen::VectorXd& humanoid(std::size_t i) const {
    return landmarks_.pairs[i].humanoid.angles;
  }

  /// The `count` nearest human landmarks, ascending distance, ties by index.
  std::vector<Neighbor> nearest_human(const Eigen::Ref<const Eigen::VectorXd>& h, std::size_t count) const;
  /// The `count` nearest humanoid landmarks, ascending distance, ties by index.
  std::vector<Neighbor> nearest_humanoid(const Eigen::Ref<const Eigen::VectorXd>& r, std::size_t count) const;

  const ScanIndex& human_index() const noexcept {
    return human_index_;
  }
  const ScanIndex& humanoid_index() const noexcept {
    return humanoid_index_;
  }

  bool operator==(const KernelStore& other) const;

 private:
  friend KernelStore store_from_json(const nlohmann::json& doc);

  KernelStore(LandmarkSet landmarks, std::size_t k, double lambda, std::uint64_t seed);

  std::vector<std::size_t> support(const ScanIndex& index, std::size_t i) const;

  LandmarkSet landmarks_;
  std::size_t k_ = 0;
  double lambda_ = 0.0;
  std::uint64_t seed_ = 0;
  ScanIndex human_index_;
  ScanIndex humanoid_index_;
  std::vector<ElmKernel> forward_;
  std::vector<ElmKernel> backward_;
  std::vector<std::vector<std::size_t>> forward_support_;
  std::vector<std::vector<std::size_t>> backward_support_;
};

inline KernelStore build_store(LandmarkSet landmarks, std::size_t k, double lambda, std::uint64_t seed) {
  return KernelStore::build(std::move(landmarks), k, lambda, seed);
}

nlohmann::json to_json(const KernelStore& store);
KernelStore store_from_json(const nlohmann::json& doc);
void save_store(const std::filesystem::path& path, const KernelStore& store);
KernelStore load_store(const std::filesystem::path& path);

} // namespace corrproj
