#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace corrproj {

inline constexpr double kDefaultElmRegularization = 1e-6;

/// Single-hidden-layer network with seeded random hidden units and a
/// closed-form ridge solution for the output layer.
///
/// The hidden layer is Q(x)_j = sigmoid(a_j . x + c_j) where every a_j and c_j
/// is drawn uniformly from [-1, 1] by a generator seeded with `seed()`. Only the
/// output weights carry learned state, so a kernel is fully described by its
/// dimensions, seed, regularization and output weights.
class ElmKernel {
 public:
  /// Rebuilds a kernel from its persisted parts; the hidden layer is
  /// regenerated from `seed`.
  static ElmKernel from_parts(std::size_t input_dim, std::size_t output_dim, std::size_t hidden_count,
      double regularization, std::uint64_t seed, Eigen::MatrixXd output_weights);

  std::size_t input_dim() const noexcept {
    return static_cast<std::size_t>(hidden_weights_.cols());
  }
  std::size_t output_dim() const noexcept {
    return static_cast<std::size_t>(output_weights_.cols());
  }
  std::size_t hidden_count() const noexcept {
    return static_cast<std::size_t>(hidden_weights_.rows());
  }
  double regularization() const noexcept {
    return regularization_;
  }
  std::uint64_t seed() const noexcept {
    return seed_;
  }

  /// hidden_count x input_dim.
  const Eigen::MatrixXd& hidden_weights() const noexcept {
    return hidden_weights_;
  }
  const Eigen::VectorXd& hidden_biases() const noexcept {
    return hidden_biases_;
  }
  /// hidden_count x output_dim.
  const Eigen::MatrixXd& output_weights() const noexcept {
    return output_weights_;
  }

  /// Hidden-layer feature vector Q(x).
  Eigen::VectorXd features(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  Eigen::VectorXd predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Allocation-free variant for hot loops; `out` must already have
  /// output_dim() entries.
  void predict_into(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out) const;

  bool operator==(const ElmKernel& other) const;

 private:
  ElmKernel() = default;

  Eigen::MatrixXd hidden_weights_;
  Eigen::VectorXd hidden_biases_;
  Eigen::MatrixXd output_weights_;
  Eigen::MatrixXd output_weights_t_; // transposed copy for prediction
  double regularization_ = 0.0;
  std::uint64_t seed_ = 0;
};

/// Fills the hidden layer deterministically from `seed`: row-major weights
/// first (unit by unit), then one bias per unit.
void generate_hidden_layer(std::uint64_t seed, std::size_t hidden_count, std::size_t input_dim,
    Eigen::MatrixXd& weights, Eigen::VectorXd& biases);

/// Trains a kernel on `inputs` (one sample per row) and `targets` (one row
/// per sample) with b = H^T (lambda I + H H^T)^-1 T.
///
/// Throws invalid-argument on shape errors and numeric-failure when the
/// system is singular with lambda == 0.
ElmKernel train_elm(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, std::size_t hidden_count,
    double lambda, std::uint64_t seed);

/// Same as kernel.predict(x) but validates the input dimension.
Eigen::VectorXd predict(const ElmKernel& kernel, const Eigen::Ref<const Eigen::VectorXd>& x);

nlohmann::json to_json(const ElmKernel& kernel);
ElmKernel elm_from_json(const nlohmann::json& doc);

} // namespace corrproj
