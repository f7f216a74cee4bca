#include "cproj/elm.hpp"

#include <cmath>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "cproj/error.hpp"
#include "cproj/io.hpp"

namespace corrproj {

namespace {

constexpr int kMaxStackHidden = 64;

// mt19937_64 output is fully specified by the standard; std distributions
// are not, so the uniform mapping is done by hand to keep persisted kernels
// portable.
double uniform_pm1(std::mt19937_64& gen) {
  const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
  return 2.0 * u - 1.0;
}

} // namespace

void generate_hidden_layer(std::uint64_t seed, std::size_t hidden_count, std::size_t input_dim,
    Eigen::MatrixXd& weights, Eigen::VectorXd& biases) {
  std::mt19937_64 gen(seed);
  weights.resize(static_cast<Eigen::Index>(hidden_count), static_cast<Eigen::Index>(input_dim));
  biases.resize(static_cast<Eigen::Index>(hidden_count));
  for (Eigen::Index j = 0; j < weights.rows(); ++j) {
    for (Eigen::Index i = 0; i < weights.cols(); ++i) {
      weights(j, i) = uniform_pm1(gen);
    }
  }
  for (Eigen::Index j = 0; j < biases.size(); ++j) {
    biases(j) = uniform_pm1(gen);
  }
}

ElmKernel ElmKernel::from_parts(std::size_t input_dim, std::size_t output_dim, std::size_t hidden_count,
    double regularization, std::uint64_t seed, Eigen::MatrixXd output_weights) {
  require(input_dim >= 1 && output_dim >= 1 && hidden_count >= 1, ErrorKind::InvalidArgument,
      "ELM dimensions must be positive");
  require(output_weights.rows() == static_cast<Eigen::Index>(hidden_count) &&
          output_weights.cols() == static_cast<Eigen::Index>(output_dim),
      ErrorKind::InvalidArgument, "ELM output weights must be hidden_count x output_dim");
  require(output_weights.allFinite(), ErrorKind::NumericFailure, "ELM output weights are not finite");
  require(regularization >= 0.0, ErrorKind::InvalidArgument, "ELM regularization must be >= 0");
  ElmKernel k;
  generate_hidden_layer(seed, hidden_count, input_dim, k.hidden_weights_, k.hidden_biases_);
  k.output_weights_ = std::move(output_weights);
  k.output_weights_t_ = k.output_weights_.transpose();
  k.regularization_ = regularization;
  k.seed_ = seed;
  return k;
}

Eigen::VectorXd ElmKernel::features(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd q = hidden_weights_ * x + hidden_biases_;
  return q.array().logistic().matrix();
}

Eigen::VectorXd ElmKernel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd out(output_weights_.cols());
  predict_into(x, out);
  return out;
}

void ElmKernel::predict_into(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::VectorXd> out) const {
  if (hidden_weights_.rows() <= kMaxStackHidden) {
    Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxStackHidden, 1> q(hidden_weights_.rows());
    q.noalias() = hidden_weights_ * x;
    q = (q + hidden_biases_).array().logistic().matrix();
    out.noalias() = output_weights_t_ * q;
  } else {
    out.noalias() = output_weights_t_ * features(x);
  }
}

bool ElmKernel::operator==(const ElmKernel& other) const {
  return seed_ == other.seed_ && regularization_ == other.regularization_ &&
         hidden_weights_.rows() == other.hidden_weights_.rows() &&
         hidden_weights_.cols() == other.hidden_weights_.cols() &&
         output_weights_.cols() == other.output_weights_.cols() && hidden_weights_ == other.hidden_weights_ &&
         hidden_biases_ == other.hidden_biases_ && output_weights_ == other.output_weights_;
}

ElmKernel train_elm(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, std::size_t hidden_count,
    double lambda, std::uint64_t seed) {
  require(inputs.rows() >= 1 && inputs.cols() >= 1, ErrorKind::InvalidArgument, "ELM training set is empty");
  require(targets.rows() == inputs.rows(), ErrorKind::InvalidArgument,
      "ELM inputs and targets differ in sample count");
  require(targets.cols() >= 1, ErrorKind::InvalidArgument, "ELM targets have zero dimension");
  require(hidden_count >= 1, ErrorKind::InvalidArgument, "ELM hidden_count must be >= 1");
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::InvalidArgument, "ELM lambda must be >= 0");
  require(inputs.allFinite() && targets.allFinite(), ErrorKind::InvalidArgument,
      "ELM training data contains NaN or Inf");

  Eigen::MatrixXd weights;
  Eigen::VectorXd biases;
  generate_hidden_layer(seed, hidden_count, static_cast<std::size_t>(inputs.cols()), weights, biases);

  // H: one row of hidden activations per sample.
  Eigen::MatrixXd h = (inputs * weights.transpose()).rowwise() + biases.transpose();
  h = h.array().logistic().matrix();

  const Eigen::Index n = h.rows();
  Eigen::MatrixXd gram = h * h.transpose();
  gram.diagonal().array() += lambda;

  Eigen::MatrixXd solved;
  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
    if (qr.rank() < n) {
      throw_error(ErrorKind::NumericFailure,
          "ELM system is singular with lambda = 0; retrain with lambda > 0");
    }
    solved = qr.solve(targets);
  } else {
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() == Eigen::Success) {
      solved = llt.solve(targets);
    }
    if (solved.size() == 0 || !solved.allFinite()) {
      solved = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(gram).solve(targets);
    }
  }

  Eigen::MatrixXd output = h.transpose() * solved;
  require(output.allFinite(), ErrorKind::NumericFailure, "ELM output weights are not finite");
  return ElmKernel::from_parts(static_cast<std::size_t>(inputs.cols()), static_cast<std::size_t>(targets.cols()),
      hidden_count, lambda, seed, std::move(output));
}

Eigen::VectorXd predict(const ElmKernel& kernel, const Eigen::Ref<const Eigen::VectorXd>& x) {
  require(static_cast<std::size_t>(x.size()) == kernel.input_dim(), ErrorKind::InvalidArgument,
      "ELM input has dimension " + std::to_string(x.size()) + ", expected " + std::to_string(kernel.input_dim()));
  return kernel.predict(x);
}

nlohmann::json to_json(const ElmKernel& kernel) {
  nlohmann::json rows = nlohmann::json::array();
  const auto& w = kernel.output_weights();
  for (Eigen::Index j = 0; j < w.rows(); ++j) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      row.push_back(w(j, c));
    }
    rows.push_back(std::move(row));
  }
  return {
      {"format", "cproj.elm"},
      {"version", 1},
      {"input_dim", kernel.input_dim()},
      {"output_dim", kernel.output_dim()},
      {"hidden_count", kernel.hidden_count()},
      {"lambda", kernel.regularization()},
      {"seed", kernel.seed()},
      {"output_weights", std::move(rows)},
  };
}

ElmKernel elm_from_json(const nlohmann::json& doc) {
  io::expect_format(doc, "cproj.elm", 1);
  try {
    const auto in = doc.at("input_dim").get<std::size_t>();
    const auto out = doc.at("output_dim").get<std::size_t>();
    const auto hidden = doc.at("hidden_count").get<std::size_t>();
    const auto& rows = doc.at("output_weights");
    require(rows.is_array() && rows.size() == hidden, ErrorKind::Format, "ELM output_weights has wrong row count");
    Eigen::MatrixXd w(static_cast<Eigen::Index>(hidden), static_cast<Eigen::Index>(out));
    for (std::size_t j = 0; j < hidden; ++j) {
      const auto& row = rows[j];
      require(row.is_array() && row.size() == out, ErrorKind::Format, "ELM output_weights row has wrong length");
      for (std::size_t c = 0; c < out; ++c) {
        w(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = row[c].get<double>();
      }
    }
    return ElmKernel::from_parts(
        in, out, hidden, doc.at("lambda").get<double>(), doc.at("seed").get<std::uint64_t>(), std::move(w));
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorKind::Format, std::string("malformed ELM kernel: ") + e.what());
  }
}

} // namespace corrproj
