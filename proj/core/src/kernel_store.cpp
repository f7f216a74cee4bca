#include "cproj/kernel_store.hpp"

#include <algorithm>

#include "cproj/error.hpp"
#include "cproj/io.hpp"

namespace corrproj {

namespace {

Eigen::MatrixXd gather(const Eigen::MatrixXd& rows, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), rows.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = rows.row(static_cast<Eigen::Index>(idx[r]));
  }
  return out;
}

} // namespace

KernelStore::KernelStore(LandmarkSet landmarks, std::size_t k, double lambda, std::uint64_t seed)
    : landmarks_(std::move(landmarks)), k_(k), lambda_(lambda), seed_(seed) {
  const std::size_t n = landmarks_.size();
  require(n >= 1, ErrorKind::InvalidArgument, "kernel store needs at least one landmark");
  require(k >= 1 && k <= n, ErrorKind::InvalidArgument,
      "kernel neighbor count k = " + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
  human_index_ = ScanIndex(landmarks_.human_matrix());
  humanoid_index_ = ScanIndex(landmarks_.humanoid_matrix());
  forward_support_.reserve(n);
  backward_support_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    forward_support_.push_back(support(human_index_, i));
    backward_support_.push_back(support(humanoid_index_, i));
  }
}

std::vector<std::size_t> KernelStore::support(const ScanIndex& index, std::size_t i) const {
  const auto nbrs = index.knn(index.point(i), k_);
  std::vector<std::size_t> ids;
  ids.reserve(nbrs.size());
  for (const auto& nb : nbrs) {
    ids.push_back(nb.index);
  }
  // Exact duplicates with a lower index can crowd out the landmark itself.
  if (std::find(ids.begin(), ids.end(), i) == ids.end()) {
    ids.back() = i;
  }
  return ids;
}

KernelStore KernelStore::build(LandmarkSet landmarks, std::size_t k, double lambda, std::uint64_t seed) {
  KernelStore store(std::move(landmarks), k, lambda, seed);
  const Eigen::MatrixXd human = store.landmarks_.human_matrix();
  const Eigen::MatrixXd humanoid = store.landmarks_.humanoid_matrix();
  const std::size_t n = store.landmarks_.size();
  store.forward_.reserve(n);
  store.backward_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t kernel_seed = seed ^ static_cast<std::uint64_t>(i);
    const auto& fs = store.forward_support_[i];
    store.forward_.push_back(train_elm(gather(human, fs), gather(humanoid, fs), k, lambda, kernel_seed));
    const auto& bs = store.backward_support_[i];
    store.backward_.push_back(train_elm(gather(humanoid, bs), gather(human, bs), k, lambda, kernel_seed));
  }
  return store;
}

std::vector<Neighbor> KernelStore::nearest_human(const Eigen::Ref<const Eigen::VectorXd>& h, std::size_t count) const {
  if (count > size()) {
    throw_error(ErrorKind::InvalidArgument,
        "requested " + std::to_string(count) + " neighbors from " + std::to_string(size()) + " landmarks");
  }
  return human_index_.knn(h, count);
}

std::vector<Neighbor> KernelStore::nearest_humanoid(
    const Eigen::Ref<const Eigen::VectorXd>& r, std::size_t count) const {
  if (count > size()) {
    throw_error(ErrorKind::InvalidArgument,
        "requested " + std::to_string(count) + " neighbors from " + std::to_string(size()) + " landmarks");
  }
  return humanoid_index_.knn(r, count);
}

bool KernelStore::operator==(const KernelStore& other) const {
  return k_ == other.k_ && lambda_ == other.lambda_ && seed_ == other.seed_ && forward_ == other.forward_ &&
         backward_ == other.backward_ && forward_support_ == other.forward_support_ &&
         backward_support_ == other.backward_support_;
}

nlohmann::json to_json(const KernelStore& store) {
  nlohmann::json fwd = nlohmann::json::array();
  nlohmann::json bwd = nlohmann::json::array();
  for (std::size_t i = 0; i < store.size(); ++i) {
    fwd.push_back(to_json(store.forward(i)));
    bwd.push_back(to_json(store.backward(i)));
  }
  return {{"format", "cproj.store"}, {"version", 1}, {"k", store.k()}, {"lambda", store.lambda()},
      {"seed", store.seed()}, {"landmarks", to_json(store.landmarks())}, {"forward", std::move(fwd)},
      {"backward", std::move(bwd)}};
}

KernelStore store_from_json(const nlohmann::json& doc) {
  io::expect_format(doc, "cproj.store", 1);
  try {
    KernelStore store(landmarks_from_json(doc.at("landmarks")), doc.at("k").get<std::size_t>(),
        doc.at("lambda").get<double>(), doc.at("seed").get<std::uint64_t>());
    const auto& fwd = doc.at("forward");
    const auto& bwd = doc.at("backward");
    const std::size_t n = store.landmarks_.size();
    require(fwd.size() == n && bwd.size() == n, ErrorKind::Format, "store kernel count does not match landmarks");
    const std::size_t m = store.schema().human_dim();
    const std::size_t dof = store.schema().config_dim();
    for (std::size_t i = 0; i < n; ++i) {
      ElmKernel f = elm_from_json(fwd[i]);
      ElmKernel b = elm_from_json(bwd[i]);
      const std::uint64_t expected = store.seed_ ^ static_cast<std::uint64_t>(i);
      require(f.input_dim() == m && f.output_dim() == dof && b.input_dim() == dof && b.output_dim() == m &&
                  f.hidden_count() == store.k_ && b.hidden_count() == store.k_ && f.seed() == expected &&
                  b.seed() == expected,
          ErrorKind::Format, "store kernel " + std::to_string(i) + " is inconsistent with the store header");
      store.forward_.push_back(std::move(f));
      store.backward_.push_back(std::move(b));
    }
    return store;
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorKind::Format, std::string("malformed kernel store: ") + e.what());
  }
}

void save_store(const std::filesystem::path& path, const KernelStore& store) {
  io::write_json(path, to_json(store));
}

KernelStore load_store(const std::filesystem::path& path) {
  return store_from_json(io::read_json(path));
}

} // namespace corrproj
