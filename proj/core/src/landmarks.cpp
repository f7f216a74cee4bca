#include "cproj/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cproj/error.hpp"
#include "cproj/io.hpp"
#include "cproj/knn.hpp"

namespace corrproj {

Eigen::MatrixXd LandmarkSet::human_matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(schema.human_dim()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = pairs[i].human.data.transpose();
  }
  return m;
}

Eigen::MatrixXd LandmarkSet::humanoid_matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pairs.size()), static_cast<Eigen::Index>(schema.config_dim()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = pairs[i].humanoid.angles.transpose();
  }
  return m;
}

double default_bandwidth(const Eigen::MatrixXd& points) {
  require(points.rows() >= 2, ErrorKind::InvalidArgument, "default bandwidth needs at least two points");
  const Eigen::Index n = points.rows();
  const Eigen::Index take = std::min<Eigen::Index>(n, 1000);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(take));
  for (Eigen::Index i = 0; i < take; ++i) {
    rows[static_cast<std::size_t>(i)] = i * n / take;
  }
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(take * (take - 1) / 2));
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      dists.push_back((points.row(rows[a]) - points.row(rows[b])).norm());
    }
  }
  const auto k = static_cast<std::ptrdiff_t>(0.2 * static_cast<double>(dists.size() - 1));
  std::nth_element(dists.begin(), dists.begin() + k, dists.end());
  const double bw = dists[static_cast<std::size_t>(k)];
  return bw > 0.0 ? bw : 1e-3;
}

LandmarkSet build_landmarks(const Recording& recording, const SkeletonSchema& schema, const LandmarkOptions& options,
    const CorrespondenceFn& correspondence) {
  require(!recording.frames.empty(), ErrorKind::InvalidArgument, "recording is empty");
  require(recording.dim() == schema.human_dim(), ErrorKind::InvalidArgument,
      "recording dimension " + std::to_string(recording.dim()) + " does not match schema " + schema.name() + " (" +
          std::to_string(schema.human_dim()) + ")");

  const Eigen::MatrixXd points = recording.as_matrix();
  MeanShiftOptions ms;
  ms.bandwidth = options.bandwidth > 0.0 ? options.bandwidth
                                         : (points.rows() >= 2 ? default_bandwidth(points) : 1.0);
  ms.max_iter = options.max_iter;
  ms.tol = options.tol;
  ms.support = options.support;
  const MeanShiftResult modes = mean_shift(points, ms);

  LandmarkSet set{schema, {}, ms.bandwidth, recording.digest(), 0};
  const double merge = 0.5 * ms.bandwidth;
  for (Eigen::Index r = 0; r < modes.modes.rows(); ++r) {
    HumanPose human = normalize_bones(modes.modes.row(r).transpose());
    const bool collapsed = std::any_of(set.pairs.begin(), set.pairs.end(),
        [&](const CorrespondencePair& p) { return (p.human.data - human.data).norm() < merge; });
    if (collapsed) {
      ++set.dropped;
      continue;
    }
    try {
      HumanoidConfig cfg = correspondence ? correspondence(human) : inverse_kinematics(human, schema);
      set.pairs.push_back({std::move(human), schema.clamp(std::move(cfg))});
    } catch (const DegeneratePoseError&) {
      ++set.dropped;
    }
  }
  require(!set.pairs.empty(), ErrorKind::NumericFailure, "every landmark was dropped during correspondence");
  return set;
}

LandmarkSet landmarks_from_pairs(const SkeletonSchema& schema, std::vector<CorrespondencePair> pairs) {
  require(!pairs.empty(), ErrorKind::InvalidArgument, "landmark set must not be empty");
  for (const auto& p : pairs) {
    require(p.human.dim() == schema.human_dim() && p.humanoid.dim() == schema.config_dim(),
        ErrorKind::InvalidArgument, "landmark pair dimensions do not match schema " + schema.name());
  }
  return LandmarkSet{schema, std::move(pairs), 0.0, {}, 0};
}

namespace {

// Typical distance from a frame to its (n / target)-th nearest neighbor:
// roughly the scale at which basins hold n / target frames each.
double initial_bandwidth(const Eigen::MatrixXd& points, std::size_t target) {
  const auto n = static_cast<std::size_t>(points.rows());
  const std::size_t per = std::clamp<std::size_t>(n / std::max<std::size_t>(target, 1), 1, n - 1);
  const KdTree tree(points);
  const std::size_t probes = std::min<std::size_t>(n, 200);
  std::vector<double> dists;
  std::vector<Neighbor> nb;
  for (std::size_t i = 0; i < probes; ++i) {
    tree.knn_into(points.row(static_cast<Eigen::Index>(i * n / probes)).transpose(), per + 1, nb);
    dists.push_back(nb.back().distance);
  }
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2), dists.end());
  const double d = dists[dists.size() / 2];
  return d > 0.0 ? d : default_bandwidth(points);
}

} // namespace

BandwidthSearch bandwidth_for_count(const Eigen::MatrixXd& points, std::size_t target, const LandmarkOptions& options,
    double rel_tol, std::size_t max_runs) {
  require(target >= 1, ErrorKind::InvalidArgument, "target landmark count must be >= 1");
  require(points.rows() >= 2, ErrorKind::InvalidArgument, "bandwidth search needs at least two points");
  require(max_runs >= 1, ErrorKind::InvalidArgument, "bandwidth search needs at least one run");
  MeanShiftOptions ms;
  ms.max_iter = options.max_iter;
  ms.tol = options.tol;
  ms.support = options.support;

  // Mode count falls with bandwidth roughly as a power law, so steps are
  // taken in log-log space: capped multiplicative moves until the target is
  // bracketed, then secant steps kept inside the bracket.
  constexpr double kMaxFactor = 2.0;
  const double log_target = std::log(static_cast<double>(target));
  double log_bw = std::log(initial_bandwidth(points, target));
  double lo = -std::numeric_limits<double>::infinity(); // yields too many modes
  double hi = std::numeric_limits<double>::infinity(); // yields too few
  double lo_count = 0.0;
  double hi_count = 0.0;
  BandwidthSearch best;
  std::size_t best_err = std::numeric_limits<std::size_t>::max();
  for (std::size_t run = 0; run < max_runs; ++run) {
    ms.bandwidth = std::exp(log_bw);
    const std::size_t count = static_cast<std::size_t>(mean_shift(points, ms).modes.rows());
    const std::size_t err = count > target ? count - target : target - count;
    if (err < best_err) {
      best_err = err;
      best = {ms.bandwidth, count, 0};
    }
    best.runs = run + 1;
    if (static_cast<double>(err) <= rel_tol * static_cast<double>(target)) {
      break;
    }
    const double log_count = std::log(static_cast<double>(count));
    if (count > target) {
      lo = log_bw;
      lo_count = log_count;
    } else {
      hi = log_bw;
      hi_count = log_count;
    }
    if (std::isfinite(lo) && std::isfinite(hi)) {
      double t = lo_count > hi_count ? (lo_count - log_target) / (lo_count - hi_count) : 0.5;
      t = std::clamp(t, 0.1, 0.9);
      log_bw = lo + t * (hi - lo);
    } else {
      // Assume count ~ bandwidth^-3 for the first move.
      const double step = std::clamp((log_count - log_target) / 3.0, -std::log(kMaxFactor), std::log(kMaxFactor));
      log_bw += step;
    }
  }
  return best;
}

nlohmann::json to_json(const LandmarkSet& set) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : set.pairs) {
    pairs.push_back({{"h", std::vector<double>(p.human.data.begin(), p.human.data.end())},
        {"r", std::vector<double>(p.humanoid.angles.begin(), p.humanoid.angles.end())}});
  }
  return {{"format", "cproj.landmarks"}, {"version", 1}, {"schema", to_json(set.schema)},
      {"schema_digest", set.schema.digest()}, {"bandwidth", set.bandwidth},
      {"recording_digest", set.recording_digest}, {"n", set.pairs.size()}, {"dropped", set.dropped},
      {"pairs", std::move(pairs)}};
}

LandmarkSet landmarks_from_json(const nlohmann::json& doc) {
  io::expect_format(doc, "cproj.landmarks", 1);
  try {
    SkeletonSchema schema = schema_from_json(doc.at("schema"));
    require(schema.digest() == doc.at("schema_digest").get<std::string>(), ErrorKind::Format,
        "landmark schema digest mismatch");
    std::vector<CorrespondencePair> pairs;
    for (const auto& p : doc.at("pairs")) {
      const auto h = p.at("h").get<std::vector<double>>();
      const auto r = p.at("r").get<std::vector<double>>();
      pairs.push_back({HumanPose{Eigen::Map<const Eigen::VectorXd>(h.data(), static_cast<Eigen::Index>(h.size()))},
          HumanoidConfig{Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()))}});
    }
    require(pairs.size() == doc.at("n").get<std::size_t>(), ErrorKind::Format, "landmark count mismatch");
    LandmarkSet set = landmarks_from_pairs(schema, std::move(pairs));
    set.bandwidth = doc.at("bandwidth").get<double>();
    set.recording_digest = doc.at("recording_digest").get<std::string>();
    set.dropped = doc.at("dropped").get<std::size_t>();
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw_error(ErrorKind::Format, std::string("malformed landmark set: ") + e.what());
  }
}

void save_landmarks(const std::filesystem::path& path, const LandmarkSet& set) {
  io::write_json(path, to_json(set));
}

LandmarkSet load_landmarks(const std::filesystem::path& path) {
  return landmarks_from_json(io::read_json(path));
}

} // namespace corrproj
