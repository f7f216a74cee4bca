#include "cproj/recording.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cproj/error.hpp"
#include "cproj/io.hpp"

namespace corrproj {

Eigen::MatrixXd Recording::as_matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(frames.size()), static_cast<Eigen::Index>(dim()));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = frames[i].pose.transpose();
  }
  return m;
}

std::string Recording::digest() const {
  std::ostringstream ss;
  write_recording(ss, *this);
  return io::digest(ss.str());
}

Recording parse_recording(std::istream& in) {
  Recording rec;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw_error(ErrorKind::Format, "recording line " + std::to_string(lineno) + ": " + e.what());
    }
    if (obj.contains("format")) {
      require(rec.frames.empty(), ErrorKind::Format, "recording header must be the first line");
      io::expect_format(obj, "cproj.recording", 1);
      rec.schema = obj.value("schema", std::string{});
      dim = obj.value("dim", std::size_t{0});
      continue;
    }
    try {
      Frame f;
      f.t = obj.at("t").get<double>();
      const auto v = obj.at("pose").get<std::vector<double>>();
      f.pose = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      require(!v.empty() && f.pose.allFinite() && std::isfinite(f.t), ErrorKind::Format,
          "recording line " + std::to_string(lineno) + ": empty or non-finite frame");
      if (dim == 0) {
        dim = v.size();
      }
      require(v.size() == dim, ErrorKind::Format,
          "recording line " + std::to_string(lineno) + ": pose has " + std::to_string(v.size()) +
              " values, expected " + std::to_string(dim));
      require(rec.frames.empty() || f.t > rec.frames.back().t, ErrorKind::Format,
          "recording line " + std::to_string(lineno) + ": timestamps must increase");
      rec.frames.push_back(std::move(f));
    } catch (const nlohmann::json::exception& e) {
      throw_error(ErrorKind::Format, "recording line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rec;
}

void write_recording(std::ostream& out, const Recording& recording) {
  nlohmann::json header = {{"format", "cproj.recording"}, {"version", 1}, {"dim", recording.dim()}};
  if (!recording.schema.empty()) {
    header["schema"] = recording.schema;
  }
  out << header.dump() << '\n';
  for (const auto& f : recording.frames) {
    nlohmann::json line = {{"t", f.t}, {"pose", std::vector<double>(f.pose.begin(), f.pose.end())}};
    out << line.dump() << '\n';
  }
}

Recording read_recording(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open " + path.string());
  return parse_recording(in);
}

void save_recording(const std::filesystem::path& path, const Recording& recording) {
  std::ostringstream ss;
  write_recording(ss, recording);
  io::write_atomic(path, ss.str());
}

SyntheticMotion synthesize_recording(const SkeletonSchema& schema, const SynthesisOptions& options) {
  require(options.duration_s > 0.0 && options.fps > 0.0, ErrorKind::InvalidArgument,
      "synthesis duration and fps must be positive");
  require(options.joint_speed > 0.0, ErrorKind::InvalidArgument, "joint speed must be positive");
  const auto n = static_cast<Eigen::Index>(schema.config_dim());
  const Eigen::VectorXd lo = schema.lower_limits();
  const Eigen::VectorXd hi = schema.upper_limits();
  const auto& poses = schema.benchmark_poses();

  std::mt19937_64 gen(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto perturbed = [&](const Eigen::VectorXd& center, double sigma) {
    Eigen::VectorXd k(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      k(j) = std::clamp(center(j) + sigma * normal(gen), lo(j), hi(j));
    }
    return k;
  };
  const auto next_keyframe = [&]() -> Eigen::VectorXd {
    const double u = unit(gen);
    if (u < options.pose_affinity) {
      const auto& p = poses[static_cast<std::size_t>(unit(gen) * static_cast<double>(poses.size())) % poses.size()];
      return perturbed(p.angles, options.keyframe_noise);
    }
    if (u < options.pose_affinity + options.rest_affinity) {
      return perturbed(Eigen::VectorXd::Zero(n), 0.5 * options.keyframe_noise);
    }
    Eigen::VectorXd k(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double mid = 0.5 * (lo(j) + hi(j));
      const double half = 0.4 * (hi(j) - lo(j));
      k(j) = mid + half * (2.0 * unit(gen) - 1.0);
    }
    return k;
  };

  SyntheticMotion out;
  out.recording.schema = schema.name();
  const double dt = 1.0 / options.fps;
  const auto total = static_cast<std::size_t>(std::floor(options.duration_s * options.fps));

  Eigen::VectorXd from = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd to = from;
  double seg_start = 0.0;
  double seg_hold = 0.0;
  double seg_move = 0.0;
  for (std::size_t i = 0; i < total; ++i) {
    const double t = static_cast<double>(i) * dt;
    while (t >= seg_start + seg_hold + seg_move) {
      seg_start += seg_hold + seg_move;
      from = to;
      to = next_keyframe();
      seg_hold = options.max_hold_s * unit(gen);
      seg_move = std::max(0.5, (to - from).cwiseAbs().maxCoeff() / options.joint_speed);
    }
    const double tau = std::clamp((t - seg_start - seg_hold) / seg_move, 0.0, 1.0);
    const double s = tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
    HumanoidConfig cfg{from + s * (to - from)};
    Eigen::VectorXd pose = forward_kinematics(cfg, schema).data;
    if (options.sensor_noise > 0.0) {
      for (Eigen::Index c = 0; c < pose.size(); ++c) {
        pose(c) += options.sensor_noise * normal(gen);
      }
      pose = normalize_bones(pose).data;
    }
    out.recording.frames.push_back({t, std::move(pose)});
    out.configs.push_back(std::move(cfg));
  }
  return out;
}

} // namespace corrproj
