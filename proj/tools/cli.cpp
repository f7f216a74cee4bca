#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cproj/bench.hpp"
#include "cproj/error.hpp"
#include "cproj/io.hpp"
#include "cproj/kernel_store.hpp"
#include "cproj/kinematics.hpp"
#include "cproj/landmarks.hpp"
#include "cproj/metrics.hpp"
#include "cproj/projection.hpp"
#include "cproj/recording.hpp"
#include "cproj/smoothing.hpp"
#include "stream.hpp"

namespace fs = std::filesystem;

namespace corrproj::cli {

namespace {

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

struct EngineFlags {
  std::string store;
  std::size_t candidates = 10;
  std::size_t backward = 10;
  std::string mode = "relaxed";
};

struct SmoothFlags {
  double alpha = 0.75;
  double gamma = 0.3;
  double eta = 0.15;
  bool off = false;

  SmootherParams params() const {
    return {alpha, gamma, eta};
  }
};

void add_engine_flags(CLI::App* cmd, EngineFlags& f) {
  cmd->add_option("--store", f.store, "Kernel store file")->required()->check(CLI::ExistingFile);
  cmd->add_option("-L,--candidates", f.candidates, "Forward candidates per query")->check(CLI::PositiveNumber);
  cmd->add_option("-M,--backward", f.backward, "Backward neighbors per candidate")->check(CLI::PositiveNumber);
  cmd->add_option("--mode", f.mode, "relaxed or exact")->check(CLI::IsMember({"relaxed", "exact"}));
}

void add_smooth_flags(CLI::App* cmd, SmoothFlags& f) {
  cmd->add_option("--alpha", f.alpha, "Level gain")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--gamma", f.gamma, "Trend gain")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--eta", f.eta, "Deadband in radians (0 disables)")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--no-smooth", f.off, "Emit raw projections");
}

ProjectionEngine load_engine(const EngineFlags& f) {
  auto store = std::make_shared<const KernelStore>(load_store(f.store));
  ProjectionParams params;
  params.candidates = f.candidates;
  params.backward_neighbors = f.backward;
  params.mode = f.mode == "exact" ? ProjectionMode::Exact : ProjectionMode::Relaxed;
  return ProjectionEngine(std::move(store), params);
}

/// Fails before any work when an output cannot be created.
void check_output(const std::string& path) {
  require(!path.empty(), ErrorKind::InvalidArgument, "output path is empty");
  const fs::path parent = fs::path(path).parent_path();
  require(parent.empty() || fs::is_directory(parent), ErrorKind::Io,
      "output directory '" + parent.string() + "' does not exist");
  require(!fs::is_directory(path), ErrorKind::Io, "output '" + path + "' is a directory");
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

// --- ingest ---------------------------------------------------------------

struct IngestFlags {
  std::string input;
  bool synthetic = false;
  std::string schema = "desk";
  double duration = 300.0;
  double fps = 10.0;
  std::uint64_t seed = 1;
  double noise = 0.0;
  std::string out;
};

Recording read_csv_recording(const std::string& path, std::size_t dim) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "'");
  Recording rec;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    if (lineno == 1 && line.find_first_of("abcdefghijklmnopqrstuvwxyz_") != std::string::npos) {
      continue; // header row
    }
    Eigen::VectorXd v;
    try {
      v = parse_vector(line, dim + 1);
    } catch (const Error& e) {
      throw Error(ErrorKind::Format, path + " line " + std::to_string(lineno) + ": " + e.what());
    }
    rec.frames.push_back({v(0), v.tail(static_cast<Eigen::Index>(dim))});
  }
  return rec;
}

int cmd_ingest(const IngestFlags& f, Streams& io) {
  const SkeletonSchema schema = load_schema(f.schema);
  check_output(f.out);
  Recording rec;
  if (f.synthetic) {
    require(f.duration > 0.0 && f.fps > 0.0, ErrorKind::InvalidArgument, "duration and fps must be positive");
    SynthesisOptions opt;
    opt.duration_s = f.duration;
    opt.fps = f.fps;
    opt.seed = f.seed;
    opt.sensor_noise = f.noise;
    rec = synthesize_recording(schema, opt).recording;
  } else {
    const std::string ext = fs::path(f.input).extension().string();
    if (ext == ".csv") {
      rec = read_csv_recording(f.input, schema.human_dim());
    } else {
      rec = read_recording(f.input);
      require(rec.schema.empty() || rec.schema == schema.name(), ErrorKind::InvalidArgument,
          "recording schema '" + rec.schema + "' does not match '" + schema.name() + "'");
    }
  }
  require(!rec.frames.empty(), ErrorKind::InvalidArgument, "recording has no frames");
  rec.schema = schema.name();
  for (std::size_t i = 0; i < rec.frames.size(); ++i) {
    Frame& fr = rec.frames[i];
    require(fr.pose.size() == static_cast<Eigen::Index>(schema.human_dim()), ErrorKind::InvalidArgument,
        "frame " + std::to_string(i) + " has dimension " + std::to_string(fr.pose.size()) + ", schema expects " +
            std::to_string(schema.human_dim()));
    require(i == 0 || fr.t > rec.frames[i - 1].t, ErrorKind::InvalidArgument,
        "timestamps must increase strictly (frame " + std::to_string(i) + ")");
    fr.pose = normalize_bones(fr.pose).data;
  }
  save_recording(f.out, rec);
  io.out << "ingested " << rec.frames.size() << " frames (m=" << schema.human_dim() << ") -> " << f.out << '\n';
  return kExitOk;
}

// --- extract / build ------------------------------------------------------

struct ExtractFlags {
  std::string recording;
  std::string schema;
  double bandwidth = 0.0;
  std::size_t target = 0;
  double tolerance = 0.05;
  std::size_t max_iter = 500;
  std::string out;
};

int cmd_extract(const ExtractFlags& f, Streams& io) {
  check_output(f.out);
  const Recording rec = read_recording(f.recording);
  require(!rec.frames.empty(), ErrorKind::InvalidArgument, "recording has no frames");
  const std::string schema_name = !f.schema.empty() ? f.schema : (rec.schema.empty() ? "desk" : rec.schema);
  const SkeletonSchema schema = load_schema(schema_name);
  require(rec.dim() == schema.human_dim(), ErrorKind::InvalidArgument,
      "recording dimension " + std::to_string(rec.dim()) + " does not match schema '" + schema.name() + "'");

  LandmarkOptions opt;
  opt.max_iter = f.max_iter;
  opt.bandwidth = f.bandwidth;
  if (f.target > 0) {
    const auto found = bandwidth_for_count(rec.as_matrix(), f.target, opt, f.tolerance);
    opt.bandwidth = found.bandwidth;
    io.err << "bandwidth " << found.bandwidth << " after " << found.runs << " runs\n";
  }
  const LandmarkSet set = build_landmarks(rec, schema, opt);
  save_landmarks(f.out, set);
  io.out << set.size() << " landmarks at bandwidth " << set.bandwidth << " (" << set.dropped << " dropped) -> "
         << f.out << '\n';
  return kExitOk;
}

struct BuildFlags {
  std::string landmarks;
  std::size_t k = 16;
  double lambda = kDefaultElmRegularization;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_build(const BuildFlags& f, Streams& io) {
  check_output(f.out);
  LandmarkSet set = load_landmarks(f.landmarks);
  require(set.size() > 0, ErrorKind::InvalidArgument, "landmark set is empty");
  const std::size_t k = std::min(f.k, set.size());
  if (k < f.k) {
    io.err << "k reduced to " << k << " (landmark count)\n";
  }
  const KernelStore store = KernelStore::build(std::move(set), k, f.lambda, f.seed);
  save_store(f.out, store);
  io.out << "store: " << store.size() << " landmarks, k=" << store.k() << " -> " << f.out << '\n';
  return kExitOk;
}

// --- project / replay / stream --------------------------------------------

struct ProjectFlags {
  EngineFlags engine;
  std::string pose;
  std::string pose_file;
};

int cmd_project(const ProjectFlags& f, Streams& io) {
  const ProjectionEngine engine = load_engine(f.engine);
  const std::size_t dim = engine.store().schema().human_dim();
  std::vector<Eigen::VectorXd> poses;
  if (!f.pose.empty()) {
    poses.push_back(parse_vector(f.pose, dim));
  } else {
    std::ifstream in(f.pose_file);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + f.pose_file + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) {
        continue;
      }
      try {
        poses.push_back(parse_vector(line, dim));
      } catch (const Error& e) {
        throw Error(e.kind(), f.pose_file + " line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  for (const auto& p : poses) {
    io.out << format_vector(engine.project(normalize_bones(p)).r_star.angles) << '\n';
  }
  return kExitOk;
}

struct ReplayFlags {
  EngineFlags engine;
  SmoothFlags smooth;
  std::string recording;
  std::string configs;
  std::string metrics;
};

int cmd_replay(const ReplayFlags& f, Streams& io) {
  check_output(f.configs);
  check_output(f.metrics);
  const ProjectionEngine engine = load_engine(f.engine);
  const SkeletonSchema& schema = engine.store().schema();
  const Recording rec = read_recording(f.recording);
  require(!rec.frames.empty(), ErrorKind::InvalidArgument, "recording has no frames");
  require(rec.dim() == schema.human_dim(), ErrorKind::InvalidArgument,
      "recording dimension " + std::to_string(rec.dim()) + " does not match store schema '" + schema.name() + "'");

  Smoother smoother(f.smooth.params());
  nlohmann::json header = {{"format", "cproj.configs"}, {"version", 1}, {"schema", schema.name()},
      {"dim", schema.config_dim()}};
  std::string configs = header.dump() + '\n';
  std::string metrics = metrics_csv_header() + '\n';
  HumanoidConfig previous;
  double sum_max = 0.0, sum_avg = 0.0;
  for (std::size_t i = 0; i < rec.frames.size(); ++i) {
    const HumanPose pose = normalize_bones(rec.frames[i].pose);
    const HumanoidConfig raw = engine.project(pose).r_star;
    const HumanoidConfig out = f.smooth.off ? raw : smoother.step(raw);

    IkOptions ik;
    if (i > 0) {
      ik.previous = &previous;
    }
    HumanoidConfig truth = inverse_kinematics(pose, schema, ik);
    const DeviationReport dev = deviation(out, truth);
    previous = std::move(truth);

    sum_max += dev.m_max;
    sum_avg += dev.m_avg;
    nlohmann::json line = {{"t", rec.frames[i].t},
        {"config", std::vector<double>(out.angles.data(), out.angles.data() + out.angles.size())}};
    configs += line.dump() + '\n';
    metrics += metrics_csv_row(i, rec.frames[i].t, dev) + '\n';
  }
  io::write_atomic(f.configs, configs);
  io::write_atomic(f.metrics, metrics);
  const double n = static_cast<double>(rec.frames.size());
  io.out << "frames " << rec.frames.size() << ", mean M_max " << fixed(sum_max / n) << " deg, mean M_avg "
         << fixed(sum_avg / n) << " deg\n";
  return kExitOk;
}

struct StreamFlags {
  EngineFlags engine;
  SmoothFlags smooth;
  std::size_t queue = 64;
};

int cmd_stream(const StreamFlags& f, Streams& io) {
  const ProjectionEngine engine = load_engine(f.engine);
  StreamOptions opt;
  opt.smooth = !f.smooth.off;
  opt.smoothing = f.smooth.params();
  opt.queue_depth = f.queue;
  run_stream(engine, opt, io.in, io.out);
  return kExitOk;
}

// --- bench -----------------------------------------------------------------

struct BenchFlags {
  std::string store;
  bool sweep = false;
  std::string schema = "desk";
  std::vector<std::size_t> sizes{50, 250, 1000};
  double duration = 300.0;
  double fps = 10.0;
  std::size_t candidates = 10;
  std::size_t backward = 10;
  std::size_t frames = 120;
  std::size_t latency_queries = 100000;
  std::size_t k = 16;
  double delta = 0.0;
  std::uint64_t seed = 1;
  std::string report;
  std::string traces;
  bool quiet = false;
};

int cmd_bench(const BenchFlags& f, Streams& io) {
  EvaluationConfig cfg;
  cfg.sizes = f.sizes;
  cfg.candidates = f.candidates;
  cfg.backward_neighbors = f.backward;
  cfg.motion_frames = f.frames;
  cfg.latency_queries = f.latency_queries;
  cfg.k = f.k;
  cfg.seed = f.seed;
  if (f.delta > 0.0) {
    cfg.delta = f.delta;
  }
  cfg.synthesis.duration_s = f.duration;
  cfg.synthesis.fps = f.fps;
  cfg.synthesis.seed = f.seed;
  cfg.validate();
  if (!f.report.empty()) {
    check_output(f.report);
  }
  if (!f.traces.empty()) {
    require(fs::is_directory(f.traces), ErrorKind::Io, "traces directory '" + f.traces + "' does not exist");
  }

  ProgressFn progress;
  if (!f.quiet) {
    progress = [&io](std::string_view msg) { io.err << msg << '\n' << std::flush; };
  }
  BenchReport rep;
  if (f.sweep) {
    rep = run_protocol(load_schema(f.schema), cfg, progress);
  } else {
    rep = run_store_bench(std::make_shared<const KernelStore>(load_store(f.store)), cfg, progress);
  }

  if (!f.report.empty()) {
    io::write_json(f.report, to_json(rep));
  }
  if (!f.traces.empty()) {
    for (const auto& trace : rep.motions) {
      io::write_atomic(fs::path(f.traces) / ("motion_" + trace.pose + ".csv"), motion_csv(trace));
    }
  }
  for (const auto& row : rep.sweep) {
    io.out << "size " << row.target << ": " << row.landmarks << " landmarks, mean M_max " << fixed(row.mean_m_max)
           << ", mean M_avg " << fixed(row.mean_m_avg) << '\n';
  }
  for (const auto& l : rep.latency) {
    io.out << "latency L=" << l.candidates << " M=" << l.backward_neighbors << ": mean " << fixed(l.mean_ms, 4)
           << " ms, p99 " << fixed(l.p99_ms, 4) << " ms\n";
  }
  for (const auto& c : rep.criteria) {
    io.out << "criterion " << c.id << " " << c.name << ": " << (c.passed ? "PASS" : "FAIL") << " (" << c.detail
           << ")\n";
  }
  return rep.passed() ? kExitOk : kExitCriteria;
}

} // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  Streams io{in, out, err};
  CLI::App app{"Pose projection between a human descriptor and a humanoid"};
  app.name("cproj");
  app.require_subcommand(1);

  std::string schema_name = "desk";
  std::string schema_out;
  auto* schema_cmd = app.add_subcommand("schema", "Print a skeleton schema as JSON");
  schema_cmd->add_option("name", schema_name, "desk, nao or a schema file");
  schema_cmd->add_option("--out", schema_out, "Write to a file instead of stdout");

  IngestFlags ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate and normalize a recording");
  auto* input_opt = ingest_cmd->add_option("--input", ingest.input, "CSV (t,pose...) or JSONL recording")
                        ->check(CLI::ExistingFile);
  auto* synth_opt = ingest_cmd->add_flag("--synthetic", ingest.synthetic, "Synthesize a recording instead");
  input_opt->excludes(synth_opt);
  ingest_cmd->add_option("--schema", ingest.schema, "Schema name or file");
  ingest_cmd->add_option("--duration", ingest.duration, "Synthetic duration, seconds");
  ingest_cmd->add_option("--fps", ingest.fps, "Synthetic frame rate");
  ingest_cmd->add_option("--seed", ingest.seed, "Synthetic seed");
  ingest_cmd->add_option("--noise", ingest.noise, "Synthetic sensor noise")->check(CLI::NonNegativeNumber);
  ingest_cmd->add_option("--out", ingest.out, "Output recording (JSONL)")->required();

  ExtractFlags extract;
  auto* extract_cmd = app.add_subcommand("extract", "Extract landmark pairs from a recording");
  extract_cmd->add_option("--recording", extract.recording, "Recording (JSONL)")->required()->check(CLI::ExistingFile);
  extract_cmd->add_option("--schema", extract.schema, "Schema name or file (default: the recording's)");
  auto* bw_opt = extract_cmd->add_option("--bandwidth", extract.bandwidth, "Mean-shift bandwidth")
                     ->check(CLI::PositiveNumber);
  auto* target_opt = extract_cmd->add_option("--target-size", extract.target, "Search the bandwidth for this many landmarks")
                         ->check(CLI::PositiveNumber);
  bw_opt->excludes(target_opt);
  extract_cmd->add_option("--tolerance", extract.tolerance, "Relative tolerance for --target-size")
      ->check(CLI::Range(0.0, 1.0));
  extract_cmd->add_option("--max-iter", extract.max_iter, "Mean-shift iterations")->check(CLI::PositiveNumber);
  extract_cmd->add_option("--out", extract.out, "Output landmark file")->required();

  BuildFlags build;
  auto* build_cmd = app.add_subcommand("build", "Train the kernel store of a landmark set");
  build_cmd->add_option("--landmarks", build.landmarks, "Landmark file")->required()->check(CLI::ExistingFile);
  build_cmd->add_option("--k", build.k, "Landmarks per kernel")->check(CLI::PositiveNumber);
  build_cmd->add_option("--lambda", build.lambda, "Ridge regularization")->check(CLI::NonNegativeNumber);
  build_cmd->add_option("--seed", build.seed, "Hidden-layer seed");
  build_cmd->add_option("--out", build.out, "Output store file")->required();

  ProjectFlags project;
  auto* project_cmd = app.add_subcommand("project", "Project poses and print configurations");
  add_engine_flags(project_cmd, project.engine);
  auto* pose_opt = project_cmd->add_option("--pose", project.pose, "Comma-separated pose vector");
  auto* pose_file_opt = project_cmd->add_option("--pose-file", project.pose_file, "One pose per line")
                            ->check(CLI::ExistingFile);
  pose_opt->excludes(pose_file_opt);

  ReplayFlags replay;
  auto* replay_cmd = app.add_subcommand("replay", "Project a recording and score it against IK");
  add_engine_flags(replay_cmd, replay.engine);
  add_smooth_flags(replay_cmd, replay.smooth);
  replay_cmd->add_option("--recording", replay.recording, "Recording (JSONL)")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--configs", replay.configs, "Output configurations (JSONL)")->required();
  replay_cmd->add_option("--metrics", replay.metrics, "Output metrics (CSV)")->required();

  StreamFlags stream;
  auto* stream_cmd = app.add_subcommand("stream", "Project poses from stdin, one per line");
  add_engine_flags(stream_cmd, stream.engine);
  add_smooth_flags(stream_cmd, stream.smooth);
  stream_cmd->add_option("--queue", stream.queue, "Queue depth between stages")->check(CLI::PositiveNumber);

  BenchFlags bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run the evaluation suites");
  auto* bench_store = bench_cmd->add_option("--store", bench.store, "Evaluate this store")->check(CLI::ExistingFile);
  auto* bench_sweep = bench_cmd->add_flag("--sweep", bench.sweep, "Synthesize, sweep landmark sizes, evaluate");
  bench_store->excludes(bench_sweep);
  bench_cmd->add_option("--schema", bench.schema, "Schema for --sweep");
  bench_cmd->add_option("--sizes", bench.sizes, "Landmark counts for --sweep")->delimiter(',');
  bench_cmd->add_option("--duration", bench.duration, "Synthetic recording length, seconds")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--fps", bench.fps, "Synthetic frame rate")->check(CLI::PositiveNumber);
  bench_cmd->add_option("-L,--candidates", bench.candidates, "Forward candidates")->check(CLI::PositiveNumber);
  bench_cmd->add_option("-M,--backward", bench.backward, "Backward neighbors")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--frames", bench.frames, "Frames per motion")->check(CLI::Range(2, 100000));
  bench_cmd->add_option("--latency-queries", bench.latency_queries, "Timed queries")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--k", bench.k, "Landmarks per kernel for --sweep")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--delta", bench.delta, "Similarity radius (default: 10th percentile)")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench.seed, "Seed");
  bench_cmd->add_option("--report", bench.report, "Write the JSON report here");
  bench_cmd->add_option("--traces", bench.traces, "Write per-motion CSV traces into this directory");
  bench_cmd->add_flag("-q,--quiet", bench.quiet, "No progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*schema_cmd) {
      const std::string text = to_json(load_schema(schema_name)).dump(2) + '\n';
      if (schema_out.empty()) {
        out << text;
      } else {
        check_output(schema_out);
        io::write_atomic(schema_out, text);
      }
      return kExitOk;
    }
    if (*ingest_cmd) {
      if (!ingest.synthetic && ingest.input.empty()) {
        err << "error: usage: ingest needs --input or --synthetic\n";
        return kExitUsage;
      }
      return cmd_ingest(ingest, io);
    }
    if (*extract_cmd) {
      return cmd_extract(extract, io);
    }
    if (*build_cmd) {
      return cmd_build(build, io);
    }
    if (*project_cmd) {
      if (project.pose.empty() && project.pose_file.empty()) {
        err << "error: usage: project needs --pose or --pose-file\n";
        return kExitUsage;
      }
      return cmd_project(project, io);
    }
    if (*replay_cmd) {
      return cmd_replay(replay, io);
    }
    if (*stream_cmd) {
      return cmd_stream(stream, io);
    }
    if (*bench_cmd) {
      if (!bench.sweep && bench.store.empty()) {
        err << "error: usage: bench needs --store or --sweep\n";
        return kExitUsage;
      }
      return cmd_bench(bench, io);
    }
  } catch (const Error& e) {
    out << std::flush;
    err << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    out << std::flush;
    err << "error: internal: " << e.what() << '\n';
    return kExitError;
  }
  return kExitUsage;
}

} // namespace corrproj::cli
