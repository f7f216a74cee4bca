#include "stream.hpp"

#include <charconv>
#include <exception>
#include <istream>
#include <ostream>
#include <thread>
#include <vector>

#include "cproj/error.hpp"

namespace corrproj::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Item {
  std::size_t line = 0;
  Eigen::VectorXd values;
  std::exception_ptr error;
};

} // namespace

Eigen::VectorXd parse_vector(std::string_view text, std::size_t expected_dim) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    const auto field = trim(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    double v = 0.0;
    const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    require(!field.empty() && ec == std::errc{} && end == field.data() + field.size(), ErrorKind::Format,
        "field " + std::to_string(values.size() + 1) + " is not a number: '" + std::string(field) + "'");
    values.push_back(v);
    if (comma == std::string_view::npos) {
      break;
    }
    pos = comma + 1;
  }
  if (expected_dim != 0 && values.size() != expected_dim) {
    throw_error(ErrorKind::Format,
        "expected " + std::to_string(expected_dim) + " values, got " + std::to_string(values.size()));
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string format_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  std::string out;
  char buf[32];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) {
      out += ',';
    }
    const auto res = std::to_chars(buf, buf + sizeof buf, v(i));
    out.append(buf, res.ptr);
  }
  return out;
}

std::size_t run_stream(const ProjectionEngine& engine, const StreamOptions& options, std::istream& in, std::ostream& out) {
  require(engine.valid(), ErrorKind::EngineInvalid, "stream needs a loaded store");
  const std::size_t dim = engine.store().schema().human_dim();
  BoundedQueue<Item> parsed(options.queue_depth);
  BoundedQueue<Item> projected(options.queue_depth);

  std::thread reader([&] {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) {
        continue;
      }
      Item item;
      item.line = lineno;
      try {
        item.values = normalize_bones(parse_vector(line, dim)).data;
      } catch (...) {
        item.error = std::current_exception();
      }
      const bool failed = static_cast<bool>(item.error);
      if (!parsed.push(std::move(item)) || failed) {
        break;
      }
    }
    parsed.close();
  });

  std::thread projector([&] {
    Smoother smoother(options.smoothing);
    while (auto item = parsed.pop()) {
      if (!item->error) {
        try {
          HumanoidConfig r = engine.project(HumanPose{item->values}).r_star;
          item->values = options.smooth ? smoother.step(r.angles) : r.angles;
        } catch (...) {
          item->error = std::current_exception();
        }
      }
      if (!projected.push(std::move(*item))) {
        break;
      }
    }
    projected.close();
  });

  std::size_t written = 0;
  std::exception_ptr failure;
  std::size_t failed_line = 0;
  while (auto item = projected.pop()) {
    if (item->error) {
      failure = item->error;
      failed_line = item->line;
      break;
    }
    out << format_vector(item->values) << '\n' << std::flush;
    ++written;
  }
  parsed.close();
  projected.close();
  projector.join();
  reader.join();

  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const Error& e) {
      throw Error(e.kind(), "input line " + std::to_string(failed_line) + ": " + e.what());
    }
  }
  return written;
}

} // namespace corrproj::cli
