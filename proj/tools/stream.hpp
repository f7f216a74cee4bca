#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "cproj/projection.hpp"
#include "cproj/smoothing.hpp"

namespace corrproj::cli {

/// Blocking FIFO with a fixed capacity. close() wakes every waiter: pushes
/// fail from then on, pops drain what is left and then return nullopt.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  bool push(T item) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) {
      return false;
    }
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) {
      return std::nullopt;
    }
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    not_empty_.notify_all();
    not_full_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<T> items_;
  bool closed_ = false;
};

/// Comma-separated decimals, surrounding blanks allowed. Throws format when a
/// field is not a number or the count differs from `expected_dim` (0 = any).
Eigen::VectorXd parse_vector(std::string_view text, std::size_t expected_dim = 0);

/// Shortest round-trip decimals joined by commas.
std::string format_vector(const Eigen::Ref<const Eigen::VectorXd>& v);

struct StreamOptions {
  bool smooth = true;
  SmootherParams smoothing;
  std::size_t queue_depth = 64;
};

/// Reader, projector (plus smoother) and writer stages connected by bounded
/// queues. One output line per non-blank input line, in input order, flushed
/// as it is written. Returns the number of lines written; on a bad line the
/// earlier outputs are flushed and the error is rethrown.
std::size_t run_stream(const ProjectionEngine& engine, const StreamOptions& options, std::istream& in, std::ostream& out);

} // namespace corrproj::cli
