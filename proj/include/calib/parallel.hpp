#pragma once

#include <exception>
#include <mutex>
#include <optional>

namespace calib {

/// Captures the first exception thrown inside an OpenMP region so it can be
/// rethrown on the calling thread once the region has joined.
class ExceptionCollector {
 public:
  template <class F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

/// Number of OpenMP threads used by replication loops.
int max_threads() noexcept;
void set_threads(int threads) noexcept;

/// Thread count from an explicit flag, else CALIB_CI_THREADS, else the OpenMP default.
int resolve_threads(std::optional<int> flag);

}  // namespace calib
