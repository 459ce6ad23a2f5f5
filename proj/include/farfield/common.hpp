// Copyright 2026 The farfield Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef FARFIELD_COMMON_HPP_
#define FARFIELD_COMMON_HPP_

#include <algorithm>
#include <atomic>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace farfield {

using Complex = std::complex<double>;

// [channel][sample], rows contiguous so each channel is a dense span.
using SampleMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr int kDefaultSampleRate = 16000;

enum class ErrorCode {
  kFormat,
  kUnsupported,
  kPrecondition,
  kIo,
  kVersion,
  kParse,
  kConfig,
  kShape,
  kDegenerateInput,
  kNumeric,
  kSingular,
  kTooShort,
  kPool,
};

inline const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kUnsupported: return "unsupported error";
    case ErrorCode::kPrecondition: return "precondition error";
    case ErrorCode::kIo: return "I/O error";
    case ErrorCode::kVersion: return "version error";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kDegenerateInput: return "degenerate-input error";
    case ErrorCode::kNumeric: return "numeric error";
    case ErrorCode::kSingular: return "singularity error";
    case ErrorCode::kTooShort: return "too-short error";
    case ErrorCode::kPool: return "pool error";
  }
  return "error";
}

// Every failure raised by the library. The code lets callers (and the CLI)
// branch on the failure class without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code),
        message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the error-class prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

// 64-bit FNV-1a, used for content hashes and per-item sub-seeds.
inline uint64_t Fnv1a64(const void* data, size_t size,
                        uint64_t hash = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < size; ++i) {
    hash ^= p[i];
    hash *= 1099511628211ull;
  }
  return hash;
}

#define FARFIELD_REQUIRE(cond, code, msg)         \
  do {                                            \
    if (!(cond)) throw ::farfield::Error(code, msg); \
  } while (0)

// FARFIELD_WORKERS overrides; otherwise one per hardware thread.
inline int DefaultWorkers() {
  if (const char* env = std::getenv("FARFIELD_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

// Runs fn(i) for i in [0, n). Each index is touched by exactly one worker, so
// callers that write only slot i get the same result for any worker count.
namespace detail {
inline thread_local bool in_parallel_region = false;
}  // namespace detail

// Nested calls run serially on the calling worker.
template <typename Fn>
void ParallelFor(Eigen::Index n, Fn&& fn, int workers = DefaultWorkers()) {
  workers = static_cast<int>(std::min<Eigen::Index>(workers, n));
  if (workers <= 1 || detail::in_parallel_region) {
    for (Eigen::Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<Eigen::Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto loop = [&] {
    detail::in_parallel_region = true;
    for (Eigen::Index i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
    detail::in_parallel_region = false;
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace farfield

#endif  // FARFIELD_COMMON_HPP_
