#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace aaa {

/// Physical coordinates and spacings are millimetres throughout.
using Vec3 = Eigen::Vector3d;

/// Raised when an input violates an operation's contract (bad file, bad
/// range, empty region, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An Error tagged with the pipeline stage that produced it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Sink for non-fatal diagnostics. Defaults to stderr; passing nullptr
/// restores the default.
void warn(const std::string& message);
void set_warning_handler(void (*handler)(const std::string&));

/// Worker threads used by parallel stages. Defaults to the hardware
/// concurrency; values below 1 reset to the default.
void set_thread_count(int n);
int thread_count();

/// Calls body(begin, end) on contiguous blocks covering [0, n). Blocks are
/// fixed by n and `grain`, not by the thread count, so per-block results
/// combined in block order are reproducible.
void parallel_for(std::size_t n, std::size_t grain, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace aaa
