#include "aaa/common.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

namespace aaa {
namespace {

void stderr_handler(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

void (*g_handler)(const std::string&) = &stderr_handler;

int default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::atomic<int> g_threads{0};

}  // namespace

void warn(const std::string& message) {
  if (g_handler) g_handler(message);
}

void set_warning_handler(void (*handler)(const std::string&)) { g_handler = handler ? handler : &stderr_handler; }

void set_thread_count(int n) { g_threads = n < 1 ? 0 : n; }

int thread_count() {
  const int n = g_threads;
  return n > 0 ? n : default_threads();
}

void parallel_for(std::size_t n, std::size_t grain, const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  grain = std::max<std::size_t>(grain, 1);
  const std::size_t blocks = (n + grain - 1) / grain;
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(thread_count(), blocks));
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) body(b * grain, std::min(n, (b + 1) * grain));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    for (std::size_t b; (b = next++) < blocks;) {
      try {
        body(b * grain, std::min(n, (b + 1) * grain));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = blocks;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace aaa
