#include "cfz/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace cfz {
namespace {

std::atomic<std::size_t> g_override{0};

// Below this much work a thread launch costs more than it saves.
constexpr std::size_t kMinParallelWork = 1u << 16;

}  // namespace

std::size_t parse_thread_count(const char* raw) noexcept {
  if (raw == nullptr || *raw == '\0') return 1;
  try {
    std::size_t pos = 0;
    const long value = std::stol(raw, &pos);
    if (pos != std::string(raw).size() || value < 1) return 1;
    return static_cast<std::size_t>(value);
  } catch (...) {
    return 1;
  }
}

std::size_t thread_count() {
  const std::size_t forced = g_override.load();
  if (forced != 0) return forced;
  static const std::size_t from_env = parse_thread_count(std::getenv("CFZ_THREADS"));
  return from_env;
}

void set_thread_count(std::size_t n) { g_override.store(n); }

void parallel_rows(std::size_t n, std::size_t work_per_row,
                   const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers = std::min(thread_count(), n);
  if (workers <= 1 || n * std::max<std::size_t>(work_per_row, 1) < kMinParallelWork) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] { body(begin, end); });
  }
  body(0, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

}  // namespace cfz
