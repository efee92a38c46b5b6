#pragma once

#include <cstddef>
#include <functional>

namespace cfz {

/// Worker count taken from CFZ_THREADS (default 1). Invalid values fall back to 1.
std::size_t thread_count();

/// Positive integer text -> that count; anything else -> 1.
std::size_t parse_thread_count(const char* raw) noexcept;
/// Overrides CFZ_THREADS for the rest of the process; 0 restores the env value.
void set_thread_count(std::size_t n);

/// Splits [0, n) into contiguous chunks, one per worker, and runs `body(begin, end)`.
/// Chunks write disjoint outputs, so the result is independent of the worker count
/// as long as `body` does not reduce across rows.
void parallel_rows(std::size_t n, std::size_t work_per_row,
                   const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace cfz
