#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cfz/matrix.hpp"

namespace cfz {

/// Counter-based generator: draw `i` of stream `s` under seed `k` is a pure
/// function of (k, s, i), so any block of draws can be produced independently.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

  /// Value of draw `index` without touching the counter.
  std::uint64_t bits_at(std::uint64_t index) const noexcept;
  double uniform_at(std::uint64_t index) const noexcept;
  /// Box–Muller normal built from draws (index, index + 1).
  double normal_at(std::uint64_t index) const noexcept;

  std::uint64_t next_u64() noexcept { return bits_at(counter_++); }
  /// Uniform on [0, 1).
  double uniform() noexcept { return uniform_at(counter_++); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() noexcept;
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) noexcept;

  /// Reserves `count` draws and returns the first index of the block.
  std::uint64_t reserve(std::uint64_t count) noexcept;

  /// Independent child stream; does not advance this generator.
  Rng fork(std::uint64_t stream) const noexcept;

  template <typename T>
  void shuffle(std::vector<T>& items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// rows × cols matrix of i.i.d. N(0, 1) draws; consumes 2·rows·cols counter slots.
Matrix sample_standard_normal(Rng& rng, std::size_t rows, std::size_t cols);

/// Derives a child seed from a master seed and a label; used for sub-run seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t label) noexcept;

}  // namespace cfz
