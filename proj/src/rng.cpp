#include "cfz/rng.hpp"

#include <cmath>
#include <numbers>

#include "cfz/parallel.hpp"

namespace cfz {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) noexcept
    : seed_(seed), stream_(stream), key_(mix64(mix64(seed + kGolden) ^ (stream * kGolden + 1))) {}

std::uint64_t Rng::bits_at(std::uint64_t index) const noexcept {
  return mix64(mix64(key_ + (index + 1) * kGolden) ^ key_);
}

double Rng::uniform_at(std::uint64_t index) const noexcept {
  return static_cast<double>(bits_at(index) >> 11) * 0x1.0p-53;
}

double Rng::normal_at(std::uint64_t index) const noexcept {
  const double u1 = 1.0 - uniform_at(index);  // (0, 1]
  const double u2 = uniform_at(index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::normal() noexcept {
  const double v = normal_at(counter_);
  counter_ += 2;
  return v;
}

std::size_t Rng::index(std::size_t n) noexcept {
  // Lemire's multiply-high reduction.
  const unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
  return static_cast<std::size_t>(wide >> 64);
}

std::uint64_t Rng::reserve(std::uint64_t count) noexcept {
  const std::uint64_t first = counter_;
  counter_ += count;
  return first;
}

Rng Rng::fork(std::uint64_t stream) const noexcept {
  return Rng(derive_seed(seed_, stream_ * kGolden + counter_), stream);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t label) noexcept {
  return mix64(master ^ mix64(label + kGolden));
}

Matrix sample_standard_normal(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix out(rows, cols);
  const std::uint64_t base = rng.reserve(2ULL * rows * cols);
  auto values = out.values();
  parallel_rows(rows, cols * 8, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin * cols; i < end * cols; ++i) {
      values[i] = rng.normal_at(base + 2ULL * i);
    }
  });
  return out;
}

}  // namespace cfz
