#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cfz/matrix.hpp"

namespace cfz {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment estimates for one parameter group. Moments are allocated on the
/// first update and must keep the same shapes afterwards.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamConfig config) : config_(config) {}

  const AdamConfig& config() const noexcept { return config_; }
  std::uint64_t step() const noexcept { return step_; }
  const std::vector<Matrix>& first_moment() const noexcept { return first_; }
  const std::vector<Matrix>& second_moment() const noexcept { return second_; }

  /// One bias-corrected Adam update of `params` in place.
  void update(std::span<Matrix* const> params, std::span<const Matrix* const> grads);

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
};

inline void adam_step(AdamState& state, std::span<Matrix* const> params,
                      std::span<const Matrix* const> grads) {
  state.update(params, grads);
}

}  // namespace cfz
