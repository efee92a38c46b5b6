#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "cfz/matrix.hpp"
#include "cfz/rng.hpp"

namespace cfz {

enum class Activation { linear, relu, leaky_relu, sigmoid };

inline constexpr double kLeakySlope = 0.01;

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

/// Applies `a` elementwise.
Matrix activate(Activation a, const Matrix& pre);

/// Fully connected layer: out = act(in · weight + bias). weight is (in × out), bias is (1 × out).
struct DenseLayer {
  Matrix weight;
  Matrix bias;
  Activation activation = Activation::linear;
};

/// Sequential stack of dense layers.
///
/// Every mutable access bumps `revision()`, which lets `mlp_backward` reject
/// caches recorded before the parameters changed.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> layers);

  Mlp(const Mlp& other);
  Mlp& operator=(const Mlp& other);
  Mlp(Mlp&&) noexcept = default;
  Mlp& operator=(Mlp&&) noexcept = default;

  /// Glorot-uniform weights in ±sqrt(6 / (fan_in + fan_out)), zero biases.
  /// `widths` has one more entry than `activations`.
  static Mlp glorot(std::span<const std::size_t> widths, std::span<const Activation> activations,
                    Rng& rng);

  bool empty() const noexcept { return layers_.empty(); }
  std::size_t depth() const noexcept { return layers_.size(); }
  std::size_t input_dim() const;
  std::size_t output_dim() const;

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }
  DenseLayer& mutable_layer(std::size_t i);

  /// Parameter matrices in declaration order (w0, b0, w1, b1, ...).
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  std::size_t parameter_count() const noexcept;

  std::uint64_t id() const noexcept { return id_; }
  std::uint64_t revision() const noexcept { return revision_; }

  bool operator==(const Mlp& other) const;

 private:
  static std::uint64_t next_id() noexcept;

  std::vector<DenseLayer> layers_;
  std::uint64_t id_ = next_id();
  std::uint64_t revision_ = 0;
};

/// Intermediates recorded by `mlp_forward`, consumed by `mlp_backward`.
struct MlpCache {
  std::uint64_t owner_id = 0;
  std::uint64_t revision = 0;
  std::vector<Matrix> inputs;       // input to each layer
  std::vector<Matrix> outputs;      // post-activation output of each layer
};

struct MlpForward {
  Matrix output;
  MlpCache cache;
};

struct MlpGradients {
  std::vector<Matrix> weight;
  std::vector<Matrix> bias;
  Matrix input;

  /// Gradients in the same order as `Mlp::parameters()`.
  std::vector<const Matrix*> flat() const;
  /// this += factor · other (same layout).
  void accumulate(const MlpGradients& other, double factor = 1.0);
};

MlpForward mlp_forward(const Mlp& net, const Matrix& input);
/// Forward pass without caching intermediates.
Matrix mlp_apply(const Mlp& net, const Matrix& input);
MlpGradients mlp_backward(const Mlp& net, const MlpCache& cache, const Matrix& output_gradient);

/// Zero gradients laid out like `net`.
MlpGradients zero_gradients(const Mlp& net, std::size_t batch_rows = 0);

}  // namespace cfz
