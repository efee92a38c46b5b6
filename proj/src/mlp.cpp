#include "cfz/mlp.hpp"

#include <atomic>
#include <cmath>
#include <string>

namespace cfz {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky-relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "linear") return Activation::linear;
  if (name == "relu") return Activation::relu;
  if (name == "leaky-relu") return Activation::leaky_relu;
  if (name == "sigmoid") return Activation::sigmoid;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

namespace {

double apply_scalar(Activation a, double x) noexcept {
  switch (a) {
    case Activation::linear: return x;
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::leaky_relu: return x > 0.0 ? x : kLeakySlope * x;
    case Activation::sigmoid:
      // Split form avoids overflow in exp for large |x|.
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
  }
  return x;
}

// Every supported activation's derivative is recoverable from its output.
double derivative_from_output(Activation a, double post) noexcept {
  switch (a) {
    case Activation::linear: return 1.0;
    case Activation::relu: return post > 0.0 ? 1.0 : 0.0;
    case Activation::leaky_relu: return post > 0.0 ? 1.0 : kLeakySlope;
    case Activation::sigmoid: return post * (1.0 - post);
  }
  return 1.0;
}

}  // namespace

Matrix activate(Activation a, const Matrix& pre) {
  Matrix out = pre;
  if (a == Activation::linear) return out;
  for (double& v : out.values()) v = apply_scalar(a, v);
  return out;
}

std::uint64_t Mlp::next_id() noexcept {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.bias.rows() != 1 || l.bias.cols() != l.weight.cols()) {
      throw ShapeError("Mlp: layer " + std::to_string(i) + " bias " + l.bias.shape_string() +
                       " does not match weight " + l.weight.shape_string());
    }
    if (i > 0 && layers_[i - 1].weight.cols() != l.weight.rows()) {
      throw ShapeError("Mlp: layer " + std::to_string(i) + " weight " +
                       l.weight.shape_string() + " does not chain after " +
                       layers_[i - 1].weight.shape_string());
    }
  }
}

Mlp::Mlp(const Mlp& other) : layers_(other.layers_), revision_(other.revision_) {}

Mlp& Mlp::operator=(const Mlp& other) {
  if (this != &other) {
    layers_ = other.layers_;
    ++revision_;
  }
  return *this;
}

Mlp Mlp::glorot(std::span<const std::size_t> widths, std::span<const Activation> activations,
                Rng& rng) {
  if (widths.size() != activations.size() + 1) {
    throw ContractError("Mlp::glorot: need one more width than activations");
  }
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i < activations.size(); ++i) {
    const std::size_t fan_in = widths[i];
    const std::size_t fan_out = widths[i + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer{Matrix(fan_in, fan_out), Matrix(1, fan_out), activations[i]};
    for (double& w : layer.weight.values()) w = rng.uniform(-limit, limit);
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

std::size_t Mlp::input_dim() const {
  if (layers_.empty()) throw ContractError("Mlp::input_dim on empty network");
  return layers_.front().weight.rows();
}

std::size_t Mlp::output_dim() const {
  if (layers_.empty()) throw ContractError("Mlp::output_dim on empty network");
  return layers_.back().weight.cols();
}

DenseLayer& Mlp::mutable_layer(std::size_t i) {
  ++revision_;
  return layers_.at(i);
}

std::vector<Matrix*> Mlp::parameters() {
  ++revision_;
  std::vector<Matrix*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Matrix*> Mlp::parameters() const {
  std::vector<const Matrix*> out;
  for (const auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::size_t Mlp::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

bool Mlp::operator==(const Mlp& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& a = layers_[i];
    const auto& b = other.layers_[i];
    if (a.activation != b.activation || !(a.weight == b.weight) || !(a.bias == b.bias)) {
      return false;
    }
  }
  return true;
}

std::vector<const Matrix*> MlpGradients::flat() const {
  std::vector<const Matrix*> out;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    out.push_back(&weight[i]);
    out.push_back(&bias[i]);
  }
  return out;
}

void MlpGradients::accumulate(const MlpGradients& other, double factor) {
  if (other.weight.size() != weight.size()) {
    throw ContractError("MlpGradients::accumulate: layer count mismatch");
  }
  for (std::size_t i = 0; i < weight.size(); ++i) {
    add_in_place(weight[i], other.weight[i], factor);
    add_in_place(bias[i], other.bias[i], factor);
  }
  if (!input.empty() && !other.input.empty()) add_in_place(input, other.input, factor);
}

namespace {

Matrix layer_forward(const DenseLayer& layer, const Matrix& in) {
  return activate(layer.activation, add_row_broadcast(matmul(in, layer.weight), layer.bias));
}

void check_input(const Mlp& net, const Matrix& input) {
  if (net.empty()) throw ContractError("mlp_forward: empty network");
  if (input.cols() != net.input_dim()) {
    throw ShapeError("mlp_forward: input " + input.shape_string() + " does not match layer 0 " +
                     net.layer(0).weight.shape_string());
  }
}

}  // namespace

MlpForward mlp_forward(const Mlp& net, const Matrix& input) {
  check_input(net, input);
  MlpForward result;
  result.cache.owner_id = net.id();
  result.cache.revision = net.revision();
  Matrix current = input;
  for (const auto& layer : net.layers()) {
    Matrix next = layer_forward(layer, current);
    result.cache.inputs.push_back(std::move(current));
    result.cache.outputs.push_back(next);
    current = std::move(next);
  }
  result.output = std::move(current);
  return result;
}

Matrix mlp_apply(const Mlp& net, const Matrix& input) {
  check_input(net, input);
  Matrix current = input;
  for (const auto& layer : net.layers()) current = layer_forward(layer, current);
  return current;
}

MlpGradients mlp_backward(const Mlp& net, const MlpCache& cache, const Matrix& output_gradient) {
  if (cache.owner_id != net.id() || cache.revision != net.revision() ||
      cache.inputs.size() != net.depth()) {
    throw ContractError("mlp_backward: cache was not produced by this network revision");
  }
  if (!output_gradient.same_shape(cache.outputs.back())) {
    throw ShapeError("mlp_backward: output gradient " + output_gradient.shape_string() +
                     " does not match forward output " + cache.outputs.back().shape_string());
  }
  MlpGradients grads;
  grads.weight.resize(net.depth());
  grads.bias.resize(net.depth());
  Matrix upstream = output_gradient;
  for (std::size_t li = net.depth(); li-- > 0;) {
    const DenseLayer& layer = net.layer(li);
    const Matrix& in = cache.inputs[li];
    const Matrix& out = cache.outputs[li];
    if (layer.activation != Activation::linear) {
      auto up = upstream.values();
      const auto post = out.values();
      for (std::size_t k = 0; k < up.size(); ++k) {
        up[k] *= derivative_from_output(layer.activation, post[k]);
      }
    }
    grads.weight[li] = matmul_tn(in, upstream);
    grads.bias[li] = column_sums(upstream);
    upstream = matmul_nt(upstream, layer.weight);
  }
  grads.input = std::move(upstream);
  return grads;
}

MlpGradients zero_gradients(const Mlp& net, std::size_t batch_rows) {
  MlpGradients g;
  for (const auto& l : net.layers()) {
    g.weight.emplace_back(l.weight.rows(), l.weight.cols());
    g.bias.emplace_back(1, l.bias.cols());
  }
  if (batch_rows > 0 && !net.empty()) g.input = Matrix(batch_rows, net.input_dim());
  return g;
}

}  // namespace cfz
