#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "cfz/adam.hpp"
#include "cfz/matrix.hpp"
#include "cfz/mlp.hpp"
#include "cfz/parallel.hpp"
#include "cfz/rng.hpp"
#include "oracles.hpp"

using namespace cfz;

TEST_CASE("matmul: identity, hand permutation, naive oracle") {
  Rng rng(11);
  const Matrix m = oracle::random_matrix(rng, 3, 4);
  CHECK(matmul(Matrix::identity(3), m) == m);

  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix p = Matrix::from_rows({{0, 1}, {1, 0}});
  CHECK(matmul(a, p) == Matrix::from_rows({{2, 1}, {4, 3}}));

  const Matrix x = oracle::random_matrix(rng, 7, 5);
  const Matrix y = oracle::random_matrix(rng, 5, 3);
  CHECK(oracle::max_abs_diff(matmul(x, y), oracle::naive_matmul(x, y)) <= 1e-12);
  CHECK(oracle::max_abs_diff(matmul_tn(transpose(x), y), oracle::naive_matmul(x, y)) <= 1e-12);
  CHECK(oracle::max_abs_diff(matmul_nt(x, transpose(y)), oracle::naive_matmul(x, y)) <= 1e-12);
}

TEST_CASE("matmul: mismatch names both shapes") {
  try {
    matmul(Matrix(2, 3), Matrix(4, 5));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("4x5") != std::string::npos);
  }
}

TEST_CASE("matmul: result independent of thread count") {
  Rng rng(5);
  const Matrix a = oracle::random_matrix(rng, 300, 257);
  const Matrix b = oracle::random_matrix(rng, 257, 129);
  set_thread_count(1);
  const Matrix one = matmul(a, b);
  set_thread_count(4);
  const Matrix four = matmul(a, b);
  set_thread_count(0);
  CHECK(one == four);
}

TEST_CASE("softmax_rows") {
  const Matrix u = softmax_rows(Matrix(1, 4, 3.0));
  for (double v : u.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

  Rng rng(3);
  const Matrix logits = oracle::random_matrix(rng, 6, 5, 10.0);
  Matrix shifted = logits;
  for (double& v : shifted.values()) v += 123.5;
  CHECK(oracle::max_abs_diff(softmax_rows(logits), softmax_rows(shifted)) <= 1e-12);
  const Matrix s = softmax_rows(logits);
  for (std::size_t i = 0; i < s.rows(); ++i) {
    double total = 0.0;
    for (double v : s.row(i)) {
      CHECK(v >= 0.0);
      total += v;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }

  const Matrix two = softmax_rows(Matrix::from_rows({{0.0, std::log(3.0)}}));
  CHECK(std::abs(two(0, 0) - 0.25) <= 1e-12);
  CHECK(std::abs(two(0, 1) - 0.75) <= 1e-12);

  // large logits do not overflow
  CHECK(all_finite(softmax_rows(Matrix::from_rows({{1000.0, 999.0, -1000.0}}))));
}

TEST_CASE("sample_standard_normal: determinism, moments, seed sensitivity") {
  Rng a(42), b(42), c(43);
  const Matrix x = sample_standard_normal(a, 100, 1000);
  CHECK(x == sample_standard_normal(b, 100, 1000));
  CHECK_FALSE(x == sample_standard_normal(c, 100, 1000));

  double mean = 0.0;
  for (double v : x.values()) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x.values()) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size() - 1);
  CHECK(std::abs(mean) <= 0.02);
  CHECK(std::abs(var - 1.0) <= 0.03);
}

TEST_CASE("sample_standard_normal: thread count does not change draws") {
  set_thread_count(1);
  Rng a(9);
  const Matrix one = sample_standard_normal(a, 700, 300);
  set_thread_count(3);
  Rng b(9);
  const Matrix three = sample_standard_normal(b, 700, 300);
  set_thread_count(0);
  CHECK(one == three);
  CHECK(a.counter() == b.counter());
}

TEST_CASE("rng: counter addressing and forks") {
  Rng r(7);
  const double first = r.uniform_at(0);
  CHECK(r.uniform() == first);
  CHECK(r.counter() == 1);
  const Rng f1 = r.fork(1), f2 = r.fork(2);
  CHECK(f1.bits_at(0) != f2.bits_at(0));
  CHECK(r.counter() == 1);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = r.index(17);
    CHECK(k < 17);
  }
  CHECK(derive_seed(7, 1) != derive_seed(7, 2));
  CHECK(derive_seed(7, 1) == derive_seed(7, 1));
}

TEST_CASE("mlp_forward: definitions") {
  std::vector<DenseLayer> id;
  id.push_back({Matrix::identity(3), Matrix(1, 3), Activation::linear});
  const Mlp identity(std::move(id));
  const Matrix x = Matrix::from_rows({{1, -2, 3}, {0.5, 0, -1}});
  CHECK(mlp_forward(identity, x).output == x);

  const Matrix v = Matrix::from_rows({{-1, 2}});
  CHECK(activate(Activation::relu, v) == Matrix::from_rows({{0, 2}}));
  const Matrix leaky = activate(Activation::leaky_relu, v);
  CHECK(leaky(0, 0) == doctest::Approx(-0.01));
  CHECK(leaky(0, 1) == 2.0);
  const Matrix half = activate(Activation::sigmoid, Matrix(2, 3));
  for (double s : half.values()) CHECK(s == 0.5);

  CHECK(parse_activation("leaky-relu") == Activation::leaky_relu);
  CHECK_THROWS_AS(parse_activation("tanh"), std::invalid_argument);
}

TEST_CASE("mlp: dimension mismatch is a shape error") {
  Rng rng(1);
  const std::size_t widths[] = {4, 3, 2};
  const Activation acts[] = {Activation::relu, Activation::linear};
  const Mlp net = Mlp::glorot(widths, acts, rng);
  CHECK_THROWS_AS(mlp_forward(net, Matrix(2, 5)), ShapeError);
  std::vector<DenseLayer> broken;
  broken.push_back({Matrix(4, 3), Matrix(1, 3), Activation::relu});
  broken.push_back({Matrix(2, 2), Matrix(1, 2), Activation::relu});
  CHECK_THROWS_AS(Mlp(std::move(broken)), ShapeError);
}

TEST_CASE("mlp: glorot bounds and zero biases") {
  Rng rng(2);
  const std::size_t widths[] = {30, 20};
  const Activation acts[] = {Activation::linear};
  const Mlp net = Mlp::glorot(widths, acts, rng);
  const double bound = std::sqrt(6.0 / 50.0);
  for (double w : net.layer(0).weight.values()) CHECK(std::abs(w) <= bound);
  for (double b : net.layer(0).bias.values()) CHECK(b == 0.0);
}

namespace {

// Scalar loss Σ c ⊙ net(x) for a fixed random c.
double weighted_output(const Mlp& net, const Matrix& x, const Matrix& c) {
  return sum(hadamard(mlp_apply(net, x), c));
}

}  // namespace

TEST_CASE("mlp_backward: finite differences on random 3-layer networks") {
  const Activation all[] = {Activation::linear, Activation::relu, Activation::leaky_relu, Activation::sigmoid};
  for (std::uint64_t trial = 0; trial < 8; ++trial) {
    Rng rng(100 + trial);
    const std::size_t widths[] = {5, 7, 6, 4};
    const Activation acts[] = {all[trial % 4], all[(trial + 1) % 4], all[(trial + 2) % 4]};
    Mlp net = Mlp::glorot(widths, acts, rng);
    for (auto* p : net.parameters())
      for (double& v : p->values()) v += 0.1 * rng.uniform(-1.0, 1.0);
    Matrix x = oracle::random_matrix(rng, 3, 5);
    const Matrix c = oracle::random_matrix(rng, 3, 4);

    const MlpForward fw = mlp_forward(net, x);
    const MlpGradients g = mlp_backward(net, fw.cache, c);
    const auto grads = g.flat();
    const auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Matrix fd = oracle::finite_difference([&] { return weighted_output(net, x, c); }, *params[i]);
      CHECK(oracle::relative_error(*grads[i], fd) <= 1e-4);
    }
    const Matrix fdx = oracle::finite_difference([&] { return weighted_output(net, x, c); }, x);
    CHECK(oracle::relative_error(g.input, fdx) <= 1e-4);
  }
}

TEST_CASE("mlp_backward: zero gradient and linear hand derivative") {
  Rng rng(4);
  const std::size_t widths[] = {3, 2};
  const Activation acts[] = {Activation::linear};
  const Mlp net = Mlp::glorot(widths, acts, rng);
  const Matrix x = oracle::random_matrix(rng, 5, 3);
  const MlpForward fw = mlp_forward(net, x);

  const MlpGradients zero = mlp_backward(net, fw.cache, Matrix(5, 2));
  for (const Matrix* m : zero.flat())
    for (double v : m->values()) CHECK(v == 0.0);

  const MlpGradients ones = mlp_backward(net, fw.cache, Matrix(5, 2, 1.0));
  CHECK(oracle::max_abs_diff(ones.weight[0], matmul(transpose(x), Matrix(5, 2, 1.0))) <= 1e-12);
}

TEST_CASE("mlp_backward: stale cache is a contract error") {
  Rng rng(6);
  const std::size_t widths[] = {3, 2};
  const Activation acts[] = {Activation::relu};
  Mlp net = Mlp::glorot(widths, acts, rng);
  const MlpForward fw = mlp_forward(net, Matrix(2, 3, 1.0));
  net.mutable_layer(0).weight(0, 0) += 1.0;
  CHECK_THROWS_AS(mlp_backward(net, fw.cache, Matrix(2, 2)), ContractError);

  Mlp other = net;
  const MlpForward fo = mlp_forward(other, Matrix(2, 3, 1.0));
  CHECK_THROWS_AS(mlp_backward(net, fo.cache, Matrix(2, 2)), ContractError);
}

TEST_CASE("adam: first step is lr * mhat / (sqrt(vhat) + eps)") {
  AdamState state(AdamConfig{0.001, 0.9, 0.999, 1e-8});
  Matrix p(1, 1, 0.5);
  const Matrix g(1, 1, 1.0);
  Matrix* params[] = {&p};
  const Matrix* grads[] = {&g};
  adam_step(state, params, grads);
  const double mhat = 0.1 * 1.0 / (1.0 - 0.9);
  const double vhat = 0.001 * 1.0 / (1.0 - 0.999);
  const double expected = 0.5 - 0.001 * mhat / (std::sqrt(vhat) + 1e-8);
  CHECK(std::abs(p(0, 0) - expected) <= 1e-12);
  CHECK(std::abs((0.5 - p(0, 0)) - 0.001) <= 1e-6);
  CHECK(state.step() == 1);
  CHECK(state.first_moment()[0].same_shape(p));
}

TEST_CASE("adam: zero gradient leaves parameters, shape mismatch rejected") {
  AdamState state;
  Matrix p = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix keep = p;
  const Matrix g(2, 2);
  Matrix* params[] = {&p};
  const Matrix* grads[] = {&g};
  adam_step(state, params, grads);
  CHECK(p == keep);

  const Matrix wrong(1, 2);
  const Matrix* bad[] = {&wrong};
  CHECK_THROWS_AS(adam_step(state, params, bad), ContractError);
  CHECK(state.step() == 1);
}

TEST_CASE("adam: identical runs give identical trajectories") {
  auto run = [] {
    Rng rng(8);
    const std::size_t widths[] = {4, 6, 2};
    const Activation acts[] = {Activation::leaky_relu, Activation::linear};
    Mlp net = Mlp::glorot(widths, acts, rng);
    AdamState state;
    const Matrix x = sample_standard_normal(rng, 16, 4);
    for (int step = 0; step < 25; ++step) {
      const MlpForward fw = mlp_forward(net, x);
      const MlpGradients g = mlp_backward(net, fw.cache, fw.output);
      state.update(net.parameters(), g.flat());
    }
    return net;
  };
  CHECK(run() == run());
}

TEST_CASE("adam: minimises a quadratic") {
  AdamState state(AdamConfig{0.05, 0.9, 0.999, 1e-8});
  Matrix p = Matrix::from_rows({{3.0, -2.0}});
  for (int i = 0; i < 2000; ++i) {
    const Matrix g = scaled(p, 2.0);
    Matrix* params[] = {&p};
    const Matrix* grads[] = {&g};
    state.update(params, grads);
  }
  CHECK(std::abs(p(0, 0)) < 1e-3);
  CHECK(std::abs(p(0, 1)) < 1e-3);
}

TEST_CASE("parallel: CFZ_THREADS parsing") {
  CHECK(parse_thread_count("3") == 3);
  CHECK(parse_thread_count(nullptr) == 1);
  CHECK(parse_thread_count("") == 1);
  CHECK(parse_thread_count("zero") == 1);
  CHECK(parse_thread_count("-2") == 1);
  CHECK(parse_thread_count("4x") == 1);
}
