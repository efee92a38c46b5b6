#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "cfz/objectives.hpp"
#include "cfz/zslmodel.hpp"
#include "oracles.hpp"

using namespace cfz;

namespace {

std::vector<std::size_t> random_labels(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> y(n);
  for (auto& v : y) v = static_cast<std::size_t>(rng.index(k));
  return y;
}

// −s(h, w_y) + log Σ_k exp(s(h, w_k)) with s the dot product, summed the slow way.
double similarity_form_cce(const Matrix& h, const Matrix& w, const std::vector<std::size_t>& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < h.rows(); ++i) {
    std::vector<double> s(w.cols(), 0.0);
    for (std::size_t k = 0; k < w.cols(); ++k)
      for (std::size_t d = 0; d < h.cols(); ++d) s[k] += h(i, d) * w(d, k);
    const double top = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double v : s) z += std::exp(v - top);
    total += -s[y[i]] + top + std::log(z);
  }
  return total / static_cast<double>(h.rows());
}

ZslModelParams small_model(Rng& rng, Activation decoder_output) {
  ModelDims dims;
  dims.feature_dim = 5;
  dims.projected_dim = 4;
  dims.attribute_dim = 3;
  dims.num_seen = 3;
  dims.hidden_dim = 6;
  ModelOptions options;
  options.decoder_output = decoder_output;
  return ZslModelParams::create(dims, options, {0, 1, 2}, rng);
}

JointBatch random_batch(Rng& rng, const ZslModelParams& p, std::size_t n) {
  JointBatch b;
  b.features = oracle::random_matrix(rng, n, p.dims.feature_dim);
  b.attributes = oracle::random_matrix(rng, n, p.dims.attribute_dim);
  b.labels = random_labels(rng, n, p.dims.num_seen);
  b.latent_noise = sample_standard_normal(rng, n, p.dims.latent_dim());
  b.target_noise = sample_standard_normal(rng, n, p.dims.projected_dim);
  return b;
}

}  // namespace

TEST_CASE("kl: closed-form examples and non-negativity") {
  CHECK(kl_to_standard_normal(Matrix(2, 3), Matrix(2, 3)) == 0.0);
  CHECK(kl_to_standard_normal(Matrix::from_rows({{1, 0}}), Matrix::from_rows({{0, 0}})) ==
        doctest::Approx(0.5).epsilon(1e-15));

  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const Matrix mu = oracle::random_matrix(rng, 4, 3, 2.0);
    const Matrix lv = oracle::random_matrix(rng, 4, 3, 2.0);
    CHECK(kl_to_standard_normal(mu, lv) > 0.0);
  }
}

TEST_CASE("kl: Monte-Carlo oracle within 2%") {
  Rng rng(5);
  const Matrix mu = oracle::random_matrix(rng, 2, 3, 1.5);
  const Matrix lv = oracle::random_matrix(rng, 2, 3, 1.0);
  const std::size_t draws = 1000000;
  // E_q[log q(z) − log p(z)] per row, averaged over rows
  double estimate = 0.0;
  for (std::size_t r = 0; r < mu.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t s = 0; s < draws; ++s) {
      double log_ratio = 0.0;
      for (std::size_t d = 0; d < mu.cols(); ++d) {
        const double e = rng.normal();
        const double sd = std::exp(0.5 * lv(r, d));
        const double z = mu(r, d) + sd * e;
        log_ratio += -0.5 * e * e - std::log(sd) + 0.5 * z * z;
      }
      acc += log_ratio;
    }
    estimate += acc / static_cast<double>(draws);
  }
  estimate /= static_cast<double>(mu.rows());
  const double closed = kl_to_standard_normal(mu, lv);
  CHECK(std::abs(closed - estimate) <= 0.02 * closed);
}

TEST_CASE("kl: gradient matches finite differences") {
  Rng rng(8);
  Matrix mu = oracle::random_matrix(rng, 3, 4);
  Matrix lv = oracle::random_matrix(rng, 3, 4);
  const KlGradient g = kl_to_standard_normal_grad(mu, lv);
  CHECK(g.value == doctest::Approx(kl_to_standard_normal(mu, lv)).epsilon(1e-14));
  auto f = [&] { return kl_to_standard_normal(mu, lv); };
  CHECK(oracle::relative_error(g.d_mu, oracle::finite_difference(f, mu)) <= 1e-4);
  CHECK(oracle::relative_error(g.d_log_variance, oracle::finite_difference(f, lv)) <= 1e-4);
}

TEST_CASE("reconstruction: examples, loop oracle, gradient") {
  Rng rng(9);
  const Matrix a = oracle::random_matrix(rng, 3, 5);
  CHECK(reconstruction_loss(a, a) == 0.0);
  Matrix ones(4, 6);
  for (double& v : ones.values()) v = 1.0;
  CHECK(reconstruction_loss(Matrix(4, 6), ones) == 1.0);

  Matrix out = oracle::random_matrix(rng, 3, 5);
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j) sum += (a(i, j) - out(i, j)) * (a(i, j) - out(i, j));
  CHECK(reconstruction_loss(a, out) == doctest::Approx(sum / 15.0).epsilon(1e-14));

  auto f = [&] { return reconstruction_loss(a, out); };
  CHECK(oracle::relative_error(reconstruction_loss_grad(a, out), oracle::finite_difference(f, out)) <= 1e-4);
  CHECK_THROWS_AS(reconstruction_loss(a, Matrix(3, 4)), ShapeError);
}

TEST_CASE("cce: identical columns give ln 2") {
  Rng rng(10);
  Matrix w(4, 2);
  for (std::size_t d = 0; d < 4; ++d) w(d, 0) = w(d, 1) = rng.uniform(-1.0, 1.0);
  const Matrix h = oracle::random_matrix(rng, 6, 4, 3.0);
  const auto y = random_labels(rng, 6, 2);
  CHECK(cce_loss(h, w, y).loss.total == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("cce: dot-product form equals the similarity reformulation") {
  Rng rng(12);
  for (int t = 0; t < 25; ++t) {
    const std::size_t n = 1 + rng.index(8), d = 1 + rng.index(6), k = 1 + rng.index(5);
    const Matrix h = oracle::random_matrix(rng, n, d, 4.0);
    const Matrix w = oracle::random_matrix(rng, d, k, 4.0);
    const auto y = random_labels(rng, n, k);
    CHECK(std::abs(cce_loss(h, w, y).loss.total - similarity_form_cce(h, w, y)) <= 1e-10);
  }
}

TEST_CASE("cce: gradients and label range") {
  Rng rng(13);
  Matrix h = oracle::random_matrix(rng, 5, 4);
  Matrix w = oracle::random_matrix(rng, 4, 3);
  const auto y = random_labels(rng, 5, 3);
  const auto r = cce_loss(h, w, y);
  auto f = [&] { return cce_loss(h, w, y).loss.total; };
  CHECK(oracle::relative_error(r.d_features, oracle::finite_difference(f, h)) <= 1e-4);
  CHECK(oracle::relative_error(r.d_weights, oracle::finite_difference(f, w)) <= 1e-4);
  const std::vector<std::size_t> bad{0, 1, 3, 0, 0};
  CHECK_THROWS(cce_loss(h, w, bad));
}

TEST_CASE("gaussian similarity: hand values and homogeneity in gamma") {
  const std::vector<double> h{1.0, 2.0}, w{0.0, 1.0};
  CHECK(gaussian_similarity(h, h, 0.7) == 0.0);
  CHECK(gaussian_similarity(h, w, 1.0) == -2.0);
  CHECK(gaussian_similarity(h, w, 3.0) == 3.0 * gaussian_similarity(h, w, 1.0));
}

TEST_CASE("gaussian loss: one class vanishes, equidistant pair gives ln 2") {
  Rng rng(14);
  const Matrix h = oracle::random_matrix(rng, 7, 3, 5.0);
  const Matrix w1 = oracle::random_matrix(rng, 3, 1);
  const std::vector<std::size_t> zeros(7, 0);
  CHECK(std::abs(gaussian_similarity_loss(h, w1, zeros, 0.3).loss.total) <= 1e-12);

  const Matrix point = Matrix::from_rows({{0.0, 0.0}});
  const Matrix w2 = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});  // columns (1,0) and (0,1)
  const std::vector<std::size_t> y{1};
  CHECK(gaussian_similarity_loss(point, w2, y, 1.0).loss.total ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("gaussian loss: invariant to a common translation") {
  Rng rng(15);
  for (int t = 0; t < 10; ++t) {
    const Matrix h = oracle::random_matrix(rng, 6, 4, 2.0);
    const Matrix w = oracle::random_matrix(rng, 4, 3, 2.0);
    const auto y = random_labels(rng, 6, 3);
    Matrix shift = oracle::random_matrix(rng, 1, 4, 10.0);
    Matrix hs = h, ws = w;
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t d = 0; d < 4; ++d) hs(i, d) += shift(0, d);
    for (std::size_t d = 0; d < 4; ++d)
      for (std::size_t k = 0; k < 3; ++k) ws(d, k) += shift(0, d);
    CHECK(std::abs(gaussian_similarity_loss(h, w, y, 0.4).loss.total -
                   gaussian_similarity_loss(hs, ws, y, 0.4).loss.total) <= 1e-9);
  }
}

TEST_CASE("gaussian loss: gradients") {
  Rng rng(16);
  for (double gamma : {0.05, 1.0}) {
    Matrix h = oracle::random_matrix(rng, 5, 4);
    Matrix w = oracle::random_matrix(rng, 4, 3);
    const auto y = random_labels(rng, 5, 3);
    const auto r = gaussian_similarity_loss(h, w, y, gamma);
    auto f = [&] { return gaussian_similarity_loss(h, w, y, gamma).loss.total; };
    CHECK(oracle::relative_error(r.d_features, oracle::finite_difference(f, h)) <= 1e-4);
    CHECK(oracle::relative_error(r.d_weights, oracle::finite_difference(f, w)) <= 1e-4);
  }
}

TEST_CASE("classifier losses: uniform predictor, composition, shared head") {
  Rng rng(17);
  const std::array<std::size_t, 2> widths{4, 5};
  const std::array<Activation, 1> acts{Activation::linear};
  Mlp zero = Mlp::glorot(widths, acts, rng);
  for (Matrix* p : zero.parameters()) *p = Matrix(p->rows(), p->cols());
  const Matrix x = oracle::random_matrix(rng, 6, 4);
  const auto y = random_labels(rng, 6, 5);
  CHECK(classification_loss_projected(x, zero, y).loss.total == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  CHECK(classification_loss_reconstructed(x, zero, y).loss.total ==
        doctest::Approx(std::log(5.0)).epsilon(1e-12));

  const Mlp c = Mlp::glorot(widths, acts, rng);
  SoftmaxCrossEntropy direct = softmax_cross_entropy(mlp_apply(c, x), y);
  CHECK(classification_loss_projected(x, c, y).loss.total == direct.value);
  CHECK(classification_loss_reconstructed(x, c, y).loss.total ==
        classification_loss_projected(x, c, y).loss.total);
}

TEST_CASE("classifier loss: decreases as the margin grows") {
  const std::array<std::size_t, 2> widths{2, 2};
  const std::array<Activation, 1> acts{Activation::linear};
  Rng rng(18);
  Mlp c = Mlp::glorot(widths, acts, rng);
  const Matrix x = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  const std::vector<std::size_t> y{0, 1};
  double previous = INFINITY;
  for (double margin : {0.0, 1.0, 4.0, 16.0, 64.0}) {
    c.mutable_layer(0).weight = Matrix::from_rows({{margin, 0.0}, {0.0, margin}});
    const double v = classification_loss_projected(x, c, y).loss.total;
    CHECK(v < previous);
    previous = v;
  }
  CHECK(previous < 1e-20);
}

TEST_CASE("noise: zero strength is the identity, moments match") {
  Rng rng(19);
  const Matrix x = oracle::random_matrix(rng, 3, 4);
  NoiseSpec off{0.0, Rng(1)};
  CHECK(inject_noise(x, off) == x);
  NoiseSpec negative{-0.1, Rng(1)};
  CHECK_THROWS(inject_noise(x, negative));

  const double alpha = 0.7;
  const Matrix base(100000, 1);
  NoiseSpec spec{alpha, Rng(2)};
  const Matrix out = inject_noise(base, spec);
  double mean = 0.0, sq = 0.0;
  for (double v : out.values()) mean += v;
  mean /= 100000.0;
  for (double v : out.values()) sq += (v - mean) * (v - mean);
  const double var = sq / 99999.0;
  CHECK(std::abs(mean) <= 0.02 * alpha);
  CHECK(std::abs(var - alpha * alpha) <= 0.05 * alpha * alpha);
  CHECK(base == Matrix(100000, 1));
}

TEST_CASE("joint objective: weights and component bookkeeping") {
  Rng rng(20);
  const ZslModelParams p = small_model(rng, Activation::relu);
  const JointBatch b = random_batch(rng, p, 6);

  const JointResult base = joint_objective(p, b, {0.0, 0.0, 0.0, 1.0});
  CHECK(base.loss.total == doctest::Approx(base.loss.components.at("reconstruction") +
                                           base.loss.components.at("kl")).epsilon(1e-14));

  const JointResult full = joint_objective(p, b, {1.0, 0.1, 0.2, 1.0});
  const auto& c = full.loss.components;
  const double hand = c.at("reconstruction") + c.at("kl") + 1.0 * c.at("cls") + 0.1 * c.at("cls_prime");
  CHECK(std::abs(full.loss.total - hand) <= 1e-10);
  CHECK(std::abs(full.loss.total - full.loss.weighted_sum()) <= 1e-10);

  CHECK_THROWS(joint_objective(p, b, {-1.0, 0.1, 0.2, 1.0}));
  CHECK_THROWS(joint_objective(p, b, {1.0, -0.1, 0.2, 1.0}));
  CHECK_THROWS(joint_objective(p, b, {1.0, 0.1, 0.2, -1.0}));
}

TEST_CASE("joint objective: zero weights reproduce the plain CVAE loss per batch") {
  Rng rng(21);
  for (int t = 0; t < 5; ++t) {
    const ZslModelParams p = small_model(rng, Activation::relu);
    const JointBatch b = random_batch(rng, p, 5);
    const JointResult r = joint_objective(p, b, {0.0, 0.0, 0.0, 1.0});

    // Independent assembly: posterior, reparameterised sample, decode, compare with M(F(x)).
    const Posterior post = encode(p, finetune_transform(p, b.features));
    const Matrix z = reparameterize(post.mu, post.log_variance, b.latent_noise);
    const Matrix rec = decode(p, z, b.attributes);
    const double expected = reconstruction_loss(project(p, b.features), rec) +
                            kl_to_standard_normal(post.mu, post.log_variance);
    CHECK(std::abs(r.loss.total - expected) <= 1e-10);
  }
}

TEST_CASE("joint objective: every parameter gradient matches finite differences") {
  Rng rng(22);
  int configs = 0;
  for (Activation out : {Activation::relu, Activation::linear}) {
    for (int t = 0; t < 3; ++t) {
      ZslModelParams p = small_model(rng, out);
      const JointBatch b = random_batch(rng, p, 4);
      const ObjectiveWeights w{rng.uniform(0.0, 2.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
                               rng.uniform(0.1, 1.0)};
      const JointResult r = joint_objective(p, b, w);
      auto f = [&] { return joint_objective(p, b, w).loss.total; };
      auto check_net = [&](Mlp& net, const MlpGradients& g) {
        const auto params = net.parameters();
        const auto grads = g.flat();
        REQUIRE(params.size() == grads.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
          CHECK(oracle::relative_error(*grads[i], oracle::finite_difference(f, *params[i])) <= 1e-4);
        }
      };
      check_net(p.encoder, r.grads.encoder);
      check_net(p.decoder, r.grads.decoder);
      check_net(p.mapping, r.grads.mapping);
      check_net(p.classifier, r.grads.classifier);
      ++configs;
    }
  }
  CHECK(configs == 6);
}
