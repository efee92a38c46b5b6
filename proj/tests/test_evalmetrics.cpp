#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "cfz/evalmetrics.hpp"
#include "oracles.hpp"

using namespace cfz;

TEST_CASE("per-class top-1: hand cases and permutation invariance") {
  const std::vector<std::uint32_t> labels{0, 0, 0, 1};
  const std::vector<std::uint32_t> pred{0, 0, 1, 1};
  const PerClassAccuracy r = per_class_top1(pred, labels);
  CHECK(r.per_class.at(0) == doctest::Approx(2.0 / 3.0));
  CHECK(r.per_class.at(1) == 1.0);
  CHECK(r.mean == doctest::Approx(0.8333).epsilon(1e-4));
  CHECK(per_class_top1(labels, labels).mean == 1.0);

  Rng rng(4);
  std::vector<std::uint32_t> y(60), p(60);
  for (std::size_t i = 0; i < 60; ++i) {
    y[i] = static_cast<std::uint32_t>(rng.index(5));
    p[i] = rng.uniform() < 0.6 ? y[i] : static_cast<std::uint32_t>(rng.index(5));
  }
  const double before = per_class_top1(p, y).mean;
  std::vector<std::size_t> order(60);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<std::uint32_t> ys, ps;
  for (std::size_t i : order) {
    ys.push_back(y[i]);
    ps.push_back(p[i]);
  }
  CHECK(per_class_top1(ps, ys).mean == doctest::Approx(before).epsilon(1e-15));

  double sum = 0.0;
  const auto full = per_class_top1(p, y);
  for (const auto& [c, a] : full.per_class) sum += a;
  CHECK(full.mean == doctest::Approx(sum / static_cast<double>(full.per_class.size())));

  CHECK_THROWS(per_class_top1(std::vector<std::uint32_t>{}, std::vector<std::uint32_t>{}));
  CHECK_THROWS(per_class_top1(pred, std::vector<std::uint32_t>{0, 1}));
}

TEST_CASE("harmonic mean: values, bounds, errors") {
  CHECK(harmonic_mean(0.5, 0.5) == 0.5);
  CHECK(std::abs(harmonic_mean(45.4, 63.8) - 53.0) <= 0.05);
  CHECK(std::abs(harmonic_mean(69.2, 56.8) - 62.4) <= 0.1);
  CHECK(std::abs(harmonic_mean(87.8, 71.6) - 78.8) <= 0.1);
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const double s = rng.uniform(), u = rng.uniform();
    const double h = harmonic_mean(s, u);
    CHECK(h <= 2.0 * std::min(s, u) + 1e-15);
    CHECK(h <= 0.5 * (s + u) + 1e-15);
    CHECK(h == doctest::Approx(2.0 * s * u / (s + u)).epsilon(1e-14));
  }
  CHECK(harmonic_mean(0.0, 0.7) == 0.0);
  CHECK_THROWS_AS(harmonic_mean(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(harmonic_mean(-0.1, 0.5), std::invalid_argument);
}

TEST_CASE("k-means: one cluster is the mean, triplets separate, objective monotone") {
  Rng rng(6);
  const Matrix x = oracle::random_matrix(rng, 12, 3);
  const KMeansResult one = kmeans(x, 1, 1);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 12; ++i) mean += x(i, j);
    CHECK(one.centroids(0, j) == doctest::Approx(mean / 12.0).epsilon(1e-12));
  }

  const Matrix triplets = Matrix::from_rows({{0, 0}, {0.1, 0}, {0, 0.1},
                                             {10, 10}, {10.1, 10}, {10, 10.1},
                                             {-10, 10}, {-10.1, 10}, {-10, 10.1}});
  const KMeansResult r = kmeans(triplets, 3, 2);
  for (std::size_t g = 0; g < 3; ++g) {
    CHECK(r.assignments[3 * g] == r.assignments[3 * g + 1]);
    CHECK(r.assignments[3 * g] == r.assignments[3 * g + 2]);
  }
  CHECK(r.assignments[0] != r.assignments[3]);
  CHECK(r.assignments[0] != r.assignments[6]);
  CHECK(r.assignments[3] != r.assignments[6]);

  const Matrix blob = oracle::random_matrix(rng, 200, 4);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const KMeansResult k = kmeans_single(blob, 6, seed);
    for (std::size_t i = 1; i < k.objective_trace.size(); ++i) {
      CHECK(k.objective_trace[i] <= k.objective_trace[i - 1] + 1e-12);
    }
  }
  CHECK(kmeans(blob, 6, 9).assignments == kmeans(blob, 6, 9).assignments);
  CHECK_THROWS(kmeans(triplets, 0, 1));
  CHECK_THROWS(kmeans(triplets, 10, 1));
}

TEST_CASE("nmi: identity, relabeling, brute-force oracle, independence") {
  const std::vector<std::uint32_t> a{0, 0, 1, 1, 2, 2, 2};
  CHECK(normalized_mutual_information(a, a) == doctest::Approx(1.0).epsilon(1e-14));
  const std::vector<std::uint32_t> relabel{5, 5, 9, 9, 1, 1, 1};
  CHECK(normalized_mutual_information(relabel, a) == doctest::Approx(1.0).epsilon(1e-14));

  Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    std::vector<std::uint32_t> p(300), q(300);
    for (std::size_t i = 0; i < 300; ++i) {
      q[i] = static_cast<std::uint32_t>(rng.index(6));
      p[i] = rng.uniform() < 0.5 ? q[i] : static_cast<std::uint32_t>(rng.index(4));
    }
    CHECK(normalized_mutual_information(p, q) == doctest::Approx(oracle::brute_nmi(p, q)).epsilon(1e-12));
  }

  std::vector<std::uint32_t> u(10000), v(10000);
  for (std::size_t i = 0; i < 10000; ++i) {
    u[i] = static_cast<std::uint32_t>(rng.index(10));
    v[i] = static_cast<std::uint32_t>(rng.index(10));
  }
  CHECK(normalized_mutual_information(u, v) <= 0.02);

  const std::vector<std::uint32_t> flat(7, 3);
  CHECK(normalized_mutual_information(flat, flat) == 1.0);
  CHECK(normalized_mutual_information(flat, a) == 0.0);
  CHECK_THROWS(normalized_mutual_information(std::vector<std::uint32_t>{}, std::vector<std::uint32_t>{}));
}

TEST_CASE("variance stats: hand cases and two-loop oracle") {
  const Matrix same = Matrix::from_rows({{1, 2}, {1, 2}, {5, 5}, {5, 5}});
  const std::vector<std::uint32_t> y{0, 0, 1, 1};
  const VarianceStats z = variance_stats(same, y);
  CHECK(z.intra_class_variance == 0.0);
  CHECK(z.inter_class_mean_distance == doctest::Approx(5.0));

  Rng rng(8);
  const Matrix x = oracle::random_matrix(rng, 40, 3);
  std::vector<std::uint32_t> labels(40);
  for (std::size_t i = 0; i < 40; ++i) labels[i] = static_cast<std::uint32_t>(i % 4);
  double intra = 0.0, inter = 0.0;
  std::vector<std::vector<double>> mu(4, std::vector<double>(3, 0.0));
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 3; ++j) mu[labels[i]][j] += x(i, j) / 10.0;
  for (std::uint32_t c = 0; c < 4; ++c) {
    double s = 0.0;
    for (std::size_t i = 0; i < 40; ++i) {
      if (labels[i] != c) continue;
      for (std::size_t j = 0; j < 3; ++j) s += (x(i, j) - mu[c][j]) * (x(i, j) - mu[c][j]);
    }
    intra += s / 10.0 / 4.0;
  }
  int pairs = 0;
  for (std::uint32_t a = 0; a < 4; ++a)
    for (std::uint32_t b = a + 1; b < 4; ++b) {
      double d = 0.0;
      for (std::size_t j = 0; j < 3; ++j) d += (mu[a][j] - mu[b][j]) * (mu[a][j] - mu[b][j]);
      inter += std::sqrt(d);
      ++pairs;
    }
  inter /= pairs;
  const VarianceStats v = variance_stats(x, labels);
  CHECK(std::abs(v.intra_class_variance - intra) <= 1e-10);
  CHECK(std::abs(v.inter_class_mean_distance - inter) <= 1e-10);

  const Matrix lone = Matrix::from_rows({{0, 0}, {2, 0}, {7, 7}});
  const VarianceStats s = variance_stats(lone, std::vector<std::uint32_t>{0, 0, 1});
  CHECK(s.skipped_classes == std::vector<std::uint32_t>{1});
  CHECK(s.intra_class_variance == doctest::Approx(1.0));
}

TEST_CASE("pca: leading components match the Jacobi oracle") {
  Rng rng(9);
  Matrix x = oracle::random_matrix(rng, 80, 5);
  for (std::size_t i = 0; i < 80; ++i) x(i, 0) *= 4.0, x(i, 2) *= 2.5;
  const Matrix proj = pca_project_2d(x);
  REQUIRE(proj.rows() == 80);
  REQUIRE(proj.cols() == 2);

  Matrix centred = x;
  for (std::size_t j = 0; j < 5; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < 80; ++i) m += x(i, j);
    m /= 80.0;
    for (std::size_t i = 0; i < 80; ++i) centred(i, j) -= m;
  }
  const Matrix cov = oracle::naive_matmul(transpose(centred), centred);
  auto [values, vectors] = oracle::jacobi_eigen(cov);
  for (std::size_t c = 0; c < 2; ++c) {
    // same sign convention: largest-magnitude loading positive
    std::size_t big = 0;
    for (std::size_t j = 1; j < 5; ++j)
      if (std::abs(vectors(j, c)) > std::abs(vectors(big, c))) big = j;
    const double sign = vectors(big, c) < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < 80; ++i) {
      double expected = 0.0;
      for (std::size_t j = 0; j < 5; ++j) expected += centred(i, j) * vectors(j, c) * sign;
      CHECK(proj(i, c) == doctest::Approx(expected).epsilon(1e-8).scale(1.0));
    }
  }
  CHECK(values[0] > values[1]);
}

TEST_CASE("projection export round trip") {
  const std::filesystem::path p = std::filesystem::temp_directory_path() / "cfz_export.tsv";
  const std::vector<ProjectionPoint> pts{{0.5, -1.25, 3, "real"}, {2.0, 1e-3, 7, "synthesized"}};
  write_projection_export(p, pts);
  const auto back = read_projection_export(p);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].x == pts[i].x);
    CHECK(back[i].y == pts[i].y);
    CHECK(back[i].label == pts[i].label);
    CHECK(back[i].source == pts[i].source);
  }
}
