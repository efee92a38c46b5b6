#include "cfz/evalmetrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cfz/binary_io.hpp"
#include "cfz/rng.hpp"

namespace cfz {

PerClassAccuracy per_class_top1(std::span<const std::uint32_t> predictions,
                                std::span<const std::uint32_t> labels) {
  if (labels.empty()) throw std::invalid_argument("per_class_top1: empty input");
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("per_class_top1: " + std::to_string(predictions.size()) +
                                " predictions for " + std::to_string(labels.size()) + " labels");
  }
  std::map<std::uint32_t, std::pair<std::size_t, std::size_t>> tally;  // correct, total
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& t = tally[labels[i]];
    t.second += 1;
    if (predictions[i] == labels[i]) t.first += 1;
  }
  PerClassAccuracy out;
  double total = 0.0;
  for (const auto& [cls, t] : tally) {
    const double acc = static_cast<double>(t.first) / static_cast<double>(t.second);
    out.per_class[cls] = acc;
    total += acc;
  }
  out.mean = total / static_cast<double>(tally.size());
  return out;
}

double harmonic_mean(double s, double u) {
  if (s < 0.0 || u < 0.0) throw std::invalid_argument("harmonic_mean: accuracies must be >= 0");
  if (s + u == 0.0) throw std::invalid_argument("harmonic_mean: s + u is zero");
  return 2.0 * s * u / (s + u);
}

namespace {

double assign(const Matrix& x, const Matrix& centroids, std::vector<std::uint32_t>& assignments) {
  double objective = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = squared_distance(x.row(i), centroids.row(c));
      if (d < best) {
        best = d;
        arg = static_cast<std::uint32_t>(c);
      }
    }
    assignments[i] = arg;
    objective += best;
  }
  return objective;
}

Matrix plus_plus_init(const Matrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  Matrix centroids(k, x.cols());
  std::size_t first = rng.index(n);
  std::copy(x.row(first).begin(), x.row(first).end(), centroids.row(0).begin());
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = squared_distance(x.row(i), centroids.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : dist) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= dist[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.index(n);
    }
    std::copy(x.row(pick).begin(), x.row(pick).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) dist[i] = std::min(dist[i], squared_distance(x.row(i), centroids.row(c)));
  }
  return centroids;
}

}  // namespace

KMeansResult kmeans_single(const Matrix& features, std::size_t k, std::uint64_t seed,
                           std::size_t max_iterations) {
  const std::size_t n = features.rows();
  if (k == 0) throw std::invalid_argument("kmeans: k must be >= 1");
  if (k > n) throw std::invalid_argument("kmeans: k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " points");
  Rng rng(seed);
  KMeansResult r;
  r.centroids = plus_plus_init(features, k, rng);
  r.assignments.assign(n, 0);
  r.objective = assign(features, r.centroids, r.assignments);
  r.objective_trace.push_back(r.objective);

  const std::size_t d = features.cols();
  for (std::size_t it = 0; it < max_iterations; ++it) {
    Matrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = r.assignments[i];
      counts[c] += 1;
      auto s = sums.row(c);
      const auto xi = features.row(i);
      for (std::size_t j = 0; j < d; ++j) s[j] += xi[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Re-seed an empty cluster at the point farthest from its centroid.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double dd = squared_distance(features.row(i), r.centroids.row(r.assignments[i]));
          if (dd > far_d) {
            far_d = dd;
            far = i;
          }
        }
        std::copy(features.row(far).begin(), features.row(far).end(), r.centroids.row(c).begin());
        r.assignments[far] = static_cast<std::uint32_t>(c);
        continue;
      }
      auto cen = r.centroids.row(c);
      const auto s = sums.row(c);
      for (std::size_t j = 0; j < d; ++j) cen[j] = s[j] / static_cast<double>(counts[c]);
    }
    std::vector<std::uint32_t> previous = r.assignments;
    r.objective = assign(features, r.centroids, r.assignments);
    r.objective_trace.push_back(r.objective);
    r.iterations = it + 1;
    if (previous == r.assignments) break;
  }
  return r;
}

KMeansResult kmeans(const Matrix& features, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options) {
  KMeansResult best;
  bool have = false;
  for (std::size_t run = 0; run < std::max<std::size_t>(options.restarts, 1); ++run) {
    KMeansResult r = kmeans_single(features, k, derive_seed(seed, run), options.max_iterations);
    if (!have || r.objective < best.objective) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

double normalized_mutual_information(std::span<const std::uint32_t> assignments,
                                     std::span<const std::uint32_t> labels, NmiNormalization norm) {
  if (assignments.empty() || labels.empty()) throw std::invalid_argument("nmi: empty labeling");
  if (assignments.size() != labels.size()) throw std::invalid_argument("nmi: labelings differ in length");
  const double n = static_cast<double>(labels.size());
  std::map<std::uint32_t, double> ca, cl;
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> joint;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ca[assignments[i]] += 1.0;
    cl[labels[i]] += 1.0;
    joint[{assignments[i], labels[i]}] += 1.0;
  }
  auto entropy = [n](const std::map<std::uint32_t, double>& counts) {
    double h = 0.0;
    for (const auto& [key, c] : counts) {
      const double p = c / n;
      h -= p * std::log(p);
    }
    return h;
  };
  const double ha = entropy(ca);
  const double hl = entropy(cl);
  if (ca.size() == 1 && cl.size() == 1) return 1.0;
  if (ha == 0.0 || hl == 0.0) return 0.0;
  double mi = 0.0;
  for (const auto& [key, c] : joint) {
    const double pij = c / n;
    mi += pij * std::log(pij * n * n / (ca[key.first] * cl[key.second]));
  }
  const double denom = norm == NmiNormalization::arithmetic ? 0.5 * (ha + hl) : std::sqrt(ha * hl);
  return std::clamp(mi / denom, 0.0, 1.0);
}

VarianceStats variance_stats(const Matrix& features, std::span<const std::uint32_t> labels) {
  if (features.rows() != labels.size()) throw std::invalid_argument("variance_stats: label count mismatch");
  std::map<std::uint32_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  if (members.empty()) throw std::invalid_argument("variance_stats: no samples");

  VarianceStats s;
  std::vector<Matrix> means;
  double intra_total = 0.0;
  std::size_t intra_classes = 0;
  for (const auto& [cls, rows] : members) {
    const Matrix mean = column_means(select_rows(features, rows));
    means.push_back(mean);
    if (rows.size() < 2) {
      s.skipped_classes.push_back(cls);
      continue;
    }
    double acc = 0.0;
    for (std::size_t r : rows) acc += squared_distance(features.row(r), mean.row(0));
    intra_total += acc / static_cast<double>(rows.size());
    ++intra_classes;
  }
  s.intra_class_variance = intra_classes == 0 ? 0.0 : intra_total / static_cast<double>(intra_classes);
  double inter_total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < means.size(); ++a) {
    for (std::size_t b = a + 1; b < means.size(); ++b) {
      inter_total += std::sqrt(squared_distance(means[a].row(0), means[b].row(0)));
      ++pairs;
    }
  }
  s.inter_class_mean_distance = pairs == 0 ? 0.0 : inter_total / static_cast<double>(pairs);
  return s;
}

double clusterability_nmi(const Matrix& features, std::span<const std::uint32_t> labels,
                          std::uint64_t seed, const KMeansOptions& options) {
  const std::set<std::uint32_t> distinct(labels.begin(), labels.end());
  const KMeansResult r = kmeans(features, distinct.size(), seed, options);
  return normalized_mutual_information(r.assignments, labels);
}

Matrix pca_project_2d(const Matrix& features) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (n < 2) throw std::invalid_argument("pca_project_2d: need at least two rows");
  const Matrix mean = column_means(features);
  Eigen::MatrixXd centered(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) centered(i, j) = features(i, j) - mean(0, j);
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  Matrix out(n, 2);
  if (cov.cwiseAbs().maxCoeff() == 0.0) return out;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  // Eigenvalues ascend; take the last two columns.
  for (std::size_t comp = 0; comp < std::min<std::size_t>(2, d); ++comp) {
    Eigen::VectorXd v = solver.eigenvectors().col(static_cast<Eigen::Index>(d - 1 - comp));
    if (solver.eigenvalues()(static_cast<Eigen::Index>(d - 1 - comp)) <= 0.0) continue;
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    const Eigen::VectorXd proj = centered * v;
    for (std::size_t i = 0; i < n; ++i) out(i, comp) = proj(static_cast<Eigen::Index>(i));
  }
  return out;
}

void write_projection_export(const std::filesystem::path& path, std::span<const ProjectionPoint> points) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(DataErrc::io, "cannot write " + path.string());
  out.precision(17);
  for (const auto& p : points) out << p.x << '\t' << p.y << '\t' << p.label << '\t' << p.source << '\n';
  if (!out) throw DataError(DataErrc::io, "short write to " + path.string());
}

std::vector<ProjectionPoint> read_projection_export(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataErrc::io, "cannot open " + path.string());
  std::vector<ProjectionPoint> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream is(line);
    ProjectionPoint p;
    if (!(is >> p.x >> p.y >> p.label >> p.source) || (p.source != "real" && p.source != "synthesized")) {
      throw DataError(DataErrc::parse, path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace cfz
