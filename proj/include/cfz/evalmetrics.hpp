#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cfz/matrix.hpp"

namespace cfz {

struct PerClassAccuracy {
  std::map<std::uint32_t, double> per_class;
  double mean = 0.0;  // unweighted mean over classes
};

/// Accuracy within each ground-truth class, then averaged with equal class weight.
PerClassAccuracy per_class_top1(std::span<const std::uint32_t> predictions,
                                std::span<const std::uint32_t> labels);

/// 2su / (s + u). Throws std::invalid_argument when s + u == 0 or either is negative.
double harmonic_mean(double s, double u);

struct KMeansResult {
  std::vector<std::uint32_t> assignments;
  Matrix centroids;                      // k × d
  double objective = 0.0;                // within-cluster sum of squares
  std::vector<double> objective_trace;   // after each assignment step
  std::size_t iterations = 0;
};

struct KMeansOptions {
  std::size_t max_iterations = 300;
  std::size_t restarts = 10;
};

/// Lloyd's algorithm from a k-means++ start; one run.
KMeansResult kmeans_single(const Matrix& features, std::size_t k, std::uint64_t seed,
                           std::size_t max_iterations = 300);
/// Best objective over `options.restarts` runs with seeds derived from `seed`.
KMeansResult kmeans(const Matrix& features, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options = {});

enum class NmiNormalization { arithmetic, geometric };

/// I(A; L) / mean(H(A), H(L)) in nats. When both labelings have zero entropy
/// the value is 1 (the partitions coincide); when only one does, it is 0.
double normalized_mutual_information(std::span<const std::uint32_t> assignments,
                                     std::span<const std::uint32_t> labels,
                                     NmiNormalization norm = NmiNormalization::arithmetic);

struct VarianceStats {
  double intra_class_variance = 0.0;       // mean over classes of mean ‖x − μ_c‖²
  double inter_class_mean_distance = 0.0;  // mean pairwise ‖μ_a − μ_b‖
  std::vector<std::uint32_t> skipped_classes;  // singletons, excluded from the intra term
};
VarianceStats variance_stats(const Matrix& features, std::span<const std::uint32_t> labels);

/// Convenience: k-means with k = number of distinct labels, scored by NMI.
double clusterability_nmi(const Matrix& features, std::span<const std::uint32_t> labels,
                          std::uint64_t seed, const KMeansOptions& options = {});

/// Projection onto the two leading principal components of the centred data.
/// Each component's largest-magnitude loading is made positive.
Matrix pca_project_2d(const Matrix& features);

struct MetricsReport {
  std::map<std::uint32_t, double> per_class_accuracy;
  double mean_accuracy = 0.0;
  double nmi = 0.0;
  double intra_class_variance = 0.0;
  double inter_class_mean_distance = 0.0;
};

/// One point of a 2-D export: coordinates, class id, and whether it is real or synthesized.
struct ProjectionPoint {
  double x = 0.0;
  double y = 0.0;
  std::uint32_t label = 0;
  std::string source;  // "real" or "synthesized"
};

/// Tab-separated `x  y  label  source` rows.
void write_projection_export(const std::filesystem::path& path, std::span<const ProjectionPoint> points);
std::vector<ProjectionPoint> read_projection_export(const std::filesystem::path& path);

}  // namespace cfz
