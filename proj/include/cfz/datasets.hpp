#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfz/binary_io.hpp"
#include "cfz/matrix.hpp"
#include "cfz/rng.hpp"

namespace cfz {

/// Seen/unseen class partition plus the rows held out for testing.
struct SplitSpec {
  std::vector<std::uint32_t> seen;
  std::vector<std::uint32_t> unseen;
  std::vector<std::uint32_t> test_rows;

  /// Throws DataError(validation) on overlap, duplicates or ids >= num_classes.
  void validate(std::size_t num_classes, std::size_t num_rows) const;
  bool operator==(const SplitSpec&) const = default;
};

struct Dataset {
  Matrix features;                    // n × d_f
  std::vector<std::uint32_t> labels;  // one class id per row
  Matrix attributes;                  // K × d_a
  SplitSpec split;

  std::size_t num_classes() const noexcept { return attributes.rows(); }
  std::size_t feature_dim() const noexcept { return features.cols(); }
  std::size_t attribute_dim() const noexcept { return attributes.cols(); }

  /// Label range, partition disjointness, and "every training row is seen".
  void validate() const;

  /// Rows not held out for testing; all belong to seen classes.
  std::vector<std::size_t> train_rows() const;
  std::vector<std::size_t> test_rows_seen() const;
  std::vector<std::size_t> test_rows_unseen() const;

  bool operator==(const Dataset&) const = default;
};

/// Rows of `rows` restricted to the given ids, plus their labels.
struct LabeledRows {
  Matrix features;
  std::vector<std::uint32_t> labels;
};
LabeledRows gather(const Dataset& data, std::span<const std::size_t> rows);

// --- file formats -----------------------------------------------------------
// Feature file: "CFZ1", u32 rows, u32 cols, rows·cols f32, all little-endian.
// Label file:   "CLZ1", u32 n, n × u32.
// Split file:   text lines "seen: a,b,…", "unseen: …", "test: …".

std::vector<std::uint8_t> encode_feature_file(const Matrix& m);
Matrix decode_feature_file(std::span<const std::uint8_t> bytes, const std::string& source = "feature file");
void save_feature_file(const std::filesystem::path& path, const Matrix& m);
Matrix load_feature_file(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_label_file(std::span<const std::uint32_t> labels);
std::vector<std::uint32_t> decode_label_file(std::span<const std::uint8_t> bytes,
                                             const std::string& source = "label file");
void save_label_file(const std::filesystem::path& path, std::span<const std::uint32_t> labels);
std::vector<std::uint32_t> load_label_file(const std::filesystem::path& path);

std::string format_split(const SplitSpec& split);
/// Parses and checks disjointness/duplicates; range checks need the dataset.
SplitSpec parse_split(std::string_view text, const std::string& source = "split file");
void save_split(const std::filesystem::path& path, const SplitSpec& split);
SplitSpec load_split(const std::filesystem::path& path);

/// The four files of a dataset sharing `prefix`:
/// <prefix>.features.cfz, <prefix>.labels.clz, <prefix>.attributes.cfz, <prefix>.split.txt
struct DatasetPaths {
  std::filesystem::path features, labels, attributes, split;
  static DatasetPaths from_prefix(const std::filesystem::path& prefix);
};
void save_dataset(const DatasetPaths& paths, const Dataset& data);
Dataset load_dataset(const DatasetPaths& paths);

/// Rounds every entry to the nearest 32-bit real, matching what a file round-trip stores.
void round_to_float32(Matrix& m) noexcept;

// --- presets and synthetic data ---------------------------------------------

struct BenchmarkPreset {
  std::string name;
  std::size_t attribute_dim;
  std::size_t num_seen;
  std::size_t num_unseen;
  std::size_t projected_dim;
  double alpha;
};

/// cub, sun, awa2 (attribute widths, class counts, d_p, α).
BenchmarkPreset benchmark_preset(std::string_view name);

struct SyntheticSpec {
  std::size_t k_seen = 15;
  std::size_t k_unseen = 5;
  std::size_t d_a = 16;
  std::size_t d_f = 64;
  std::size_t samples_per_class = 100;
  double cluster_spread = 0.3;
  double overlap = 0.3;               // 0 keeps class means, 1 collapses them to the global mean
  double seen_test_fraction = 0.2;    // share of each seen class held out for GZSL testing
  std::size_t nuisance_rank = 4;      // shared high-variance directions unrelated to class
  double nuisance_scale = 4.0;        // their standard deviation, in units of cluster_spread
  std::uint64_t seed = 7;

  void validate() const;
};

/// Attributes a_k ~ U[0,1]^{d_a}; features A·a_k (pulled toward the global mean by
/// `overlap`) plus cluster_spread·(N(0, I) + nuisance_scale·u·B), where B holds
/// `nuisance_rank` random unit directions and u ~ N(0, I). Values are rounded to 32-bit reals.
Dataset generate_synthetic(const SyntheticSpec& spec, Rng& rng);
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace cfz
