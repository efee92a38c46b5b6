#include "cfz/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace cfz {
namespace {

constexpr std::string_view kFeatureMagic = "CFZ1";
constexpr std::string_view kLabelMagic = "CLZ1";
// Largest payload a single file may declare (16 GiB).
constexpr std::uint64_t kMaxPayloadBytes = 1ULL << 34;

[[noreturn]] void invalid(const std::string& message) {
  throw DataError(DataErrc::validation, message);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::uint32_t> parse_id_list(std::string_view text, const std::string& where) {
  std::vector<std::uint32_t> ids;
  std::string body = trim(text);
  if (body.empty()) return ids;
  std::size_t start = 0;
  while (start <= body.size()) {
    const std::size_t comma = body.find(',', start);
    const std::string token = trim(std::string_view(body).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start));
    std::uint32_t value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
      throw DataError(DataErrc::parse, where + ": bad id '" + token + "'");
    }
    ids.push_back(value);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return ids;
}

void check_unique(const std::vector<std::uint32_t>& ids, const std::string& what) {
  std::set<std::uint32_t> seen;
  for (std::uint32_t id : ids) {
    if (!seen.insert(id).second) invalid(what + ": id " + std::to_string(id) + " listed twice");
  }
}

}  // namespace

void SplitSpec::validate(std::size_t num_classes, std::size_t num_rows) const {
  check_unique(seen, "split seen");
  check_unique(unseen, "split unseen");
  check_unique(test_rows, "split test");
  const std::set<std::uint32_t> seen_set(seen.begin(), seen.end());
  for (std::uint32_t id : unseen) {
    if (seen_set.count(id)) invalid("split: class " + std::to_string(id) + " is both seen and unseen");
  }
  for (std::uint32_t id : seen) {
    if (id >= num_classes) invalid("split: seen class " + std::to_string(id) + " >= " + std::to_string(num_classes));
  }
  for (std::uint32_t id : unseen) {
    if (id >= num_classes) invalid("split: unseen class " + std::to_string(id) + " >= " + std::to_string(num_classes));
  }
  for (std::uint32_t r : test_rows) {
    if (r >= num_rows) invalid("split: test row " + std::to_string(r) + " >= " + std::to_string(num_rows));
  }
}

void Dataset::validate() const {
  if (features.rows() != labels.size()) {
    invalid("dataset: " + std::to_string(features.rows()) + " feature rows but " +
            std::to_string(labels.size()) + " labels");
  }
  for (std::uint32_t y : labels) {
    if (y >= num_classes()) invalid("dataset: label " + std::to_string(y) + " >= class count " + std::to_string(num_classes()));
  }
  split.validate(num_classes(), features.rows());
  if (split.seen.empty()) invalid("dataset: no seen classes");
  const std::set<std::uint32_t> seen_set(split.seen.begin(), split.seen.end());
  for (std::size_t r : train_rows()) {
    if (!seen_set.count(labels[r])) {
      invalid("dataset: training row " + std::to_string(r) + " has unseen class " + std::to_string(labels[r]));
    }
  }
}

std::vector<std::size_t> Dataset::train_rows() const {
  std::vector<bool> is_test(labels.size(), false);
  for (std::uint32_t r : split.test_rows) {
    if (r < is_test.size()) is_test[r] = true;
  }
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (!is_test[r]) rows.push_back(r);
  }
  return rows;
}

std::vector<std::size_t> Dataset::test_rows_seen() const {
  const std::set<std::uint32_t> seen_set(split.seen.begin(), split.seen.end());
  std::vector<std::size_t> rows;
  for (std::uint32_t r : split.test_rows) {
    if (seen_set.count(labels.at(r))) rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<std::size_t> Dataset::test_rows_unseen() const {
  const std::set<std::uint32_t> unseen_set(split.unseen.begin(), split.unseen.end());
  std::vector<std::size_t> rows;
  for (std::uint32_t r : split.test_rows) {
    if (unseen_set.count(labels.at(r))) rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

LabeledRows gather(const Dataset& data, std::span<const std::size_t> rows) {
  LabeledRows out;
  out.features = select_rows(data.features, rows);
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) out.labels.push_back(data.labels.at(r));
  return out;
}

std::vector<std::uint8_t> encode_feature_file(const Matrix& m) {
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() ||
      m.cols() > std::numeric_limits<std::uint32_t>::max()) {
    throw DataError(DataErrc::count_overflow, "feature file: shape " + m.shape_string() + " exceeds u32 counts");
  }
  ByteWriter w;
  w.magic(kFeatureMagic);
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (double v : m.values()) w.f32(static_cast<float>(v));
  return std::move(w.bytes());
}

Matrix decode_feature_file(std::span<const std::uint8_t> bytes, const std::string& source) {
  ByteReader r(bytes, source);
  r.expect_magic(kFeatureMagic);
  const std::uint64_t rows = r.u32();
  const std::uint64_t cols = r.u32();
  if (rows == 0 || cols == 0) {
    throw DataError(DataErrc::empty_matrix, source + ": header declares " + shape_string(rows, cols));
  }
  const std::uint64_t payload = rows * cols * 4;
  if (payload > kMaxPayloadBytes || payload / 4 / cols != rows) {
    throw DataError(DataErrc::count_overflow, source + ": " + shape_string(rows, cols) + " exceeds the payload limit");
  }
  r.require(payload, "payload");
  Matrix m(rows, cols);
  for (double& v : m.values()) v = static_cast<double>(r.f32());
  r.expect_end();
  return m;
}

void save_feature_file(const std::filesystem::path& path, const Matrix& m) {
  write_file_bytes(path, encode_feature_file(m));
}

Matrix load_feature_file(const std::filesystem::path& path) {
  return decode_feature_file(read_file_bytes(path), path.string());
}

std::vector<std::uint8_t> encode_label_file(std::span<const std::uint32_t> labels) {
  ByteWriter w;
  w.magic(kLabelMagic);
  w.u32(static_cast<std::uint32_t>(labels.size()));
  for (std::uint32_t y : labels) w.u32(y);
  return std::move(w.bytes());
}

std::vector<std::uint32_t> decode_label_file(std::span<const std::uint8_t> bytes, const std::string& source) {
  ByteReader r(bytes, source);
  r.expect_magic(kLabelMagic);
  const std::uint64_t n = r.u32();
  if (n * 4 > kMaxPayloadBytes) throw DataError(DataErrc::count_overflow, source + ": label count too large");
  r.require(n * 4, "labels");
  std::vector<std::uint32_t> labels(n);
  for (auto& y : labels) y = r.u32();
  r.expect_end();
  return labels;
}

void save_label_file(const std::filesystem::path& path, std::span<const std::uint32_t> labels) {
  write_file_bytes(path, encode_label_file(labels));
}

std::vector<std::uint32_t> load_label_file(const std::filesystem::path& path) {
  return decode_label_file(read_file_bytes(path), path.string());
}

std::string format_split(const SplitSpec& split) {
  std::ostringstream os;
  auto line = [&os](const char* key, const std::vector<std::uint32_t>& ids) {
    os << key << ':';
    for (std::size_t i = 0; i < ids.size(); ++i) os << (i == 0 ? " " : ",") << ids[i];
    os << '\n';
  };
  line("seen", split.seen);
  line("unseen", split.unseen);
  line("test", split.test_rows);
  return os.str();
}

SplitSpec parse_split(std::string_view text, const std::string& source) {
  SplitSpec split;
  bool have_seen = false, have_unseen = false, have_test = false;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto colon = line.find(':');
    const std::string where = source + ":" + std::to_string(line_no);
    if (colon == std::string::npos) throw DataError(DataErrc::parse, where + ": expected 'key: ids'");
    const std::string key = trim(std::string_view(line).substr(0, colon));
    auto ids = parse_id_list(std::string_view(line).substr(colon + 1), where);
    bool* flag = nullptr;
    std::vector<std::uint32_t>* target = nullptr;
    if (key == "seen") { flag = &have_seen; target = &split.seen; }
    else if (key == "unseen") { flag = &have_unseen; target = &split.unseen; }
    else if (key == "test") { flag = &have_test; target = &split.test_rows; }
    else throw DataError(DataErrc::parse, where + ": unknown key '" + key + "'");
    if (*flag) throw DataError(DataErrc::parse, where + ": key '" + key + "' repeated");
    *flag = true;
    *target = std::move(ids);
  }
  if (!have_seen || !have_unseen) {
    throw DataError(DataErrc::parse, source + ": both 'seen:' and 'unseen:' lines are required");
  }
  split.validate(std::numeric_limits<std::size_t>::max(), std::numeric_limits<std::size_t>::max());
  return split;
}

void save_split(const std::filesystem::path& path, const SplitSpec& split) {
  const std::string text = format_split(split);
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

SplitSpec load_split(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_split(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                     path.string());
}

DatasetPaths DatasetPaths::from_prefix(const std::filesystem::path& prefix) {
  const std::string p = prefix.string();
  return {p + ".features.cfz", p + ".labels.clz", p + ".attributes.cfz", p + ".split.txt"};
}

void save_dataset(const DatasetPaths& paths, const Dataset& data) {
  data.validate();
  save_feature_file(paths.features, data.features);
  save_label_file(paths.labels, data.labels);
  save_feature_file(paths.attributes, data.attributes);
  save_split(paths.split, data.split);
}

Dataset load_dataset(const DatasetPaths& paths) {
  Dataset d;
  d.features = load_feature_file(paths.features);
  d.labels = load_label_file(paths.labels);
  d.attributes = load_feature_file(paths.attributes);
  d.split = load_split(paths.split);
  d.validate();
  return d;
}

void round_to_float32(Matrix& m) noexcept {
  for (double& v : m.values()) v = static_cast<double>(static_cast<float>(v));
}

BenchmarkPreset benchmark_preset(std::string_view name) {
  if (name == "cub") return {"cub", 312, 150, 50, 512, 0.2};
  if (name == "sun") return {"sun", 102, 645, 72, 512, 0.2};
  if (name == "awa2") return {"awa2", 85, 40, 10, 2048, 1.0};
  throw std::invalid_argument("unknown preset '" + std::string(name) + "' (expected cub, sun or awa2)");
}

void SyntheticSpec::validate() const {
  if (k_seen < 1 || k_seen + k_unseen < 2) throw std::invalid_argument("synthetic: need k_seen >= 1 and k_seen + k_unseen >= 2");
  if (d_a < 1 || d_f < 1) throw std::invalid_argument("synthetic: dimensions must be >= 1");
  if (samples_per_class < 1) throw std::invalid_argument("synthetic: samples_per_class must be >= 1");
  if (!(cluster_spread >= 0.0)) throw std::invalid_argument("synthetic: cluster_spread must be >= 0");
  if (!(overlap >= 0.0 && overlap <= 1.0)) throw std::invalid_argument("synthetic: overlap must lie in [0, 1]");
  if (!(seen_test_fraction >= 0.0 && seen_test_fraction < 1.0)) {
    throw std::invalid_argument("synthetic: seen_test_fraction must lie in [0, 1)");
  }
  if (!(nuisance_scale >= 0.0)) throw std::invalid_argument("synthetic: nuisance_scale must be >= 0");
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  Rng rng(spec.seed);
  return generate_synthetic(spec, rng);
}

Dataset generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
  spec.validate();
  const std::size_t k = spec.k_seen + spec.k_unseen;
  Dataset d;

  d.attributes = Matrix(k, spec.d_a);
  for (double& v : d.attributes.values()) v = rng.uniform();
  round_to_float32(d.attributes);

  // Linear attribute-to-feature map, scaled so class means have O(1) entries.
  Matrix map = sample_standard_normal(rng, spec.d_a, spec.d_f);
  for (double& v : map.values()) v /= std::sqrt(static_cast<double>(spec.d_a));
  Matrix means = matmul(d.attributes, map);  // K × d_f
  const Matrix global = column_means(means);
  for (std::size_t c = 0; c < k; ++c) {
    auto row = means.row(c);
    for (std::size_t j = 0; j < spec.d_f; ++j) {
      row[j] = (1.0 - spec.overlap) * row[j] + spec.overlap * global(0, j);
    }
  }

  std::vector<std::uint32_t> order(k);
  for (std::size_t c = 0; c < k; ++c) order[c] = static_cast<std::uint32_t>(c);
  rng.shuffle(order);
  d.split.unseen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.k_unseen));
  d.split.seen.assign(order.begin() + static_cast<std::ptrdiff_t>(spec.k_unseen), order.end());
  std::sort(d.split.seen.begin(), d.split.seen.end());
  std::sort(d.split.unseen.begin(), d.split.unseen.end());
  std::vector<bool> is_unseen(k, false);
  for (std::uint32_t c : d.split.unseen) is_unseen[c] = true;

  const std::size_t n = k * spec.samples_per_class;
  Matrix noise = sample_standard_normal(rng, n, spec.d_f);
  if (spec.nuisance_rank > 0) {
    Matrix basis = sample_standard_normal(rng, spec.nuisance_rank, spec.d_f);
    for (std::size_t i = 0; i < basis.rows(); ++i) {
      auto row = basis.row(i);
      double norm = 0.0;
      for (double v : row) norm += v * v;
      norm = std::sqrt(norm);
      for (double& v : row) v /= norm;
    }
    const Matrix coef = sample_standard_normal(rng, n, spec.nuisance_rank);
    add_in_place(noise, matmul(coef, basis), spec.nuisance_scale);
  }
  d.features = Matrix(n, spec.d_f);
  d.labels.resize(n);
  const auto held_out = static_cast<std::size_t>(
      std::floor(spec.seen_test_fraction * static_cast<double>(spec.samples_per_class)));
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      const std::size_t r = c * spec.samples_per_class + s;
      d.labels[r] = static_cast<std::uint32_t>(c);
      auto out = d.features.row(r);
      const auto mu = means.row(c);
      const auto eps = noise.row(r);
      for (std::size_t j = 0; j < spec.d_f; ++j) out[j] = mu[j] + spec.cluster_spread * eps[j];
      if (is_unseen[c] || s < held_out) d.split.test_rows.push_back(static_cast<std::uint32_t>(r));
    }
  }
  round_to_float32(d.features);
  d.validate();
  return d;
}

}  // namespace cfz
