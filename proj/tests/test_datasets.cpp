#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "cfz/datasets.hpp"
#include "cfz/evalmetrics.hpp"
#include "cfz/pipeline.hpp"
#include "oracles.hpp"

using namespace cfz;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "cfz_test_datasets";
  fs::create_directories(dir);
  return dir / name;
}

DataErrc feature_error(std::vector<std::uint8_t> bytes) {
  try {
    decode_feature_file(bytes);
  } catch (const DataError& e) {
    return e.code();
  }
  FAIL("decode accepted a corrupt file");
  return DataErrc::io;
}

std::string id_list(std::uint32_t begin, std::uint32_t end) {
  std::string s;
  for (std::uint32_t i = begin; i < end; ++i) s += (i == begin ? "" : ",") + std::to_string(i);
  return s;
}

double train_accuracy(const Dataset& d) {
  const LabeledRows all = gather(d, d.train_rows());
  const auto classes = d.split.seen;
  const SoftmaxClassifier c = train_softmax_classifier(all.features, all.labels, classes, 30, 64, 1e-2, 3);
  const auto pred = c.predict(all.features);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == all.labels[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

}  // namespace

TEST_CASE("feature file: byte layout and round trip") {
  Matrix m = Matrix::from_rows({{1.5, -2.0, 0.1}, {3.0, 4.25, -0.0}});
  round_to_float32(m);
  const auto bytes = encode_feature_file(m);
  REQUIRE(bytes.size() == 12 + 6 * 4);
  CHECK(std::memcmp(bytes.data(), "CFZ1", 4) == 0);
  std::uint32_t rows = 0, cols = 0;
  std::memcpy(&rows, bytes.data() + 4, 4);
  std::memcpy(&cols, bytes.data() + 8, 4);
  CHECK(rows == 2);
  CHECK(cols == 3);
  float first = 0.0f;
  std::memcpy(&first, bytes.data() + 12, 4);
  CHECK(first == 1.5f);

  const Matrix back = decode_feature_file(bytes);
  CHECK(back == m);
  CHECK(encode_feature_file(back) == bytes);

  const fs::path p = scratch("m.features.cfz");
  save_feature_file(p, m);
  CHECK(load_feature_file(p) == m);
}

TEST_CASE("feature file: corrupt inputs raise distinct errors") {
  const Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
  const auto good = encode_feature_file(m);

  auto magic = good;
  magic[0] = 'X';
  CHECK(feature_error(magic) == DataErrc::bad_magic);
  try {
    decode_feature_file(magic);
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("CFZ1") != std::string::npos);
  }

  auto cut = good;
  cut.resize(cut.size() - 3);
  CHECK(feature_error(cut) == DataErrc::truncated);

  auto extra = good;
  extra.push_back(0);
  CHECK(feature_error(extra) == DataErrc::trailing_bytes);

  auto empty = good;
  std::memset(empty.data() + 4, 0, 4);
  CHECK(feature_error(empty) == DataErrc::empty_matrix);

  auto huge = good;
  std::memset(huge.data() + 4, 0xff, 8);
  CHECK(feature_error(huge) == DataErrc::count_overflow);

  CHECK_THROWS_AS(load_feature_file(scratch("does-not-exist.cfz")), DataError);
}

TEST_CASE("label file: round trip and corruption") {
  const std::vector<std::uint32_t> labels{0, 7, 3, 4294967295u};
  const auto bytes = encode_label_file(labels);
  CHECK(std::memcmp(bytes.data(), "CLZ1", 4) == 0);
  CHECK(bytes.size() == 8 + 16);
  CHECK(decode_label_file(bytes) == labels);

  auto bad = bytes;
  bad[3] = '2';
  CHECK_THROWS_AS(decode_label_file(bad), DataError);
  auto cut = bytes;
  cut.pop_back();
  try {
    decode_label_file(cut);
    FAIL("truncated label file accepted");
  } catch (const DataError& e) {
    CHECK(e.code() == DataErrc::truncated);
  }
}

TEST_CASE("split: text round trip, preset stubs, disjointness") {
  SplitSpec s;
  s.seen = {0, 2, 3};
  s.unseen = {1, 4};
  s.test_rows = {5, 9};
  const SplitSpec back = parse_split(format_split(s));
  CHECK(back == s);

  const SplitSpec awa2 = parse_split("seen: " + id_list(0, 40) + "\nunseen: " + id_list(40, 50) + "\n");
  CHECK(awa2.seen.size() == 40);
  CHECK(awa2.unseen.size() == 10);
  const SplitSpec cub = parse_split("seen: " + id_list(0, 150) + "\nunseen: " + id_list(150, 200) + "\n");
  CHECK(cub.seen.size() == 150);
  CHECK(cub.unseen.size() == 50);

  try {
    parse_split("seen: 0,1,2\nunseen: 2,3\n");
    FAIL("overlap accepted");
  } catch (const DataError& e) {
    CHECK(e.code() == DataErrc::validation);
  }
  try {
    parse_split("seen: 0,x\nunseen: 3\n");
    FAIL("bad id accepted");
  } catch (const DataError& e) {
    CHECK(e.code() == DataErrc::parse);
  }
  CHECK_THROWS_AS(parse_split("seen: 0,1\n"), DataError);
  CHECK_THROWS_AS(s.validate(4, 20), DataError);  // id 4 out of range
}

TEST_CASE("dataset: loader rejects invariant violations") {
  SyntheticSpec spec;
  spec.samples_per_class = 10;
  const Dataset d = generate_synthetic(spec);
  const auto paths = DatasetPaths::from_prefix(scratch("bench"));
  save_dataset(paths, d);
  CHECK(load_dataset(paths) == d);

  // A training row labelled with an unseen class.
  SplitSpec bad = d.split;
  std::erase(bad.test_rows, static_cast<std::uint32_t>(d.split.unseen[0] * 10));
  save_split(paths.split, bad);
  CHECK_THROWS_AS(load_dataset(paths), DataError);

  // Label outside the attribute table.
  save_split(paths.split, d.split);
  auto labels = d.labels;
  labels[0] = 99;
  save_label_file(paths.labels, labels);
  CHECK_THROWS_AS(load_dataset(paths), DataError);
}

TEST_CASE("synthetic: deterministic per seed, sized as requested") {
  SyntheticSpec spec;
  const Dataset a = generate_synthetic(spec);
  const Dataset b = generate_synthetic(spec);
  CHECK(encode_feature_file(a.features) == encode_feature_file(b.features));
  CHECK(a == b);
  CHECK(a.features.rows() == 2000);
  CHECK(a.feature_dim() == 64);
  CHECK(a.attribute_dim() == 16);
  CHECK(a.split.seen.size() == 15);
  CHECK(a.split.unseen.size() == 5);
  for (double v : a.attributes.values()) CHECK((v >= 0.0 && v <= 1.0));

  spec.seed = 8;
  CHECK(!(generate_synthetic(spec).features == a.features));

  spec.k_seen = 0;
  spec.k_unseen = 1;
  CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
}

TEST_CASE("synthetic: tight separated classes are recovered by k-means") {
  SyntheticSpec spec;
  spec.overlap = 0.0;
  spec.cluster_spread = 0.01;
  const Dataset d = generate_synthetic(spec);
  CHECK(clusterability_nmi(d.features, d.labels, 1) >= 0.99);
}

TEST_CASE("synthetic: crowding the means does not make raw features easier") {
  SyntheticSpec apart;
  apart.overlap = 0.0;
  SyntheticSpec crowded = apart;
  crowded.overlap = 0.9;
  CHECK(train_accuracy(generate_synthetic(crowded)) <= train_accuracy(generate_synthetic(apart)));
}

TEST_CASE("synthetic: without nuisance directions the draw is isotropic around the means") {
  SyntheticSpec spec;
  spec.nuisance_rank = 0;
  spec.overlap = 0.0;
  spec.samples_per_class = 400;
  const Dataset d = generate_synthetic(spec);
  const VarianceStats v = variance_stats(d.features, d.labels);
  // d_f · spread² per class, up to sampling error
  CHECK(v.intra_class_variance == doctest::Approx(64 * 0.09).epsilon(0.03));
}
