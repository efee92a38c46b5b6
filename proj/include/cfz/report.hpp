#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cfz/config.hpp"

namespace cfz {

/// Ordered `key = value` metric lines; no timings, so identical runs give identical files.
class MetricsFile {
 public:
  void set(const std::string& key, double value);
  void set(const std::string& key, const std::string& value);
  const std::vector<std::pair<std::string, std::string>>& items() const noexcept { return items_; }
  std::string text() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> items_;
};

std::string format_metric(double value);

/// Everything needed to trace a metric back to its config and seeds.
struct RunManifest {
  std::string command_line;
  TrainConfig config;
  std::size_t threads = 1;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, std::string> input_digests;  // path -> fnv1a64 hex
  std::map<std::string, double> stage_seconds;
  MetricsFile metrics;
  std::map<std::string, std::vector<double>> traces;

  void add_input(const std::filesystem::path& path);
  std::string text() const;
  void write(const std::filesystem::path& path) const;
};

std::string file_digest(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Parses a manifest or metrics file back into (section, key, value) rows.
struct ManifestEntry {
  std::string section;
  std::string key;
  std::string value;
};
std::vector<ManifestEntry> parse_manifest(const std::string& text);

}  // namespace cfz
