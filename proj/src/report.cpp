#include "cfz/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cfz/binary_io.hpp"

namespace cfz {

std::string format_metric(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void MetricsFile::set(const std::string& key, const std::string& value) {
  for (auto& item : items_) {
    if (item.first == key) {
      item.second = value;
      return;
    }
  }
  items_.emplace_back(key, value);
}

void MetricsFile::set(const std::string& key, double value) { set(key, format_metric(value)); }

std::string MetricsFile::text() const {
  std::string out;
  for (const auto& [k, v] : items_) out += k + " = " + v + "\n";
  return out;
}

void MetricsFile::write(const std::filesystem::path& path) const { write_text_file(path, text()); }

std::string file_digest(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrc::io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError(DataErrc::io, "write failed for " + path.string());
}

void RunManifest::add_input(const std::filesystem::path& path) { input_digests[path.string()] = file_digest(path); }

std::string RunManifest::text() const {
  std::ostringstream os;
  os << "[command]\n" << "line = " << command_line << "\n" << "threads = " << threads << "\n";
  os << "\n[config]\n" << format_config(config);
  os << "\n[seeds]\n";
  for (const auto& [k, v] : seeds) os << k << " = " << v << "\n";
  os << "\n[inputs]\n";
  for (const auto& [k, v] : input_digests) os << k << " = " << v << "\n";
  os << "\n[stage-seconds]\n";
  for (const auto& [k, v] : stage_seconds) os << k << " = " << format_metric(v) << "\n";
  os << "\n[metrics]\n" << metrics.text();
  os << "\n[traces]\n";
  for (const auto& [k, values] : traces) {
    os << k << " =";
    for (double v : values) os << ' ' << format_metric(v);
    os << "\n";
  }
  return os.str();
}

void RunManifest::write(const std::filesystem::path& path) const { write_text_file(path, text()); }

std::vector<ManifestEntry> parse_manifest(const std::string& text) {
  std::vector<ManifestEntry> out;
  std::istringstream in(text);
  std::string line, section;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) {
      // trace lines with no values end in " ="
      if (line.size() >= 2 && line.ends_with(" =")) {
        out.push_back({section, line.substr(0, line.size() - 2), ""});
        continue;
      }
      throw DataError(DataErrc::parse, "malformed manifest line '" + line + "'");
    }
    out.push_back({section, line.substr(0, eq), line.substr(eq + 3)});
  }
  return out;
}

}  // namespace cfz
