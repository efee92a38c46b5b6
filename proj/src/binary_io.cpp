#include "cfz/binary_io.hpp"

#include <fstream>
#include <iterator>

namespace cfz {

std::string_view to_string(DataErrc code) noexcept {
  switch (code) {
    case DataErrc::io: return "io";
    case DataErrc::bad_magic: return "bad-magic";
    case DataErrc::truncated: return "truncated";
    case DataErrc::trailing_bytes: return "trailing-bytes";
    case DataErrc::count_overflow: return "count-overflow";
    case DataErrc::empty_matrix: return "empty-matrix";
    case DataErrc::parse: return "parse";
    case DataErrc::validation: return "validation";
    case DataErrc::version: return "version";
  }
  return "unknown";
}

DataError::DataError(DataErrc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void ByteReader::expect_magic(std::string_view tag) {
  require(tag.size(), "magic");
  const std::string_view found(reinterpret_cast<const char*>(bytes_.data() + pos_), tag.size());
  if (found != tag) {
    std::string printable;
    for (char c : found) printable += (c >= 32 && c < 127) ? c : '?';
    throw DataError(DataErrc::bad_magic, source_ + ": expected magic \"" + std::string(tag) +
                                             "\", found \"" + printable + "\"");
  }
  pos_ += tag.size();
}

void ByteReader::require(std::size_t n, std::string_view what) const {
  if (remaining() < n) {
    throw DataError(DataErrc::truncated, source_ + ": " + std::string(what) + " needs " +
                                             std::to_string(n) + " bytes, " +
                                             std::to_string(remaining()) + " left");
  }
}

void ByteReader::expect_end() const {
  if (remaining() != 0) {
    throw DataError(DataErrc::trailing_bytes,
                    source_ + ": " + std::to_string(remaining()) + " unexpected trailing bytes");
  }
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrc::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrc::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(DataErrc::io, "short write to " + path.string());
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace cfz
