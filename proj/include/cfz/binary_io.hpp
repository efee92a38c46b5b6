#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cfz {

enum class DataErrc {
  io,
  bad_magic,
  truncated,
  trailing_bytes,
  count_overflow,
  empty_matrix,
  parse,
  validation,
  version,
};

std::string_view to_string(DataErrc code) noexcept;

/// Error raised by every file reader/writer; `code()` separates the failure kinds.
class DataError : public std::runtime_error {
 public:
  DataError(DataErrc code, const std::string& message);
  DataErrc code() const noexcept { return code_; }

 private:
  DataErrc code_;
};

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

class ByteWriter {
 public:
  void magic(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void f32(float v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  std::vector<std::uint8_t>& bytes() noexcept { return bytes_; }

 private:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}

  void expect_magic(std::string_view tag);
  std::uint32_t u32() { return read<std::uint32_t>(); }
  float f32() { return read<float>(); }
  double f64() { return read<double>(); }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  void require(std::size_t n, std::string_view what) const;
  void expect_end() const;
  const std::string& source() const noexcept { return source_; }

 private:
  template <typename T>
  T read() {
    require(sizeof(T), "field");
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::string source_;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// 64-bit FNV-1a digest, used for manifest input fingerprints.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept;

}  // namespace cfz
