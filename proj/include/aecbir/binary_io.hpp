#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aecbir/error.hpp"

namespace aecbir::io {

// Little-endian writer for the artifact formats. All multi-byte fields are
// written explicitly little-endian regardless of host byte order.
class BinaryWriter {
 public:
  void magic(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }

  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }

  void f64s(std::span<const double> values) {
    for (double v : values) f64(v);
  }

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

  void save(const std::filesystem::path& path) const;

 private:
  template <typename T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }

  std::vector<std::uint8_t> bytes_;
};

class BinaryReader {
 public:
  BinaryReader(std::vector<std::uint8_t> bytes, std::string source)
      : bytes_(std::move(bytes)), source_(std::move(source)) {}

  static BinaryReader open(const std::filesystem::path& path);

  // Throws FormatError unless the next bytes equal `tag`.
  void expect_magic(std::string_view tag);
  // Reads a u32 version and rejects anything but `expected`.
  void expect_version(std::uint32_t expected);

  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

  void f64s(std::span<double> out) {
    for (double& v : out) v = f64();
  }

  bool at_end() const { return pos_ == bytes_.size(); }
  // Throws unless every byte was consumed.
  void expect_end() const;

  const std::string& source() const { return source_; }

 private:
  template <typename T>
  T get() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return v;
  }

  void need(std::size_t n) const;

  std::vector<std::uint8_t> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace aecbir::io
