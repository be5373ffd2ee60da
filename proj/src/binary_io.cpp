#include "aecbir/binary_io.hpp"

namespace aecbir::io {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void BinaryWriter::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes_.data()),
            static_cast<std::streamsize>(bytes_.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

BinaryReader BinaryReader::open(const std::filesystem::path& path) {
  return BinaryReader(read_file(path), path.string());
}

void BinaryReader::need(std::size_t n) const {
  if (bytes_.size() - pos_ < n) {
    throw FormatError(source_ + ": truncated file");
  }
}

void BinaryReader::expect_magic(std::string_view tag) {
  need(tag.size());
  if (std::memcmp(bytes_.data() + pos_, tag.data(), tag.size()) != 0) {
    throw FormatError(source_ + ": bad magic, expected '" + std::string(tag) + "'");
  }
  pos_ += tag.size();
}

void BinaryReader::expect_version(std::uint32_t expected) {
  const std::uint32_t v = u32();
  if (v != expected) {
    throw FormatError(source_ + ": unsupported version " + std::to_string(v) +
                      " (expected " + std::to_string(expected) + ")");
  }
}

void BinaryReader::expect_end() const {
  if (!at_end()) throw FormatError(source_ + ": trailing bytes after payload");
}

}  // namespace aecbir::io
