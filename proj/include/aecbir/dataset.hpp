#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace aecbir {

// Read-only window into row-major 8-bit pixels. Blocks of an image are views
// with the parent's stride.
struct PixelView {
  const std::uint8_t* data = nullptr;
  int width = 0;
  int height = 0;
  int stride = 0;

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * stride + x]; }

  PixelView crop(int x0, int y0, int w, int h) const {
    return {data + static_cast<std::size_t>(y0) * stride + x0, w, h, stride};
  }
};

// 8-bit grayscale raster, row-major.
class GrayImage {
 public:
  static constexpr int kMinSide = 3;

  GrayImage() = default;
  // Throws InvalidArgument if either side is below kMinSide or the pixel
  // count does not match.
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels);
  GrayImage(int width, int height, std::uint8_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }

  std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  PixelView view() const { return {pixels_.data(), width_, height_, width_}; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Portable graymap (P2 ascii or P5 binary), maxval <= 255. Colour and
// bitmap variants are rejected rather than converted.
GrayImage load_image(const std::filesystem::path& path);
GrayImage parse_pgm(std::span<const std::uint8_t> bytes, const std::string& source);
// Always writes binary P5 with maxval 255.
void write_pgm(const GrayImage& image, const std::filesystem::path& path);

// Four-axis IRMA code TTTT-DDD-AAA-BBB over the alphabet [0-9a-z].
struct IrmaCode {
  static constexpr std::array<std::size_t, 4> kAxisLengths = {4, 3, 3, 3};
  static constexpr std::size_t kLength = 13;

  std::array<std::string, 4> axes;

  friend bool operator==(const IrmaCode&, const IrmaCode&) = default;
  friend auto operator<=>(const IrmaCode&, const IrmaCode&) = default;
};

IrmaCode parse_irma_code(std::string_view text);
std::string format_irma_code(const IrmaCode& code);

enum class Split { kTrain, kTest };

std::string_view to_string(Split split);

struct ManifestEntry {
  std::string path;  // as written in the manifest
  Split split = Split::kTrain;
  int class_index = 0;  // dense, 0-based
  std::optional<IrmaCode> code;
};

// Labelled image list. Class labels are re-indexed densely: class_labels[i]
// is the original label of class index i. Ordering is numeric when every
// label is an integer, lexicographic otherwise.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> class_labels;
  // Directory that relative entry paths are resolved against.
  std::filesystem::path base_dir;

  int class_count() const { return static_cast<int>(class_labels.size()); }
  std::filesystem::path resolve(const ManifestEntry& entry) const;
  std::vector<int> class_counts(Split split) const;
  // Indices into `entries` for the given split, in manifest order.
  std::vector<std::size_t> indices(Split split) const;
};

// Comma-separated `path,split,class[,irma_code]`; '#' starts a comment line.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(std::string_view text, const std::string& source);
std::string format_manifest(const DatasetManifest& manifest);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

struct SyntheticCorpusSpec {
  std::uint64_t seed = 1;
  int num_classes = 4;
  int per_class = 10;
  int image_size = 64;
  int grid_k = 4;
  // Trailing quarter of each class goes to the test split.
  double test_fraction = 0.25;
};

// Block positions (0-based, row-major) textured for `class_index`.
std::vector<int> synthetic_roi_blocks(int class_index, int num_classes, int grid_k);

// Renders one corpus image; `image_index` is the global index that the
// per-image sub-seed is derived from.
GrayImage render_synthetic_image(const SyntheticCorpusSpec& spec, int class_index,
                                 std::size_t image_index);

// Writes `<dir>/images/*.pgm` and `<dir>/manifest.csv`; returns the manifest.
DatasetManifest generate_synthetic_corpus(const SyntheticCorpusSpec& spec,
                                          const std::filesystem::path& dir);

}  // namespace aecbir
