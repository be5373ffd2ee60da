#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "aecbir/dataset.hpp"

namespace aecbir {

inline constexpr std::size_t kLbpBins = 256;

struct BlockRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const BlockRect&, const BlockRect&) = default;
};

// k x k equal-sized blocks, row-major from the top-left. Remainder pixels on
// the right and bottom edges are not covered.
struct BlockGrid {
  int k = 0;
  std::vector<BlockRect> rects;

  int block_count() const { return k * k; }
};

// Throws InvalidArgument when blocks would be smaller than 3x3.
BlockGrid block_grid(int image_width, int image_height, int k);
inline BlockGrid block_grid(const GrayImage& image, int k) {
  return block_grid(image.width(), image.height(), k);
}

// 3x3 window in row-major order; index 4 is the centre.
using LbpWindow = std::array<std::uint8_t, 9>;

// Bit i is set when the i-th neighbour (clockwise from the top-left corner)
// is >= the centre; bit i has weight 2^i.
std::uint8_t lbp_code(const LbpWindow& window);

using LbpHistogram = std::array<double, kLbpBins>;

// Normalized histogram of codes over the interior pixels of `block`. Blocks
// smaller than 3x3 yield an all-zero histogram.
LbpHistogram lbp_histogram(const PixelView& block);

// k*k LBP histograms stored contiguously in block-index order.
class BlockFeatureVector {
 public:
  BlockFeatureVector() = default;
  explicit BlockFeatureVector(int k);
  BlockFeatureVector(int k, std::vector<double> values);

  int k() const { return k_; }
  int slot_count() const { return k_ * k_; }

  std::span<const double> slot(int j) const {
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(j) * kLbpBins,
                                                     kLbpBins);
  }
  std::span<double> slot(int j) {
    return std::span<double>(values_).subspan(static_cast<std::size_t>(j) * kLbpBins, kLbpBins);
  }

  // All slots concatenated; length 256*k*k.
  std::span<const double> flat() const { return values_; }

  friend bool operator==(const BlockFeatureVector&, const BlockFeatureVector&) = default;

 private:
  int k_ = 0;
  std::vector<double> values_;
};

BlockFeatureVector extract_features(const GrayImage& image, int k);

// Persisted features of a labelled image set. This is also the on-disk form
// of the retrieval index.
struct FeatureRecord {
  std::uint64_t image_id = 0;
  std::uint32_t class_index = 0;
  BlockFeatureVector features;

  friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

struct FeatureStore {
  int k = 0;
  int class_count = 0;
  std::vector<FeatureRecord> records;

  friend bool operator==(const FeatureStore&, const FeatureStore&) = default;
};

void save_feature_store(const FeatureStore& store, const std::filesystem::path& path);
FeatureStore load_feature_store(const std::filesystem::path& path);

}  // namespace aecbir
