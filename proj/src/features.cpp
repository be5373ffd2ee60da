#include "aecbir/features.hpp"

#include <algorithm>
#include <string>

#include "aecbir/binary_io.hpp"
#include "aecbir/error.hpp"

namespace aecbir {

BlockGrid block_grid(int image_width, int image_height, int k) {
  if (k < 1) throw InvalidArgument("grid order k must be positive");
  const int bw = image_width / k;
  const int bh = image_height / k;
  if (bw < 3 || bh < 3) {
    throw InvalidArgument("image " + std::to_string(image_width) + "x" +
                          std::to_string(image_height) + " too small for a " + std::to_string(k) +
                          "x" + std::to_string(k) + " grid (blocks must be at least 3x3)");
  }
  BlockGrid grid;
  grid.k = k;
  grid.rects.reserve(static_cast<std::size_t>(k) * k);
  for (int row = 0; row < k; ++row) {
    for (int col = 0; col < k; ++col) {
      grid.rects.push_back({col * bw, row * bh, bw, bh});
    }
  }
  return grid;
}

std::uint8_t lbp_code(const LbpWindow& w) {
  // Clockwise from the top-left corner.
  static constexpr std::array<int, 8> kOrder = {0, 1, 2, 5, 8, 7, 6, 3};
  const std::uint8_t centre = w[4];
  unsigned code = 0;
  for (unsigned i = 0; i < 8; ++i) {
    if (w[static_cast<std::size_t>(kOrder[i])] >= centre) code |= 1u << i;
  }
  return static_cast<std::uint8_t>(code);
}

LbpHistogram lbp_histogram(const PixelView& block) {
  LbpHistogram hist{};
  if (block.width < 3 || block.height < 3) return hist;

  std::array<std::uint32_t, kLbpBins> counts{};
  for (int y = 1; y < block.height - 1; ++y) {
    const std::uint8_t* up = block.data + static_cast<std::size_t>(y - 1) * block.stride;
    const std::uint8_t* mid = up + block.stride;
    const std::uint8_t* down = mid + block.stride;
    for (int x = 1; x < block.width - 1; ++x) {
      const std::uint8_t c = mid[x];
      const unsigned code = (up[x - 1] >= c ? 1u : 0u) | (up[x] >= c ? 2u : 0u) |
                            (up[x + 1] >= c ? 4u : 0u) | (mid[x + 1] >= c ? 8u : 0u) |
                            (down[x + 1] >= c ? 16u : 0u) | (down[x] >= c ? 32u : 0u) |
                            (down[x - 1] >= c ? 64u : 0u) | (mid[x - 1] >= c ? 128u : 0u);
      ++counts[code];
    }
  }
  const double total = static_cast<double>(block.width - 2) * (block.height - 2);
  for (std::size_t b = 0; b < kLbpBins; ++b) hist[b] = counts[b] / total;
  return hist;
}

BlockFeatureVector::BlockFeatureVector(int k)
    : k_(k), values_(static_cast<std::size_t>(k) * k * kLbpBins, 0.0) {}

BlockFeatureVector::BlockFeatureVector(int k, std::vector<double> values)
    : k_(k), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(k) * k * kLbpBins) {
    throw InvalidArgument("feature vector length does not match grid order");
  }
}

BlockFeatureVector extract_features(const GrayImage& image, int k) {
  const BlockGrid grid = block_grid(image, k);
  BlockFeatureVector f(k);
  const PixelView view = image.view();
  for (int j = 0; j < grid.block_count(); ++j) {
    const BlockRect& r = grid.rects[static_cast<std::size_t>(j)];
    const LbpHistogram h = lbp_histogram(view.crop(r.x, r.y, r.width, r.height));
    std::copy(h.begin(), h.end(), f.slot(j).begin());
  }
  return f;
}

// --- feature store ---------------------------------------------------------

namespace {
constexpr std::string_view kStoreMagic = "AECBFEAT";
constexpr std::uint32_t kStoreVersion = 1;
}  // namespace

void save_feature_store(const FeatureStore& store, const std::filesystem::path& path) {
  io::BinaryWriter w;
  w.magic(kStoreMagic);
  w.u32(kStoreVersion);
  w.u32(static_cast<std::uint32_t>(store.k));
  w.u64(store.records.size());
  w.u32(static_cast<std::uint32_t>(store.class_count));
  for (const auto& r : store.records) {
    if (r.features.k() != store.k) throw InvalidArgument("record grid order differs from store");
    w.u64(r.image_id);
    w.u32(r.class_index);
    w.f64s(r.features.flat());
  }
  w.save(path);
}

FeatureStore load_feature_store(const std::filesystem::path& path) {
  auto r = io::BinaryReader::open(path);
  r.expect_magic(kStoreMagic);
  r.expect_version(kStoreVersion);
  FeatureStore store;
  store.k = static_cast<int>(r.u32());
  const std::uint64_t count = r.u64();
  store.class_count = static_cast<int>(r.u32());
  if (store.k < 1 || store.k > 64) throw FormatError(r.source() + ": implausible grid order");
  const std::size_t length = static_cast<std::size_t>(store.k) * store.k * kLbpBins;
  store.records.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t i = 0; i < count; ++i) {
    FeatureRecord rec;
    rec.image_id = r.u64();
    rec.class_index = r.u32();
    if (rec.class_index >= static_cast<std::uint32_t>(store.class_count)) {
      throw FormatError(r.source() + ": class index out of range");
    }
    std::vector<double> values(length);
    r.f64s(values);
    rec.features = BlockFeatureVector(store.k, std::move(values));
    store.records.push_back(std::move(rec));
  }
  r.expect_end();
  return store;
}

}  // namespace aecbir
