#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "aecbir/error.hpp"
#include "aecbir/features.hpp"
#include "support/fixtures.hpp"

using namespace aecbir;

TEST_CASE("lbp code bit order") {
  // neighbours clockwise from top-left carry weights 1,2,4,...,128
  const std::array<std::uint8_t, 9> positions = {0, 1, 2, 5, 8, 7, 6, 3};
  for (int bit = 0; bit < 8; ++bit) {
    LbpWindow w{};
    w.fill(0);
    w[4] = 100;
    w[positions[static_cast<std::size_t>(bit)]] = 100;  // equal counts as set
    CHECK(lbp_code(w) == (1 << bit));
  }
  LbpWindow flat{};
  flat.fill(9);
  CHECK(lbp_code(flat) == 255);
}

TEST_CASE("lbp histogram matches per-pixel recomputation") {
  std::mt19937_64 gen(11);
  for (int t = 0; t < 20; ++t) {
    const GrayImage img = fixtures::random_image(gen, 13, 9, 0, 7);
    const auto oracle = oracle::lbp_histogram(fixtures::to_raster(img), 2, 1, 9, 7);
    const LbpHistogram got = lbp_histogram(img.view().crop(2, 1, 9, 7));
    for (std::size_t b = 0; b < kLbpBins; ++b) CHECK(got[b] == oracle[b]);
    CHECK(std::accumulate(got.begin(), got.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("lbp histogram of a tiny block is empty") {
  const GrayImage img(5, 5, 3);
  const LbpHistogram h = lbp_histogram(img.view().crop(0, 0, 2, 5));
  CHECK(std::all_of(h.begin(), h.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("brightness shift leaves features unchanged") {
  std::mt19937_64 gen(5);
  const GrayImage img = fixtures::random_image(gen, 32, 32, 20, 200);
  std::vector<std::uint8_t> shifted(img.pixels().begin(), img.pixels().end());
  for (auto& v : shifted) v = static_cast<std::uint8_t>(v + 40);
  CHECK(extract_features(img, 4) == extract_features(GrayImage(32, 32, shifted), 4));
}

TEST_CASE("block grid layout") {
  const BlockGrid g = block_grid(64, 50, 6);
  REQUIRE(g.rects.size() == 36);
  // remainders are dropped, row-major order
  CHECK(g.rects[0] == BlockRect{0, 0, 10, 8});
  CHECK(g.rects[1] == BlockRect{10, 0, 10, 8});
  CHECK(g.rects[6] == BlockRect{0, 8, 10, 8});
  CHECK(g.rects[35] == BlockRect{50, 40, 10, 8});
  CHECK_THROWS_AS(block_grid(8, 8, 4), InvalidArgument);
}

TEST_CASE("swapping blocks permutes slots") {
  std::mt19937_64 gen(9);
  GrayImage img = fixtures::random_image(gen, 24, 24);
  const BlockFeatureVector before = extract_features(img, 3);
  // swap block 0 (top-left) with block 8 (bottom-right)
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) std::swap(img.at(x, y), img.at(16 + x, 16 + y));
  }
  const BlockFeatureVector after = extract_features(img, 3);
  CHECK(std::ranges::equal(before.slot(0), after.slot(8)));
  CHECK(std::ranges::equal(before.slot(8), after.slot(0)));
  for (int j = 1; j < 8; ++j) CHECK(std::ranges::equal(before.slot(j), after.slot(j)));
}

TEST_CASE("feature vector length") {
  const GrayImage img(64, 64, 1);
  const BlockFeatureVector f = extract_features(img, 4);
  CHECK(f.flat().size() == 16 * 256);
  CHECK(f.slot_count() == 16);
  CHECK_THROWS_AS(BlockFeatureVector(2, std::vector<double>(5)), InvalidArgument);
}

TEST_CASE("feature store round trip") {
  fixtures::TempDir dir("store");
  std::mt19937_64 gen(3);
  FeatureStore store;
  store.k = 2;
  store.class_count = 3;
  for (std::uint64_t i = 0; i < 4; ++i) {
    store.records.push_back({i * 7, static_cast<std::uint32_t>(i % 3),
                             extract_features(fixtures::random_image(gen, 12, 12), 2)});
  }
  save_feature_store(store, dir / "f.bin");
  CHECK(load_feature_store(dir / "f.bin") == store);

  std::ofstream(dir / "bad.bin", std::ios::binary) << "AECBFEAT\x02\0\0\0";
  CHECK_THROWS(load_feature_store(dir / "bad.bin"));
}
