#include <doctest.h>

#include <random>

#include "aecbir/error.hpp"
#include "aecbir/relevance.hpp"
#include "support/fixtures.hpp"

using namespace aecbir;

TEST_CASE("dropped block counts") {
  CHECK(dropped_block_count(0.0, 4) == 0);
  CHECK(dropped_block_count(0.125, 4) == 2);
  CHECK(dropped_block_count(0.125, 5) == 3);
  CHECK(dropped_block_count(0.25, 5) == 6);
  CHECK(dropped_block_count(0.5, 5) == 12);
  CHECK(dropped_block_count(0.125, 6) == 4);
  CHECK(dropped_block_count(0.5, 6) == 18);
  CHECK_THROWS_AS(dropped_block_count(1.0, 4), InvalidArgument);
  CHECK_THROWS_AS(dropped_block_count(-0.1, 4), InvalidArgument);
}

TEST_CASE("mask keeps exactly k*k minus floor(d*k*k)") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int cases = 0;
  for (int k : {2, 3, 4, 5, 6, 8}) {
    for (double d : {0.125, 0.5}) {
      std::vector<double> means(static_cast<std::size_t>(k * k));
      for (auto& v : means) v = u(gen);
      const BlockMask m = mask_from_errors(means, d, k);
      CHECK(m.kept_count() == k * k - static_cast<int>(d * k * k));
      CHECK(m.dropped() == oracle::dropped_positions(means, d, k));
      ++cases;
    }
  }
  CHECK(cases == 12);
}

TEST_CASE("ties drop the lower position first") {
  const std::vector<double> means = {0.5, 0.1, 0.1, 0.1};
  CHECK(mask_from_errors(means, 0.5, 2).dropped() == std::vector<int>{1, 2});
}

TEST_CASE("relevance mask reads class means") {
  ErrorHistogram h(2, 2);
  h.add(0, std::vector<double>{4, 1, 3, 2});
  h.add(0, std::vector<double>{4, 1, 3, 2});
  h.add(1, std::vector<double>{1, 2, 3, 4});
  CHECK(relevance_mask(h, 0, 0.5, 2).dropped() == std::vector<int>{1, 3});
  CHECK(relevance_mask(h, 1, 0.25, 2).dropped() == std::vector<int>{0});
  CHECK(relevance_mask(h, 1, 0.0, 2) == full_mask(2));
  CHECK_THROWS_AS(relevance_mask(h, 2, 0.5, 2), InvalidArgument);
  CHECK_THROWS_AS(relevance_mask(h, 0, 0.5, 3), InvalidArgument);

  ErrorHistogram empty(2, 2);
  empty.add(0, std::vector<double>{1, 1, 1, 1});
  CHECK_THROWS_AS(relevance_mask(empty, 1, 0.5, 2), InvalidArgument);
}

TEST_CASE("apply mask gathers kept slots in order") {
  std::vector<double> values(3 * 3 * kLbpBins);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(i);
  const BlockFeatureVector f(3, values);
  BlockMask m = full_mask(3);
  m.keep[0] = m.keep[4] = m.keep[7] = false;
  const auto got = apply_mask(f, m);
  std::vector<double> want;
  for (int j : {1, 2, 3, 5, 6, 8})
    for (std::size_t b = 0; b < kLbpBins; ++b) want.push_back(values[static_cast<std::size_t>(j) * kLbpBins + b]);
  CHECK(got == want);
  CHECK(m.kept() == std::vector<int>{1, 2, 3, 5, 6, 8});
}
