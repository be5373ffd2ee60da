#include <doctest.h>

#include <random>

#include "aecbir/error.hpp"
#include "aecbir/kernels.hpp"
#include "aecbir/retrieval.hpp"
#include "support/fixtures.hpp"

using namespace aecbir;

namespace {

// Always predicts `winner` (0 or 1) regardless of the input.
MulticlassSvmModel fixed_classifier(int k, int winner) {
  MulticlassSvmModel m;
  m.params.gamma = 1.0;
  m.feature_length = static_cast<std::size_t>(k) * k * kLbpBins;
  m.classes = {0, 1};
  PairModel p;
  p.class_a = 0;
  p.class_b = 1;
  p.model.gamma = 1.0;
  p.model.bias = winner == 1 ? 1.0 : -1.0;
  m.pairs = {p};
  return m;
}

RetrievalIndex random_index(std::mt19937_64& gen, int k, int count) {
  FeatureStore store;
  store.k = k;
  store.class_count = 2;
  for (int i = 0; i < count; ++i) {
    store.records.push_back({static_cast<std::uint64_t>(100 + i), static_cast<std::uint32_t>(i % 2),
                             extract_features(fixtures::random_image(gen, 8 * k, 8 * k, 0, 15), k)});
  }
  return RetrievalIndex(std::move(store));
}

}  // namespace

TEST_CASE("cross correlation matches two-pass pearson") {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(37), b(37);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = u(gen);
      b[i] = 0.4 * a[i] + u(gen);
    }
    CHECK(cross_correlation(a, b) == doctest::Approx(oracle::pearson(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("cross correlation edge cases") {
  const std::vector<double> a = {1, 2, 3, 4}, c = {2, 2, 2, 2}, d = {5, 5, 5, 5};
  CHECK(cross_correlation(a, a) == 1.0);
  std::vector<double> scaled;
  for (double v : a) scaled.push_back(3.0 * v + 7.0);
  CHECK(cross_correlation(a, scaled) == doctest::Approx(1.0));
  std::vector<double> neg;
  for (double v : a) neg.push_back(-v);
  CHECK(cross_correlation(a, neg) == doctest::Approx(-1.0));
  CHECK(cross_correlation(a, c) == 0.0);
  CHECK(cross_correlation(c, d) == 1.0);
  CHECK_THROWS_AS(cross_correlation(a, std::vector<double>{1, 2}), InvalidArgument);
}

TEST_CASE("top hits order by score then id") {
  const BlockFeatureVector f(2);
  const FeatureRecord r1{5, 0, f}, r2{3, 1, f}, r3{9, 0, f}, r4{1, 1, f};
  const std::vector<const FeatureRecord*> recs = {&r1, &r2, &r3, &r4};
  const std::vector<double> scores = {0.5, 0.9, 0.5, 0.1};
  const RankedHits hits = top_hits(recs, scores, 3);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].image_id == 3);
  CHECK(hits[1].image_id == 5);
  CHECK(hits[2].image_id == 9);
  CHECK(top_hits(recs, scores, 10).size() == 4);
}

TEST_CASE("index validation") {
  std::mt19937_64 gen(1);
  FeatureStore store;
  store.k = 2;
  store.class_count = 2;
  const auto f = extract_features(fixtures::random_image(gen, 16, 16), 2);
  store.records = {{1, 0, f}, {1, 1, f}};
  CHECK_THROWS_AS(RetrievalIndex{store}, InvalidArgument);
  store.records = {{1, 0, f}, {2, 2, f}};
  CHECK_THROWS_AS(RetrievalIndex{store}, InvalidArgument);
  store.records = {{1, 0, f}, {2, 1, f}, {3, 1, f}};
  CHECK(RetrievalIndex(store).class_sizes() == std::vector<int>{1, 2});
}

TEST_CASE("self query ranks itself first") {
  std::mt19937_64 gen(12);
  const RetrievalIndex index = random_index(gen, 4, 20);
  ErrorHistogram h(2, 4);
  std::vector<double> errs(16);
  for (int j = 0; j < 16; ++j) errs[static_cast<std::size_t>(j)] = j;
  h.add(0, errs);
  h.add(1, errs);
  const auto& rec = index.records()[7];
  QueryOptions o;
  o.m = 5;
  const QueryResult r = query_features(index, rec.features, fixed_classifier(4, 1), h, o);
  CHECK(r.hits[0].image_id == rec.image_id);
  CHECK(r.hits[0].score == doctest::Approx(1.0));
  CHECK(r.predicted_class == 1);
  CHECK(r.scored_length == 16 * kLbpBins);

  o.d = 0.5;
  const QueryResult half = query_features(index, rec.features, fixed_classifier(4, 1), h, o);
  CHECK(half.scored_length == 8 * kLbpBins);
  CHECK(half.mask.dropped() == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("class scope restricts candidates") {
  std::mt19937_64 gen(13);
  const RetrievalIndex index = random_index(gen, 2, 12);
  ErrorHistogram h(2, 2);
  h.add(0, std::vector<double>{1, 2, 3, 4});
  h.add(1, std::vector<double>{1, 2, 3, 4});
  QueryOptions o;
  o.m = 12;
  o.scope = SearchScope::kClass;
  const QueryResult r =
      query_features(index, index.records()[0].features, fixed_classifier(2, 0), h, o);
  CHECK(r.hits.size() == 6);
  for (const Hit& hit : r.hits) CHECK(hit.class_index == 0);
}

TEST_CASE("masked scores equal pearson over the kept index set") {
  std::mt19937_64 gen(14);
  const RetrievalIndex index = random_index(gen, 3, 6);
  BlockMask mask = full_mask(3);
  mask.keep[2] = mask.keep[4] = mask.keep[5] = false;
  const auto q = kernels::prepare_query(index.records()[0].features, mask);
  for (const auto& rec : index.records()) {
    std::vector<double> a, b;
    for (int j : {0, 1, 3, 6, 7, 8}) {
      const auto qs = index.records()[0].features.slot(j);
      const auto cs = rec.features.slot(j);
      a.insert(a.end(), qs.begin(), qs.end());
      b.insert(b.end(), cs.begin(), cs.end());
    }
    CHECK(kernels::score_candidate(q, rec.features) ==
          doctest::Approx(oracle::pearson(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("serial and parallel kernels agree") {
  std::mt19937_64 gen(15);
  const RetrievalIndex index = random_index(gen, 4, 30);
  std::vector<const BlockFeatureVector*> cands;
  for (const auto& r : index.records()) cands.push_back(&r.features);
  for (auto sim : {kernels::Similarity::kPearson, kernels::Similarity::kInnerProduct}) {
    const auto q = kernels::prepare_query(index.records()[3].features, full_mask(4), sim);
    std::vector<double> a(cands.size()), b(cands.size());
    kernels::score_serial(q, cands, a);
    kernels::score_parallel(q, cands, b, 4);
    CHECK(a == b);
  }

  std::vector<GrayImage> images;
  for (int i = 0; i < 7; ++i) images.push_back(fixtures::random_image(gen, 40, 40));
  CHECK(kernels::extract_features_serial(images, 4) ==
        kernels::extract_features_parallel(images, 4, 3));
}

TEST_CASE("inner product similarity") {
  std::vector<double> v(2 * 2 * kLbpBins, 0.0);
  v[0] = 2.0;
  v[kLbpBins] = 3.0;
  const BlockFeatureVector a(2, v);
  const auto q = kernels::prepare_query(a, full_mask(2), kernels::Similarity::kInnerProduct);
  CHECK(kernels::score_candidate(q, a) == 13.0);
}
