#include "aecbir/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "aecbir/error.hpp"
#include "aecbir/parallel.hpp"

namespace aecbir {

double cross_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("cross_correlation: length mismatch");
  if (a.size() < 2) throw InvalidArgument("cross_correlation: need at least 2 elements");

  const auto [alo, ahi] = std::minmax_element(a.begin(), a.end());
  const auto [blo, bhi] = std::minmax_element(b.begin(), b.end());
  const bool a_const = *alo == *ahi;
  const bool b_const = *blo == *bhi;
  if (a_const || b_const) return a_const && b_const ? 1.0 : 0.0;

  const auto n = static_cast<double>(a.size());
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  const double ma = sa / n;
  const double mb = sb / n;
  double cross = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    cross += da * db;
    saa += da * da;
    sbb += db * db;
  }
  return std::clamp(cross / std::sqrt(saa * sbb), -1.0, 1.0);
}

RetrievalIndex::RetrievalIndex(FeatureStore store) : store_(std::move(store)) {
  std::set<std::uint64_t> ids;
  class_sizes_.assign(static_cast<std::size_t>(std::max(store_.class_count, 0)), 0);
  for (const auto& r : store_.records) {
    if (r.features.k() != store_.k) throw InvalidArgument("index records differ in grid order");
    if (!ids.insert(r.image_id).second) {
      throw InvalidArgument("duplicate image id " + std::to_string(r.image_id) + " in index");
    }
    if (r.class_index >= class_sizes_.size()) {
      throw InvalidArgument("index record class out of range");
    }
    ++class_sizes_[r.class_index];
  }
}

RetrievalIndex build_index(const DatasetManifest& manifest, int k, int workers) {
  const auto train = manifest.indices(Split::kTrain);
  if (train.empty()) throw InvalidArgument("manifest has no training images");
  FeatureStore store;
  store.k = k;
  store.class_count = manifest.class_count();
  store.records.resize(train.size());
  parallel_for(static_cast<std::ptrdiff_t>(train.size()), workers, [&](std::ptrdiff_t i) {
    const std::size_t id = train[static_cast<std::size_t>(i)];
    const ManifestEntry& e = manifest.entries[id];
    const auto path = manifest.resolve(e);
    FeatureRecord& rec = store.records[static_cast<std::size_t>(i)];
    rec.image_id = id;
    rec.class_index = static_cast<std::uint32_t>(e.class_index);
    try {
      rec.features = extract_features(load_image(path), k);
    } catch (const InvalidArgument& err) {
      throw InvalidArgument(path.string() + ": " + err.what());
    }
  });
  return RetrievalIndex(std::move(store));
}

RankedHits top_hits(std::span<const FeatureRecord* const> records, std::span<const double> scores,
                    std::size_t m) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return records[a]->image_id < records[b]->image_id;
  };
  const std::size_t take = std::min(m, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    better);
  RankedHits hits;
  hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const FeatureRecord& r = *records[order[i]];
    hits.push_back({r.image_id, static_cast<int>(r.class_index), scores[order[i]]});
  }
  return hits;
}

QueryResult query_features(const RetrievalIndex& index, const BlockFeatureVector& f,
                           const MulticlassSvmModel& svm, const ErrorHistogram& h,
                           const QueryOptions& options) {
  if (index.empty()) throw InvalidArgument("retrieval index is empty");
  if (f.k() != index.k()) throw InvalidArgument("query grid order does not match index");
  if (options.m < 1) throw InvalidArgument("hit count m must be >= 1");

  QueryResult result;
  result.predicted_class = classify(svm, f.flat());
  result.mask = relevance_mask(h, result.predicted_class, options.d, index.k());
  std::vector<const FeatureRecord*> records;
  records.reserve(index.size());
  for (const auto& r : index.records()) {
    if (options.scope == SearchScope::kAll ||
        static_cast<int>(r.class_index) == result.predicted_class) {
      records.push_back(&r);
    }
  }
  std::vector<const BlockFeatureVector*> candidates;
  candidates.reserve(records.size());
  for (const auto* r : records) candidates.push_back(&r->features);
  std::vector<double> scores(candidates.size());

  const auto start = std::chrono::steady_clock::now();
  const kernels::PreparedQuery q = kernels::prepare_query(f, result.mask, options.similarity);
  if (options.workers == 1) {
    kernels::score_serial(q, candidates, scores);
  } else {
    kernels::score_parallel(q, candidates, scores, options.workers);
  }
  const auto stop = std::chrono::steady_clock::now();
  result.scoring_seconds = std::chrono::duration<double>(stop - start).count();
  result.scored_length = q.length();

  result.hits = top_hits(records, scores, options.m);
  return result;
}

QueryResult query(const RetrievalIndex& index, const GrayImage& image,
                  const MulticlassSvmModel& svm, const ErrorHistogram& h,
                  const QueryOptions& options) {
  return query_features(index, extract_features(image, index.k()), svm, h, options);
}

}  // namespace aecbir
