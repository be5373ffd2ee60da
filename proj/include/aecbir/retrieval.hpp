#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "aecbir/autoencoder.hpp"
#include "aecbir/dataset.hpp"
#include "aecbir/features.hpp"
#include "aecbir/kernels.hpp"
#include "aecbir/relevance.hpp"
#include "aecbir/svm.hpp"

namespace aecbir {

// Pearson correlation. Exactly one constant input gives 0; two constant
// inputs give 1. Throws on length mismatch or length < 2.
double cross_correlation(std::span<const double> a, std::span<const double> b);

// Immutable feature index over the training images. Records share k and have
// unique image ids.
class RetrievalIndex {
 public:
  RetrievalIndex() = default;
  explicit RetrievalIndex(FeatureStore store);

  int k() const { return store_.k; }
  int class_count() const { return store_.class_count; }
  std::size_t size() const { return store_.records.size(); }
  bool empty() const { return store_.records.empty(); }
  const std::vector<FeatureRecord>& records() const { return store_.records; }
  const FeatureStore& store() const { return store_; }
  // Number of records per class index.
  const std::vector<int>& class_sizes() const { return class_sizes_; }

  void save(const std::filesystem::path& path) const { save_feature_store(store_, path); }
  static RetrievalIndex load(const std::filesystem::path& path) {
    return RetrievalIndex(load_feature_store(path));
  }

  friend bool operator==(const RetrievalIndex& a, const RetrievalIndex& b) {
    return a.store_ == b.store_;
  }

 private:
  FeatureStore store_;
  std::vector<int> class_sizes_;
};

// One record per train-split image, in manifest order; image id = position of
// the entry in the manifest.
RetrievalIndex build_index(const DatasetManifest& manifest, int k, int workers = 0);

struct Hit {
  std::uint64_t image_id = 0;
  int class_index = 0;
  double score = 0.0;

  friend bool operator==(const Hit&, const Hit&) = default;
};

using RankedHits = std::vector<Hit>;

enum class SearchScope {
  kAll,    // whole index
  kClass,  // only records of the predicted class
};

struct QueryOptions {
  double d = 0.0;
  std::size_t m = 10;
  SearchScope scope = SearchScope::kAll;
  kernels::Similarity similarity = kernels::Similarity::kPearson;
  int workers = 1;
};

struct QueryResult {
  RankedHits hits;
  int predicted_class = 0;
  BlockMask mask;
  std::size_t scored_length = 0;
  double scoring_seconds = 0.0;
};

// Steps 2-5 of a query for precomputed features: classify the full vector,
// mask by the predicted class, score every candidate with the same mask and
// return the top m (score descending, then image id ascending). Only the
// scoring loop is timed.
QueryResult query_features(const RetrievalIndex& index, const BlockFeatureVector& f,
                           const MulticlassSvmModel& svm, const ErrorHistogram& h,
                           const QueryOptions& options);

QueryResult query(const RetrievalIndex& index, const GrayImage& image,
                  const MulticlassSvmModel& svm, const ErrorHistogram& h,
                  const QueryOptions& options);

// Top m of `scores` over `records`, ordered by score then image id.
RankedHits top_hits(std::span<const FeatureRecord* const> records, std::span<const double> scores,
                    std::size_t m);

}  // namespace aecbir
