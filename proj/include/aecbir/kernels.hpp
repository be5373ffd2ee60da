#pragma once

#include <span>
#include <vector>

#include "aecbir/dataset.hpp"
#include "aecbir/features.hpp"
#include "aecbir/relevance.hpp"

// Data-parallel inner loops of the pipeline. Every kernel has a serial
// reference and an OpenMP variant; both produce bit-identical results.
namespace aecbir::kernels {

enum class Similarity {
  kPearson,       // cross-correlation of the masked vectors
  kInnerProduct,  // raw dot product, for comparison only
};

// Query side of the scoring loop: the masked query vector, centred once so
// each candidate costs two passes over the kept slots only.
struct PreparedQuery {
  Similarity similarity = Similarity::kPearson;
  std::vector<int> kept_slots;
  std::vector<double> values;   // masked query, kept-slot order
  std::vector<double> centred;  // values - mean
  double sum_squares = 0.0;     // of centred
  bool constant = false;

  std::size_t length() const { return values.size(); }
};

PreparedQuery prepare_query(const BlockFeatureVector& f, const BlockMask& mask,
                            Similarity similarity = Similarity::kPearson);

// Score of one candidate, reading only the kept slots of `candidate`.
double score_candidate(const PreparedQuery& q, const BlockFeatureVector& candidate);

// scores[i] = score of candidates[i].
void score_serial(const PreparedQuery& q, std::span<const BlockFeatureVector* const> candidates,
                  std::span<double> scores);
void score_parallel(const PreparedQuery& q, std::span<const BlockFeatureVector* const> candidates,
                    std::span<double> scores, int workers);

std::vector<BlockFeatureVector> extract_features_serial(std::span<const GrayImage> images, int k);
std::vector<BlockFeatureVector> extract_features_parallel(std::span<const GrayImage> images, int k,
                                                          int workers);

}  // namespace aecbir::kernels
