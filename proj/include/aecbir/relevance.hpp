#pragma once

#include <vector>

#include "aecbir/autoencoder.hpp"
#include "aecbir/features.hpp"

namespace aecbir {

// Which of the k*k block positions take part in retrieval.
struct BlockMask {
  int k = 0;
  std::vector<bool> keep;

  std::vector<int> kept() const;
  std::vector<int> dropped() const;
  int kept_count() const;

  friend bool operator==(const BlockMask&, const BlockMask&) = default;
};

// Number of positions removed for reduction fraction d: floor(d * k * k).
int dropped_block_count(double d, int k);

// Drops the floor(d*k*k) positions of class c with the lowest mean error.
// Ties go to the lower block index. Throws if d is outside [0, 1), k does not
// match H, or class c has no samples in H.
BlockMask relevance_mask(const ErrorHistogram& h, int c, double d, int k);

// Same selection on an explicit per-position mean-error row.
BlockMask mask_from_errors(std::span<const double> mean_errors, double d, int k);

BlockMask full_mask(int k);

// Kept slots concatenated in block-index order.
std::vector<double> apply_mask(const BlockFeatureVector& f, const BlockMask& mask);

}  // namespace aecbir
