#include "aecbir/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "aecbir/error.hpp"

namespace aecbir {

std::vector<int> BlockMask::kept() const {
  std::vector<int> out;
  for (std::size_t j = 0; j < keep.size(); ++j) {
    if (keep[j]) out.push_back(static_cast<int>(j));
  }
  return out;
}

std::vector<int> BlockMask::dropped() const {
  std::vector<int> out;
  for (std::size_t j = 0; j < keep.size(); ++j) {
    if (!keep[j]) out.push_back(static_cast<int>(j));
  }
  return out;
}

int BlockMask::kept_count() const {
  return static_cast<int>(std::count(keep.begin(), keep.end(), true));
}

int dropped_block_count(double d, int k) {
  if (!(d >= 0.0 && d < 1.0)) {
    throw InvalidArgument("reduction fraction must be in [0, 1), got " + std::to_string(d));
  }
  return static_cast<int>(std::floor(d * k * k));
}

BlockMask full_mask(int k) { return {k, std::vector<bool>(static_cast<std::size_t>(k) * k, true)}; }

BlockMask mask_from_errors(std::span<const double> mean_errors, double d, int k) {
  const int positions = k * k;
  if (mean_errors.size() != static_cast<std::size_t>(positions)) {
    throw InvalidArgument("error row length does not match k*k");
  }
  const int drop = dropped_block_count(d, k);
  std::vector<int> order(static_cast<std::size_t>(positions));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return mean_errors[static_cast<std::size_t>(a)] < mean_errors[static_cast<std::size_t>(b)];
  });
  BlockMask mask = full_mask(k);
  for (int i = 0; i < drop; ++i) mask.keep[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = false;
  return mask;
}

BlockMask relevance_mask(const ErrorHistogram& h, int c, double d, int k) {
  if (k != h.k) {
    throw InvalidArgument("grid order " + std::to_string(k) + " does not match histogram k=" +
                          std::to_string(h.k));
  }
  if (c < 0 || c >= h.class_count) {
    throw InvalidArgument("class " + std::to_string(c) + " not present in error histogram");
  }
  std::vector<double> means(static_cast<std::size_t>(h.positions()));
  for (int j = 0; j < h.positions(); ++j) {
    if (h.count(c, j) == 0) {
      throw InvalidArgument("class " + std::to_string(c) + " unseen in error histogram");
    }
    means[static_cast<std::size_t>(j)] = h.mean(c, j);
  }
  return mask_from_errors(means, d, k);
}

std::vector<double> apply_mask(const BlockFeatureVector& f, const BlockMask& mask) {
  if (f.k() != mask.k || mask.keep.size() != static_cast<std::size_t>(f.slot_count())) {
    throw InvalidArgument("mask grid does not match feature grid");
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(mask.kept_count()) * kLbpBins);
  for (int j = 0; j < f.slot_count(); ++j) {
    if (!mask.keep[static_cast<std::size_t>(j)]) continue;
    const auto s = f.slot(j);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

}  // namespace aecbir
