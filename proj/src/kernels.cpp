#include "aecbir/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "aecbir/error.hpp"
#include "aecbir/parallel.hpp"

namespace aecbir::kernels {

PreparedQuery prepare_query(const BlockFeatureVector& f, const BlockMask& mask,
                            Similarity similarity) {
  PreparedQuery q;
  q.similarity = similarity;
  q.kept_slots = mask.kept();
  q.values = apply_mask(f, mask);
  if (q.values.size() < 2) throw InvalidArgument("scored vectors need at least 2 elements");

  double sum = 0.0;
  for (double v : q.values) sum += v;
  const double mean = sum / static_cast<double>(q.values.size());
  q.centred.resize(q.values.size());
  for (std::size_t i = 0; i < q.values.size(); ++i) {
    q.centred[i] = q.values[i] - mean;
    q.sum_squares += q.centred[i] * q.centred[i];
  }
  const auto [lo, hi] = std::minmax_element(q.values.begin(), q.values.end());
  q.constant = *lo == *hi;
  return q;
}

double score_candidate(const PreparedQuery& q, const BlockFeatureVector& candidate) {
  if (q.similarity == Similarity::kInnerProduct) {
    double dot = 0.0;
    std::size_t pos = 0;
    for (int j : q.kept_slots) {
      const double* b = candidate.slot(j).data();
      const double* a = q.values.data() + pos;
      for (std::size_t i = 0; i < kLbpBins; ++i) dot += a[i] * b[i];
      pos += kLbpBins;
    }
    return dot;
  }

  double sum = 0.0;
  double lo = candidate.slot(q.kept_slots.front())[0];
  double hi = lo;
  for (int j : q.kept_slots) {
    for (double v : candidate.slot(j)) {
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  const bool constant = lo == hi;
  if (constant || q.constant) return constant && q.constant ? 1.0 : 0.0;

  const double mean = sum / static_cast<double>(q.length());
  double cross = 0.0;
  double squares = 0.0;
  std::size_t pos = 0;
  for (int j : q.kept_slots) {
    const double* b = candidate.slot(j).data();
    const double* a = q.centred.data() + pos;
    for (std::size_t i = 0; i < kLbpBins; ++i) {
      const double d = b[i] - mean;
      cross += a[i] * d;
      squares += d * d;
    }
    pos += kLbpBins;
  }
  return std::clamp(cross / std::sqrt(q.sum_squares * squares), -1.0, 1.0);
}

void score_serial(const PreparedQuery& q, std::span<const BlockFeatureVector* const> candidates,
                  std::span<double> scores) {
  for (std::size_t i = 0; i < candidates.size(); ++i) scores[i] = score_candidate(q, *candidates[i]);
}

void score_parallel(const PreparedQuery& q, std::span<const BlockFeatureVector* const> candidates,
                    std::span<double> scores, int workers) {
  const auto n = static_cast<std::ptrdiff_t>(candidates.size());
  [[maybe_unused]] const int threads = resolve_workers(workers);
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    scores[static_cast<std::size_t>(i)] =
        score_candidate(q, *candidates[static_cast<std::size_t>(i)]);
  }
}

std::vector<BlockFeatureVector> extract_features_serial(std::span<const GrayImage> images, int k) {
  std::vector<BlockFeatureVector> out;
  out.reserve(images.size());
  for (const auto& image : images) out.push_back(extract_features(image, k));
  return out;
}

std::vector<BlockFeatureVector> extract_features_parallel(std::span<const GrayImage> images, int k,
                                                          int workers) {
  std::vector<BlockFeatureVector> out(images.size());
  parallel_for(static_cast<std::ptrdiff_t>(images.size()), workers, [&](std::ptrdiff_t i) {
    out[static_cast<std::size_t>(i)] = extract_features(images[static_cast<std::size_t>(i)], k);
  });
  return out;
}

}  // namespace aecbir::kernels
