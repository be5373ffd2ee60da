#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace aecbir {

struct SvmParams {
  double C = 10.0;
  // <= 0 means 1 / feature length, resolved at training time.
  double gamma = 0.0;
  double tol = 1e-3;
  int max_passes = 100;

  friend bool operator==(const SvmParams&, const SvmParams&) = default;
};

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

// f(x) = sum_i coef_i K(sv_i, x) + bias, coef_i = alpha_i * y_i.
struct BinarySvmModel {
  double gamma = 0.0;
  std::vector<std::vector<double>> support_vectors;
  std::vector<double> coef;
  double bias = 0.0;

  double decision(std::span<const double> x) const;
  // Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij.
  double dual_objective() const;

  friend bool operator==(const BinarySvmModel&, const BinarySvmModel&) = default;
};

struct BinarySvmFit {
  BinarySvmModel model;
  // Unpruned dual variables, one per training sample.
  std::vector<double> alphas;
  int passes = 0;
  bool converged = false;
};

// Sequential minimal optimization (Platt). Second-choice scans start at a
// position drawn from a generator seeded by `seed`. Support vectors with
// alpha < 1e-12 are pruned from the returned model.
BinarySvmFit fit_binary_svm(std::span<const std::vector<double>> X, std::span<const int> y,
                            const SvmParams& params, std::uint64_t seed);

inline BinarySvmModel train_binary_svm(std::span<const std::vector<double>> X,
                                       std::span<const int> y, const SvmParams& params,
                                       std::uint64_t seed) {
  return fit_binary_svm(X, y, params, seed).model;
}

// Largest KKT residual of a trained model over its training set, and the
// equality-constraint residual |sum alpha_i y_i|. Samples missing from the
// model's support vectors are treated as alpha = 0.
struct KktReport {
  double max_violation = 0.0;
  double equality_residual = 0.0;
  double max_alpha = 0.0;
  bool box_feasible = true;

  bool ok(double tol) const {
    return box_feasible && max_violation <= tol && equality_residual <= tol;
  }
};

KktReport audit_binary_fit(const BinarySvmFit& fit, std::span<const std::vector<double>> X,
                           std::span<const int> y, double C);

struct PairModel {
  int class_a = 0;  // mapped to -1
  int class_b = 0;  // mapped to +1
  BinarySvmModel model;

  friend bool operator==(const PairModel&, const PairModel&) = default;
};

struct MulticlassSvmModel {
  SvmParams params;  // gamma resolved
  std::size_t feature_length = 0;
  std::vector<int> classes;
  std::vector<PairModel> pairs;  // sorted by (class_a, class_b)

  friend bool operator==(const MulticlassSvmModel&, const MulticlassSvmModel&) = default;
};

struct MulticlassFit {
  MulticlassSvmModel model;
  std::vector<BinarySvmFit> pair_fits;  // parallel to model.pairs
  // Sample indices used for each pair, in the same order.
  std::vector<std::vector<std::size_t>> pair_samples;
};

// One-vs-one: one binary problem per class pair a < b. Pairs train in
// parallel; pair i uses sub-seed mix_seed(seed, i).
MulticlassFit fit_multiclass(std::span<const std::vector<double>> X, std::span<const int> labels,
                             const SvmParams& params, std::uint64_t seed, int workers = 0);

inline MulticlassSvmModel train_multiclass(std::span<const std::vector<double>> X,
                                           std::span<const int> labels, const SvmParams& params,
                                           std::uint64_t seed, int workers = 0) {
  return fit_multiclass(X, labels, params, seed, workers).model;
}

struct Vote {
  int class_index = 0;
  std::vector<int> votes;        // per entry of model.classes
  std::vector<double> strength;  // sum of |decision| over won pairs
};

// Majority vote over pairwise decisions (decision >= 0 votes for class_b).
// Ties: larger strength, then smaller class index.
Vote classify_votes(const MulticlassSvmModel& model, std::span<const double> f);
inline int classify(const MulticlassSvmModel& model, std::span<const double> f) {
  return classify_votes(model, f).class_index;
}

void save_svm_model(const MulticlassSvmModel& model, const std::filesystem::path& path);
MulticlassSvmModel load_svm_model(const std::filesystem::path& path);

}  // namespace aecbir
