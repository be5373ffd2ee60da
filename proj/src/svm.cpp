#include "aecbir/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "aecbir/binary_io.hpp"
#include "aecbir/error.hpp"
#include "aecbir/parallel.hpp"
#include "aecbir/rng.hpp"

namespace aecbir {

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  if (x.size() != y.size()) throw InvalidArgument("rbf_kernel: length mismatch");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

double BinarySvmModel::decision(std::span<const double> x) const {
  double f = bias;
  for (std::size_t i = 0; i < support_vectors.size(); ++i) {
    f += coef[i] * rbf_kernel(support_vectors[i], x, gamma);
  }
  return f;
}

double BinarySvmModel::dual_objective() const {
  double linear = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < support_vectors.size(); ++i) {
    linear += std::abs(coef[i]);
    for (std::size_t j = 0; j < support_vectors.size(); ++j) {
      quad += coef[i] * coef[j] * rbf_kernel(support_vectors[i], support_vectors[j], gamma);
    }
  }
  return linear - 0.5 * quad;
}

// --- SMO -------------------------------------------------------------------

namespace {

constexpr double kPruneThreshold = 1e-12;
constexpr double kStepEpsilon = 1e-10;
constexpr double kSnap = 1e-10;  // relative to C

class SmoSolver {
 public:
  SmoSolver(std::span<const std::vector<double>> X, std::span<const int> y,
            const SvmParams& params, std::uint64_t seed)
      : y_(y.begin(), y.end()),
        n_(y.size()),
        C_(params.C),
        tol_(params.tol),
        rng_(seed),
        alpha_(n_, 0.0),
        f_(n_, 0.0),
        K_(n_ * n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i; j < n_; ++j) {
        const double k = rbf_kernel(X[i], X[j], params.gamma);
        K_[i * n_ + j] = k;
        K_[j * n_ + i] = k;
      }
    }
  }

  // Returns (passes, converged).
  std::pair<int, bool> run(int max_passes) {
    int passes = 0;
    int changed = 0;
    bool examine_all = true;
    while ((changed > 0 || examine_all) && passes < max_passes) {
      changed = 0;
      for (std::size_t i = 0; i < n_; ++i) {
        if (examine_all || is_free(i)) changed += examine(i);
      }
      if (examine_all) {
        examine_all = false;
      } else if (changed == 0) {
        examine_all = true;
      }
      ++passes;
    }
    finalize_bias();
    return {passes, !(changed > 0 || examine_all)};
  }

  const std::vector<double>& alphas() const { return alpha_; }
  double bias() const { return b_; }

 private:
  bool is_free(std::size_t i) const { return alpha_[i] > 0.0 && alpha_[i] < C_; }
  double snap(double a) const {
    const double eps = kSnap * C_;
    if (a < eps) return 0.0;
    if (a > C_ - eps) return C_;
    return a;
  }
  double error(std::size_t i) const { return f_[i] + b_ - y_[i]; }
  double kern(std::size_t i, std::size_t j) const { return K_[i * n_ + j]; }

  int examine(std::size_t i2) {
    const double y2 = y_[i2];
    const double a2 = alpha_[i2];
    const double e2 = error(i2);
    const double r2 = e2 * y2;
    if (!((r2 < -tol_ && a2 < C_) || (r2 > tol_ && a2 > 0.0))) return 0;

    // Largest |E1 - E2| among free multipliers first.
    std::size_t best = n_;
    double best_gap = -1.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!is_free(i)) continue;
      const double gap = std::abs(error(i) - e2);
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best != n_ && take_step(best, i2)) return 1;

    const std::size_t start_free = static_cast<std::size_t>(rng_.below(n_));
    for (std::size_t t = 0; t < n_; ++t) {
      const std::size_t i1 = (start_free + t) % n_;
      if (is_free(i1) && take_step(i1, i2)) return 1;
    }
    const std::size_t start_all = static_cast<std::size_t>(rng_.below(n_));
    for (std::size_t t = 0; t < n_; ++t) {
      const std::size_t i1 = (start_all + t) % n_;
      if (take_step(i1, i2)) return 1;
    }
    return 0;
  }

  bool take_step(std::size_t i1, std::size_t i2) {
    if (i1 == i2) return false;
    const double a1 = alpha_[i1];
    const double a2 = alpha_[i2];
    const double y1 = y_[i1];
    const double y2 = y_[i2];
    const double e1 = error(i1);
    const double e2 = error(i2);
    const double s = y1 * y2;

    double lo, hi;
    if (y1 != y2) {
      lo = std::max(0.0, a2 - a1);
      hi = std::min(C_, C_ + a2 - a1);
    } else {
      lo = std::max(0.0, a1 + a2 - C_);
      hi = std::min(C_, a1 + a2);
    }
    if (hi - lo <= 0.0) return false;

    const double k11 = kern(i1, i1);
    const double k12 = kern(i1, i2);
    const double k22 = kern(i2, i2);
    const double eta = k11 + k22 - 2.0 * k12;

    double new_a2;
    if (eta > 0.0) {
      new_a2 = std::clamp(a2 + y2 * (e1 - e2) / eta, lo, hi);
    } else {
      // Objective along the constraint line is linear; take the better end.
      const double f1 = y1 * (e1 - b_) - a1 * k11 - s * a2 * k12;
      const double f2 = y2 * (e2 - b_) - s * a1 * k12 - a2 * k22;
      const double l1 = a1 + s * (a2 - lo);
      const double h1 = a1 + s * (a2 - hi);
      const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 + 0.5 * lo * lo * k22 +
                            s * lo * l1 * k12;
      const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 + 0.5 * hi * hi * k22 +
                            s * hi * h1 * k12;
      if (obj_lo < obj_hi - kStepEpsilon) {
        new_a2 = lo;
      } else if (obj_lo > obj_hi + kStepEpsilon) {
        new_a2 = hi;
      } else {
        new_a2 = a2;
      }
    }
    new_a2 = snap(new_a2);
    if (std::abs(new_a2 - a2) < kStepEpsilon * (new_a2 + a2 + kStepEpsilon)) return false;

    double new_a1 = a1 + s * (a2 - new_a2);
    if (new_a1 < 0.0) {
      new_a2 += s * new_a1;
      new_a1 = 0.0;
    } else if (new_a1 > C_) {
      new_a2 += s * (new_a1 - C_);
      new_a1 = C_;
    }
    // rounding can leave a multiplier a hair inside the box
    new_a1 = snap(new_a1);
    new_a2 = snap(std::clamp(new_a2, 0.0, C_));

    const double d1 = y1 * (new_a1 - a1);
    const double d2 = y2 * (new_a2 - a2);
    const double b1 = b_ - e1 - d1 * k11 - d2 * k12;
    const double b2 = b_ - e2 - d1 * k12 - d2 * k22;
    if (new_a1 > 0.0 && new_a1 < C_) {
      b_ = b1;
    } else if (new_a2 > 0.0 && new_a2 < C_) {
      b_ = b2;
    } else {
      b_ = 0.5 * (b1 + b2);
    }

    for (std::size_t i = 0; i < n_; ++i) f_[i] += d1 * kern(i, i1) + d2 * kern(i, i2);
    alpha_[i1] = new_a1;
    alpha_[i2] = new_a2;
    return true;
  }

  // Bias from the free multipliers; without any, the midpoint of the range
  // allowed by the bound ones.
  void finalize_bias() {
    double sum = 0.0;
    int free = 0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) {
      const double target = y_[i] - f_[i];  // value of b putting i on its margin
      if (is_free(i)) {
        sum += target;
        ++free;
        continue;
      }
      // alpha = 0 needs y f >= 1; alpha = C needs y f <= 1.
      const bool at_zero = alpha_[i] <= 0.0;
      if ((y_[i] > 0) == at_zero) {
        lower = std::max(lower, target);
      } else {
        upper = std::min(upper, target);
      }
    }
    if (free > 0) {
      b_ = sum / free;
    } else if (std::isfinite(lower) && std::isfinite(upper)) {
      b_ = 0.5 * (lower + upper);
    } else if (std::isfinite(lower)) {
      b_ = lower;
    } else if (std::isfinite(upper)) {
      b_ = upper;
    }
  }

  std::vector<double> y_;
  std::size_t n_;
  double C_;
  double tol_;
  Rng rng_;
  std::vector<double> alpha_;
  std::vector<double> f_;  // sum_j alpha_j y_j K_ij, without bias
  std::vector<double> K_;
  double b_ = 0.0;
};

SvmParams resolved(const SvmParams& params, std::size_t feature_length) {
  SvmParams p = params;
  if (!(p.C > 0.0)) throw InvalidArgument("SVM penalty C must be positive");
  if (!(p.tol > 0.0)) throw InvalidArgument("SVM tolerance must be positive");
  if (p.max_passes < 1) throw InvalidArgument("SVM max_passes must be >= 1");
  if (!(p.gamma > 0.0)) {
    if (feature_length == 0) throw InvalidArgument("cannot resolve gamma for empty features");
    p.gamma = 1.0 / static_cast<double>(feature_length);
  }
  return p;
}

void check_samples(std::span<const std::vector<double>> X) {
  if (X.empty()) throw InvalidArgument("SVM training needs samples");
  const std::size_t len = X.front().size();
  for (const auto& x : X) {
    if (x.size() != len) throw InvalidArgument("SVM samples have differing lengths");
    for (double v : x) {
      if (!std::isfinite(v)) throw InvalidArgument("non-finite feature value in SVM input");
    }
  }
}

}  // namespace

BinarySvmFit fit_binary_svm(std::span<const std::vector<double>> X, std::span<const int> y,
                            const SvmParams& params, std::uint64_t seed) {
  check_samples(X);
  if (X.size() != y.size()) throw InvalidArgument("SVM labels and samples differ in count");
  bool has_neg = false, has_pos = false;
  for (int v : y) {
    if (v == 1) {
      has_pos = true;
    } else if (v == -1) {
      has_neg = true;
    } else {
      throw InvalidArgument("binary SVM labels must be -1 or +1");
    }
  }
  if (!has_neg || !has_pos) throw InvalidArgument("binary SVM needs samples of both classes");

  const SvmParams p = resolved(params, X.front().size());
  SmoSolver solver(X, y, p, seed);
  const auto [passes, converged] = solver.run(p.max_passes);

  BinarySvmFit fit;
  fit.alphas = solver.alphas();
  fit.passes = passes;
  fit.converged = converged;
  fit.model.gamma = p.gamma;
  fit.model.bias = solver.bias();
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (fit.alphas[i] < kPruneThreshold) continue;
    fit.model.support_vectors.push_back(X[i]);
    fit.model.coef.push_back(fit.alphas[i] * y[i]);
  }
  return fit;
}

KktReport audit_binary_fit(const BinarySvmFit& fit, std::span<const std::vector<double>> X,
                           std::span<const int> y, double C) {
  KktReport report;
  double eq = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    // Pruned multipliers are exactly zero in the model.
    const double a = fit.alphas[i] < kPruneThreshold ? 0.0 : fit.alphas[i];
    eq += a * y[i];
    report.max_alpha = std::max(report.max_alpha, a);
    if (a < 0.0 || a > C) report.box_feasible = false;
    const double margin = y[i] * fit.model.decision(X[i]);
    double violation = 0.0;
    if (a <= 0.0) {
      violation = std::max(0.0, 1.0 - margin);
    } else if (a >= C) {
      violation = std::max(0.0, margin - 1.0);
    } else {
      violation = std::abs(margin - 1.0);
    }
    report.max_violation = std::max(report.max_violation, violation);
  }
  report.equality_residual = std::abs(eq);
  return report;
}

MulticlassFit fit_multiclass(std::span<const std::vector<double>> X, std::span<const int> labels,
                             const SvmParams& params, std::uint64_t seed, int workers) {
  check_samples(X);
  if (X.size() != labels.size()) throw InvalidArgument("SVM labels and samples differ in count");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  if (by_class.size() < 2) throw InvalidArgument("multiclass SVM needs at least 2 classes");

  MulticlassFit fit;
  fit.model.params = resolved(params, X.front().size());
  fit.model.feature_length = X.front().size();
  for (const auto& [c, idx] : by_class) fit.model.classes.push_back(c);

  const auto& cls = fit.model.classes;
  for (std::size_t a = 0; a < cls.size(); ++a) {
    for (std::size_t b = a + 1; b < cls.size(); ++b) {
      fit.model.pairs.push_back({cls[a], cls[b], {}});
    }
  }
  fit.pair_fits.resize(fit.model.pairs.size());
  fit.pair_samples.resize(fit.model.pairs.size());

  parallel_for(static_cast<std::ptrdiff_t>(fit.model.pairs.size()), workers, [&](std::ptrdiff_t i) {
    const auto u = static_cast<std::size_t>(i);
    PairModel& pair = fit.model.pairs[u];
    const auto& neg = by_class.at(pair.class_a);
    const auto& pos = by_class.at(pair.class_b);
    std::vector<std::size_t> idx;
    idx.reserve(neg.size() + pos.size());
    std::merge(neg.begin(), neg.end(), pos.begin(), pos.end(), std::back_inserter(idx));
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    xs.reserve(idx.size());
    for (std::size_t s : idx) {
      xs.push_back(X[s]);
      ys.push_back(labels[s] == pair.class_b ? 1 : -1);
    }
    fit.pair_fits[u] = fit_binary_svm(xs, ys, fit.model.params, mix_seed(seed, u));
    pair.model = fit.pair_fits[u].model;
    fit.pair_samples[u] = std::move(idx);
  });
  return fit;
}

Vote classify_votes(const MulticlassSvmModel& model, std::span<const double> f) {
  if (f.size() != model.feature_length) {
    throw InvalidArgument("feature length " + std::to_string(f.size()) +
                          " does not match model length " +
                          std::to_string(model.feature_length));
  }
  std::map<int, std::size_t> slot;
  for (std::size_t i = 0; i < model.classes.size(); ++i) slot[model.classes[i]] = i;

  Vote vote;
  vote.votes.assign(model.classes.size(), 0);
  vote.strength.assign(model.classes.size(), 0.0);
  for (const PairModel& pm : model.pairs) {
    const double dv = pm.model.decision(f);
    const std::size_t winner = slot.at(dv >= 0.0 ? pm.class_b : pm.class_a);
    vote.votes[winner] += 1;
    vote.strength[winner] += std::abs(dv);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < model.classes.size(); ++i) {
    // classes are ascending, so keeping the earlier entry on full ties
    // prefers the smaller class index.
    if (vote.votes[i] > vote.votes[best] ||
        (vote.votes[i] == vote.votes[best] && vote.strength[i] > vote.strength[best])) {
      best = i;
    }
  }
  vote.class_index = model.classes[best];
  return vote;
}

// --- persistence -----------------------------------------------------------

namespace {
constexpr std::string_view kSvmMagic = "AECBSVMM";
constexpr std::uint32_t kSvmVersion = 1;
}  // namespace

void save_svm_model(const MulticlassSvmModel& model, const std::filesystem::path& path) {
  io::BinaryWriter w;
  w.magic(kSvmMagic);
  w.u32(kSvmVersion);
  w.f64(model.params.C);
  w.f64(model.params.gamma);
  w.f64(model.params.tol);
  w.u32(static_cast<std::uint32_t>(model.params.max_passes));
  w.u64(model.feature_length);
  w.u32(static_cast<std::uint32_t>(model.classes.size()));
  for (int c : model.classes) w.u32(static_cast<std::uint32_t>(c));
  w.u32(static_cast<std::uint32_t>(model.pairs.size()));
  for (const PairModel& pm : model.pairs) {
    w.u32(static_cast<std::uint32_t>(pm.class_a));
    w.u32(static_cast<std::uint32_t>(pm.class_b));
    w.u32(static_cast<std::uint32_t>(pm.model.support_vectors.size()));
    for (const auto& sv : pm.model.support_vectors) w.f64s(sv);
    w.f64s(pm.model.coef);
    w.f64(pm.model.bias);
  }
  w.save(path);
}

MulticlassSvmModel load_svm_model(const std::filesystem::path& path) {
  auto r = io::BinaryReader::open(path);
  r.expect_magic(kSvmMagic);
  r.expect_version(kSvmVersion);
  MulticlassSvmModel m;
  m.params.C = r.f64();
  m.params.gamma = r.f64();
  m.params.tol = r.f64();
  m.params.max_passes = static_cast<int>(r.u32());
  m.feature_length = r.u64();
  if (m.feature_length == 0 || m.feature_length > (1u << 24)) {
    throw FormatError(r.source() + ": implausible feature length");
  }
  const std::uint32_t class_count = r.u32();
  for (std::uint32_t i = 0; i < class_count; ++i) m.classes.push_back(static_cast<int>(r.u32()));
  const std::uint32_t pair_count = r.u32();
  if (pair_count != class_count * (class_count - 1) / 2) {
    throw FormatError(r.source() + ": pair count does not match class count");
  }
  for (std::uint32_t i = 0; i < pair_count; ++i) {
    PairModel pm;
    pm.class_a = static_cast<int>(r.u32());
    pm.class_b = static_cast<int>(r.u32());
    pm.model.gamma = m.params.gamma;
    const std::uint32_t svs = r.u32();
    pm.model.support_vectors.resize(svs);
    for (auto& sv : pm.model.support_vectors) {
      sv.resize(m.feature_length);
      r.f64s(sv);
    }
    pm.model.coef.resize(svs);
    r.f64s(pm.model.coef);
    pm.model.bias = r.f64();
    m.pairs.push_back(std::move(pm));
  }
  r.expect_end();
  return m;
}

}  // namespace aecbir
