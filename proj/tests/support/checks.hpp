#pragma once

// Checks shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "aecbir/autoencoder.hpp"
#include "aecbir/svm.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace checks {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Forward pass written out from the weight layout: encoder rows are hidden
// units, decoder rows are outputs.
inline std::vector<double> forward(const aecbir::Autoencoder& ae, const std::vector<double>& x) {
  std::vector<double> h(static_cast<std::size_t>(ae.p));
  for (int j = 0; j < ae.p; ++j) {
    long double z = ae.encoder_bias[static_cast<std::size_t>(j)];
    for (int i = 0; i < ae.n; ++i) {
      z += ae.encoder_weights[static_cast<std::size_t>(j * ae.n + i)] * x[static_cast<std::size_t>(i)];
    }
    h[static_cast<std::size_t>(j)] = sigmoid(static_cast<double>(z));
  }
  std::vector<double> out(static_cast<std::size_t>(ae.n));
  for (int o = 0; o < ae.n; ++o) {
    long double z = ae.decoder_bias[static_cast<std::size_t>(o)];
    for (int j = 0; j < ae.p; ++j) {
      z += ae.decoder_weights[static_cast<std::size_t>(o * ae.p + j)] * h[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(o)] = sigmoid(static_cast<double>(z));
  }
  return out;
}

// Mean over samples of the per-sample mean squared reconstruction error.
inline double loss(const aecbir::Autoencoder& ae, const aecbir::SampleSet& samples) {
  long double total = 0.0L;
  for (const auto& x : samples) {
    const auto y = forward(ae, x);
    long double sq = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) sq += (y[i] - x[i]) * (y[i] - x[i]);
    total += sq / x.size();
  }
  return static_cast<double>(total / samples.size());
}

inline aecbir::SampleSet random_samples(std::uint64_t seed, int count, int n) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  aecbir::SampleSet s(static_cast<std::size_t>(count), std::vector<double>(static_cast<std::size_t>(n)));
  for (auto& row : s)
    for (auto& v : row) v = u(gen);
  return s;
}

// Largest relative disagreement between backprop and central differences
// over every parameter of an n/p/n network.
inline double gradient_check(int n, int p, std::uint64_t seed) {
  const aecbir::Autoencoder ae = aecbir::init_autoencoder(n, p, seed, 0.8);
  const aecbir::SampleSet samples = random_samples(seed + 1, 5, n);
  std::vector<std::size_t> batch(samples.size());
  std::iota(batch.begin(), batch.end(), 0);
  aecbir::AutoencoderGradient g;
  aecbir::loss_and_gradient(ae, samples, batch, g);

  double worst = 0.0;
  const double h = 1e-5;
  auto probe = [&](std::vector<double> aecbir::Autoencoder::*field,
                   const std::vector<double>& analytic) {
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      aecbir::Autoencoder plus = ae, minus = ae;
      (plus.*field)[i] += h;
      (minus.*field)[i] -= h;
      const double numeric = (loss(plus, samples) - loss(minus, samples)) / (2 * h);
      const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-7});
      worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
    }
  };
  probe(&aecbir::Autoencoder::encoder_weights, g.encoder_weights);
  probe(&aecbir::Autoencoder::encoder_bias, g.encoder_bias);
  probe(&aecbir::Autoencoder::decoder_weights, g.decoder_weights);
  probe(&aecbir::Autoencoder::decoder_bias, g.decoder_bias);
  return worst;
}

// Full-batch training on `count` samples; returns the loss before training
// followed by the independently recomputed loss after each epoch.
inline std::vector<double> full_batch_losses(int n, int p, int count, int epochs,
                                             std::uint64_t seed) {
  const aecbir::SampleSet samples = random_samples(seed, count, n);
  aecbir::Autoencoder ae = aecbir::init_autoencoder(n, p, seed + 7, 0.5);
  std::vector<double> losses = {loss(ae, samples)};
  aecbir::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 0;
  cfg.learning_rate = 0.5;
  for (int e = 0; e < epochs; ++e) {
    ae = aecbir::train_autoencoder(ae, samples, cfg).model;
    losses.push_back(loss(ae, samples));
  }
  return losses;
}

// 13 symbols from a small alphabet so that matches are common.
inline std::string random_code(std::mt19937_64& gen) {
  static const char alphabet[] = "0123abz";
  std::uniform_int_distribution<int> pick(0, 6);
  std::string s;
  for (int i = 0; i < 13; ++i) s.push_back(alphabet[pick(gen)]);
  return s;
}

struct SvmComparison {
  bool predictions_match = true;
  double objective_gap = 0.0;
  double smo_objective = 0.0;
  double qp_objective = 0.0;
};

inline SvmComparison compare_with_qp(const fixtures::SvmFixture& f, std::uint64_t seed) {
  aecbir::SvmParams params;
  params.C = f.C;
  params.gamma = f.gamma;
  params.tol = 1e-6;
  params.max_passes = 1000;
  const aecbir::BinarySvmFit fit = aecbir::fit_binary_svm(f.X, f.y, params, seed);
  const oracle::DualSolution qp = oracle::solve_dual(f.X, f.y, f.C, f.gamma);

  SvmComparison c;
  c.smo_objective = fit.model.dual_objective();
  c.qp_objective = qp.objective;
  c.objective_gap = std::abs(c.smo_objective - c.qp_objective);
  for (const auto& x : f.X) {
    const bool a = fit.model.decision(x) >= 0.0;
    const bool b = qp.decision(f.X, f.y, x, f.gamma) >= 0.0;
    if (a != b) c.predictions_match = false;
  }
  return c;
}

}  // namespace checks
