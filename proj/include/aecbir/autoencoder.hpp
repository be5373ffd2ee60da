#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "aecbir/dataset.hpp"

namespace aecbir {

// Bilinear resample of `block` to s x s (pixel-centre alignment, edge
// clamped), scaled to [0, 1] and flattened row-major.
std::vector<double> resample_block(const PixelView& block, int s);

// Shallow n/p/n network with logistic activations on both layers.
// Weights are row-major: encoder is p x n, decoder is n x p.
struct Autoencoder {
  int n = 0;
  int p = 0;
  std::vector<double> encoder_weights;
  std::vector<double> encoder_bias;
  std::vector<double> decoder_weights;
  std::vector<double> decoder_bias;

  std::size_t parameter_count() const {
    return encoder_weights.size() + encoder_bias.size() + decoder_weights.size() +
           decoder_bias.size();
  }

  // Writes the reconstruction of `x` into `out` (length n). `hidden` is
  // scratch of length p.
  void reconstruct(std::span<const double> x, std::span<double> hidden,
                   std::span<double> out) const;
  std::vector<double> reconstruct(std::span<const double> x) const;

  friend bool operator==(const Autoencoder&, const Autoencoder&) = default;
};

// Weights uniform in [-init_scale, init_scale], biases zero. Throws
// InvalidArgument unless 0 < p < n.
Autoencoder init_autoencoder(int n, int p, std::uint64_t seed, double init_scale);

// Same layout as Autoencoder's parameters.
struct AutoencoderGradient {
  std::vector<double> encoder_weights;
  std::vector<double> encoder_bias;
  std::vector<double> decoder_weights;
  std::vector<double> decoder_bias;
};

using SampleSet = std::vector<std::vector<double>>;

// Mean over `batch` (indices into `samples`) of the per-sample mean squared
// reconstruction error, with its gradient by backpropagation.
double loss_and_gradient(const Autoencoder& ae, const SampleSet& samples,
                         std::span<const std::size_t> batch, AutoencoderGradient& grad);

struct TrainConfig {
  int epochs = 5;
  double learning_rate = 0.1;
  // 0 trains full-batch.
  int batch_size = 32;
  std::uint64_t seed = 1;
  double init_scale = 0.1;
};

struct TrainResult {
  Autoencoder model;
  // Mean loss over each epoch, measured before each update.
  std::vector<double> epoch_losses;
};

// Mini-batch gradient descent on the reconstruction MSE. Samples are
// reshuffled every epoch by a generator seeded from cfg.seed.
TrainResult train_autoencoder(Autoencoder ae, const SampleSet& samples, const TrainConfig& cfg);

// (1/n) * sum of squared reconstruction residuals.
double reconstruction_error(const Autoencoder& ae, std::span<const double> x);

// Per-class, per-block accumulated reconstruction error. Row c, column j is
// at index c*k*k + j.
struct ErrorHistogram {
  int class_count = 0;
  int k = 0;
  std::vector<double> sums;
  std::vector<std::uint64_t> counts;

  ErrorHistogram() = default;
  ErrorHistogram(int class_count, int k);

  int positions() const { return k * k; }
  double sum(int c, int j) const { return sums[index(c, j)]; }
  std::uint64_t count(int c, int j) const { return counts[index(c, j)]; }
  double mean(int c, int j) const;
  // Folds one image's per-block errors into row c.
  void add(int c, std::span<const double> block_errors);

  std::size_t index(int c, int j) const {
    return static_cast<std::size_t>(c) * static_cast<std::size_t>(positions()) +
           static_cast<std::size_t>(j);
  }

  friend bool operator==(const ErrorHistogram&, const ErrorHistogram&) = default;
};

// Reconstruction error of every block of `image` in block-index order.
std::vector<double> block_errors(const Autoencoder& ae, const GrayImage& image, int k, int s);

struct LabeledImage {
  GrayImage image;
  int class_index = 0;
};

// Errors are computed in parallel per image and merged in input order, so
// the result is independent of the worker count.
ErrorHistogram build_error_histogram(const Autoencoder& ae, std::span<const LabeledImage> images,
                                     int class_count, int k, int s, int workers = 0);
// Loads the train split of `manifest` in manifest order.
ErrorHistogram build_error_histogram(const Autoencoder& ae, const DatasetManifest& manifest,
                                     int k, int s, int workers = 0);

// Every block of every image resampled to s x s, image-major then block order.
SampleSet collect_block_samples(std::span<const LabeledImage> images, int k, int s);

void save_autoencoder(const Autoencoder& ae, const std::filesystem::path& path);
Autoencoder load_autoencoder(const std::filesystem::path& path);
void save_error_histogram(const ErrorHistogram& h, const std::filesystem::path& path);
ErrorHistogram load_error_histogram(const std::filesystem::path& path);

}  // namespace aecbir
