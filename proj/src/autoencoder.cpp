#include "aecbir/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "aecbir/binary_io.hpp"
#include "aecbir/error.hpp"
#include "aecbir/features.hpp"
#include "aecbir/parallel.hpp"
#include "aecbir/rng.hpp"

namespace aecbir {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_width(const Autoencoder& ae, std::size_t got) {
  if (got != static_cast<std::size_t>(ae.n)) {
    throw InvalidArgument("sample length " + std::to_string(got) +
                          " does not match autoencoder width " + std::to_string(ae.n));
  }
}

}  // namespace

std::vector<double> resample_block(const PixelView& block, int s) {
  if (block.width < 2 || block.height < 2) {
    throw InvalidArgument("cannot resample a block smaller than 2x2");
  }
  if (s < 2) throw InvalidArgument("resample side must be at least 2");

  const double sx = static_cast<double>(block.width) / s;
  const double sy = static_cast<double>(block.height) / s;
  std::vector<double> out(static_cast<std::size_t>(s) * s);
  for (int i = 0; i < s; ++i) {
    const double fy = std::clamp((i + 0.5) * sy - 0.5, 0.0, block.height - 1.0);
    const int y0 = std::min(static_cast<int>(fy), block.height - 2);
    const double ty = fy - y0;
    for (int j = 0; j < s; ++j) {
      const double fx = std::clamp((j + 0.5) * sx - 0.5, 0.0, block.width - 1.0);
      const int x0 = std::min(static_cast<int>(fx), block.width - 2);
      const double tx = fx - x0;
      const double top = (1 - tx) * block.at(x0, y0) + tx * block.at(x0 + 1, y0);
      const double bottom = (1 - tx) * block.at(x0, y0 + 1) + tx * block.at(x0 + 1, y0 + 1);
      out[static_cast<std::size_t>(i) * s + j] = ((1 - ty) * top + ty * bottom) / 255.0;
    }
  }
  return out;
}

// --- network ---------------------------------------------------------------

void Autoencoder::reconstruct(std::span<const double> x, std::span<double> hidden,
                              std::span<double> out) const {
  for (int h = 0; h < p; ++h) {
    const double* w = encoder_weights.data() + static_cast<std::size_t>(h) * n;
    double z = encoder_bias[static_cast<std::size_t>(h)];
    for (int i = 0; i < n; ++i) z += w[i] * x[static_cast<std::size_t>(i)];
    hidden[static_cast<std::size_t>(h)] = sigmoid(z);
  }
  for (int o = 0; o < n; ++o) {
    const double* w = decoder_weights.data() + static_cast<std::size_t>(o) * p;
    double z = decoder_bias[static_cast<std::size_t>(o)];
    for (int h = 0; h < p; ++h) z += w[h] * hidden[static_cast<std::size_t>(h)];
    out[static_cast<std::size_t>(o)] = sigmoid(z);
  }
}

std::vector<double> Autoencoder::reconstruct(std::span<const double> x) const {
  check_width(*this, x.size());
  std::vector<double> hidden(static_cast<std::size_t>(p));
  std::vector<double> out(static_cast<std::size_t>(n));
  reconstruct(x, hidden, out);
  return out;
}

Autoencoder init_autoencoder(int n, int p, std::uint64_t seed, double init_scale) {
  if (p < 1 || n < 1) throw InvalidArgument("autoencoder widths must be positive");
  if (p >= n) {
    throw InvalidArgument("p must be < n (got p=" + std::to_string(p) +
                          ", n=" + std::to_string(n) + "); the autoencoder must compress");
  }
  if (!(init_scale > 0.0)) throw InvalidArgument("init_scale must be positive");

  Autoencoder ae;
  ae.n = n;
  ae.p = p;
  const auto np = static_cast<std::size_t>(n) * static_cast<std::size_t>(p);
  ae.encoder_weights.resize(np);
  ae.decoder_weights.resize(np);
  ae.encoder_bias.assign(static_cast<std::size_t>(p), 0.0);
  ae.decoder_bias.assign(static_cast<std::size_t>(n), 0.0);
  Rng rng(seed);
  for (double& w : ae.encoder_weights) w = rng.uniform(-init_scale, init_scale);
  for (double& w : ae.decoder_weights) w = rng.uniform(-init_scale, init_scale);
  return ae;
}

double loss_and_gradient(const Autoencoder& ae, const SampleSet& samples,
                         std::span<const std::size_t> batch, AutoencoderGradient& grad) {
  const auto n = static_cast<std::size_t>(ae.n);
  const auto p = static_cast<std::size_t>(ae.p);
  grad.encoder_weights.assign(n * p, 0.0);
  grad.encoder_bias.assign(p, 0.0);
  grad.decoder_weights.assign(n * p, 0.0);
  grad.decoder_bias.assign(n, 0.0);
  if (batch.empty()) return 0.0;

  std::vector<double> hidden(p), out(n), delta_out(n), delta_hidden(p);
  const double scale = 2.0 / (static_cast<double>(n) * static_cast<double>(batch.size()));
  double loss = 0.0;
  for (std::size_t idx : batch) {
    const auto& x = samples[idx];
    check_width(ae, x.size());
    ae.reconstruct(x, hidden, out);

    double sq = 0.0;
    for (std::size_t o = 0; o < n; ++o) {
      const double r = out[o] - x[o];
      sq += r * r;
      delta_out[o] = scale * r * out[o] * (1.0 - out[o]);
    }
    loss += sq / static_cast<double>(n);

    std::fill(delta_hidden.begin(), delta_hidden.end(), 0.0);
    for (std::size_t o = 0; o < n; ++o) {
      const double d = delta_out[o];
      const double* w = ae.decoder_weights.data() + o * p;
      double* g = grad.decoder_weights.data() + o * p;
      for (std::size_t h = 0; h < p; ++h) {
        g[h] += d * hidden[h];
        delta_hidden[h] += d * w[h];
      }
      grad.decoder_bias[o] += d;
    }
    for (std::size_t h = 0; h < p; ++h) {
      const double d = delta_hidden[h] * hidden[h] * (1.0 - hidden[h]);
      double* g = grad.encoder_weights.data() + h * n;
      for (std::size_t i = 0; i < n; ++i) g[i] += d * x[i];
      grad.encoder_bias[h] += d;
    }
  }
  return loss / static_cast<double>(batch.size());
}

TrainResult train_autoencoder(Autoencoder ae, const SampleSet& samples, const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (cfg.batch_size < 0) throw InvalidArgument("batch size must be >= 0");
  if (samples.empty()) throw InvalidArgument("autoencoder training needs at least one sample");
  for (const auto& x : samples) check_width(ae, x.size());

  const std::size_t batch_size =
      cfg.batch_size == 0 ? samples.size()
                          : std::min(samples.size(), static_cast<std::size_t>(cfg.batch_size));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.seed);
  AutoencoderGradient grad;

  auto step = [&](std::vector<double>& param, const std::vector<double>& g) {
    for (std::size_t i = 0; i < param.size(); ++i) param[i] -= cfg.learning_rate * g[i];
  };

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double weighted = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t len = std::min(batch_size, order.size() - start);
      const std::span<const std::size_t> batch(order.data() + start, len);
      const double loss = loss_and_gradient(ae, samples, batch, grad);
      if (!std::isfinite(loss)) {
        throw NumericalError("non-finite autoencoder loss in epoch " + std::to_string(epoch + 1));
      }
      weighted += loss * static_cast<double>(len);
      step(ae.encoder_weights, grad.encoder_weights);
      step(ae.encoder_bias, grad.encoder_bias);
      step(ae.decoder_weights, grad.decoder_weights);
      step(ae.decoder_bias, grad.decoder_bias);
    }
    result.epoch_losses.push_back(weighted / static_cast<double>(order.size()));
  }
  result.model = std::move(ae);
  return result;
}

double reconstruction_error(const Autoencoder& ae, std::span<const double> x) {
  check_width(ae, x.size());
  std::vector<double> hidden(static_cast<std::size_t>(ae.p));
  std::vector<double> out(static_cast<std::size_t>(ae.n));
  ae.reconstruct(x, hidden, out);
  double sq = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double r = out[i] - x[i];
    sq += r * r;
  }
  return sq / static_cast<double>(ae.n);
}

// --- error histogram -------------------------------------------------------

ErrorHistogram::ErrorHistogram(int class_count_, int k_)
    : class_count(class_count_),
      k(k_),
      sums(static_cast<std::size_t>(class_count_) * k_ * k_, 0.0),
      counts(static_cast<std::size_t>(class_count_) * k_ * k_, 0) {}

double ErrorHistogram::mean(int c, int j) const {
  const std::uint64_t n = count(c, j);
  return n == 0 ? 0.0 : sum(c, j) / static_cast<double>(n);
}

void ErrorHistogram::add(int c, std::span<const double> block_errors) {
  if (c < 0 || c >= class_count) {
    throw InvalidArgument("class index " + std::to_string(c) + " out of range");
  }
  if (block_errors.size() != static_cast<std::size_t>(positions())) {
    throw InvalidArgument("expected one error per block position");
  }
  for (int j = 0; j < positions(); ++j) {
    sums[index(c, j)] += block_errors[static_cast<std::size_t>(j)];
    counts[index(c, j)] += 1;
  }
}

std::vector<double> block_errors(const Autoencoder& ae, const GrayImage& image, int k, int s) {
  if (s * s != ae.n) {
    throw InvalidArgument("block side " + std::to_string(s) + " does not match autoencoder n=" +
                          std::to_string(ae.n));
  }
  const BlockGrid grid = block_grid(image, k);
  const PixelView view = image.view();
  std::vector<double> errors;
  errors.reserve(grid.rects.size());
  for (const BlockRect& r : grid.rects) {
    errors.push_back(
        reconstruction_error(ae, resample_block(view.crop(r.x, r.y, r.width, r.height), s)));
  }
  return errors;
}

ErrorHistogram build_error_histogram(const Autoencoder& ae, std::span<const LabeledImage> images,
                                     int class_count, int k, int s, int workers) {
  std::vector<std::vector<double>> per_image(images.size());
  parallel_for(static_cast<std::ptrdiff_t>(images.size()), workers, [&](std::ptrdiff_t i) {
    per_image[static_cast<std::size_t>(i)] =
        block_errors(ae, images[static_cast<std::size_t>(i)].image, k, s);
  });
  ErrorHistogram h(class_count, k);
  for (std::size_t i = 0; i < images.size(); ++i) h.add(images[i].class_index, per_image[i]);
  return h;
}

ErrorHistogram build_error_histogram(const Autoencoder& ae, const DatasetManifest& manifest,
                                     int k, int s, int workers) {
  const auto train = manifest.indices(Split::kTrain);
  if (train.empty()) throw InvalidArgument("manifest has no training images");
  std::vector<LabeledImage> images(train.size());
  parallel_for(static_cast<std::ptrdiff_t>(train.size()), workers, [&](std::ptrdiff_t i) {
    const ManifestEntry& e = manifest.entries[train[static_cast<std::size_t>(i)]];
    images[static_cast<std::size_t>(i)] = {load_image(manifest.resolve(e)), e.class_index};
  });
  return build_error_histogram(ae, images, manifest.class_count(), k, s, workers);
}

SampleSet collect_block_samples(std::span<const LabeledImage> images, int k, int s) {
  SampleSet samples;
  samples.reserve(images.size() * static_cast<std::size_t>(k) * k);
  for (const auto& li : images) {
    const BlockGrid grid = block_grid(li.image, k);
    const PixelView view = li.image.view();
    for (const BlockRect& r : grid.rects) {
      samples.push_back(resample_block(view.crop(r.x, r.y, r.width, r.height), s));
    }
  }
  return samples;
}

// --- persistence -----------------------------------------------------------

namespace {
constexpr std::string_view kModelMagic = "AECBAENC";
constexpr std::string_view kHistogramMagic = "AECBHIST";
constexpr std::uint32_t kFormatVersion = 1;
}  // namespace

void save_autoencoder(const Autoencoder& ae, const std::filesystem::path& path) {
  io::BinaryWriter w;
  w.magic(kModelMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(ae.n));
  w.u32(static_cast<std::uint32_t>(ae.p));
  w.f64s(ae.encoder_weights);
  w.f64s(ae.encoder_bias);
  w.f64s(ae.decoder_weights);
  w.f64s(ae.decoder_bias);
  w.save(path);
}

Autoencoder load_autoencoder(const std::filesystem::path& path) {
  auto r = io::BinaryReader::open(path);
  r.expect_magic(kModelMagic);
  r.expect_version(kFormatVersion);
  Autoencoder ae;
  ae.n = static_cast<int>(r.u32());
  ae.p = static_cast<int>(r.u32());
  if (ae.p < 1 || ae.p >= ae.n || ae.n > 1 << 20) {
    throw FormatError(r.source() + ": invalid autoencoder shape");
  }
  const auto np = static_cast<std::size_t>(ae.n) * static_cast<std::size_t>(ae.p);
  ae.encoder_weights.resize(np);
  ae.encoder_bias.resize(static_cast<std::size_t>(ae.p));
  ae.decoder_weights.resize(np);
  ae.decoder_bias.resize(static_cast<std::size_t>(ae.n));
  r.f64s(ae.encoder_weights);
  r.f64s(ae.encoder_bias);
  r.f64s(ae.decoder_weights);
  r.f64s(ae.decoder_bias);
  r.expect_end();
  return ae;
}

void save_error_histogram(const ErrorHistogram& h, const std::filesystem::path& path) {
  io::BinaryWriter w;
  w.magic(kHistogramMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(h.class_count));
  w.u32(static_cast<std::uint32_t>(h.k));
  w.f64s(h.sums);
  for (std::uint64_t c : h.counts) w.u64(c);
  w.save(path);
}

ErrorHistogram load_error_histogram(const std::filesystem::path& path) {
  auto r = io::BinaryReader::open(path);
  r.expect_magic(kHistogramMagic);
  r.expect_version(kFormatVersion);
  const auto classes = static_cast<int>(r.u32());
  const auto k = static_cast<int>(r.u32());
  if (classes < 1 || k < 1 || k > 64 || classes > 1 << 20) {
    throw FormatError(r.source() + ": invalid histogram shape");
  }
  ErrorHistogram h(classes, k);
  r.f64s(h.sums);
  for (auto& c : h.counts) c = r.u64();
  r.expect_end();
  return h;
}

}  // namespace aecbir
