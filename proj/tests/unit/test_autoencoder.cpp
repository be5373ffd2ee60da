#include <doctest.h>

#include <cmath>
#include <random>

#include "aecbir/autoencoder.hpp"
#include "aecbir/error.hpp"
#include "aecbir/features.hpp"
#include "support/checks.hpp"

using namespace aecbir;

TEST_CASE("resample matches bilinear oracle") {
  std::mt19937_64 gen(21);
  for (auto [w, h, s] : {std::tuple{16, 16, 16}, {10, 7, 16}, {40, 33, 8}, {5, 9, 4}}) {
    const GrayImage img = fixtures::random_image(gen, w + 3, h + 2);
    const auto got = resample_block(img.view().crop(2, 1, w, h), s);
    const auto want = oracle::bilinear(fixtures::to_raster(img), 2, 1, w, h, s);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("resample at native size is the identity scaled to unit range") {
  std::mt19937_64 gen(2);
  const GrayImage img = fixtures::random_image(gen, 8, 8);
  const auto got = resample_block(img.view(), 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) CHECK(got[static_cast<std::size_t>(y * 8 + x)] == doctest::Approx(img.at(x, y) / 255.0));
}

TEST_CASE("forward pass agrees with a hand-written one") {
  const Autoencoder ae = init_autoencoder(6, 3, 4, 0.7);
  CHECK(ae.parameter_count() == 6 * 3 * 2 + 3 + 6);
  for (const auto& x : checks::random_samples(8, 4, 6)) {
    const auto got = ae.reconstruct(x);
    const auto want = checks::forward(ae, x);
    for (std::size_t i = 0; i < 6; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-14));
  }
}

TEST_CASE("backprop agrees with central differences") {
  CHECK(checks::gradient_check(6, 3, 1) < 1e-4);
  CHECK(checks::gradient_check(9, 4, 2) < 1e-4);
}

TEST_CASE("full batch loss does not increase") {
  const auto losses = checks::full_batch_losses(6, 3, 20, 5, 3);
  for (std::size_t i = 1; i < losses.size(); ++i) CHECK(losses[i] <= losses[i - 1]);

  const SampleSet samples = checks::random_samples(3, 20, 6);
  TrainConfig cfg;
  cfg.batch_size = 0;
  cfg.learning_rate = 0.5;
  const TrainResult r = train_autoencoder(init_autoencoder(6, 3, 10, 0.5), samples, cfg);
  REQUIRE(r.epoch_losses.size() == 5);
  for (std::size_t i = 1; i < 5; ++i) CHECK(r.epoch_losses[i] <= r.epoch_losses[i - 1]);
  CHECK(r.epoch_losses[0] == doctest::Approx(checks::loss(init_autoencoder(6, 3, 10, 0.5), samples)));
}

TEST_CASE("training is seeded") {
  const SampleSet samples = checks::random_samples(5, 40, 16);
  TrainConfig cfg;
  cfg.batch_size = 8;
  const Autoencoder init = init_autoencoder(16, 4, 3, 0.1);
  CHECK(train_autoencoder(init, samples, cfg).model == train_autoencoder(init, samples, cfg).model);
  cfg.seed = 2;
  TrainConfig other = cfg;
  other.seed = 3;
  CHECK_FALSE(train_autoencoder(init, samples, cfg).model ==
              train_autoencoder(init, samples, other).model);
}

TEST_CASE("autoencoder contracts") {
  CHECK_THROWS_WITH_AS(init_autoencoder(256, 256, 1, 0.1), doctest::Contains("p must be < n"),
                       InvalidArgument);
  const Autoencoder ae = init_autoencoder(6, 3, 1, 0.1);
  SampleSet bad = checks::random_samples(1, 4, 6);
  bad[2][3] = std::nan("");
  CHECK_THROWS_WITH_AS(train_autoencoder(ae, bad, TrainConfig{}), doctest::Contains("epoch 1"),
                       NumericalError);
  CHECK_THROWS_AS(train_autoencoder(ae, checks::random_samples(1, 4, 5), TrainConfig{}),
                  InvalidArgument);
}

TEST_CASE("error histogram accumulates per class and position") {
  std::mt19937_64 gen(17);
  std::vector<LabeledImage> images;
  for (int i = 0; i < 6; ++i) images.push_back({fixtures::random_image(gen, 16, 16), i % 2});
  const Autoencoder ae = init_autoencoder(16, 4, 1, 0.3);
  const ErrorHistogram h = build_error_histogram(ae, images, 2, 2, 4, 1);
  const ErrorHistogram h4 = build_error_histogram(ae, images, 2, 2, 4, 4);
  CHECK(h == h4);

  ErrorHistogram manual(2, 2);
  for (const auto& li : images) manual.add(li.class_index, block_errors(ae, li.image, 2, 4));
  CHECK(h == manual);
  CHECK(h.count(1, 3) == 3);

  // block errors recomputed from the oracle resampler and forward pass
  const auto raster = fixtures::to_raster(images[0].image);
  const auto errs = block_errors(ae, images[0].image, 2, 4);
  for (int j = 0; j < 4; ++j) {
    const auto x = oracle::bilinear(raster, (j % 2) * 8, (j / 2) * 8, 8, 8, 4);
    const auto y = checks::forward(ae, x);
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) sq += (y[i] - x[i]) * (y[i] - x[i]);
    CHECK(errs[static_cast<std::size_t>(j)] == doctest::Approx(sq / 16.0).epsilon(1e-12));
  }
}

TEST_CASE("model and histogram persistence") {
  fixtures::TempDir dir("ae");
  const Autoencoder ae = init_autoencoder(9, 2, 6, 0.1);
  save_autoencoder(ae, dir / "ae.bin");
  CHECK(load_autoencoder(dir / "ae.bin") == ae);

  ErrorHistogram h(3, 2);
  h.add(1, std::vector<double>{0.1, 0.2, 0.3, 0.4});
  save_error_histogram(h, dir / "h.bin");
  CHECK(load_error_histogram(dir / "h.bin") == h);
  CHECK_THROWS(load_error_histogram(dir / "ae.bin"));
}
