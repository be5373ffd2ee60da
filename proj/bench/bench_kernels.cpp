// Serial vs OpenMP kernels: candidate scoring and feature extraction.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "aecbir/kernels.hpp"
#include "aecbir/relevance.hpp"

using namespace aecbir;

namespace {

std::vector<GrayImage> images(int count) {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> px(0, 255);
  std::vector<GrayImage> out;
  for (int i = 0; i < count; ++i) {
    std::vector<std::uint8_t> data(64 * 64);
    for (auto& v : data) v = static_cast<std::uint8_t>(px(gen));
    out.emplace_back(64, 64, std::move(data));
  }
  return out;
}

struct Corpus {
  std::vector<BlockFeatureVector> features;
  std::vector<const BlockFeatureVector*> ptrs;

  Corpus(int k, int count) : features(kernels::extract_features_serial(images(count), k)) {
    for (const auto& f : features) ptrs.push_back(&f);
  }
};

// args: k, candidates, dropped fraction in percent, workers (0 = serial)
void BM_Score(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const Corpus corpus(k, static_cast<int>(state.range(1)));
  std::vector<double> means(static_cast<std::size_t>(k * k));
  for (std::size_t j = 0; j < means.size(); ++j) means[j] = static_cast<double>((j * 7) % 11);
  const BlockMask mask = mask_from_errors(means, static_cast<double>(state.range(2)) / 100.0, k);
  const int workers = static_cast<int>(state.range(3));
  std::vector<double> scores(corpus.ptrs.size());
  for (auto _ : state) {
    const auto q = kernels::prepare_query(corpus.features[0], mask);
    if (workers == 0) kernels::score_serial(q, corpus.ptrs, scores);
    else kernels::score_parallel(q, corpus.ptrs, scores, workers);
    benchmark::DoNotOptimize(scores.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus.ptrs.size()));
}

void BM_Extract(benchmark::State& state) {
  const auto imgs = images(static_cast<int>(state.range(0)));
  const int workers = static_cast<int>(state.range(1));
  for (auto _ : state) {
    auto f = workers == 0 ? kernels::extract_features_serial(imgs, 4)
                          : kernels::extract_features_parallel(imgs, 4, workers);
    benchmark::DoNotOptimize(f.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Score)
    ->ArgNames({"k", "n", "drop", "workers"})
    ->ArgsProduct({{4, 6}, {240, 2000}, {0, 50}, {0, 1, 4}})
    ->UseRealTime();
BENCHMARK(BM_Extract)->ArgNames({"images", "workers"})->ArgsProduct({{64}, {0, 1, 4}})->UseRealTime();

BENCHMARK_MAIN();
