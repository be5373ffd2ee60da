#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "aecbir/autoencoder.hpp"
#include "aecbir/dataset.hpp"
#include "aecbir/retrieval.hpp"
#include "aecbir/svm.hpp"

namespace aecbir {

// Possible labels per code position, per axis. Defaults to the alphabet size.
struct IrmaErrorConfig {
  std::array<std::vector<double>, 4> branching = {
      std::vector<double>(4, 36.0), std::vector<double>(3, 36.0), std::vector<double>(3, 36.0),
      std::vector<double>(3, 36.0)};
};

// Position-weighted code distance: each axis contributes at most 0.25,
// weighting a mismatch at (1-based) position i by 1/(b_i * i) and
// normalizing by the axis maximum. 0 for equal codes, 1 when every position
// differs.
double irma_error(const IrmaCode& predicted, const IrmaCode& truth,
                  const IrmaErrorConfig& cfg = {});

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// True positives are hits among the first m whose class equals query_class.
// precision = tp / min(m, |hits|), recall = tp / class_size.
PrecisionRecall precision_recall_at_m(const RankedHits& hits, int query_class,
                                      std::size_t class_size, std::size_t m);

// Lexicographically smallest code seen per class in the train split.
std::map<int, IrmaCode> representative_codes(const DatasetManifest& manifest);

struct ClassificationSummary {
  std::size_t test_count = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  // Sum of irma_error between each test image's code and the representative
  // code of its predicted class. Only set when codes were scored.
  double summed_irma_error = 0.0;
  bool irma_scored = false;
  std::vector<int> predictions;  // parallel to the test split
};

struct LabeledFeatures {
  BlockFeatureVector features;
  int class_index = 0;
  std::optional<IrmaCode> code;
};

ClassificationSummary classification_accuracy(const MulticlassSvmModel& model,
                                              std::span<const LabeledFeatures> test,
                                              const std::map<int, IrmaCode>* representatives,
                                              const IrmaErrorConfig& cfg = {});

// Loads and scores the test split of `manifest`. IRMA scoring is requested
// with `score_irma`; it throws if any test or train code is missing.
ClassificationSummary classification_accuracy(const MulticlassSvmModel& model,
                                              const DatasetManifest& manifest, int k,
                                              bool score_irma, int workers = 0);

// Trained artifacts for one grid order.
struct GridArtifacts {
  int k = 0;
  const RetrievalIndex* index = nullptr;
  const MulticlassSvmModel* svm = nullptr;
  const ErrorHistogram* histogram = nullptr;
};

struct BenchmarkConfig {
  std::vector<double> d_values = {0.0, 0.125, 0.25, 0.5};
  std::vector<std::size_t> m_values = {10, 20, 30};
  std::size_t queries = 100;
  std::uint64_t seed = 1;
  int workers = 1;
  SearchScope scope = SearchScope::kAll;
  // Echoed into report headers.
  std::vector<std::pair<std::string, std::string>> header;
};

struct BenchmarkRow {
  int k = 0;
  double d = 0.0;
  int dropped_blocks = 0;
  std::size_t scored_length = 0;
  std::size_t queries = 0;
  std::vector<double> precision;  // parallel to m_values
  std::vector<double> recall;
  double mean_seconds = 0.0;
  // Relative to the d = 0 row of the same k, in percent.
  std::vector<double> precision_drop_pct;
  std::vector<double> recall_drop_pct;
  double time_gain_pct = 0.0;
  // Dropped block positions per class (0-based), for audit.
  std::vector<std::vector<int>> dropped_by_class;
};

struct GridClassification {
  int k = 0;
  double accuracy = 0.0;
  double mean_irma_error = 0.0;
  double summed_irma_error = 0.0;
  bool irma_scored = false;
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::vector<BenchmarkRow> rows;  // d-major, then k
  std::vector<GridClassification> classification;
  std::vector<std::string> audit_failures;

  bool audit_ok() const { return audit_failures.empty(); }
};

// For each (k, d): draws `queries` test images by a seeded generator, runs
// them through query_features after one discarded warm-up query, and
// averages precision/recall at every m plus scoring time. Every query's
// results are recounted independently; disagreements land in audit_failures.
BenchmarkReport run_benchmark(const DatasetManifest& manifest,
                              std::span<const GridArtifacts> grids, const BenchmarkConfig& config);

std::string format_benchmark_csv(const BenchmarkReport& report);
std::string format_benchmark_table(const BenchmarkReport& report);
// Writes benchmark.csv and benchmark.txt into `dir`.
void write_benchmark_report(const BenchmarkReport& report, const std::filesystem::path& dir);

}  // namespace aecbir
