#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "aecbir/autoencoder.hpp"
#include "aecbir/dataset.hpp"
#include "aecbir/evaluation.hpp"
#include "aecbir/retrieval.hpp"
#include "aecbir/svm.hpp"

namespace aecbir {

// Effective configuration for every subcommand. Loaded from a flat JSON file
// and then overridden by command-line flags.
struct PipelineConfig {
  int k = 4;
  double d = 0.0;
  int s = 16;  // autoencoder block side, n = s*s
  int p = 64;
  int epochs = 5;
  double learning_rate = 0.1;
  int batch_size = 32;
  double init_scale = 0.1;
  double svm_c = 10.0;
  double svm_gamma = 0.0;  // 0 = 1 / feature length
  double svm_tol = 1e-3;
  int svm_max_passes = 100;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string scope = "all";           // or "class"
  std::string similarity = "pearson";  // or "inner"
  std::filesystem::path manifest = "corpus/manifest.csv";
  std::filesystem::path artifacts = "artifacts";
  std::filesystem::path reports = "reports";

  // Corpus generation.
  int classes = 8;
  int per_class = 40;
  int image_size = 64;
  std::filesystem::path corpus = "corpus";

  // Throws InvalidArgument on p >= s*s, d outside [0,1), k outside 2..16 and
  // similar contract violations.
  void validate() const;

  // Flat JSON object; unknown keys are rejected.
  static PipelineConfig from_json(const std::string& text, const std::string& source);
  static PipelineConfig load(const std::filesystem::path& path);
  // Applies every key present in `text` on top of this config.
  void merge_json(const std::string& text, const std::string& source);
  std::string to_json() const;

  std::filesystem::path grid_dir(int grid_k) const;
  TrainConfig train_config() const;
  SvmParams svm_params() const;
  QueryOptions query_options(std::size_t m) const;
};

// Artifact file names inside grid_dir(k).
struct ArtifactPaths {
  std::filesystem::path autoencoder;
  std::filesystem::path histogram;
  std::filesystem::path svm;
  std::filesystem::path index;
  std::filesystem::path config;

  static ArtifactPaths in(const std::filesystem::path& dir);
};

struct TrainedArtifacts {
  int k = 0;
  Autoencoder autoencoder;
  ErrorHistogram histogram;
  MulticlassSvmModel svm;
  RetrievalIndex index;
};

// Loads and checks the four artifacts for grid order k; a missing file is
// reported by name.
TrainedArtifacts load_artifacts(const PipelineConfig& cfg, int k);

struct TrainSummary {
  TrainedArtifacts artifacts;
  std::vector<double> loss_curve;
  std::vector<int> class_counts;
  MulticlassFit svm_fit;
  std::vector<LabeledImage> train_images;
};

// Full training path for cfg.k on the train split of `manifest`.
TrainSummary train_pipeline(const PipelineConfig& cfg, const DatasetManifest& manifest);

// Subcommands. Each returns a process exit code and writes its listing to
// `out`. Errors propagate as exceptions tagged with the failing stage.
int cmd_gen(const PipelineConfig& cfg, std::ostream& out);
int cmd_train(const PipelineConfig& cfg, std::ostream& out);
int cmd_query(const PipelineConfig& cfg, const std::filesystem::path& image, std::size_t m,
              std::ostream& out);
int cmd_eval_classify(const PipelineConfig& cfg, std::ostream& out);

struct BenchmarkSweep {
  std::vector<int> ks = {4};
  std::vector<double> ds = {0.0, 0.125, 0.25, 0.5};
  std::vector<std::size_t> ms = {10, 20, 30};
  std::size_t queries = 100;
};

int cmd_benchmark(const PipelineConfig& cfg, const BenchmarkSweep& sweep, std::ostream& out);

}  // namespace aecbir
