// aecbir: corpus generation, training, querying and benchmarking.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aecbir/error.hpp"
#include "aecbir/pipeline.hpp"

namespace {

using aecbir::PipelineConfig;

// Flag values; only the ones given on the command line override the config.
struct Overrides {
  std::string config;
  std::optional<int> k, s, p, epochs, batch_size, svm_max_passes, workers;
  std::optional<int> classes, per_class, image_size;
  std::optional<double> d, lr, init_scale, svm_c, svm_gamma, svm_tol;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scope, similarity, manifest, artifacts, reports, corpus;

  PipelineConfig resolve() const {
    PipelineConfig cfg = config.empty() ? PipelineConfig{} : PipelineConfig::load(config);
    auto set = [](auto& field, const auto& opt) {
      if (opt) field = *opt;
    };
    set(cfg.k, k);
    set(cfg.s, s);
    set(cfg.p, p);
    set(cfg.epochs, epochs);
    set(cfg.batch_size, batch_size);
    set(cfg.svm_max_passes, svm_max_passes);
    set(cfg.workers, workers);
    set(cfg.classes, classes);
    set(cfg.per_class, per_class);
    set(cfg.image_size, image_size);
    set(cfg.d, d);
    set(cfg.learning_rate, lr);
    set(cfg.init_scale, init_scale);
    set(cfg.svm_c, svm_c);
    set(cfg.svm_gamma, svm_gamma);
    set(cfg.svm_tol, svm_tol);
    set(cfg.seed, seed);
    set(cfg.scope, scope);
    set(cfg.similarity, similarity);
    if (manifest) cfg.manifest = *manifest;
    if (artifacts) cfg.artifacts = *artifacts;
    if (reports) cfg.reports = *reports;
    if (corpus) cfg.corpus = *corpus;
    if (corpus && !manifest) cfg.manifest = cfg.corpus / "manifest.csv";
    return cfg;
  }
};

void add_common(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config, "JSON config file; flags override it")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--k", o.k, "grid order");
  app.add_option("--d", o.d, "block reduction fraction in [0,1)");
  app.add_option("--s", o.s, "autoencoder block side");
  app.add_option("--p", o.p, "autoencoder hidden width");
  app.add_option("--epochs", o.epochs);
  app.add_option("--lr", o.lr, "learning rate");
  app.add_option("--batch-size", o.batch_size, "0 = full batch");
  app.add_option("--init-scale", o.init_scale);
  app.add_option("--svm-c", o.svm_c);
  app.add_option("--svm-gamma", o.svm_gamma, "0 = 1/feature length");
  app.add_option("--svm-tol", o.svm_tol);
  app.add_option("--svm-max-passes", o.svm_max_passes);
  app.add_option("--workers", o.workers, "query scoring threads");
  app.add_option("--scope", o.scope)->check(CLI::IsMember({"all", "class"}));
  app.add_option("--similarity", o.similarity)->check(CLI::IsMember({"pearson", "inner"}));
  app.add_option("--manifest", o.manifest);
  app.add_option("--artifacts", o.artifacts);
  app.add_option("--reports", o.reports);
  app.add_option("--corpus", o.corpus, "corpus directory");
  app.add_option("--classes", o.classes);
  app.add_option("--per-class", o.per_class);
  app.add_option("--image-size", o.image_size);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"autoencoder-guided block LBP image retrieval"};
  app.require_subcommand(1);

  Overrides o;
  std::string image;
  std::size_t m = 10;
  aecbir::BenchmarkSweep sweep;

  auto* gen = app.add_subcommand("gen", "write a synthetic PGM corpus and manifest");
  auto* train = app.add_subcommand("train", "train autoencoder, histogram, SVM and index");
  auto* query = app.add_subcommand("query", "rank the index against one image");
  auto* bench = app.add_subcommand("benchmark", "precision/recall/time sweep over k and d");
  auto* eval = app.add_subcommand("eval-classify", "SVM accuracy and IRMA error on the test split");
  for (auto* sub : {gen, train, query, bench, eval}) add_common(*sub, o);

  query->add_option("image", image, "PGM query image")->required();
  query->add_option("--m", m, "hits to list")->check(CLI::PositiveNumber);
  bench->add_option("--ks", sweep.ks, "grid orders")->delimiter(',');
  bench->add_option("--ds", sweep.ds, "reduction fractions")->delimiter(',');
  bench->add_option("--ms", sweep.ms, "cut-offs")->delimiter(',');
  bench->add_option("--queries", sweep.queries)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    const PipelineConfig cfg = o.resolve();
    if (*gen) return aecbir::cmd_gen(cfg, std::cout);
    if (*train) return aecbir::cmd_train(cfg, std::cout);
    if (*query) return aecbir::cmd_query(cfg, image, m, std::cout);
    if (*eval) return aecbir::cmd_eval_classify(cfg, std::cout);
    if (*bench) return aecbir::cmd_benchmark(cfg, sweep, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
