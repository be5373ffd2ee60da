#include "aecbir/pipeline.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "aecbir/binary_io.hpp"
#include "aecbir/error.hpp"
#include "aecbir/kernels.hpp"
#include "aecbir/parallel.hpp"
#include "aecbir/relevance.hpp"
#include "aecbir/rng.hpp"

namespace aecbir {

using nlohmann::json;

// --- configuration ---------------------------------------------------------

void PipelineConfig::validate() const {
  if (k < 2 || k > 16) throw InvalidArgument("k must be in 2..16, got " + std::to_string(k));
  if (!(d >= 0.0 && d < 1.0)) throw InvalidArgument("d must be in [0, 1)");
  if (s < 2) throw InvalidArgument("s must be >= 2");
  if (p < 1 || p >= s * s) {
    throw InvalidArgument("p must be < n (p=" + std::to_string(p) +
                          ", n=" + std::to_string(s * s) + ")");
  }
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (batch_size < 0) throw InvalidArgument("batch_size must be >= 0");
  if (!(svm_c > 0.0) || !(svm_tol > 0.0) || svm_gamma < 0.0 || svm_max_passes < 1) {
    throw InvalidArgument("invalid SVM parameters");
  }
  if (workers < 1) throw InvalidArgument("workers must be >= 1");
  if (scope != "all" && scope != "class") throw InvalidArgument("scope must be all or class");
  if (similarity != "pearson" && similarity != "inner") {
    throw InvalidArgument("similarity must be pearson or inner");
  }
}

namespace {

template <typename T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void take_path(const json& j, const char* key, std::filesystem::path& field) {
  if (j.contains(key)) field = j.at(key).get<std::string>();
}

}  // namespace

void PipelineConfig::merge_json(const std::string& text, const std::string& source) {
  static const std::vector<std::string> kKeys = {
      "k",       "d",          "s",         "p",          "epochs",     "learning_rate",
      "batch_size", "init_scale", "svm_c",   "svm_gamma",  "svm_tol",    "svm_max_passes",
      "seed",    "workers",    "scope",     "similarity", "manifest",   "artifacts",
      "reports", "classes",    "per_class", "image_size", "corpus"};
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(source + ": " + e.what());
  }
  if (!j.is_object()) throw FormatError(source + ": config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
      throw FormatError(source + ": unknown config key '" + key + "'");
    }
  }
  try {
    take(j, "k", k);
    take(j, "d", d);
    take(j, "s", s);
    take(j, "p", p);
    take(j, "epochs", epochs);
    take(j, "learning_rate", learning_rate);
    take(j, "batch_size", batch_size);
    take(j, "init_scale", init_scale);
    take(j, "svm_c", svm_c);
    take(j, "svm_gamma", svm_gamma);
    take(j, "svm_tol", svm_tol);
    take(j, "svm_max_passes", svm_max_passes);
    take(j, "seed", seed);
    take(j, "workers", workers);
    take(j, "scope", scope);
    take(j, "similarity", similarity);
    take_path(j, "manifest", manifest);
    take_path(j, "artifacts", artifacts);
    take_path(j, "reports", reports);
    take(j, "classes", classes);
    take(j, "per_class", per_class);
    take(j, "image_size", image_size);
    take_path(j, "corpus", corpus);
  } catch (const json::exception& e) {
    throw FormatError(source + ": " + e.what());
  }
}

PipelineConfig PipelineConfig::from_json(const std::string& text, const std::string& source) {
  PipelineConfig cfg;
  cfg.merge_json(text, source);
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return from_json(std::string(bytes.begin(), bytes.end()), path.string());
}

std::string PipelineConfig::to_json() const {
  json j;
  j["k"] = k;
  j["d"] = d;
  j["s"] = s;
  j["p"] = p;
  j["epochs"] = epochs;
  j["learning_rate"] = learning_rate;
  j["batch_size"] = batch_size;
  j["init_scale"] = init_scale;
  j["svm_c"] = svm_c;
  j["svm_gamma"] = svm_gamma;
  j["svm_tol"] = svm_tol;
  j["svm_max_passes"] = svm_max_passes;
  j["seed"] = seed;
  j["workers"] = workers;
  j["scope"] = scope;
  j["similarity"] = similarity;
  j["manifest"] = manifest.string();
  j["artifacts"] = artifacts.string();
  j["reports"] = reports.string();
  j["classes"] = classes;
  j["per_class"] = per_class;
  j["image_size"] = image_size;
  j["corpus"] = corpus.string();
  return j.dump(2) + "\n";
}

std::filesystem::path PipelineConfig::grid_dir(int grid_k) const {
  return artifacts / ("k" + std::to_string(grid_k));
}

TrainConfig PipelineConfig::train_config() const {
  TrainConfig t;
  t.epochs = epochs;
  t.learning_rate = learning_rate;
  t.batch_size = batch_size;
  t.seed = mix_seed(seed, 2);
  t.init_scale = init_scale;
  return t;
}

SvmParams PipelineConfig::svm_params() const {
  return {svm_c, svm_gamma, svm_tol, svm_max_passes};
}

QueryOptions PipelineConfig::query_options(std::size_t m) const {
  QueryOptions o;
  o.d = d;
  o.m = m;
  o.scope = scope == "class" ? SearchScope::kClass : SearchScope::kAll;
  o.similarity = similarity == "inner" ? kernels::Similarity::kInnerProduct
                                       : kernels::Similarity::kPearson;
  o.workers = workers;
  return o;
}

ArtifactPaths ArtifactPaths::in(const std::filesystem::path& dir) {
  return {dir / "autoencoder.bin", dir / "histogram.bin", dir / "svm.bin", dir / "index.bin",
          dir / "config.json"};
}

// --- stages ----------------------------------------------------------------

namespace {

// Runs `fn`, prefixing any library error with the stage name while keeping
// its type.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  const auto tag = [&](const std::exception& e) { return std::string(name) + ": " + e.what(); };
  try {
    return fn();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(tag(e));
  } catch (const FormatError& e) {
    throw FormatError(tag(e));
  } catch (const IoError& e) {
    throw IoError(tag(e));
  } catch (const NumericalError& e) {
    throw NumericalError(tag(e));
  } catch (const Error& e) {
    throw Error(tag(e));
  }
}

std::vector<LabeledImage> load_train_images(const DatasetManifest& manifest,
                                            std::vector<std::size_t>& ids, int workers) {
  ids = manifest.indices(Split::kTrain);
  if (ids.empty()) throw InvalidArgument("manifest has no training images");
  std::vector<LabeledImage> images(ids.size());
  parallel_for(static_cast<std::ptrdiff_t>(ids.size()), workers, [&](std::ptrdiff_t i) {
    const ManifestEntry& e = manifest.entries[ids[static_cast<std::size_t>(i)]];
    images[static_cast<std::size_t>(i)] = {load_image(manifest.resolve(e)), e.class_index};
  });
  return images;
}

std::string label_of(const DatasetManifest* manifest, int c) {
  if (manifest && c >= 0 && c < manifest->class_count()) {
    return manifest->class_labels[static_cast<std::size_t>(c)];
  }
  return std::to_string(c + 1);
}

}  // namespace

TrainSummary train_pipeline(const PipelineConfig& cfg, const DatasetManifest& manifest) {
  cfg.validate();
  TrainSummary summary;
  TrainedArtifacts& art = summary.artifacts;
  art.k = cfg.k;

  std::vector<std::size_t> ids;
  summary.train_images =
      stage("load", [&] { return load_train_images(manifest, ids, cfg.workers); });
  const auto& images = summary.train_images;
  summary.class_counts = manifest.class_counts(Split::kTrain);
  for (std::size_t c = 0; c < summary.class_counts.size(); ++c) {
    if (summary.class_counts[c] == 0) {
      throw InvalidArgument("load: class '" + manifest.class_labels[c] +
                            "' has no training images");
    }
  }

  stage("autoencoder", [&] {
    const SampleSet samples = collect_block_samples(images, cfg.k, cfg.s);
    Autoencoder ae = init_autoencoder(cfg.s * cfg.s, cfg.p, mix_seed(cfg.seed, 1), cfg.init_scale);
    TrainResult trained = train_autoencoder(std::move(ae), samples, cfg.train_config());
    art.autoencoder = std::move(trained.model);
    summary.loss_curve = std::move(trained.epoch_losses);
  });

  art.histogram = stage("histogram", [&] {
    return build_error_histogram(art.autoencoder, images, manifest.class_count(), cfg.k, cfg.s,
                                 cfg.workers);
  });

  std::vector<GrayImage> rasters;
  rasters.reserve(images.size());
  for (const auto& li : images) rasters.push_back(li.image);
  std::vector<BlockFeatureVector> features = stage(
      "features", [&] { return kernels::extract_features_parallel(rasters, cfg.k, cfg.workers); });

  stage("svm", [&] {
    std::vector<std::vector<double>> X;
    std::vector<int> labels;
    X.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
      X.emplace_back(features[i].flat().begin(), features[i].flat().end());
      labels.push_back(images[i].class_index);
    }
    summary.svm_fit = fit_multiclass(X, labels, cfg.svm_params(), mix_seed(cfg.seed, 3),
                                     cfg.workers);
    art.svm = summary.svm_fit.model;
  });

  art.index = stage("index", [&] {
    FeatureStore store;
    store.k = cfg.k;
    store.class_count = manifest.class_count();
    for (std::size_t i = 0; i < features.size(); ++i) {
      store.records.push_back({ids[i], static_cast<std::uint32_t>(images[i].class_index),
                               std::move(features[i])});
    }
    return RetrievalIndex(std::move(store));
  });
  return summary;
}

TrainedArtifacts load_artifacts(const PipelineConfig& cfg, int k) {
  const auto paths = ArtifactPaths::in(cfg.grid_dir(k));
  for (const auto& p : {paths.autoencoder, paths.histogram, paths.svm, paths.index}) {
    if (!std::filesystem::exists(p)) {
      throw IoError("missing artifact '" + p.string() + "' for k=" + std::to_string(k) +
                    " (run train with --k " + std::to_string(k) + ")");
    }
  }
  TrainedArtifacts art;
  art.k = k;
  art.autoencoder = load_autoencoder(paths.autoencoder);
  art.histogram = load_error_histogram(paths.histogram);
  art.svm = load_svm_model(paths.svm);
  art.index = RetrievalIndex::load(paths.index);
  if (art.histogram.k != k || art.index.k() != k) {
    throw FormatError("artifacts in '" + cfg.grid_dir(k).string() + "' are not for k=" +
                      std::to_string(k));
  }
  if (art.svm.feature_length != static_cast<std::size_t>(k) * k * kLbpBins) {
    throw FormatError("SVM model feature length does not match k=" + std::to_string(k));
  }
  if (art.histogram.class_count != art.index.class_count()) {
    throw FormatError("histogram and index disagree on class count");
  }
  return art;
}

// --- subcommands -----------------------------------------------------------

int cmd_gen(const PipelineConfig& cfg, std::ostream& out) {
  SyntheticCorpusSpec spec;
  spec.seed = cfg.seed;
  spec.num_classes = cfg.classes;
  spec.per_class = cfg.per_class;
  spec.image_size = cfg.image_size;
  spec.grid_k = cfg.k;
  const DatasetManifest m = stage("gen", [&] { return generate_synthetic_corpus(spec, cfg.corpus); });
  out << "wrote " << m.entries.size() << " images (" << m.class_count() << " classes)\n";
  out << (cfg.corpus / "manifest.csv").string() << '\n';
  return 0;
}

int cmd_train(const PipelineConfig& cfg, std::ostream& out) {
  cfg.validate();
  const DatasetManifest manifest = stage("manifest", [&] { return load_manifest(cfg.manifest); });
  TrainSummary summary = train_pipeline(cfg, manifest);
  const TrainedArtifacts& art = summary.artifacts;

  const auto dir = cfg.grid_dir(cfg.k);
  const auto paths = ArtifactPaths::in(dir);
  stage("save", [&] {
    std::filesystem::create_directories(dir);
    save_autoencoder(art.autoencoder, paths.autoencoder);
    save_error_histogram(art.histogram, paths.histogram);
    save_svm_model(art.svm, paths.svm);
    art.index.save(paths.index);
    std::ofstream(paths.config, std::ios::trunc) << cfg.to_json();
  });

  out << "trained k=" << cfg.k << " on " << summary.train_images.size() << " images\n";
  out << "class counts:";
  for (std::size_t c = 0; c < summary.class_counts.size(); ++c) {
    out << ' ' << manifest.class_labels[c] << '=' << summary.class_counts[c];
  }
  out << "\nautoencoder " << art.autoencoder.n << '/' << art.autoencoder.p << '/'
      << art.autoencoder.n << " loss per epoch:";
  out << std::setprecision(6);
  for (double l : summary.loss_curve) out << ' ' << l;
  std::size_t unconverged = 0, svs = 0;
  for (const auto& f : summary.svm_fit.pair_fits) {
    if (!f.converged) ++unconverged;
    svs += f.model.support_vectors.size();
  }
  out << "\nsvm: " << art.svm.pairs.size() << " pairwise models, " << svs
      << " support vectors, gamma=" << art.svm.params.gamma;
  if (unconverged > 0) out << ", " << unconverged << " hit max_passes";
  out << "\nartifacts: " << dir.string() << '\n';
  return 0;
}

int cmd_query(const PipelineConfig& cfg, const std::filesystem::path& image, std::size_t m,
              std::ostream& out) {
  cfg.validate();
  const TrainedArtifacts art = stage("artifacts", [&] { return load_artifacts(cfg, cfg.k); });
  const GrayImage img = stage("image", [&] { return load_image(image); });
  std::optional<DatasetManifest> manifest;
  if (std::filesystem::exists(cfg.manifest)) manifest = load_manifest(cfg.manifest);
  const DatasetManifest* mp = manifest ? &*manifest : nullptr;

  const QueryResult r = stage("query", [&] {
    return query(art.index, img, art.svm, art.histogram, cfg.query_options(m));
  });

  out << "predicted class: " << label_of(mp, r.predicted_class) << '\n';
  out << "dropped blocks:";
  const auto dropped = r.mask.dropped();
  if (dropped.empty()) out << " none";
  for (int j : dropped) out << ' ' << j + 1;
  out << "\nscored length: " << r.scored_length << '\n';
  out << "rank,image_id,class,score,path\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < r.hits.size(); ++i) {
    const Hit& h = r.hits[i];
    out << i + 1 << ',' << h.image_id << ',' << label_of(mp, h.class_index) << ',' << h.score
        << ',';
    if (mp && h.image_id < mp->entries.size()) out << mp->entries[h.image_id].path;
    out << '\n';
  }
  out << std::setprecision(6) << "scoring time: " << r.scoring_seconds << " s\n";
  return 0;
}

int cmd_eval_classify(const PipelineConfig& cfg, std::ostream& out) {
  cfg.validate();
  const TrainedArtifacts art = stage("artifacts", [&] { return load_artifacts(cfg, cfg.k); });
  const DatasetManifest manifest = stage("manifest", [&] { return load_manifest(cfg.manifest); });
  bool codes = true;
  for (const auto& e : manifest.entries) codes = codes && e.code.has_value();
  const ClassificationSummary s = stage("classify", [&] {
    return classification_accuracy(art.svm, manifest, cfg.k, codes, cfg.workers);
  });
  out << "k=" << cfg.k << " test images: " << s.test_count << '\n';
  out << std::fixed << std::setprecision(2) << "accuracy: " << 100.0 * s.accuracy << "%\n";
  if (s.irma_scored) {
    out << "IRMA error score: " << s.summed_irma_error << " (mean " << std::setprecision(4)
        << s.summed_irma_error / static_cast<double>(s.test_count) << ")\n";
  } else {
    out << "IRMA error score: n/a (manifest lacks codes)\n";
  }
  return 0;
}

int cmd_benchmark(const PipelineConfig& cfg, const BenchmarkSweep& sweep, std::ostream& out) {
  cfg.validate();
  const DatasetManifest manifest = stage("manifest", [&] { return load_manifest(cfg.manifest); });
  std::vector<TrainedArtifacts> arts;
  for (int k : sweep.ks) arts.push_back(stage("artifacts", [&] { return load_artifacts(cfg, k); }));
  std::vector<GridArtifacts> grids;
  for (const auto& a : arts) grids.push_back({a.k, &a.index, &a.svm, &a.histogram});

  BenchmarkConfig bc;
  bc.d_values = sweep.ds;
  bc.m_values = sweep.ms;
  bc.queries = sweep.queries;
  bc.seed = cfg.seed;
  bc.workers = cfg.workers;
  bc.scope = cfg.scope == "class" ? SearchScope::kClass : SearchScope::kAll;
  std::ostringstream ks;
  for (std::size_t i = 0; i < sweep.ks.size(); ++i) ks << (i ? " " : "") << sweep.ks[i];
  bc.header = {{"k_values", ks.str()},
               {"manifest", cfg.manifest.string()},
               {"artifacts", cfg.artifacts.string()},
               {"s", std::to_string(cfg.s)},
               {"p", std::to_string(cfg.p)},
               {"epochs", std::to_string(cfg.epochs)},
               {"similarity", cfg.similarity}};

  const BenchmarkReport report = stage("benchmark", [&] { return run_benchmark(manifest, grids, bc); });
  stage("report", [&] { write_benchmark_report(report, cfg.reports); });
  out << format_benchmark_table(report);
  out << "reports: " << (cfg.reports / "benchmark.csv").string() << ", "
      << (cfg.reports / "benchmark.txt").string() << '\n';
  return report.audit_ok() ? 0 : 1;
}

}  // namespace aecbir
