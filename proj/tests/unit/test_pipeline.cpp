#include <doctest.h>

#include <sstream>

#include "aecbir/binary_io.hpp"
#include "aecbir/error.hpp"
#include "aecbir/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace aecbir;

namespace {

PipelineConfig small_config(const std::filesystem::path& root) {
  PipelineConfig cfg;
  cfg.classes = 3;
  cfg.per_class = 8;
  cfg.s = 8;
  cfg.p = 8;
  cfg.epochs = 2;
  cfg.corpus = root / "corpus";
  cfg.manifest = root / "corpus" / "manifest.csv";
  cfg.artifacts = root / "artifacts";
  cfg.reports = root / "reports";
  return cfg;
}

}  // namespace

TEST_CASE("config json") {
  const PipelineConfig cfg = PipelineConfig::from_json(R"({"k": 6, "d": 0.5, "scope": "class"})", "c");
  CHECK(cfg.k == 6);
  CHECK(cfg.d == 0.5);
  CHECK(cfg.scope == "class");
  CHECK(cfg.p == 64);
  CHECK(PipelineConfig::from_json(cfg.to_json(), "again").to_json() == cfg.to_json());
  CHECK_THROWS_WITH_AS(PipelineConfig::from_json(R"({"kk": 1})", "c"),
                       doctest::Contains("unknown config key"), FormatError);
  CHECK_THROWS_AS(PipelineConfig::from_json(R"({"k": "four"})", "c"), FormatError);
  CHECK_THROWS_AS(PipelineConfig::from_json("[1]", "c"), FormatError);
}

TEST_CASE("config validation") {
  PipelineConfig cfg;
  cfg.validate();
  cfg.p = 256;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("p must be < n"), InvalidArgument);
  cfg = {};
  cfg.d = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.k = 17;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.scope = "nearby";
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("train, reload, query and benchmark a small corpus") {
  fixtures::TempDir root("pipeline");
  PipelineConfig cfg = small_config(root.path());
  std::ostringstream log;
  CHECK(cmd_gen(cfg, log) == 0);
  CHECK(cmd_train(cfg, log) == 0);

  const auto paths = ArtifactPaths::in(cfg.grid_dir(4));
  for (const auto& p : {paths.autoencoder, paths.histogram, paths.svm, paths.index, paths.config})
    CHECK(std::filesystem::exists(p));

  const TrainedArtifacts art = load_artifacts(cfg, 4);
  CHECK(art.index.size() == 18);
  CHECK(art.histogram.class_count == 3);

  // retraining reproduces every artifact byte for byte
  const auto ae_bytes = io::read_file(paths.autoencoder);
  const auto svm_bytes = io::read_file(paths.svm);
  const auto index_bytes = io::read_file(paths.index);
  CHECK(cmd_train(cfg, log) == 0);
  CHECK(io::read_file(paths.autoencoder) == ae_bytes);
  CHECK(io::read_file(paths.svm) == svm_bytes);
  CHECK(io::read_file(paths.index) == index_bytes);

  // self query at d = 0 returns the image first; d = 0.5 drops 8 blocks
  const DatasetManifest m = load_manifest(cfg.manifest);
  const auto self = cfg.corpus / m.entries[2].path;
  std::ostringstream q1, q2;
  cmd_query(cfg, self, 5, q1);
  CHECK(q1.str().find("\n1,2,") != std::string::npos);
  cfg.d = 0.5;
  cmd_query(cfg, self, 5, q2);
  const std::string text = q2.str();
  const auto line = text.substr(text.find("dropped blocks:"));
  const auto listed = line.substr(0, line.find('\n'));
  CHECK(std::count(listed.begin(), listed.end(), ' ') == 1 + 8);

  std::ostringstream e;
  CHECK(cmd_eval_classify(cfg, e) == 0);
  CHECK(e.str().find("accuracy:") != std::string::npos);

  BenchmarkSweep one;
  one.ds = {0.25};
  one.ms = {5};
  one.queries = 7;
  std::ostringstream b;
  CHECK(cmd_benchmark(cfg, one, b) == 0);
  const auto csv = io::read_file(cfg.reports / "benchmark.csv");
  const std::string csv_text(csv.begin(), csv.end());
  CHECK(std::filesystem::exists(cfg.reports / "benchmark.txt"));
  std::size_t rows = 0;
  std::istringstream lines(csv_text);
  for (std::string l; std::getline(lines, l);)
    if (!l.empty() && l[0] != '#' && l.rfind("k,", 0) != 0) ++rows;
  CHECK(rows == 1);

  BenchmarkSweep missing;
  missing.ks = {5};
  CHECK_THROWS_WITH(cmd_benchmark(cfg, missing, b), doctest::Contains("k=5"));
}

TEST_CASE("query reports missing artifacts by name") {
  fixtures::TempDir root("noart");
  const PipelineConfig cfg = small_config(root.path());
  std::ostringstream out;
  CHECK_THROWS_WITH_AS(cmd_query(cfg, root / "x.pgm", 3, out), doctest::Contains("autoencoder.bin"),
                       IoError);
}
