#include "aecbir/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "aecbir/error.hpp"
#include "aecbir/parallel.hpp"
#include "aecbir/relevance.hpp"
#include "aecbir/rng.hpp"

namespace aecbir {

double irma_error(const IrmaCode& predicted, const IrmaCode& truth, const IrmaErrorConfig& cfg) {
  double total = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    const std::string& p = predicted.axes[a];
    const std::string& t = truth.axes[a];
    const auto& b = cfg.branching[a];
    if (p.size() != IrmaCode::kAxisLengths[a] || t.size() != IrmaCode::kAxisLengths[a] ||
        b.size() != IrmaCode::kAxisLengths[a]) {
      throw InvalidArgument("IRMA axis length mismatch");
    }
    double raw = 0.0;
    double max = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!(b[i] >= 2.0)) throw InvalidArgument("IRMA branching factors must be >= 2");
      const double w = 1.0 / (b[i] * static_cast<double>(i + 1));
      max += w;
      if (p[i] != t[i]) raw += w;
    }
    total += 0.25 * raw / max;
  }
  return total;
}

PrecisionRecall precision_recall_at_m(const RankedHits& hits, int query_class,
                                      std::size_t class_size, std::size_t m) {
  if (hits.empty()) throw InvalidArgument("precision/recall of an empty hit list");
  if (m < 1) throw InvalidArgument("m must be >= 1");
  if (class_size < 1) throw InvalidArgument("class size must be >= 1");
  const std::size_t considered = std::min(m, hits.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < considered; ++i) {
    if (hits[i].class_index == query_class) ++tp;
  }
  return {static_cast<double>(tp) / static_cast<double>(considered),
          static_cast<double>(tp) / static_cast<double>(class_size)};
}

std::map<int, IrmaCode> representative_codes(const DatasetManifest& manifest) {
  std::map<int, IrmaCode> out;
  for (const auto& e : manifest.entries) {
    if (e.split != Split::kTrain || !e.code) continue;
    auto [it, inserted] = out.emplace(e.class_index, *e.code);
    if (!inserted && format_irma_code(*e.code) < format_irma_code(it->second)) {
      it->second = *e.code;
    }
  }
  return out;
}

ClassificationSummary classification_accuracy(const MulticlassSvmModel& model,
                                              std::span<const LabeledFeatures> test,
                                              const std::map<int, IrmaCode>* representatives,
                                              const IrmaErrorConfig& cfg) {
  if (test.empty()) throw InvalidArgument("classification needs a non-empty test split");
  ClassificationSummary s;
  s.test_count = test.size();
  s.irma_scored = representatives != nullptr;
  for (const auto& t : test) {
    const int predicted = classify(model, t.features.flat());
    s.predictions.push_back(predicted);
    if (predicted == t.class_index) ++s.correct;
    if (representatives) {
      const auto it = representatives->find(predicted);
      if (!t.code || it == representatives->end()) {
        throw InvalidArgument("IRMA scoring requested but codes are missing");
      }
      s.summed_irma_error += irma_error(it->second, *t.code, cfg);
    }
  }
  s.accuracy = static_cast<double>(s.correct) / static_cast<double>(s.test_count);
  return s;
}

namespace {

std::vector<LabeledFeatures> load_split_features(const DatasetManifest& manifest,
                                                 std::span<const std::size_t> ids, int k,
                                                 int workers) {
  std::vector<LabeledFeatures> out(ids.size());
  parallel_for(static_cast<std::ptrdiff_t>(ids.size()), workers, [&](std::ptrdiff_t i) {
    const ManifestEntry& e = manifest.entries[ids[static_cast<std::size_t>(i)]];
    auto& lf = out[static_cast<std::size_t>(i)];
    lf.features = extract_features(load_image(manifest.resolve(e)), k);
    lf.class_index = e.class_index;
    lf.code = e.code;
  });
  return out;
}

}  // namespace

ClassificationSummary classification_accuracy(const MulticlassSvmModel& model,
                                              const DatasetManifest& manifest, int k,
                                              bool score_irma, int workers) {
  const auto ids = manifest.indices(Split::kTest);
  const auto test = load_split_features(manifest, ids, k, workers);
  std::map<int, IrmaCode> reps;
  if (score_irma) reps = representative_codes(manifest);
  return classification_accuracy(model, test, score_irma ? &reps : nullptr);
}

// --- benchmark -------------------------------------------------------------

namespace {

double pct_drop(double base, double value) {
  return base == 0.0 ? 0.0 : 100.0 * (base - value) / base;
}

void audit_query(const QueryResult& r, int query_class, std::size_t class_size,
                 std::span<const std::size_t> m_values, std::span<const PrecisionRecall> pr,
                 std::size_t expected_length, const std::string& where,
                 std::vector<std::string>& failures) {
  if (r.scored_length != expected_length) {
    failures.push_back(where + ": scored length " + std::to_string(r.scored_length) +
                       " != " + std::to_string(expected_length));
  }
  for (std::size_t i = 0; i < r.hits.size(); ++i) {
    const double s = r.hits[i].score;
    if (!(s >= -1.0 && s <= 1.0)) failures.push_back(where + ": score out of [-1, 1]");
    if (i > 0 && s > r.hits[i - 1].score) failures.push_back(where + ": scores not sorted");
  }
  if (!(r.scoring_seconds > 0.0)) failures.push_back(where + ": non-positive scoring time");
  for (std::size_t mi = 0; mi < m_values.size(); ++mi) {
    const std::size_t m = m_values[mi];
    const auto first = r.hits.begin();
    const auto last = first + static_cast<std::ptrdiff_t>(std::min(m, r.hits.size()));
    const auto tp = static_cast<double>(
        std::count_if(first, last, [&](const Hit& h) { return h.class_index == query_class; }));
    const double precision = tp / static_cast<double>(last - first);
    const double recall = tp / static_cast<double>(class_size);
    if (precision != pr[mi].precision || recall != pr[mi].recall) {
      failures.push_back(where + ": precision/recall recount mismatch at m=" + std::to_string(m));
    }
    if (precision < 0.0 || precision > 1.0 || recall < 0.0 || recall > 1.0) {
      failures.push_back(where + ": precision/recall outside [0, 1]");
    }
  }
}

}  // namespace

BenchmarkReport run_benchmark(const DatasetManifest& manifest,
                              std::span<const GridArtifacts> grids,
                              const BenchmarkConfig& config) {
  if (config.d_values.empty() || config.m_values.empty() || grids.empty()) {
    throw InvalidArgument("benchmark needs at least one k, d and m");
  }
  if (config.queries < 1) throw InvalidArgument("benchmark needs at least one query");
  for (const auto& g : grids) {
    if (!g.index || !g.svm || !g.histogram) {
      throw InvalidArgument("missing artifacts for k=" + std::to_string(g.k));
    }
  }
  const auto test_ids = manifest.indices(Split::kTest);
  if (test_ids.empty()) throw InvalidArgument("benchmark needs a non-empty test split");

  BenchmarkReport report;
  report.config = config;
  const std::size_t max_m = *std::max_element(config.m_values.begin(), config.m_values.end());

  // Same query draw for every (k, d).
  Rng rng(mix_seed(config.seed, 0xbe9c4));
  std::vector<std::size_t> draw(config.queries);
  for (auto& q : draw) q = test_ids[rng.below(test_ids.size())];
  std::vector<std::size_t> unique = draw;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::vector<GrayImage> images(unique.size());
  parallel_for(static_cast<std::ptrdiff_t>(unique.size()), 0, [&](std::ptrdiff_t i) {
    images[static_cast<std::size_t>(i)] =
        load_image(manifest.resolve(manifest.entries[unique[static_cast<std::size_t>(i)]]));
  });

  const std::map<int, IrmaCode> reps = representative_codes(manifest);
  bool have_codes = true;
  for (std::size_t id : test_ids) have_codes = have_codes && manifest.entries[id].code;
  for (int c = 0; c < manifest.class_count(); ++c) have_codes = have_codes && reps.count(c);

  std::map<std::pair<int, double>, BenchmarkRow> rows;
  for (const GridArtifacts& g : grids) {
    const RetrievalIndex& index = *g.index;
    if (index.k() != g.k || g.histogram->k != g.k) {
      throw InvalidArgument("artifacts for k=" + std::to_string(g.k) + " disagree on grid order");
    }

    const auto test = load_split_features(manifest, test_ids, g.k, config.workers);
    const ClassificationSummary cls =
        classification_accuracy(*g.svm, test, have_codes ? &reps : nullptr);
    report.classification.push_back({g.k, cls.accuracy,
                                      cls.summed_irma_error / static_cast<double>(cls.test_count),
                                      cls.summed_irma_error, cls.irma_scored});

    std::vector<BlockFeatureVector> features(unique.size());
    for (std::size_t i = 0; i < unique.size(); ++i) features[i] = extract_features(images[i], g.k);
    const auto features_of = [&](std::size_t id) -> const BlockFeatureVector& {
      return features[static_cast<std::size_t>(
          std::lower_bound(unique.begin(), unique.end(), id) - unique.begin())];
    };

    for (double d : config.d_values) {
      QueryOptions opts;
      opts.d = d;
      opts.m = max_m;
      opts.scope = config.scope;
      opts.workers = config.workers;

      BenchmarkRow row;
      row.k = g.k;
      row.d = d;
      row.dropped_blocks = dropped_block_count(d, g.k);
      row.queries = config.queries;
      row.precision.assign(config.m_values.size(), 0.0);
      row.recall.assign(config.m_values.size(), 0.0);
      for (int c = 0; c < g.histogram->class_count; ++c) {
        row.dropped_by_class.push_back(relevance_mask(*g.histogram, c, d, g.k).dropped());
      }

      // Warm-up, discarded.
      (void)query_features(index, features_of(draw.front()), *g.svm, *g.histogram, opts);

      double seconds = 0.0;
      for (std::size_t qi = 0; qi < draw.size(); ++qi) {
        const ManifestEntry& e = manifest.entries[draw[qi]];
        const QueryResult r =
            query_features(index, features_of(draw[qi]), *g.svm, *g.histogram, opts);
        const auto class_size =
            static_cast<std::size_t>(index.class_sizes().at(static_cast<std::size_t>(e.class_index)));
        const std::size_t expected_length =
            static_cast<std::size_t>(g.k * g.k - dropped_block_count(d, g.k)) * kLbpBins;
        std::vector<PrecisionRecall> pr;
        for (std::size_t m : config.m_values) {
          pr.push_back(precision_recall_at_m(r.hits, e.class_index, class_size, m));
        }
        std::ostringstream where;
        where << "k=" << g.k << " d=" << d << " query " << qi;
        audit_query(r, e.class_index, class_size, config.m_values, pr, expected_length,
                    where.str(), report.audit_failures);
        for (std::size_t mi = 0; mi < pr.size(); ++mi) {
          row.precision[mi] += pr[mi].precision;
          row.recall[mi] += pr[mi].recall;
        }
        seconds += r.scoring_seconds;
        row.scored_length = r.scored_length;
      }
      const auto n = static_cast<double>(draw.size());
      for (auto& v : row.precision) v /= n;
      for (auto& v : row.recall) v /= n;
      row.mean_seconds = seconds / n;
      rows[{g.k, d}] = std::move(row);
    }
  }

  std::vector<double> ds = config.d_values;
  std::vector<int> ks;
  for (const auto& g : grids) ks.push_back(g.k);
  for (double d : ds) {
    for (int k : ks) {
      BenchmarkRow row = rows.at({k, d});
      const auto base = rows.find({k, 0.0});
      row.precision_drop_pct.assign(row.precision.size(), 0.0);
      row.recall_drop_pct.assign(row.recall.size(), 0.0);
      if (base != rows.end()) {
        for (std::size_t mi = 0; mi < row.precision.size(); ++mi) {
          row.precision_drop_pct[mi] = pct_drop(base->second.precision[mi], row.precision[mi]);
          row.recall_drop_pct[mi] = pct_drop(base->second.recall[mi], row.recall[mi]);
        }
        row.time_gain_pct = pct_drop(base->second.mean_seconds, row.mean_seconds);
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

namespace {

std::string header_lines(const BenchmarkReport& report, const char* prefix) {
  std::ostringstream out;
  const auto& c = report.config;
  out << prefix << "queries=" << c.queries << '\n';
  out << prefix << "seed=" << c.seed << '\n';
  out << prefix << "workers=" << c.workers << '\n';
  out << prefix << "scope=" << (c.scope == SearchScope::kAll ? "all" : "class") << '\n';
  for (const auto& [key, value] : c.header) out << prefix << key << '=' << value << '\n';
  return out.str();
}

std::string percent(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << v << '%';
  return out.str();
}

std::string fraction_label(double d) {
  std::ostringstream out;
  out << std::setprecision(6) << d;
  return out.str();
}

}  // namespace

std::string format_benchmark_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out << header_lines(report, "# ");
  for (const auto& c : report.classification) {
    out << "# classification k=" << c.k << " accuracy=" << std::setprecision(10) << c.accuracy;
    if (c.irma_scored) out << " mean_irma_error=" << c.mean_irma_error;
    out << '\n';
  }
  out << "k,d,dropped_blocks,m,precision,recall,mean_time_s,queries,seed,workers,"
         "precision_drop_pct,recall_drop_pct,time_gain_pct\n";
  out << std::setprecision(10);
  for (const auto& row : report.rows) {
    for (std::size_t mi = 0; mi < report.config.m_values.size(); ++mi) {
      out << row.k << ',' << fraction_label(row.d) << ',' << row.dropped_blocks << ','
          << report.config.m_values[mi] << ',' << row.precision[mi] << ',' << row.recall[mi]
          << ',' << row.mean_seconds << ',' << row.queries << ',' << report.config.seed << ','
          << report.config.workers << ',' << row.precision_drop_pct[mi] << ','
          << row.recall_drop_pct[mi] << ',' << row.time_gain_pct << '\n';
    }
  }
  return out.str();
}

std::string format_benchmark_table(const BenchmarkReport& report) {
  std::ostringstream out;
  out << header_lines(report, "");
  out << "\nClassification\n";
  out << std::left << std::setw(8) << "Blocks" << std::setw(12) << "Accuracy" << "IRMA error\n";
  for (const auto& c : report.classification) {
    std::ostringstream blocks, acc;
    blocks << c.k << 'x' << c.k;
    acc << std::fixed << std::setprecision(2) << 100.0 * c.accuracy << '%';
    out << std::setw(8) << blocks.str() << std::setw(12) << acc.str();
    if (c.irma_scored) {
      out << std::fixed << std::setprecision(2) << c.summed_irma_error << " (mean "
          << std::setprecision(4) << c.mean_irma_error << ")";
    } else {
      out << "n/a";
    }
    out << '\n';
  }

  const auto& ms = report.config.m_values;
  out << "\nRetrieval (mean over queries)\n";
  out << std::setw(8) << "Blocks" << std::setw(11) << "Reduction" << std::setw(9) << "Dropped";
  for (std::size_t m : ms) {
    out << std::setw(9) << ("P@" + std::to_string(m)) << std::setw(9) << ("R@" + std::to_string(m));
  }
  out << "t(sec)\n";
  for (const auto& row : report.rows) {
    std::ostringstream blocks;
    blocks << row.k << 'x' << row.k;
    out << std::setw(8) << blocks.str() << std::setw(11) << fraction_label(row.d) << std::setw(9)
        << (std::to_string(row.dropped_blocks) + "/" + std::to_string(row.k * row.k));
    out << std::fixed;
    for (std::size_t mi = 0; mi < ms.size(); ++mi) {
      out << std::setprecision(3) << std::setw(9) << row.precision[mi] << std::setprecision(4)
          << std::setw(9) << row.recall[mi];
    }
    out << std::setprecision(6) << row.mean_seconds << '\n';
    out.unsetf(std::ios::fixed);
  }

  out << "\nChange relative to no reduction (precision/recall decrease, time gain)\n";
  out << std::setw(8) << "Blocks" << std::setw(11) << "Reduction";
  for (std::size_t m : ms) {
    out << std::setw(10) << ("dP@" + std::to_string(m)) << std::setw(10)
        << ("dR@" + std::to_string(m));
  }
  out << "Time\n";
  for (const auto& row : report.rows) {
    std::ostringstream blocks;
    blocks << row.k << 'x' << row.k;
    out << std::setw(8) << blocks.str() << std::setw(11) << fraction_label(row.d);
    for (std::size_t mi = 0; mi < ms.size(); ++mi) {
      out << std::setw(10) << percent(row.precision_drop_pct[mi]) << std::setw(10)
          << percent(row.recall_drop_pct[mi]);
    }
    out << percent(row.time_gain_pct) << '\n';
  }

  out << "\nDropped blocks per class (1-based)\n";
  for (const auto& row : report.rows) {
    if (row.dropped_blocks == 0) continue;
    out << "k=" << row.k << " d=" << fraction_label(row.d) << '\n';
    for (std::size_t c = 0; c < row.dropped_by_class.size(); ++c) {
      out << "  class " << c + 1 << ":";
      for (int j : row.dropped_by_class[c]) out << ' ' << j + 1;
      out << '\n';
    }
  }

  out << "\nSelf-audit: " << (report.audit_ok() ? "passed" : "FAILED") << '\n';
  for (const auto& f : report.audit_failures) out << "  " << f << '\n';
  return out.str();
}

void write_benchmark_report(const BenchmarkReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
  };
  write(dir / "benchmark.csv", format_benchmark_csv(report));
  write(dir / "benchmark.txt", format_benchmark_table(report));
}

}  // namespace aecbir
