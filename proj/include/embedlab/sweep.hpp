#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "embedlab/config.hpp"
#include "embedlab/corpus.hpp"
#include "embedlab/csv.hpp"
#include "embedlab/error.hpp"
#include "embedlab/extrinsic.hpp"
#include "embedlab/intrinsic.hpp"
#include "embedlab/preprocess.hpp"
#include "embedlab/vocab.hpp"
#include "embedlab/word2vec.hpp"

namespace embedlab {

struct SweepRow {
  std::size_t cell = 0;
  Mode mode = Mode::SkipGram;
  std::size_t window = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double purity = std::nan("");
  double nmi = std::nan("");
  double precision = std::nan("");
  double recall = std::nan("");
  double f1 = std::nan("");
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::optional<std::size_t> best;  // index into rows
  std::uint64_t base_seed = 0;
  std::string corpus_hash;
  std::size_t vocab_size = 0;
  std::size_t article_count = 0;
};

// FNV-1a over the corpus bytes, as 16 hex digits.
inline std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string corpus_hash(const Corpus& corpus) {
  std::string bytes;
  for (const auto& a : corpus.articles) {
    bytes += a.id;
    bytes += '\x1f';
    bytes += a.category;
    bytes += '\x1f';
    bytes += a.text;
    bytes += '\x1e';
  }
  return content_hash(bytes);
}

// Argmax by F1, then NMI, then purity; then the smaller dimension, the
// smaller window, and SG before CBOW. Independent of row order.
inline std::size_t select_best(const std::vector<SweepRow>& rows) {
  std::optional<std::size_t> best;
  auto better = [](const SweepRow& a, const SweepRow& b) {
    if (a.f1 != b.f1) return a.f1 > b.f1;
    if (a.nmi != b.nmi) return a.nmi > b.nmi;
    if (a.purity != b.purity) return a.purity > b.purity;
    if (a.dim != b.dim) return a.dim < b.dim;
    if (a.window != b.window) return a.window < b.window;
    return a.mode == Mode::SkipGram && b.mode == Mode::Cbow;
  };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].ok) continue;
    if (!best || better(rows[i], rows[*best])) best = i;
  }
  if (!best) throw Error("no successful sweep cell to select from");
  return *best;
}

// Everything one grid cell produced, for callers that write artifacts.
struct CellOutcome {
  const SweepRow& row;
  const EmbeddingMatrix& embeddings;
  const TrainResult& w2v;
  const IntrinsicResult& intrinsic;
  const std::vector<std::pair<std::size_t, double>>& wcss;
  const ClassifierHistory& history;
  const ClassificationReport& classification;
};

using CellObserver = std::function<void(const CellOutcome&)>;

struct SweepInputs {
  const Corpus& corpus;
  const LabeledWordSet& labeled;
  const LabelMap& labels;
  const ExperimentConfig& config;
};

struct CellSeeds {
  std::uint64_t init, shuffle, kmeans, clf_init, clf_train;

  explicit CellSeeds(std::uint64_t cell_seed)
      : init(derive_seed(cell_seed, 0)), shuffle(derive_seed(cell_seed, 1)), kmeans(derive_seed(cell_seed, 2)),
        clf_init(derive_seed(cell_seed, 3)), clf_train(derive_seed(cell_seed, 4)) {}
};

// Cells run in (mode, window, dim) order with seed = base seed + cell index.
// A failing cell is recorded and the sweep carries on; only an all-failed
// grid is an error. Cells may run on `config.threads` workers; the report
// does not depend on the thread count.
inline SweepReport run_sweep(const SweepInputs& in, const CellObserver& observer = {}) {
  const auto& cfg = in.config;
  cfg.grid.validate();
  const auto sentences_by_article = preprocess_corpus(in.corpus, cfg.preprocess);
  const auto sentences = flatten_sentences(sentences_by_article);
  const Vocabulary vocab = Vocabulary::build(sentences, cfg.min_count);
  const auto indexed = to_indices(sentences, vocab);
  // One split for the whole grid so every cell is scored on the same test set.
  const SplitDataset dataset = prepare_dataset(in.corpus, vocab, in.labels, cfg.preprocess, cfg.classifier, cfg.seed);

  SweepReport report;
  report.base_seed = cfg.seed;
  report.corpus_hash = corpus_hash(in.corpus);
  report.vocab_size = vocab.size();
  report.article_count = in.corpus.size();
  for (auto mode : cfg.grid.modes)
    for (auto window : cfg.grid.windows)
      for (auto dim : cfg.grid.dims) {
        SweepRow row;
        row.cell = report.rows.size();
        row.mode = mode;
        row.window = window;
        row.dim = dim;
        row.seed = cfg.seed + row.cell;
        report.rows.push_back(row);
      }

  std::mutex observer_mutex;
  auto run_cell = [&](SweepRow& row) {
    try {
      const CellSeeds seeds(row.seed);
      W2VConfig w2v = cfg.word2vec;
      w2v.mode = row.mode;
      w2v.window = row.window;
      w2v.dim = row.dim;
      w2v.seed = seeds.shuffle;
      const auto examples = generate_examples(std::span<const std::vector<std::size_t>>(indexed), row.window, row.mode);
      W2VModel model = init_model(w2v, vocab.size(), seeds.init);
      const TrainResult trained = train(model, examples, w2v);
      const EmbeddingMatrix emb = extract_embeddings(model, vocab);

      const IntrinsicResult intrinsic = evaluate_intrinsic(emb, in.labeled, seeds.kmeans, cfg.kmeans);
      std::vector<std::pair<std::size_t, double>> curve;
      {
        Tensor projected({intrinsic.scatter.size(), 2});
        for (std::size_t i = 0; i < intrinsic.scatter.size(); ++i) {
          projected(i, 0) = intrinsic.scatter[i].x;
          projected(i, 1) = intrinsic.scatter[i].y;
        }
        const std::size_t k_max = std::min(cfg.elbow_k_max, intrinsic.scatter.size());
        curve = wcss_curve(projected, 1, k_max, seeds.kmeans, cfg.kmeans);
      }

      ClassifierConfig ccfg = cfg.classifier;
      ccfg.seed = seeds.clf_train;
      ClassifierModel clf = build_classifier(emb, ccfg, seeds.clf_init);
      const ClassifierHistory history = train_classifier(clf, dataset);
      const ClassificationReport cls = evaluate_classifier(clf, dataset.test);

      row.purity = intrinsic.purity;
      row.nmi = intrinsic.nmi;
      row.precision = cls.precision;
      row.recall = cls.recall;
      row.f1 = cls.f1;
      row.ok = true;
      if (observer) {
        std::lock_guard lock(observer_mutex);
        observer(CellOutcome{row, emb, trained, intrinsic, curve, history, cls});
      }
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
  };

  const std::size_t workers = std::min(cfg.threads, report.rows.size());
  if (workers <= 1) {
    for (auto& row : report.rows) run_cell(row);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < report.rows.size(); i = next++) run_cell(report.rows[i]);
      });
    for (auto& t : pool) t.join();
  }

  if (std::none_of(report.rows.begin(), report.rows.end(), [](const SweepRow& r) { return r.ok; })) {
    std::string msg = "every sweep cell failed";
    if (!report.rows.empty()) msg += "; first error: " + report.rows.front().error;
    throw Error(msg);
  }
  report.best = select_best(report.rows);
  return report;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

inline constexpr std::string_view kReportCsvHeader = "cell,mode,window,dim,seed,status,error,purity,nmi,precision,recall,f1,best";

inline std::string render_csv(const SweepReport& r) {
  std::string out = std::string(kReportCsvHeader) + "\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    out += csv::join({std::to_string(row.cell), mode_name(row.mode), std::to_string(row.window),
                      std::to_string(row.dim), std::to_string(row.seed), row.ok ? "ok" : "failed", row.error,
                      csv::format_double(row.purity), csv::format_double(row.nmi),
                      csv::format_double(row.precision), csv::format_double(row.recall),
                      csv::format_double(row.f1), r.best == i ? "1" : "0"});
    out += '\n';
  }
  return out;
}

inline SweepReport parse_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("report CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kReportCsvHeader) throw Error("report CSV has an unexpected header");
  SweepReport r;
  std::size_t lineno = 1;
  while (csv::read_record(in, line)) {
    const std::size_t first_line = lineno + 1;
    lineno += 1 + static_cast<std::size_t>(std::count(line.begin(), line.end(), '\n'));
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split(line);
    if (f.size() != 13) throw ParseError(first_line, "expected 13 fields, found " + std::to_string(f.size()));
    SweepRow row;
    try {
      row.cell = std::stoull(f[0]);
      row.mode = parse_mode(f[1]);
      row.window = std::stoull(f[2]);
      row.dim = std::stoull(f[3]);
      row.seed = std::stoull(f[4]);
      row.ok = f[5] == "ok";
      row.error = f[6];
      row.purity = csv::parse_double(f[7]);
      row.nmi = csv::parse_double(f[8]);
      row.precision = csv::parse_double(f[9]);
      row.recall = csv::parse_double(f[10]);
      row.f1 = csv::parse_double(f[11]);
    } catch (const std::logic_error& e) {
      throw ParseError(first_line, e.what());
    } catch (const Error& e) {
      throw ParseError(first_line, e.what());
    }
    if (f[12] == "1") r.best = r.rows.size();
    r.rows.push_back(std::move(row));
  }
  return r;
}

inline SweepReport load_report_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open report " + path.string());
  return parse_report_csv(in);
}

inline nlohmann::ordered_json to_json(const SweepRow& row) {
  nlohmann::ordered_json j;
  j["cell"] = row.cell;
  j["mode"] = mode_name(row.mode);
  j["window"] = row.window;
  j["dim"] = row.dim;
  j["seed"] = row.seed;
  j["status"] = row.ok ? "ok" : "failed";
  if (!row.ok) j["error"] = row.error;
  auto num = [](double v) { return std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v); };
  j["purity"] = num(row.purity);
  j["nmi"] = num(row.nmi);
  j["precision"] = num(row.precision);
  j["recall"] = num(row.recall);
  j["f1"] = num(row.f1);
  return j;
}

inline std::string render_json(const SweepReport& r) {
  nlohmann::ordered_json j;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) j["rows"].push_back(to_json(row));
  j["best"] = r.best ? to_json(r.rows[*r.best]) : nlohmann::ordered_json(nullptr);
  j["provenance"] = {{"base_seed", r.base_seed},
                     {"corpus_hash", r.corpus_hash},
                     {"vocab_size", r.vocab_size},
                     {"article_count", r.article_count}};
  return j.dump(2) + "\n";
}

// Rows grouped by window then dimension, one block of five metric columns
// per mode (CBOW first). The best cell's F1 is the only bold entry.
inline std::string render_markdown(const SweepReport& r) {
  std::vector<Mode> modes;
  for (Mode m : {Mode::Cbow, Mode::SkipGram})
    if (std::any_of(r.rows.begin(), r.rows.end(), [m](const SweepRow& row) { return row.mode == m; }))
      modes.push_back(m);
  std::map<std::pair<std::size_t, std::size_t>, std::map<Mode, std::size_t>> table;
  for (std::size_t i = 0; i < r.rows.size(); ++i) table[{r.rows[i].window, r.rows[i].dim}][r.rows[i].mode] = i;

  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "| Window | Dimension |";
  for (Mode m : modes)
    for (const char* metric : {"Purity", "NMI", "Precision", "Recall", "F1"}) out << ' ' << mode_name(m) << ' ' << metric << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < modes.size() * 5; ++i) out << "---|";
  out << '\n';
  for (const auto& [key, cells] : table) {
    out << "| " << key.first << " | " << key.second << " |";
    for (Mode m : modes) {
      auto it = cells.find(m);
      if (it == cells.end()) {
        for (int i = 0; i < 5; ++i) out << " - |";
        continue;
      }
      const auto& row = r.rows[it->second];
      if (!row.ok) {
        for (int i = 0; i < 5; ++i) out << " failed |";
        continue;
      }
      out << ' ' << fmt(row.purity) << " | " << fmt(row.nmi) << " | " << fmt(row.precision) << " | "
          << fmt(row.recall) << " | ";
      if (r.best == it->second)
        out << "**" << fmt(row.f1) << "** |";
      else
        out << fmt(row.f1) << " |";
    }
    out << '\n';
  }
  if (r.best) {
    const auto& b = r.rows[*r.best];
    out << "\nBest configuration: " << mode_name(b.mode) << ", window " << b.window << ", dimension " << b.dim
        << ".\n";
  }
  return out.str();
}

enum class ReportFormat { Csv, Markdown, Json };

inline ReportFormat parse_report_format(const std::string& s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  if (s == "json") return ReportFormat::Json;
  throw Error("unknown report format \"" + s + "\" (csv, markdown, json)");
}

inline std::string render_report(const SweepReport& r, ReportFormat format) {
  switch (format) {
    case ReportFormat::Csv: return render_csv(r);
    case ReportFormat::Markdown: return render_markdown(r);
    case ReportFormat::Json: return render_json(r);
  }
  return {};
}

}  // namespace embedlab
