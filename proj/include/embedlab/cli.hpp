#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "embedlab/config.hpp"
#include "embedlab/corpus.hpp"
#include "embedlab/error.hpp"
#include "embedlab/extrinsic.hpp"
#include "embedlab/intrinsic.hpp"
#include "embedlab/preprocess.hpp"
#include "embedlab/sweep.hpp"
#include "embedlab/vocab.hpp"
#include "embedlab/word2vec.hpp"

namespace embedlab {

namespace cli_detail {

namespace fs = std::filesystem;

// Missing required input discovered after parsing; maps to exit code 1.
struct UsageError : Error {
  using Error::Error;
};

// Collects every file a command writes and emits manifest.json last.
class OutputDir {
 public:
  OutputDir(fs::path root, std::string command, std::uint64_t seed)
      : root_(std::move(root)), command_(std::move(command)), seed_(seed) {
    fs::create_directories(root_);
  }

  fs::path path(const fs::path& rel) {
    fs::create_directories((root_ / rel).parent_path());
    files_.push_back(rel.generic_string());
    return root_ / rel;
  }

  void write(const fs::path& rel, const std::string& content) {
    std::ofstream out(path(rel), std::ios::binary);
    if (!out) throw Error("cannot write " + (root_ / rel).string());
    out << content;
  }

  void finish() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
    nlohmann::ordered_json j;
    j["command"] = command_;
    j["seed"] = seed_;
    j["created_utc"] = stamp;
    j["files"] = files_;
    std::ofstream out(root_ / "manifest.json", std::ios::binary);
    out << j.dump(2) << '\n';
  }

  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::string command_;
  std::uint64_t seed_;
  std::vector<std::string> files_;
};

inline fs::path require_path(const std::string& flag_value, const std::optional<fs::path>& from_config,
                             const char* what) {
  if (!flag_value.empty()) return flag_value;
  if (from_config) return *from_config;
  throw UsageError(std::string("missing ") + what);
}

inline void write_loss_csv(OutputDir& out, const fs::path& rel, const std::vector<double>& loss) {
  std::string s = "epoch,loss\n";
  for (std::size_t e = 0; e < loss.size(); ++e) s += std::to_string(e + 1) + "," + csv::format_double(loss[e]) + "\n";
  out.write(rel, s);
}

inline void write_intrinsic_artifacts(OutputDir& out, const fs::path& dir, const IntrinsicResult& r,
                                      const std::vector<std::pair<std::size_t, double>>& curve) {
  write_scatter_csv(r.scatter, out.path(dir / "scatter.csv"));
  out.write(dir / "scatter.svg", scatter_svg(r.scatter, "PCA projection of labelled words"));
  write_wcss_csv(curve, out.path(dir / "wcss.csv"));
  out.write(dir / "wcss.svg", wcss_svg(curve, "Elbow curve"));
}

inline void write_extrinsic_artifacts(OutputDir& out, const fs::path& dir, const ClassifierHistory& h,
                                      const ClassificationReport& r, const std::vector<std::string>& labels) {
  write_accuracy_csv(h, out.path(dir / "accuracy.csv"));
  out.write(dir / "accuracy.svg", accuracy_svg(h, "Classifier accuracy"));
  out.write(dir / "confusion.svg", confusion_svg(r, labels, "Confusion matrix"));
}

inline std::vector<std::pair<std::size_t, double>> elbow(const IntrinsicResult& r, const ExperimentConfig& cfg,
                                                         std::uint64_t seed) {
  Tensor projected({r.scatter.size(), 2});
  for (std::size_t i = 0; i < r.scatter.size(); ++i) {
    projected(i, 0) = r.scatter[i].x;
    projected(i, 1) = r.scatter[i].y;
  }
  return wcss_curve(projected, 1, std::min(cfg.elbow_k_max, r.scatter.size()), seed, cfg.kmeans);
}

}  // namespace cli_detail

// Subcommands: stats, preprocess, train, neighbors, eval-intrinsic,
// eval-extrinsic, sweep, report. Exit codes: 0 ok, 1 usage, 2 runtime.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  namespace fs = std::filesystem;
  using namespace cli_detail;

  CLI::App app{"Word-embedding training and evaluation workbench", "embedlab"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed_flag;
  std::string config_path, out_dir;
  app.add_option("--seed", seed_flag, "Base random seed");
  app.add_option("--config", config_path, "Experiment config JSON")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory (default: $EMBEDLAB_OUT or ./embedlab_out)");

  std::string corpus_flag, embeddings_flag, labeled_flag, label_map_flag, word_flag, input_flag;
  std::string format_flag = "markdown";
  std::size_t k_flag = 10;
  bool cleaned = false;
  std::optional<std::string> mode_flag;
  std::optional<std::size_t> dim_flag, window_flag, epochs_flag, batch_flag, min_count_flag, seq_len_flag;
  std::optional<double> lr_flag;

  auto* stats = app.add_subcommand("stats", "Corpus statistics as JSON");
  stats->add_option("--corpus", corpus_flag, "Corpus JSONL");
  stats->add_flag("--cleaned", cleaned, "Count tokens after stopword removal and stemming");

  auto* prep = app.add_subcommand("preprocess", "Write cleaned sentences and the vocabulary");
  prep->add_option("--corpus", corpus_flag, "Corpus JSONL");
  prep->add_option("--min-count", min_count_flag, "Minimum word frequency");

  auto* trn = app.add_subcommand("train", "Train one word2vec configuration");
  trn->add_option("--corpus", corpus_flag, "Corpus JSONL");
  trn->add_option("--mode", mode_flag, "SG or CBOW");
  trn->add_option("--dim", dim_flag, "Embedding dimension");
  trn->add_option("--window", window_flag, "Context window per side");
  trn->add_option("--epochs", epochs_flag, "Training epochs");
  trn->add_option("--lr", lr_flag, "Adam learning rate");
  trn->add_option("--batch-size", batch_flag, "Mini-batch size");
  trn->add_option("--min-count", min_count_flag, "Minimum word frequency");

  auto* nbr = app.add_subcommand("neighbors", "Nearest neighbours by cosine similarity");
  nbr->add_option("--embeddings", embeddings_flag, "Embedding text file")->required();
  nbr->add_option("--word", word_flag, "Query word")->required();
  nbr->add_option("-k", k_flag, "Number of neighbours");

  auto* ein = app.add_subcommand("eval-intrinsic", "Cluster labelled words: purity, NMI, elbow curve");
  ein->add_option("--embeddings", embeddings_flag, "Embedding text file")->required();
  ein->add_option("--labeled-set", labeled_flag, "Labelled word set JSON");

  auto* eex = app.add_subcommand("eval-extrinsic", "Train and score the article classifier");
  eex->add_option("--embeddings", embeddings_flag, "Embedding text file")->required();
  eex->add_option("--corpus", corpus_flag, "Labelled corpus JSONL");
  eex->add_option("--label-map", label_map_flag, "Label map JSON");
  eex->add_option("--epochs", epochs_flag, "Training epochs");
  eex->add_option("--seq-len", seq_len_flag, "Article length in tokens");

  auto* swp = app.add_subcommand("sweep", "Run the mode x window x dimension grid");

  auto* rep = app.add_subcommand("report", "Re-render a sweep report CSV");
  rep->add_option("--input", input_flag, "Report CSV")->required()->check(CLI::ExistingFile);
  rep->add_option("--format", format_flag, "csv, markdown or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_experiment_config(config_path);
    if (seed_flag) cfg.seed = *seed_flag;
    if (min_count_flag) cfg.min_count = *min_count_flag;
    if (out_dir.empty()) {
      const char* env = std::getenv("EMBEDLAB_OUT");
      out_dir = env && *env ? env : "embedlab_out";
    }
    const CellSeeds seeds(cfg.seed);

    auto open_out = [&] { return OutputDir(out_dir, cmd->get_name(), cfg.seed); };

    if (cmd == stats) {
      const auto corpus = load_corpus(require_path(corpus_flag, cfg.corpus, "--corpus"));
      const auto tokens = cleaned ? preprocess_corpus(corpus, cfg.preprocess) : tokenize_corpus(corpus, cfg.preprocess);
      const auto j = to_json(compute_stats(corpus, tokens));
      auto o = open_out();
      o.write("stats.json", j.dump(2) + "\n");
      o.finish();
      out << j.dump(2) << '\n';
    } else if (cmd == prep) {
      const auto corpus = load_corpus(require_path(corpus_flag, cfg.corpus, "--corpus"));
      const auto sentences = flatten_sentences(preprocess_corpus(corpus, cfg.preprocess));
      const auto vocab = Vocabulary::build(sentences, cfg.min_count);
      auto o = open_out();
      std::string text;
      for (const auto& s : sentences) {
        for (std::size_t i = 0; i < s.size(); ++i) text += (i ? " " : "") + s[i];
        text += '\n';
      }
      o.write("sentences.txt", text);
      vocab.save(o.path("vocab.tsv"));
      o.finish();
      out << sentences.size() << " sentences, vocabulary " << vocab.size() << '\n';
    } else if (cmd == trn) {
      const auto corpus = load_corpus(require_path(corpus_flag, cfg.corpus, "--corpus"));
      W2VConfig w2v = cfg.word2vec;
      if (mode_flag) w2v.mode = parse_mode(*mode_flag);
      if (dim_flag) w2v.dim = *dim_flag;
      if (window_flag) w2v.window = *window_flag;
      if (epochs_flag) w2v.epochs = *epochs_flag;
      if (lr_flag) w2v.lr = *lr_flag;
      if (batch_flag) w2v.batch_size = *batch_flag;
      w2v.seed = seeds.shuffle;
      const auto sentences = flatten_sentences(preprocess_corpus(corpus, cfg.preprocess));
      const auto vocab = Vocabulary::build(sentences, cfg.min_count);
      const auto examples = generate_examples(sentences, vocab, w2v.window, w2v.mode);
      W2VModel model = init_model(w2v, vocab.size(), seeds.init);
      const auto result = train(model, examples, w2v);
      auto o = open_out();
      save_embeddings(extract_embeddings(model, vocab), o.path("embeddings.txt"));
      save_model(model, o.path("model.ckpt"));
      vocab.save(o.path("vocab.tsv"));
      write_loss_csv(o, "loss.csv", result.loss_history);
      o.finish();
      out << "trained " << mode_name(w2v.mode) << " dim " << w2v.dim << " window " << w2v.window << " on "
          << examples.size() << " examples; final loss "
          << (result.loss_history.empty() ? 0.0 : result.loss_history.back()) << '\n';
    } else if (cmd == nbr) {
      const auto emb = load_embeddings(embeddings_flag);
      const auto hits = nearest_neighbors(emb, word_flag, k_flag);
      auto o = open_out();
      std::string text = "word,cosine\n";
      for (const auto& h : hits) {
        text += csv::join({h.word, csv::format_double(h.similarity)}) + "\n";
        out << h.word << '\t' << h.similarity << '\n';
      }
      o.write("neighbors.csv", text);
      o.finish();
    } else if (cmd == ein) {
      const auto emb = load_embeddings(embeddings_flag);
      const auto set = load_labeled_set(require_path(labeled_flag, cfg.labeled_set, "--labeled-set"));
      const auto r = evaluate_intrinsic(emb, set, seeds.kmeans, cfg.kmeans);
      const auto curve = elbow(r, cfg, seeds.kmeans);
      auto o = open_out();
      nlohmann::ordered_json j;
      j["purity"] = r.purity;
      j["nmi"] = r.nmi;
      j["wcss"] = r.clustering.wcss;
      j["elbow"] = nlohmann::ordered_json::array();
      for (const auto& [k, w] : curve) j["elbow"].push_back({{"k", k}, {"wcss", w}});
      o.write("intrinsic.json", j.dump(2) + "\n");
      write_intrinsic_artifacts(o, "", r, curve);
      o.finish();
      out << "purity " << r.purity << "  nmi " << r.nmi << '\n';
    } else if (cmd == eex) {
      const auto emb = load_embeddings(embeddings_flag);
      const auto corpus = load_corpus(require_path(corpus_flag, cfg.corpus, "--corpus"));
      const auto labels = load_label_map(require_path(label_map_flag, cfg.label_map, "--label-map"));
      ClassifierConfig ccfg = cfg.classifier;
      if (epochs_flag) ccfg.epochs = *epochs_flag;
      if (seq_len_flag) ccfg.seq_len = *seq_len_flag;
      ccfg.seed = seeds.clf_train;
      const auto ds = prepare_dataset(corpus, emb.vocab, labels, cfg.preprocess, ccfg, cfg.seed);
      auto model = build_classifier(emb, ccfg, seeds.clf_init);
      const auto hist = train_classifier(model, ds);
      const auto report = evaluate_classifier(model, ds.test);
      auto o = open_out();
      auto j = to_json(report);
      j["dropped_articles"] = ds.dropped;
      j["split"] = {{"train", ds.train.size()}, {"val", ds.val.size()}, {"test", ds.test.size()}};
      o.write("extrinsic.json", j.dump(2) + "\n");
      write_extrinsic_artifacts(o, "", hist, report, labels.names());
      o.finish();
      out << "precision " << report.precision << "  recall " << report.recall << "  f1 " << report.f1 << '\n';
    } else if (cmd == swp) {
      if (!cfg.corpus || !cfg.labeled_set || !cfg.label_map)
        throw UsageError("sweep needs a --config naming corpus, labeled_set and label_map");
      const auto corpus = load_corpus(*cfg.corpus);
      const auto set = load_labeled_set(*cfg.labeled_set);
      const auto labels = load_label_map(*cfg.label_map);
      const auto names = labels.names();
      auto o = open_out();
      auto observer = [&](const CellOutcome& c) {
        char dir[96];
        std::snprintf(dir, sizeof dir, "cells/%02zu_%s_w%zu_d%zu", c.row.cell, mode_name(c.row.mode), c.row.window,
                      c.row.dim);
        write_loss_csv(o, fs::path(dir) / "loss.csv", c.w2v.loss_history);
        write_intrinsic_artifacts(o, dir, c.intrinsic, c.wcss);
        write_extrinsic_artifacts(o, dir, c.history, c.classification, names);
      };
      const auto report = run_sweep({corpus, set, labels, cfg}, observer);
      o.write("report.csv", render_csv(report));
      o.write("report.md", render_markdown(report));
      o.write("report.json", render_json(report));
      o.finish();
      out << render_markdown(report);
      for (const auto& row : report.rows)
        if (!row.ok) err << "cell " << row.cell << " failed: " << row.error << '\n';
    } else if (cmd == rep) {
      const auto report = load_report_csv(input_flag);
      const auto format = parse_report_format(format_flag);
      const char* ext = format == ReportFormat::Csv ? "csv" : format == ReportFormat::Json ? "json" : "md";
      const auto text = render_report(report, format);
      auto o = open_out();
      o.write(std::string("report.") + ext, text);
      o.finish();
      out << text;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << cmd->help();
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  std::vector<const char*> argv{"embedlab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace embedlab
