#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "embedlab/sweep.hpp"
#include "support/synthetic.hpp"

using namespace embedlab;

namespace {

SweepReport run_toy(std::vector<Mode> modes, std::vector<std::size_t> dims, std::size_t threads = 1) {
  auto t = fixtures::toy_experiment(std::move(modes), std::move(dims), 3);
  t.config.threads = threads;
  return run_sweep({t.corpus, t.labeled, t.labels, t.config});
}

SweepRow row(std::size_t cell, Mode mode, std::size_t window, std::size_t dim, double f1, double nmi = 0.5,
             double purity = 0.5) {
  SweepRow r;
  r.cell = cell;
  r.mode = mode;
  r.window = window;
  r.dim = dim;
  r.ok = true;
  r.purity = purity;
  r.nmi = nmi;
  r.precision = 0.5;
  r.recall = 0.5;
  r.f1 = f1;
  return r;
}

SweepReport random_report(Rng& rng, std::size_t n) {
  SweepReport r;
  for (std::size_t i = 0; i < n; ++i) {
    auto x = row(i, rng.below(2) ? Mode::Cbow : Mode::SkipGram, 2 + rng.below(3), 100 * (1 + rng.below(5)),
                 rng.uniform(), rng.uniform(), rng.uniform());
    x.seed = rng.next_u64();
    x.precision = rng.uniform(-1e-300, 1e300);
    if (rng.below(5) == 0) {
      x.ok = false;
      x.error = "bad \"cell\", with comma\nand newline";
      x.purity = x.nmi = x.precision = x.recall = x.f1 = std::nan("");
    }
    r.rows.push_back(x);
  }
  if (std::any_of(r.rows.begin(), r.rows.end(), [](const SweepRow& x) { return x.ok; })) r.best = select_best(r.rows);
  return r;
}

void expect_same(double a, double b) {
  if (std::isnan(a))
    EXPECT_TRUE(std::isnan(b));
  else
    EXPECT_EQ(a, b);
}

}  // namespace

TEST(Sweep, SingleCell) {
  const auto r = run_toy({Mode::SkipGram}, {4});
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.best, 0u);
  EXPECT_TRUE(r.rows[0].ok) << r.rows[0].error;
  EXPECT_EQ(r.rows[0].seed, 3u);
  EXPECT_EQ(r.article_count, 40u);
}

TEST(Sweep, TwoByOneByTwoGrid) {
  const auto r = run_toy({Mode::SkipGram, Mode::Cbow}, {4, 6});
  ASSERT_EQ(r.rows.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& x = r.rows[i];
    ASSERT_TRUE(x.ok) << x.error;
    EXPECT_EQ(x.cell, i);
    EXPECT_EQ(x.seed, 3 + i);
    for (double v : {x.purity, x.nmi, x.precision, x.recall, x.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  EXPECT_EQ(r.rows[0].mode, Mode::SkipGram);
  EXPECT_EQ(r.rows[1].dim, 6u);
  EXPECT_EQ(r.rows[2].mode, Mode::Cbow);
  ASSERT_TRUE(r.best.has_value());
  EXPECT_EQ(*r.best, select_best(r.rows));
}

TEST(Sweep, DeterministicAcrossRunsAndThreadCounts) {
  const auto a = run_toy({Mode::SkipGram, Mode::Cbow}, {4, 6});
  const auto b = run_toy({Mode::SkipGram, Mode::Cbow}, {4, 6});
  const auto c = run_toy({Mode::SkipGram, Mode::Cbow}, {4, 6}, 3);
  EXPECT_EQ(render_csv(a), render_csv(b));
  EXPECT_EQ(render_json(a), render_json(b));
  EXPECT_EQ(render_csv(a), render_csv(c));
}

TEST(Sweep, FailedCellIsRecorded) {
  auto t = fixtures::toy_experiment({Mode::SkipGram}, {4, 1}, 0);
  // A classifier kernel longer than the sequence fails every cell.
  t.config.classifier.kernel = 20;
  EXPECT_THROW(run_sweep({t.corpus, t.labeled, t.labels, t.config}), Error);
  // A missing labelled word fails every cell too, but only at evaluation.
  auto u = fixtures::toy_experiment({Mode::SkipGram}, {4}, 0);
  u.labeled.classes[0].second.push_back("absent");
  EXPECT_THROW(run_sweep({u.corpus, u.labeled, u.labels, u.config}), Error);
}

TEST(Sweep, ObserverSeesEveryCell) {
  auto t = fixtures::toy_experiment({Mode::SkipGram, Mode::Cbow}, {4}, 1);
  std::vector<std::size_t> seen;
  run_sweep({t.corpus, t.labeled, t.labels, t.config}, [&](const CellOutcome& o) {
    seen.push_back(o.row.cell);
    EXPECT_EQ(o.embeddings.dim(), 4u);
    EXPECT_EQ(o.w2v.loss_history.size(), 2u);
    EXPECT_EQ(o.history.train_acc.size(), 2u);
    EXPECT_FALSE(o.wcss.empty());
  });
  EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1}));
}

TEST(SelectBest, Rules) {
  EXPECT_EQ(select_best({row(0, Mode::Cbow, 2, 100, 0.1)}), 0u);
  EXPECT_EQ(select_best({row(0, Mode::Cbow, 2, 100, 0.8, 0.5), row(1, Mode::Cbow, 2, 100, 0.8, 0.7)}), 1u);
  EXPECT_EQ(select_best({row(0, Mode::Cbow, 2, 100, 0.8, 0.7, 0.4), row(1, Mode::Cbow, 2, 100, 0.8, 0.7, 0.6)}), 1u);
  EXPECT_EQ(select_best({row(0, Mode::Cbow, 2, 300, 0.8), row(1, Mode::Cbow, 2, 100, 0.8)}), 1u);
  EXPECT_EQ(select_best({row(0, Mode::Cbow, 4, 100, 0.8), row(1, Mode::Cbow, 3, 100, 0.8)}), 1u);
  EXPECT_EQ(select_best({row(0, Mode::Cbow, 2, 100, 0.8), row(1, Mode::SkipGram, 2, 100, 0.8)}), 1u);
  auto failed = row(0, Mode::Cbow, 2, 100, 0.99);
  failed.ok = false;
  EXPECT_EQ(select_best({failed, row(1, Mode::Cbow, 2, 100, 0.1)}), 1u);
  EXPECT_THROW(select_best({failed}), Error);
  EXPECT_THROW(select_best({}), Error);
}

TEST(SelectBest, InvariantUnderRowOrder) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < 8; ++i)
      rows.push_back(row(i, rng.below(2) ? Mode::Cbow : Mode::SkipGram, 2 + rng.below(2), 100 * (1 + rng.below(2)),
                         0.5 + 0.1 * static_cast<double>(rng.below(3)), 0.5 + 0.1 * static_cast<double>(rng.below(2))));
    const auto& chosen = rows[select_best(rows)];
    auto shuffled = rows;
    rng.shuffle(std::span<SweepRow>(shuffled));
    const auto& again = shuffled[select_best(shuffled)];
    EXPECT_EQ(again.f1, chosen.f1);
    EXPECT_EQ(again.nmi, chosen.nmi);
    EXPECT_EQ(again.dim, chosen.dim);
    EXPECT_EQ(again.window, chosen.window);
    EXPECT_EQ(again.mode, chosen.mode);
  }
}

TEST(ReportCsv, RoundTripIsExact) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = random_report(rng, 1 + rng.below(12));
    std::istringstream in(render_csv(r));
    const auto back = parse_report_csv(in);
    ASSERT_EQ(back.rows.size(), r.rows.size());
    EXPECT_EQ(back.best, r.best);
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      const auto &a = r.rows[i], &b = back.rows[i];
      EXPECT_EQ(a.cell, b.cell);
      EXPECT_EQ(a.mode, b.mode);
      EXPECT_EQ(a.window, b.window);
      EXPECT_EQ(a.dim, b.dim);
      EXPECT_EQ(a.seed, b.seed);
      EXPECT_EQ(a.ok, b.ok);
      EXPECT_EQ(a.error, b.error);
      expect_same(a.purity, b.purity);
      expect_same(a.nmi, b.nmi);
      expect_same(a.precision, b.precision);
      expect_same(a.recall, b.recall);
      expect_same(a.f1, b.f1);
    }
    EXPECT_EQ(render_csv(back), render_csv(r));
  }
}

TEST(ReportCsv, Errors) {
  std::istringstream bad_header("a,b\n");
  EXPECT_THROW(parse_report_csv(bad_header), Error);
  std::istringstream short_row(std::string(kReportCsvHeader) + "\n0,SG,2\n");
  try {
    parse_report_csv(short_row);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ReportRender, ThirtyRowGrid) {
  SweepReport r;
  std::size_t cell = 0;
  for (Mode m : {Mode::SkipGram, Mode::Cbow})
    for (std::size_t w : {2, 3, 4})
      for (std::size_t d : {100, 200, 300, 400, 500}) {
        r.rows.push_back(row(cell, m, w, d, 0.5 + 0.01 * static_cast<double>(cell)));
        ++cell;
      }
  r.best = select_best(r.rows);
  EXPECT_EQ(*r.best, 29u);
  const std::string csv = render_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 31);

  const std::string md = render_markdown(r);
  std::size_t bold = 0;
  for (std::size_t p = md.find("**"); p != std::string::npos; p = md.find("**", p + 2)) ++bold;
  EXPECT_EQ(bold, 2u);  // one opening and one closing marker
  EXPECT_NE(md.find("**0.790**"), std::string::npos);
  // Header, separator and 15 (window, dim) rows.
  const std::string table = md.substr(0, md.find("\n\n"));
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 16);

  const auto j = nlohmann::json::parse(render_json(r));
  EXPECT_EQ(j["rows"].size(), 30u);
  EXPECT_EQ(j["best"]["cell"], 29);
  EXPECT_TRUE(j["provenance"].contains("corpus_hash"));
}

TEST(ReportRender, FormatNames) {
  EXPECT_EQ(parse_report_format("csv"), ReportFormat::Csv);
  EXPECT_EQ(parse_report_format("md"), ReportFormat::Markdown);
  EXPECT_EQ(parse_report_format("json"), ReportFormat::Json);
  EXPECT_THROW(parse_report_format("xml"), Error);
}

TEST(Provenance, CorpusHashDetectsDrift) {
  auto t = fixtures::toy_experiment({Mode::SkipGram}, {4});
  const auto h = corpus_hash(t.corpus);
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(corpus_hash(t.corpus), h);
  t.corpus.articles[0].text += " x";
  EXPECT_NE(corpus_hash(t.corpus), h);
  EXPECT_EQ(content_hash(""), "cbf29ce484222325");
}

TEST(Config, JsonResolvesPathsAndGrid) {
  const auto j = nlohmann::json::parse(R"({
    "seed": 9, "corpus": "c.jsonl", "labeled_set": "/abs/l.json",
    "vocab": {"min_count": 2},
    "word2vec": {"mode": "CBOW", "dim": 8, "epochs": 3},
    "grid": {"modes": ["SG"], "windows": [2, 3], "dims": [4]},
    "threads": 2})");
  const auto c = experiment_config_from_json(j, "/base");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(*c.corpus, std::filesystem::path("/base/c.jsonl"));
  EXPECT_EQ(*c.labeled_set, std::filesystem::path("/abs/l.json"));
  EXPECT_FALSE(c.label_map.has_value());
  EXPECT_EQ(c.min_count, 2u);
  EXPECT_EQ(c.word2vec.mode, Mode::Cbow);
  EXPECT_EQ(c.grid.cell_count(), 2u);
  EXPECT_EQ(c.threads, 2u);
  EXPECT_THROW(experiment_config_from_json(nlohmann::json::parse(R"({"grid": {"dims": []}})")), Error);
  EXPECT_THROW(experiment_config_from_json(nlohmann::json::parse(R"({"word2vec": {"mode": "GLOVE"}})")), Error);
}
