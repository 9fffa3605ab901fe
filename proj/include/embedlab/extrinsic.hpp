#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "embedlab/corpus.hpp"
#include "embedlab/csv.hpp"
#include "embedlab/error.hpp"
#include "embedlab/nn/adam.hpp"
#include "embedlab/nn/layers.hpp"
#include "embedlab/nn/tensor.hpp"
#include "embedlab/preprocess.hpp"
#include "embedlab/random.hpp"
#include "embedlab/svg.hpp"
#include "embedlab/vocab.hpp"
#include "embedlab/word2vec.hpp"

namespace embedlab {

struct ClassifierConfig {
  std::size_t seq_len = 400;
  std::size_t filters = 128;
  std::size_t kernel = 3;
  double dropout_rate = 0.8;
  std::size_t dense_units = 64;
  std::size_t classes = 5;
  double lr = 0.01;
  std::size_t batch_size = 256;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (seq_len == 0 || filters == 0 || kernel == 0 || dense_units == 0 || classes == 0 ||
        batch_size == 0)
      throw Error("classifier sizes must all be positive");
    if (kernel > seq_len) throw Error("classifier kernel is longer than the sequence length");
    if (!(lr > 0.0)) throw Error("classifier learning rate must be positive");
    nn::check_dropout_rate(dropout_rate);
  }
};

inline ClassifierConfig classifier_config_from_json(const nlohmann::json& j, ClassifierConfig c = {}) {
  c.seq_len = j.value("seq_len", c.seq_len);
  c.filters = j.value("filters", c.filters);
  c.kernel = j.value("kernel", c.kernel);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  c.dense_units = j.value("dense_units", c.dense_units);
  c.classes = j.value("classes", c.classes);
  c.lr = j.value("lr", c.lr);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

// category -> class id, ids 0..C-1 each used once.
struct LabelMap {
  std::map<std::string, std::size_t> ids;

  std::size_t size() const { return ids.size(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out(ids.size());
    for (const auto& [name, id] : ids) out.at(id) = name;
    return out;
  }

  void validate() const {
    if (ids.empty()) throw Error("label map is empty");
    std::vector<bool> used(ids.size(), false);
    for (const auto& [name, id] : ids) {
      if (id >= ids.size()) throw Error("label map ids must be 0.." + std::to_string(ids.size() - 1));
      if (used[id]) throw Error("label map id " + std::to_string(id) + " used twice");
      used[id] = true;
    }
  }
};

inline LabelMap load_label_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open label map " + path.string());
  LabelMap m;
  try {
    m.ids = nlohmann::json::parse(in).get<std::map<std::string, std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("label map " + path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

struct Sample {
  std::vector<std::uint32_t> tokens;  // length seq_len; 0 = pad, i+1 = vocab index i
  std::size_t label = 0;
};

struct SplitDataset {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
  std::size_t dropped = 0;  // articles left with no in-vocabulary token
};

// Vocab indices shifted by one, OOV tokens dropped, first seq_len kept,
// zero padded at the end.
inline std::vector<std::uint32_t> encode_tokens(std::span<const std::string> tokens, const Vocabulary& vocab,
                                                std::size_t seq_len) {
  std::vector<std::uint32_t> out;
  out.reserve(seq_len);
  for (const auto& t : tokens) {
    if (out.size() == seq_len) break;
    if (auto i = vocab.find(t)) out.push_back(static_cast<std::uint32_t>(*i + 1));
  }
  out.resize(seq_len, 0);
  return out;
}

inline std::size_t split_test_size(std::size_t n) { return n / 10; }
inline std::size_t split_val_size(std::size_t n) { return (n - split_test_size(n)) / 10; }

// Shuffles with `seed`, then takes floor(10%) as test and floor(10%) of the
// remainder as validation; the rest is training data.
inline SplitDataset prepare_dataset(const Corpus& corpus, const Vocabulary& vocab, const LabelMap& labels,
                                    const PreprocessConfig& pp, const ClassifierConfig& cfg,
                                    std::uint64_t seed) {
  labels.validate();
  if (labels.size() != cfg.classes)
    throw Error("label map has " + std::to_string(labels.size()) + " classes, classifier expects " +
                std::to_string(cfg.classes));
  SplitDataset ds;
  std::vector<Sample> all;
  for (const auto& a : corpus.articles) {
    auto it = labels.ids.find(a.category);
    if (it == labels.ids.end())
      throw Error("article " + a.id + " has category \"" + a.category + "\" missing from the label map");
    std::vector<std::string> flat;
    for (auto& s : preprocess_text(a.text, pp)) flat.insert(flat.end(), s.begin(), s.end());
    Sample s{encode_tokens(flat, vocab, cfg.seq_len), it->second};
    if (s.tokens.empty() || s.tokens.front() == 0) {
      ++ds.dropped;
      continue;
    }
    all.push_back(std::move(s));
  }
  Rng rng(seed);
  rng.shuffle(std::span<Sample>(all));
  const std::size_t n_test = split_test_size(all.size());
  const std::size_t n_val = split_val_size(all.size());
  auto first = all.begin();
  ds.test.assign(std::make_move_iterator(first), std::make_move_iterator(first + static_cast<std::ptrdiff_t>(n_test)));
  first += static_cast<std::ptrdiff_t>(n_test);
  ds.val.assign(std::make_move_iterator(first), std::make_move_iterator(first + static_cast<std::ptrdiff_t>(n_val)));
  first += static_cast<std::ptrdiff_t>(n_val);
  ds.train.assign(std::make_move_iterator(first), std::make_move_iterator(all.end()));
  return ds;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

// embedding (frozen) -> conv1d + ReLU -> global max pool -> dropout
// -> dense + ReLU -> dense + softmax
struct ClassifierModel {
  ClassifierConfig config;
  Tensor embedding;  // [V+1, N], row 0 = pad (zeros); frozen
  Tensor conv_k;     // [F, K, N]
  Tensor conv_b;     // [F]
  Tensor W1;         // [H, F]
  Tensor b1;         // [H]
  Tensor W2;         // [C, H]
  Tensor b2;         // [C]

  std::size_t embed_dim() const { return embedding.dim(1); }
};

struct ClassifierGrads {
  Tensor conv_k, conv_b, W1, b1, W2, b2;

  explicit ClassifierGrads(const ClassifierModel& m)
      : conv_k(m.conv_k.shape()), conv_b(m.conv_b.shape()), W1(m.W1.shape()), b1(m.b1.shape()),
        W2(m.W2.shape()), b2(m.b2.shape()) {}

  void zero() {
    for (Tensor* t : {&conv_k, &conv_b, &W1, &b1, &W2, &b2}) t->fill(0.0);
  }

  void scale(double s) {
    for (Tensor* t : {&conv_k, &conv_b, &W1, &b1, &W2, &b2}) *t *= s;
  }
};

inline Tensor embedding_table(const EmbeddingMatrix& emb) {
  const std::size_t V = emb.size(), N = emb.dim();
  Tensor table({V + 1, N});
  std::copy(emb.E.values().begin(), emb.E.values().end(), table.values().begin() + static_cast<std::ptrdiff_t>(N));
  return table;
}

// Trainable weights are Glorot-uniform, biases zero.
inline ClassifierModel build_classifier(const EmbeddingMatrix& emb, const ClassifierConfig& cfg,
                                        std::uint64_t seed) {
  cfg.validate();
  const std::size_t N = emb.dim(), F = cfg.filters, K = cfg.kernel, H = cfg.dense_units, C = cfg.classes;
  ClassifierModel m{cfg,           embedding_table(emb), Tensor({F, K, N}), Tensor({F}),
                    Tensor({H, F}), Tensor({H}),          Tensor({C, H}),    Tensor({C})};
  Rng rng(seed);
  auto glorot = [&rng](Tensor& t, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : t.values()) v = rng.uniform(-limit, limit);
  };
  glorot(m.conv_k, static_cast<double>(K * N), static_cast<double>(K * F));
  glorot(m.W1, static_cast<double>(F), static_cast<double>(H));
  glorot(m.W2, static_cast<double>(H), static_cast<double>(C));
  return m;
}

struct ClassifierForward {
  std::size_t active = 0;  // leading non-pad tokens
  Tensor x;                // [min(T, active+K-1), N] embedded prefix
  Tensor conv;             // [T-K+1, F] pre-activation
  nn::MaxPoolResult pool;  // over ReLU(conv)
  Tensor dropout_mask;     // empty in eval
  Tensor pooled;           // after dropout [F]
  Tensor a1;               // dense1 pre-activation [H]
  Tensor h1;               // [H]
  Tensor probs;            // [C]
};

// With `mask` empty the dropout layer is the identity.
inline ClassifierForward classifier_forward(const ClassifierModel& m, std::span<const std::uint32_t> tokens,
                                            const Tensor& mask) {
  const std::size_t T = tokens.size(), K = m.config.kernel, N = m.embed_dim(), F = m.config.filters;
  if (T < K) throw Error("classifier input shorter than the convolution kernel");
  const std::size_t out_len = T - K + 1;
  ClassifierForward c;
  c.active = 0;
  for (std::size_t t = 0; t < T; ++t)
    if (tokens[t] != 0) c.active = t + 1;

  // Windows that start at or after `active` cover only pad rows, whose
  // embedding is exactly zero, so their output is exactly the bias. Only
  // the prefix that reaches real tokens is convolved.
  const std::size_t rows = std::min(T, c.active + K - 1);
  c.conv = Tensor({out_len, F});
  std::size_t computed = 0;
  if (c.active > 0 && rows >= K) {
    c.x = Tensor({rows, N});
    for (std::size_t t = 0; t < rows; ++t) {
      if (tokens[t] >= m.embedding.dim(0)) throw Error("token id outside the embedding table");
      auto src = m.embedding.row(tokens[t]);
      std::copy(src.begin(), src.end(), c.x.row(t).begin());
    }
    Tensor partial = nn::conv1d_forward(c.x, m.conv_k, m.conv_b);
    computed = partial.dim(0);
    std::copy(partial.values().begin(), partial.values().end(), c.conv.values().begin());
  }
  for (std::size_t t = computed; t < out_len; ++t)
    for (std::size_t f = 0; f < F; ++f) c.conv(t, f) = m.conv_b[f];

  c.pool = nn::global_max_pool(nn::relu(c.conv));
  c.dropout_mask = mask;
  c.pooled = c.pool.y;
  if (mask.size() != 0) {
    mask.require_same_shape(c.pooled, "classifier dropout mask");
    for (std::size_t f = 0; f < F; ++f) c.pooled[f] *= mask[f];
  }
  c.a1 = nn::dense_forward(m.W1, m.b1, c.pooled);
  c.h1 = nn::relu(c.a1);
  c.probs = nn::softmax(nn::dense_forward(m.W2, m.b2, c.h1));
  return c;
}

inline ClassifierForward classifier_forward(const ClassifierModel& m, std::span<const std::uint32_t> tokens,
                                            nn::Phase phase, Rng& rng) {
  Tensor mask;
  if (phase == nn::Phase::Train && m.config.dropout_rate > 0.0)
    mask = nn::dropout(Tensor({m.config.filters}, 1.0), m.config.dropout_rate, phase, rng).mask;
  return classifier_forward(m, tokens, mask);
}

// Accumulates d(loss)/d(params) for one sample; returns the sample's loss.
inline double classifier_backward(const ClassifierModel& m, const ClassifierForward& c, std::size_t label,
                                  ClassifierGrads& g) {
  const double loss = nn::cross_entropy(c.probs, label);
  Tensor dz2 = nn::softmax_cross_entropy_backward(c.probs, label);
  Tensor dh1;
  nn::dense_backward_accumulate(m.W2, c.h1, dz2, g.W2, g.b2, &dh1);
  Tensor dpooled;
  nn::dense_backward_accumulate(m.W1, c.pooled, nn::relu_backward(dh1, c.a1), g.W1, g.b1, &dpooled);
  const Tensor dpool = nn::dropout_backward(std::move(dpooled), c.dropout_mask);
  const Tensor drelu = nn::global_max_pool_backward(dpool, c.pool.argmax, c.conv.dim(0));
  const Tensor dconv = nn::relu_backward(drelu, c.conv);

  // Embedding is frozen: no dx. Pad-only windows contribute to the bias alone.
  const std::size_t F = m.config.filters;
  const std::size_t computed = c.x.size() == 0 ? 0 : c.x.dim(0) - m.config.kernel + 1;
  if (computed > 0) {
    Tensor head({computed, F});
    std::copy(dconv.values().begin(), dconv.values().begin() + static_cast<std::ptrdiff_t>(computed * F),
              head.values().begin());
    nn::conv1d_backward_accumulate(c.x, m.conv_k, head, g.conv_k, g.conv_b, nullptr);
  }
  for (std::size_t t = computed; t < dconv.dim(0); ++t)
    for (std::size_t f = 0; f < F; ++f) g.conv_b[f] += dconv(t, f);
  return loss;
}

inline std::size_t argmax(const Tensor& p) {
  return static_cast<std::size_t>(std::max_element(p.values().begin(), p.values().end()) - p.values().begin());
}

inline std::size_t predict(const ClassifierModel& m, std::span<const std::uint32_t> tokens) {
  return argmax(classifier_forward(m, tokens, Tensor()).probs);
}

inline double accuracy(const ClassifierModel& m, std::span<const Sample> samples) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t hit = 0;
  for (const auto& s : samples) hit += predict(m, s.tokens) == s.label;
  return static_cast<double>(hit) / static_cast<double>(samples.size());
}

struct ClassifierHistory {
  std::vector<double> train_loss;  // mean batch loss, dropout active
  std::vector<double> train_acc;   // eval-mode accuracy on the training split
  std::vector<double> val_acc;     // NaN when there is no validation split
};

inline ClassifierHistory train_classifier(ClassifierModel& m, const SplitDataset& ds) {
  const auto& cfg = m.config;
  cfg.validate();
  if (ds.train.empty()) throw Error("classifier training split is empty");
  nn::AdamOptions opt;
  opt.lr = cfg.lr;
  nn::AdamState s_ck(m.conv_k.shape(), opt), s_cb(m.conv_b.shape(), opt), s_W1(m.W1.shape(), opt),
      s_b1(m.b1.shape(), opt), s_W2(m.W2.shape(), opt), s_b2(m.b2.shape(), opt);
  ClassifierGrads g(m);
  Rng order_rng(derive_seed(cfg.seed, 1));
  Rng dropout_rng(derive_seed(cfg.seed, 2));
  std::vector<std::size_t> order(ds.train.size());
  ClassifierHistory hist;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    order_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      g.zero();
      double batch_loss = 0.0;
      for (std::size_t i = start; i < stop; ++i) {
        const auto& s = ds.train[order[i]];
        const auto fwd = classifier_forward(m, s.tokens, nn::Phase::Train, dropout_rng);
        batch_loss += classifier_backward(m, fwd, s.label, g);
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      g.scale(inv);
      loss_sum += batch_loss * inv;
      ++batches;
      nn::adam_step(m.conv_k, g.conv_k, s_ck);
      nn::adam_step(m.conv_b, g.conv_b, s_cb);
      nn::adam_step(m.W1, g.W1, s_W1);
      nn::adam_step(m.b1, g.b1, s_b1);
      nn::adam_step(m.W2, g.W2, s_W2);
      nn::adam_step(m.b2, g.b2, s_b2);
    }
    hist.train_loss.push_back(loss_sum / static_cast<double>(batches));
    hist.train_acc.push_back(accuracy(m, ds.train));
    hist.val_acc.push_back(accuracy(m, ds.val));
  }
  return hist;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

inline double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

struct ClassificationReport {
  std::vector<std::vector<std::uint64_t>> confusion;  // rows true, columns predicted
  std::vector<double> class_precision;
  std::vector<double> class_recall;
  std::vector<std::size_t> never_predicted;  // precision undefined, scored 0
  std::vector<std::size_t> absent_classes;   // recall undefined, scored 0
  double precision = 0.0;                    // macro
  double recall = 0.0;                       // macro
  double f1 = 0.0;                           // from macro precision and recall
  double accuracy = 0.0;
  std::uint64_t total = 0;
};

inline ClassificationReport metrics_from_confusion(std::vector<std::vector<std::uint64_t>> confusion) {
  const std::size_t C = confusion.size();
  ClassificationReport r;
  r.class_precision.assign(C, 0.0);
  r.class_recall.assign(C, 0.0);
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < C; ++c) {
    if (confusion[c].size() != C) throw Error("confusion matrix must be square");
    std::uint64_t predicted = 0, actual = 0;
    for (std::size_t o = 0; o < C; ++o) {
      predicted += confusion[o][c];
      actual += confusion[c][o];
    }
    const auto tp = confusion[c][c];
    trace += tp;
    r.total += actual;
    if (predicted == 0)
      r.never_predicted.push_back(c);
    else
      r.class_precision[c] = static_cast<double>(tp) / static_cast<double>(predicted);
    if (actual == 0)
      r.absent_classes.push_back(c);
    else
      r.class_recall[c] = static_cast<double>(tp) / static_cast<double>(actual);
  }
  // Macro averages run over classes that occur in the labels or the
  // predictions; a class with neither carries no evidence either way.
  std::size_t scored = 0;
  for (std::size_t c = 0; c < C; ++c) {
    const bool absent = std::find(r.absent_classes.begin(), r.absent_classes.end(), c) != r.absent_classes.end();
    const bool unpredicted =
        std::find(r.never_predicted.begin(), r.never_predicted.end(), c) != r.never_predicted.end();
    if (absent && unpredicted) continue;
    r.precision += r.class_precision[c];
    r.recall += r.class_recall[c];
    ++scored;
  }
  if (scored > 0) {
    r.precision /= static_cast<double>(scored);
    r.recall /= static_cast<double>(scored);
  }
  r.f1 = f1_score(r.precision, r.recall);
  r.accuracy = r.total ? static_cast<double>(trace) / static_cast<double>(r.total) : 0.0;
  r.confusion = std::move(confusion);
  return r;
}

inline ClassificationReport evaluate_classifier(const ClassifierModel& m, std::span<const Sample> test) {
  if (test.empty()) throw Error("classifier test split is empty");
  const std::size_t C = m.config.classes;
  std::vector<std::vector<std::uint64_t>> confusion(C, std::vector<std::uint64_t>(C, 0));
  for (const auto& s : test) ++confusion.at(s.label).at(predict(m, s.tokens));
  return metrics_from_confusion(std::move(confusion));
}

inline nlohmann::ordered_json to_json(const ClassificationReport& r) {
  nlohmann::ordered_json j;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["accuracy"] = r.accuracy;
  j["confusion"] = r.confusion;
  j["class_precision"] = r.class_precision;
  j["class_recall"] = r.class_recall;
  j["never_predicted"] = r.never_predicted;
  j["absent_classes"] = r.absent_classes;
  return j;
}

inline void write_accuracy_csv(const ClassifierHistory& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,train_acc,val_acc\n";
  for (std::size_t e = 0; e < h.train_acc.size(); ++e)
    out << e + 1 << ',' << csv::format_double(h.train_acc[e]) << ',' << csv::format_double(h.val_acc[e]) << '\n';
}

inline std::string accuracy_svg(const ClassifierHistory& h, const std::string& title) {
  svg::Series tr{"train", {}, {}}, va{"validation", {}, {}};
  for (std::size_t e = 0; e < h.train_acc.size(); ++e) {
    tr.x.push_back(static_cast<double>(e + 1));
    tr.y.push_back(h.train_acc[e]);
    va.x.push_back(static_cast<double>(e + 1));
    va.y.push_back(h.val_acc[e]);
  }
  return svg::line_chart({tr, va}, title, "epoch", "accuracy");
}

inline std::string confusion_svg(const ClassificationReport& r, const std::vector<std::string>& labels,
                                 const std::string& title) {
  return svg::heatmap(r.confusion, labels, title);
}

}  // namespace embedlab
