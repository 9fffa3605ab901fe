#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "embedlab/error.hpp"
#include "embedlab/nn/adam.hpp"
#include "embedlab/nn/checkpoint.hpp"
#include "embedlab/nn/layers.hpp"
#include "embedlab/nn/tensor.hpp"
#include "embedlab/random.hpp"
#include "embedlab/vocab.hpp"

namespace embedlab {

using nn::Tensor;

struct W2VConfig {
  Mode mode = Mode::SkipGram;
  std::size_t dim = 100;
  std::size_t window = 2;
  double lr = 0.01;
  std::size_t batch_size = 256;
  std::size_t epochs = 5;
  std::uint64_t seed = 0;

  void validate() const {
    if (dim < 1) throw Error("embedding dimension must be at least 1");
    if (window < 1) throw Error("window must be at least 1");
    if (batch_size < 1) throw Error("batch size must be at least 1");
    if (!(lr > 0.0)) throw Error("learning rate must be positive");
  }
};

// h = ReLU(W1 x + b1), y = softmax(W2 h + b2)
struct W2VModel {
  Tensor W1;  // [N, V]
  Tensor b1;  // [N]
  Tensor W2;  // [V, N]
  Tensor b2;  // [V]

  std::size_t vocab_size() const { return W2.dim(0); }
  std::size_t dim() const { return W1.dim(0); }

  bool operator==(const W2VModel&) const = default;
};

// Weights ~ U(-0.5/N, 0.5/N), filled W1 then W2 in row-major order; biases 0.
inline W2VModel init_model(const W2VConfig& cfg, std::size_t vocab_size, std::uint64_t seed) {
  cfg.validate();
  if (vocab_size < 2) throw Error("word2vec needs a vocabulary of at least 2 words");
  const std::size_t N = cfg.dim, V = vocab_size;
  W2VModel m{Tensor({N, V}), Tensor({N}), Tensor({V, N}), Tensor({V})};
  Rng rng(seed);
  const double r = 0.5 / static_cast<double>(N);
  for (auto& w : m.W1.values()) w = rng.uniform(-r, r);
  for (auto& w : m.W2.values()) w = rng.uniform(-r, r);
  return m;
}

struct W2VForward {
  Tensor h;  // [N]
  Tensor y;  // [V]
};

// Dense forward pass on a length-V input vector.
inline W2VForward forward(const W2VModel& m, const Tensor& x) {
  if (x.rank() != 1 || x.size() != m.vocab_size())
    throw Error("word2vec input has length " + std::to_string(x.size()) + ", expected " +
                std::to_string(m.vocab_size()));
  Tensor h = nn::relu(nn::dense_forward(m.W1, m.b1, x));
  Tensor y = nn::softmax(nn::dense_forward(m.W2, m.b2, h));
  return {std::move(h), std::move(y)};
}

struct W2VGradients {
  Tensor dW1, db1, dW2, db2;

  explicit W2VGradients(const W2VModel& m)
      : dW1(m.W1.shape()), db1(m.b1.shape()), dW2(m.W2.shape()), db2(m.b2.shape()) {}

  void zero() {
    dW1.fill(0.0);
    db1.fill(0.0);
    dW2.fill(0.0);
    db2.fill(0.0);
  }
};

// Fills `grads` (already zeroed) with the gradient of the mean batch loss
// and returns that mean loss.
using BatchGradientFn = std::function<double(const W2VModel&, std::span<const TrainingExample>,
                                             W2VGradients&)>;

// Index-based evaluation: W1 x is the mean of the input columns of W1 and
// only those columns receive gradient.
inline double sparse_batch_gradient(const W2VModel& m, std::span<const TrainingExample> batch,
                                    W2VGradients& g) {
  const std::size_t N = m.dim(), V = m.vocab_size();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Tensor a({N}), h({N}), z({V}), dh({N});
  double total = 0.0;
  for (const auto& ex : batch) {
    if (ex.inputs.empty() || ex.target >= V) throw Error("invalid training example");
    const double inv_c = 1.0 / static_cast<double>(ex.inputs.size());
    for (std::size_t n = 0; n < N; ++n) {
      double acc = 0.0;
      for (auto j : ex.inputs) acc += m.W1(n, j);
      a[n] = acc * inv_c + m.b1[n];
      h[n] = a[n] > 0.0 ? a[n] : 0.0;
    }
    for (std::size_t v = 0; v < V; ++v) {
      const double* w = &m.W2(v, 0);
      double acc = m.b2[v];
      for (std::size_t n = 0; n < N; ++n) acc += w[n] * h[n];
      z[v] = acc;
    }
    Tensor p = nn::softmax(z);
    total += nn::cross_entropy(p, ex.target);
    p[ex.target] -= 1.0;  // dL/dz

    dh.fill(0.0);
    for (std::size_t v = 0; v < V; ++v) {
      const double dz = p[v] * inv_b;
      g.db2[v] += dz;
      const double* w = &m.W2(v, 0);
      double* dw = &g.dW2(v, 0);
      for (std::size_t n = 0; n < N; ++n) {
        dw[n] += dz * h[n];
        dh[n] += dz * w[n];
      }
    }
    for (std::size_t n = 0; n < N; ++n) {
      const double da = a[n] > 0.0 ? dh[n] : 0.0;
      g.db1[n] += da;
      const double share = da * inv_c;
      for (auto j : ex.inputs) g.dW1(n, j) += share;
    }
  }
  return total * inv_b;
}

inline double example_loss(const W2VModel& m, const TrainingExample& ex) {
  return nn::cross_entropy(forward(m, Tensor({m.vocab_size()}, encode_input(ex, m.vocab_size()))).y,
                           ex.target);
}

struct TrainResult {
  std::vector<double> loss_history;  // mean batch loss per epoch
};

// Mini-batch Adam. Examples are reshuffled every epoch from a generator
// seeded with cfg.seed; the last partial batch is kept.
inline TrainResult train(W2VModel& model, std::span<const TrainingExample> examples,
                         const W2VConfig& cfg,
                         const BatchGradientFn& batch_gradient = sparse_batch_gradient) {
  cfg.validate();
  if (examples.empty()) throw Error("word2vec training needs at least one example");
  nn::AdamOptions opt;
  opt.lr = cfg.lr;
  nn::AdamState sW1(model.W1.shape(), opt), sb1(model.b1.shape(), opt),
      sW2(model.W2.shape(), opt), sb2(model.b2.shape(), opt);
  W2VGradients g(model);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(examples.size());
  std::vector<TrainingExample> batch;
  TrainResult result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(examples[order[i]]);
      g.zero();
      loss_sum += batch_gradient(model, batch, g);
      ++batches;
      nn::adam_step(model.W1, g.dW1, sW1);
      nn::adam_step(model.b1, g.db1, sb1);
      nn::adam_step(model.W2, g.dW2, sW2);
      nn::adam_step(model.b2, g.db2, sb2);
    }
    result.loss_history.push_back(loss_sum / static_cast<double>(batches));
  }
  nn::require_finite(model.W1, "W1 after training");
  nn::require_finite(model.W2, "W2 after training");
  return result;
}

inline void save_model(const W2VModel& m, const std::filesystem::path& path) {
  nn::save_checkpoint(path, {{"W1", m.W1}, {"b1", m.b1}, {"W2", m.W2}, {"b2", m.b2}});
}

inline W2VModel load_model(const std::filesystem::path& path) {
  auto tensors = nn::load_checkpoint(path);
  if (tensors.size() != 4 || tensors[0].first != "W1" || tensors[1].first != "b1" ||
      tensors[2].first != "W2" || tensors[3].first != "b2")
    throw Error("checkpoint " + path.string() + " is not a word2vec model");
  W2VModel m{std::move(tensors[0].second), std::move(tensors[1].second),
             std::move(tensors[2].second), std::move(tensors[3].second)};
  const std::size_t N = m.W1.dim(0), V = m.W1.dim(1);
  if (m.b1.shape() != nn::Shape{N} || m.W2.shape() != nn::Shape{V, N} || m.b2.shape() != nn::Shape{V})
    throw Error("checkpoint " + path.string() + " has inconsistent word2vec shapes");
  return m;
}

// ---------------------------------------------------------------------------
// Embedding table
// ---------------------------------------------------------------------------

struct EmbeddingMatrix {
  Vocabulary vocab;
  Tensor E;  // [V, N], row i <-> vocab index i

  std::size_t size() const { return E.dim(0); }
  std::size_t dim() const { return E.dim(1); }
  std::span<const double> row(std::size_t i) const { return E.row(i); }
};

// E = (W1^T + W2) / 2
inline EmbeddingMatrix extract_embeddings(const W2VModel& m, const Vocabulary& vocab) {
  const std::size_t V = m.vocab_size(), N = m.dim();
  if (vocab.size() != V)
    throw Error("vocabulary size " + std::to_string(vocab.size()) + " does not match model " +
                std::to_string(V));
  Tensor E({V, N});
  for (std::size_t i = 0; i < V; ++i)
    for (std::size_t j = 0; j < N; ++j) E(i, j) = (m.W1(j, i) + m.W2(i, j)) / 2.0;
  return {vocab, std::move(E)};
}

// Line 1 `V N`, then `word v1 ... vN` per row, 17 significant digits.
inline void save_embeddings(const EmbeddingMatrix& emb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write embedding file " + path.string());
  out << emb.size() << ' ' << emb.dim() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < emb.size(); ++i) {
    const auto& w = emb.vocab.word(i);
    if (w.empty() || w.find_first_of(" \t\r\n") != std::string::npos)
      throw Error("embedding word \"" + w + "\" is empty or contains whitespace");
    out << w;
    for (double v : emb.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ' ' << buf;
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing embedding file " + path.string());
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embedding file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("embedding file " + path.string() + " is empty");
  std::size_t V = 0, N = 0;
  {
    std::istringstream hs(line);
    std::string extra;
    if (!(hs >> V >> N) || (hs >> extra) || V == 0 || N == 0)
      throw ParseError(1, "expected header `V N`");
  }
  std::vector<std::string> words;
  Tensor E({V, N});
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (rows == V) throw Error("embedding file has more than the " + std::to_string(V) + " rows in its header");
    std::istringstream rs(line);
    std::string word;
    rs >> word;
    std::size_t col = 0;
    std::string tok;
    while (rs >> tok) {
      if (col == N) throw ParseError(rows + 2, "more than " + std::to_string(N) + " values");
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw ParseError(rows + 2, "bad number \"" + tok + "\"");
      E(rows, col++) = v;
    }
    if (col != N)
      throw ParseError(rows + 2, "expected " + std::to_string(N) + " values, found " + std::to_string(col));
    words.push_back(std::move(word));
    ++rows;
  }
  if (rows != V)
    throw Error("embedding file header declares " + std::to_string(V) + " rows, found " +
                std::to_string(rows));
  return {Vocabulary::from_words(std::move(words)), std::move(E)};
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct Neighbor {
  std::string word;
  double similarity = 0.0;
};

// Top-k by cosine similarity, excluding the query; ties by vocab index.
inline std::vector<Neighbor> nearest_neighbors(const EmbeddingMatrix& emb, const std::string& word,
                                               std::size_t k) {
  const auto q = emb.vocab.find(word);
  if (!q) throw Error("word \"" + word + "\" is not in the embedding vocabulary");
  if (k >= emb.size())
    throw Error("k must be smaller than the vocabulary size (" + std::to_string(emb.size()) + ")");
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(emb.size() - 1);
  for (std::size_t i = 0; i < emb.size(); ++i)
    if (i != *q) scored.emplace_back(cosine(emb.row(*q), emb.row(i)), i);
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back({emb.vocab.word(scored[i].second), scored[i].first});
  return out;
}

}  // namespace embedlab
