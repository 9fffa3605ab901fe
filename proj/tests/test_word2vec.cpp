#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "embedlab/nn/grad_check.hpp"
#include "embedlab/word2vec.hpp"

using namespace embedlab;
using nn::Tensor;

namespace {

// Straightforward dense evaluation with one-hot (or averaged) input vectors.
double dense_batch_gradient(const W2VModel& m, std::span<const TrainingExample> batch,
                            W2VGradients& g) {
  const std::size_t V = m.vocab_size();
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& ex : batch) {
    const Tensor x({V}, encode_input(ex, V));
    const Tensor a = nn::dense_forward(m.W1, m.b1, x);
    const Tensor h = nn::relu(a);
    const Tensor p = nn::softmax(nn::dense_forward(m.W2, m.b2, h));
    total += nn::cross_entropy(p, ex.target);
    Tensor dz = nn::softmax_cross_entropy_backward(p, ex.target);
    dz *= inv_b;
    const auto out = nn::dense_backward(m.W2, h, dz);
    const auto in = nn::dense_backward(m.W1, x, nn::relu_backward(out.dx, a));
    g.dW2 += out.dW;
    g.db2 += out.db;
    g.dW1 += in.dW;
    g.db1 += in.db;
  }
  return total * inv_b;
}

double mean_loss(const W2VModel& m, std::span<const TrainingExample> batch) {
  double s = 0.0;
  for (const auto& ex : batch) s += example_loss(m, ex);
  return s / static_cast<double>(batch.size());
}

std::vector<TrainingExample> toy_examples(Mode mode) {
  const std::vector<std::vector<std::size_t>> sents = {
      {0, 1, 2, 3, 4}, {1, 2, 3, 5}, {4, 5, 0, 1}, {2, 3, 4, 5, 0, 1}};
  return generate_examples(std::span<const std::vector<std::size_t>>(sents), 2, mode);
}

W2VConfig small_config(Mode mode) {
  W2VConfig c;
  c.mode = mode;
  c.dim = 5;
  c.window = 2;
  c.batch_size = 7;
  c.epochs = 5;
  c.seed = 3;
  return c;
}

// Biases shifted off zero so every ReLU unit is active or inactive by a margin.
W2VModel perturbed_model(const W2VConfig& c, std::size_t V, std::uint64_t seed) {
  auto m = init_model(c, V, seed);
  Rng rng(seed + 100);
  for (auto& w : m.W1.values()) w = rng.uniform(-1, 1);
  for (auto& w : m.W2.values()) w = rng.uniform(-1, 1);
  for (auto& w : m.b1.values()) w = rng.uniform(-0.5, 0.5);
  for (auto& w : m.b2.values()) w = rng.uniform(-0.5, 0.5);
  return m;
}

}  // namespace

TEST(Word2VecInit, ShapesRangeAndZeroBiases) {
  W2VConfig c;
  c.dim = 8;
  const auto m = init_model(c, 20, 1);
  EXPECT_EQ(m.W1.shape(), (nn::Shape{8, 20}));
  EXPECT_EQ(m.W2.shape(), (nn::Shape{20, 8}));
  for (double w : m.W1.values()) EXPECT_LE(std::abs(w), 0.5 / 8);
  for (double w : m.W2.values()) EXPECT_LE(std::abs(w), 0.5 / 8);
  for (double b : m.b1.values()) EXPECT_EQ(b, 0.0);
  for (double b : m.b2.values()) EXPECT_EQ(b, 0.0);
  EXPECT_EQ(init_model(c, 20, 1), m);
  EXPECT_FALSE(init_model(c, 20, 2) == m);
}

TEST(Word2VecInit, RejectsBadInput) {
  W2VConfig c;
  EXPECT_THROW(init_model(c, 1, 0), Error);
  c.dim = 0;
  EXPECT_THROW(init_model(c, 10, 0), Error);
  c.dim = 4;
  c.window = 0;
  EXPECT_THROW(init_model(c, 10, 0), Error);
}

TEST(Word2VecForward, MatchesHandComputation) {
  W2VConfig c;
  c.dim = 3;
  auto m = perturbed_model(c, 4, 5);
  const Tensor x = Tensor::vector({0, 0.5, 0, 0.5});
  const auto f = forward(m, x);
  std::vector<double> h(3), z(4);
  for (std::size_t n = 0; n < 3; ++n) {
    const double a = 0.5 * m.W1(n, 1) + 0.5 * m.W1(n, 3) + m.b1[n];
    h[n] = std::max(0.0, a);
  }
  double denom = 0.0;
  for (std::size_t v = 0; v < 4; ++v) {
    z[v] = m.b2[v];
    for (std::size_t n = 0; n < 3; ++n) z[v] += m.W2(v, n) * h[n];
    denom += std::exp(z[v]);
  }
  for (std::size_t n = 0; n < 3; ++n) EXPECT_NEAR(f.h[n], h[n], 1e-12);
  for (std::size_t v = 0; v < 4; ++v) EXPECT_NEAR(f.y[v], std::exp(z[v]) / denom, 1e-12);
}

TEST(Word2VecGradient, MatchesFiniteDifferences) {
  for (Mode mode : {Mode::SkipGram, Mode::Cbow}) {
    const auto c = small_config(mode);
    auto m = perturbed_model(c, 6, 9);
    const auto all = toy_examples(mode);
    const std::span<const TrainingExample> batch(all.data(), 6);
    W2VGradients g(m);
    sparse_batch_gradient(m, batch, g);
    auto loss = [&] { return mean_loss(m, batch); };
    EXPECT_LT(nn::grad_check(loss, m.W1.data(), g.dW1.data()), 1e-5) << mode_name(mode);
    EXPECT_LT(nn::grad_check(loss, m.b1.data(), g.db1.data()), 1e-5) << mode_name(mode);
    EXPECT_LT(nn::grad_check(loss, m.W2.data(), g.dW2.data()), 1e-5) << mode_name(mode);
    EXPECT_LT(nn::grad_check(loss, m.b2.data(), g.db2.data()), 1e-5) << mode_name(mode);
  }
}

TEST(Word2VecGradient, SparseAgreesWithDense) {
  for (Mode mode : {Mode::SkipGram, Mode::Cbow}) {
    const auto c = small_config(mode);
    const auto ex = toy_examples(mode);
    auto a = init_model(c, 6, 4), b = a;
    const auto ra = train(a, ex, c);
    const auto rb = train(b, ex, c, dense_batch_gradient);
    ASSERT_EQ(ra.loss_history.size(), rb.loss_history.size());
    for (std::size_t e = 0; e < ra.loss_history.size(); ++e)
      EXPECT_NEAR(ra.loss_history[e], rb.loss_history[e], 1e-9);
    for (std::size_t i = 0; i < a.W1.size(); ++i) EXPECT_NEAR(a.W1[i], b.W1[i], 1e-9);
  }
}

TEST(Word2VecTrain, LossDecreasesOnToyCorpus) {
  // 3 tokens cycling: every context is predictable.
  std::vector<std::vector<std::size_t>> sents(20, {0, 1, 2, 0, 1, 2});
  const auto ex = generate_examples(std::span<const std::vector<std::size_t>>(sents), 1, Mode::SkipGram);
  W2VConfig c;
  c.dim = 4;
  c.window = 1;
  c.batch_size = 16;
  c.epochs = 30;
  auto m = init_model(c, 3, 0);
  const auto r = train(m, ex, c);
  ASSERT_EQ(r.loss_history.size(), 30u);
  EXPECT_LT(r.loss_history.back(), r.loss_history.front());
  EXPECT_LT(r.loss_history.back(), std::log(3.0));
}

TEST(Word2VecTrain, Deterministic) {
  const auto c = small_config(Mode::Cbow);
  const auto ex = toy_examples(Mode::Cbow);
  auto a = init_model(c, 6, 1), b = init_model(c, 6, 1);
  const auto ra = train(a, ex, c), rb = train(b, ex, c);
  EXPECT_EQ(ra.loss_history, rb.loss_history);
  EXPECT_EQ(a, b);
  auto d = init_model(c, 6, 1);
  auto c2 = c;
  c2.seed = 99;
  train(d, ex, c2);
  EXPECT_FALSE(a == d);
}

TEST(Word2VecTrain, EmptyExamples) {
  const auto c = small_config(Mode::SkipGram);
  auto m = init_model(c, 6, 1);
  EXPECT_THROW(train(m, {}, c), Error);
}

TEST(Word2VecModel, SaveLoadRoundTrip) {
  const auto c = small_config(Mode::SkipGram);
  const auto m = perturbed_model(c, 6, 2);
  const auto path = std::filesystem::temp_directory_path() / "embedlab_w2v_model.ckpt";
  save_model(m, path);
  EXPECT_EQ(load_model(path), m);
  std::filesystem::remove(path);
}

TEST(Embeddings, AverageOfInputAndOutputWeights) {
  W2VConfig c;
  c.dim = 2;
  W2VModel m = init_model(c, 3, 0);
  m.W1 = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  m.W2 = Tensor::matrix(3, 2, {1, 1, 1, 1, 1, 1});
  const auto e = extract_embeddings(m, Vocabulary::from_words({"a", "b", "c"}));
  EXPECT_EQ(e.E, Tensor::matrix(3, 2, {1.0, 2.5, 1.5, 3.0, 2.0, 3.5}));
  EXPECT_THROW(extract_embeddings(m, Vocabulary::from_words({"a", "b"})), Error);
}

TEST(Embeddings, FileRoundTripIsExact) {
  const auto c = small_config(Mode::SkipGram);
  const auto m = perturbed_model(c, 6, 7);
  const auto emb = extract_embeddings(m, Vocabulary::from_words({"ক", "খ", "গ", "ঘ", "ঙ", "চ"}));
  const auto path = std::filesystem::temp_directory_path() / "embedlab_emb.txt";
  save_embeddings(emb, path);
  const auto back = load_embeddings(path);
  EXPECT_EQ(back.E, emb.E);
  EXPECT_EQ(back.vocab.words(), emb.vocab.words());
  std::filesystem::remove(path);
}

TEST(Embeddings, MalformedFile) {
  const auto path = std::filesystem::temp_directory_path() / "embedlab_emb_bad.txt";
  {
    std::ofstream f(path);
    f << "2 3\na 1 2 3\nb 1 2\n";
  }
  EXPECT_THROW(load_embeddings(path), Error);
  {
    std::ofstream f(path);
    f << "3 2\na 1 2\nb 1 2\n";
  }
  EXPECT_THROW(load_embeddings(path), Error);
  std::filesystem::remove(path);
}

TEST(Neighbors, Values) {
  EmbeddingMatrix e{Vocabulary::from_words({"a", "b", "c", "d"}),
                    Tensor::matrix(4, 2, {1, 0, 2, 0.1, 0, 1, -1, 0})};
  EXPECT_NEAR(cosine(e.row(0), e.row(0)), 1.0, 1e-15);
  EXPECT_NEAR(cosine(e.row(0), e.row(3)), -1.0, 1e-15);
  const auto nb = nearest_neighbors(e, "a", 3);
  ASSERT_EQ(nb.size(), 3u);
  EXPECT_EQ(nb[0].word, "b");
  EXPECT_EQ(nb[1].word, "c");
  EXPECT_EQ(nb[2].word, "d");
  EXPECT_THROW(nearest_neighbors(e, "a", 4), Error);
  EXPECT_THROW(nearest_neighbors(e, "z", 1), Error);
}

TEST(Neighbors, MatchBruteForce) {
  Rng rng(21);
  std::vector<std::string> words;
  for (int i = 0; i < 30; ++i) words.push_back("w" + std::to_string(i));
  Tensor E({30, 6});
  for (auto& v : E.values()) v = rng.uniform(-1, 1);
  const EmbeddingMatrix e{Vocabulary::from_words(words), E};
  for (std::size_t q = 0; q < 30; ++q) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < 30; ++i)
      if (i != q) all.emplace_back(-cosine(e.row(q), e.row(i)), i);
    std::sort(all.begin(), all.end());
    const auto nb = nearest_neighbors(e, words[q], 5);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(nb[i].word, words[all[i].second]);
      EXPECT_NEAR(nb[i].similarity, -all[i].first, 1e-15);
      EXPECT_NE(nb[i].word, words[q]);
    }
  }
}
