#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>
#include <filesystem>
#include <fstream>

#include "embedlab/intrinsic.hpp"
#include "support/synthetic.hpp"

using namespace embedlab;
using nn::Tensor;

namespace {

Tensor random_points(std::size_t m, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t({m, d});
  for (auto& v : t.values()) v = rng.uniform(-1, 1);
  return t;
}

void expect_distances_preserved(const Tensor& a, const Tensor& b, double tol) {
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = i + 1; j < a.dim(0); ++j)
      EXPECT_NEAR(std::sqrt(detail::sq_dist(a.row(i), a.row(j))),
                  std::sqrt(detail::sq_dist(b.row(i), b.row(j))), tol);
}

std::vector<std::size_t> permute_ids(std::vector<std::size_t> a, const std::vector<std::size_t>& perm) {
  for (auto& v : a) v = perm[v];
  return a;
}

}  // namespace

TEST(Pca, PlanarDataKeepsDistances) {
  // 2-D coordinates embedded in D=5 along two orthonormal directions plus an offset.
  const Tensor uv = random_points(12, 2, 1);
  const double s = 1.0 / std::sqrt(2.0);
  const std::vector<double> e1 = {s, s, 0, 0, 0}, e2 = {0, 0, 0.6, 0.8, 0}, off = {3, -1, 2, 0, 5};
  Tensor pts({12, 5});
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t d = 0; d < 5; ++d) pts(i, d) = off[d] + uv(i, 0) * e1[d] + uv(i, 1) * e2[d];
  const Tensor y = pca_project(pts);
  ASSERT_EQ(y.shape(), (nn::Shape{12, 2}));
  expect_distances_preserved(pts, y, 1e-9);
}

TEST(Pca, IdenticalPointsProjectToZero) {
  Tensor pts({4, 3});
  for (std::size_t i = 0; i < 4; ++i) {
    pts(i, 0) = 1;
    pts(i, 1) = 2;
    pts(i, 2) = 3;
  }
  const Tensor y = pca_project(pts);
  for (double v : y.values()) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Pca, TwoDimensionalInputIsRigid) {
  const Tensor pts = random_points(9, 2, 2);
  expect_distances_preserved(pts, pca_project(pts), 1e-9);
}

TEST(Pca, ZeroMeanColumnsAndSignConvention) {
  const Tensor pts = random_points(20, 6, 3);
  const Tensor y = pca_project(pts);
  for (std::size_t c = 0; c < 2; ++c) {
    double mean = 0;
    for (std::size_t i = 0; i < 20; ++i) mean += y(i, c);
    EXPECT_NEAR(mean / 20, 0.0, 1e-9);
  }
  // Negating the input flips the data; the sign rule keeps loadings positive,
  // so the projection is negated as well.
  Tensor neg = pts;
  neg *= -1.0;
  const Tensor yn = pca_project(neg);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(yn[i], -y[i], 1e-9);
}

TEST(Pca, Errors) {
  EXPECT_THROW(pca_project(Tensor({1, 3})), Error);
  EXPECT_THROW(pca_project(Tensor({5, 1})), Error);
}

TEST(KMeans, KEqualsM) {
  const Tensor pts = random_points(6, 2, 4);
  const auto r = kmeans(pts, 6, 0);
  EXPECT_NEAR(r.wcss, 0.0, 1e-18);
  std::set<std::size_t> ids(r.assignments.begin(), r.assignments.end());
  EXPECT_EQ(ids.size(), 6u);
}

TEST(KMeans, SingleClusterIsMean) {
  const Tensor pts = random_points(10, 2, 5);
  const auto r = kmeans(pts, 1, 0);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    mx += pts(i, 0) / 10;
    my += pts(i, 1) / 10;
  }
  double ss = 0;
  for (std::size_t i = 0; i < 10; ++i)
    ss += (pts(i, 0) - mx) * (pts(i, 0) - mx) + (pts(i, 1) - my) * (pts(i, 1) - my);
  EXPECT_NEAR(r.centroids(0, 0), mx, 1e-12);
  EXPECT_NEAR(r.centroids(0, 1), my, 1e-12);
  EXPECT_NEAR(r.wcss, ss, 1e-12);
}

TEST(KMeans, SeparatedPairsRecoveredForEverySeed) {
  const Tensor pts = Tensor::matrix(4, 2, {0, 0, 0.1, 0, 10, 10, 10, 10.1});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = kmeans(pts, 2, seed);
    EXPECT_EQ(r.assignments[0], r.assignments[1]);
    EXPECT_EQ(r.assignments[2], r.assignments[3]);
    EXPECT_NE(r.assignments[0], r.assignments[2]);
  }
}

TEST(KMeans, WcssNonIncreasingAcrossIterations) {
  const Tensor pts = random_points(60, 2, 6);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = kmeans_single(pts, 4, seed);
    ASSERT_FALSE(r.wcss_history.empty());
    for (std::size_t i = 1; i < r.wcss_history.size(); ++i)
      EXPECT_LE(r.wcss_history[i], r.wcss_history[i - 1] + 1e-12);
    EXPECT_GE(r.wcss, 0.0);
    for (auto a : r.assignments) EXPECT_LT(a, 4u);
  }
}

TEST(KMeans, DuplicatePointsRepairEmptyClusters) {
  Tensor pts({6, 2});
  pts(5, 0) = 1.0;  // five copies of the origin and one other point
  const auto r = kmeans(pts, 3, 0);
  std::set<std::size_t> ids(r.assignments.begin(), r.assignments.end());
  EXPECT_EQ(ids.size(), 3u);
  EXPECT_NEAR(r.wcss, 0.0, 1e-18);
}

TEST(KMeans, Errors) {
  EXPECT_THROW(kmeans(random_points(3, 2, 0), 4, 0), Error);
  EXPECT_THROW(kmeans(random_points(3, 2, 0), 0, 0), Error);
}

TEST(Purity, Examples) {
  EXPECT_DOUBLE_EQ(purity(std::vector<std::size_t>{0, 0, 1, 1}, std::vector<std::size_t>{0, 0, 1, 1}), 1.0);
  // Clusters {a,b,c},{d,e}; classes {a,b,d},{c,e}.
  EXPECT_DOUBLE_EQ(purity(std::vector<std::size_t>{0, 0, 0, 1, 1}, std::vector<std::size_t>{0, 0, 1, 0, 1}), 0.6);
  EXPECT_DOUBLE_EQ(purity(std::vector<std::size_t>(6, 0), std::vector<std::size_t>{0, 0, 1, 1, 2, 2}), 1.0 / 3);
  EXPECT_THROW(purity(std::vector<std::size_t>{}, std::vector<std::size_t>{}), Error);
  EXPECT_THROW(purity(std::vector<std::size_t>{0}, std::vector<std::size_t>{0, 1}), Error);
}

TEST(Nmi, Examples) {
  EXPECT_NEAR(nmi(std::vector<std::size_t>{0, 0, 1, 1}, std::vector<std::size_t>{1, 1, 0, 0}), 1.0, 1e-15);
  EXPECT_NEAR(nmi(std::vector<std::size_t>(4, 0), std::vector<std::size_t>{0, 1, 0, 1}), 0.0, 1e-15);
  EXPECT_NEAR(nmi(std::vector<std::size_t>{0, 0, 1, 1}, std::vector<std::size_t>{0, 1, 0, 1}), 0.0, 1e-15);
  EXPECT_EQ(nmi(std::vector<std::size_t>(3, 2), std::vector<std::size_t>(3, 0)), 1.0);
  EXPECT_THROW(nmi(std::vector<std::size_t>{}, std::vector<std::size_t>{}), Error);
}

TEST(Metrics, MatchBruteForceAndArePermutationInvariant) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(12), k = 1 + rng.below(4), j = 1 + rng.below(4);
    std::vector<std::size_t> a(n), c(n);
    for (auto& v : a) v = rng.below(k);
    for (auto& v : c) v = rng.below(j);
    EXPECT_NEAR(purity(a, c), fixtures::brute_purity(a, c), 1e-12);
    EXPECT_NEAR(nmi(a, c), fixtures::brute_nmi(a, c), 1e-12);
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(perm));
    const auto pa = permute_ids(a, perm);
    EXPECT_NEAR(purity(pa, c), purity(a, c), 1e-15);
    EXPECT_NEAR(nmi(pa, c), nmi(a, c), 1e-12);
    // purity 1 exactly when each cluster sits inside one class.
    bool refines = true;
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y)
        if (a[x] == a[y] && c[x] != c[y]) refines = false;
    EXPECT_EQ(purity(a, c) == 1.0, refines);
  }
}

TEST(WcssCurve, MonotoneAndEndsAtZero) {
  const Tensor pts = random_points(8, 2, 8);
  const auto curve = wcss_curve(pts, 1, 8, 0);
  ASSERT_EQ(curve.size(), 8u);
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_LE(curve[i].second, curve[i - 1].second);
  EXPECT_NEAR(curve.back().second, 0.0, 1e-18);
}

TEST(WcssCurve, FlattensAtPlantedK) {
  const std::vector<std::vector<double>> centers = {{0, 0}, {2, 0}, {0, 2}, {2, 2}, {1, 4}};
  const Tensor pts = fixtures::gaussian_blobs(centers, 20, 0.05, 9);
  const auto curve = wcss_curve(pts, 1, 10, 1);
  std::size_t best_drop_k = 2;
  double best_drop = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    EXPECT_LE(curve[i].second, curve[i - 1].second);
    const double drop = curve[i - 1].second - curve[i].second;
    if (drop > best_drop) {
      best_drop = drop;
      best_drop_k = curve[i].first;
    }
  }
  EXPECT_LE(best_drop_k, 5u);
  EXPECT_LT(curve[4].second - curve[5].second, 0.2 * (curve[3].second - curve[4].second));
}

TEST(EvaluateIntrinsic, SeparableClassesScorePerfectly) {
  LabeledWordSet set = fixtures::topic_labeled_set(3, 4);
  std::vector<std::string> words;
  Tensor E({12, 3});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 4; ++i) {
      words.push_back(fixtures::topic_word(c, i));
      E(c * 4 + i, c) = 1.0;
    }
  const EmbeddingMatrix emb{Vocabulary::from_words(words), E};
  const auto r = evaluate_intrinsic(emb, set, 0);
  EXPECT_DOUBLE_EQ(r.purity, 1.0);
  EXPECT_NEAR(r.nmi, 1.0, 1e-12);
  ASSERT_EQ(r.scatter.size(), 12u);
  EXPECT_EQ(r.scatter[0].word, "t0w0");
  EXPECT_EQ(r.scatter[11].true_class, "topic2");
}

TEST(EvaluateIntrinsic, RandomEmbeddingPigeonholeBoundAndDeterminism) {
  const auto set = fixtures::topic_labeled_set(5, 10);
  std::vector<std::string> words;
  for (const auto& [_, ws] : set.classes) words.insert(words.end(), ws.begin(), ws.end());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const EmbeddingMatrix emb{Vocabulary::from_words(words), random_points(50, 8, 100 + seed)};
    const auto r = evaluate_intrinsic(emb, set, seed);
    EXPECT_GE(r.purity, 0.2);
    EXPECT_GE(r.nmi, 0.0);
    EXPECT_LE(r.nmi, 1.0);
    const auto again = evaluate_intrinsic(emb, set, seed);
    EXPECT_EQ(again.purity, r.purity);
    EXPECT_EQ(again.clustering.assignments, r.clustering.assignments);
  }
}

TEST(EvaluateIntrinsic, MissingWordsListed) {
  const auto set = fixtures::topic_labeled_set(2, 2);
  const EmbeddingMatrix emb{Vocabulary::from_words({"t0w0", "t0w1", "t1w0"}), random_points(3, 3, 0)};
  try {
    evaluate_intrinsic(emb, set, 0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("t1w1"), std::string::npos);
  }
}

TEST(LabeledSet, JsonLoadingAndValidation) {
  const auto set = labeled_set_from_json(nlohmann::ordered_json::parse(R"({"b":["x","y"],"a":["z"]})"));
  ASSERT_EQ(set.classes.size(), 2u);
  EXPECT_EQ(set.classes[0].first, "b");
  EXPECT_EQ(set.total_words(), 3u);
  EXPECT_THROW(labeled_set_from_json(nlohmann::ordered_json::parse(R"({"a":["x"],"b":["x"]})")), Error);
  EXPECT_THROW(labeled_set_from_json(nlohmann::ordered_json::parse(R"({"a":[]})")), Error);
  EXPECT_THROW(labeled_set_from_json(nlohmann::ordered_json::parse("[1]")), Error);
}

TEST(Export, ScatterAndWcssCsv) {
  const auto dir = std::filesystem::temp_directory_path();
  write_scatter_csv({{"ক", 0.5, -1, 2, "c"}}, dir / "embedlab_scatter.csv");
  write_wcss_csv({{1, 4.0}, {2, 1.5}}, dir / "embedlab_wcss.csv");
  std::ifstream s(dir / "embedlab_scatter.csv"), w(dir / "embedlab_wcss.csv");
  std::string line;
  std::getline(s, line);
  EXPECT_EQ(line, "word,x,y,cluster,true_class");
  std::getline(s, line);
  EXPECT_EQ(line, "ক,0.5,-1,2,c");
  std::getline(w, line);
  EXPECT_EQ(line, "k,wcss");
  std::getline(w, line);
  EXPECT_EQ(line, "1,4");
  EXPECT_NE(scatter_svg({{"a", 0, 0, 0, "c"}}, "t").find("<svg"), std::string::npos);
}
