#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "embedlab/csv.hpp"
#include "embedlab/error.hpp"
#include "embedlab/nn/tensor.hpp"
#include "embedlab/random.hpp"
#include "embedlab/svg.hpp"
#include "embedlab/word2vec.hpp"

namespace embedlab {

// ---------------------------------------------------------------------------
// Ground-truth word classes
// ---------------------------------------------------------------------------

struct LabeledWordSet {
  // class label -> words, in file order
  std::vector<std::pair<std::string, std::vector<std::string>>> classes;

  std::size_t total_words() const {
    std::size_t n = 0;
    for (const auto& c : classes) n += c.second.size();
    return n;
  }

  void validate() const {
    if (classes.empty()) throw Error("labeled word set has no classes");
    std::set<std::string> seen;
    for (const auto& [label, words] : classes) {
      if (words.empty()) throw Error("class \"" + label + "\" has no words");
      for (const auto& w : words)
        if (!seen.insert(w).second) throw Error("word \"" + w + "\" appears in more than one class");
    }
  }
};

inline LabeledWordSet labeled_set_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw Error("labeled word set must be a JSON object {class: [words]}");
  LabeledWordSet set;
  for (const auto& [label, words] : j.items())
    set.classes.emplace_back(label, words.get<std::vector<std::string>>());
  set.validate();
  return set;
}

inline LabeledWordSet load_labeled_set(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open labeled word set " + path.string());
  try {
    return labeled_set_from_json(nlohmann::ordered_json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("labeled word set " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

// Projects mean-centred rows of `points` [M, D] onto their top principal
// components (right singular vectors of the centred matrix). Each
// component's sign makes its largest-magnitude loading positive.
inline Tensor pca_project(const Tensor& points, std::size_t target_dim = 2) {
  if (points.rank() != 2) throw Error("pca_project expects an [M, D] matrix");
  const std::size_t M = points.dim(0), D = points.dim(1);
  if (M < 2) throw Error("pca_project needs at least 2 points");
  if (D < target_dim)
    throw Error("pca_project: dimension " + std::to_string(D) + " is below target " +
                std::to_string(target_dim));
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::MatrixXd X = Eigen::Map<const RowMatrix>(points.values().data(), M, D);
  X.rowwise() -= X.colwise().mean();
  Tensor out({M, target_dim});
  if (X.squaredNorm() == 0.0) return out;  // no variance: every point is the mean

  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::MatrixXd V = svd.matrixV().leftCols(target_dim);
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    Eigen::Index arg = 0;
    for (Eigen::Index r = 1; r < V.rows(); ++r)
      if (std::abs(V(r, c)) > std::abs(V(arg, c))) arg = r;
    if (V(arg, c) < 0) V.col(c) *= -1.0;
  }
  const Eigen::MatrixXd Y = X * V;
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < target_dim; ++j) out(i, j) = Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

// ---------------------------------------------------------------------------
// k-means
// ---------------------------------------------------------------------------

struct ClusteringResult {
  std::vector<std::size_t> assignments;
  Tensor centroids;  // [k, d]
  double wcss = 0.0;
  std::size_t iterations = 0;
  std::vector<double> wcss_history;  // after each Lloyd iteration
};

struct KMeansOptions {
  std::size_t max_iterations = 300;
  double tolerance = 1e-6;  // max centroid shift
  std::size_t restarts = 10;
};

namespace detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline std::size_t nearest(const Tensor& centroids, std::span<const double> p, double* dist = nullptr) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.dim(0); ++c) {
    const double d = sq_dist(centroids.row(c), p);
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  if (dist) *dist = bd;
  return best;
}

inline void check_kmeans_args(const Tensor& points, std::size_t k) {
  if (points.rank() != 2 || points.dim(0) == 0) throw Error("kmeans expects a non-empty [M, d] matrix");
  if (k < 1) throw Error("kmeans needs k >= 1");
  if (k > points.dim(0))
    throw Error("kmeans: k = " + std::to_string(k) + " exceeds the " + std::to_string(points.dim(0)) +
                " points");
}

inline Tensor kmeanspp_seed(const Tensor& points, std::size_t k, Rng& rng) {
  const std::size_t M = points.dim(0), d = points.dim(1);
  Tensor centroids({k, d});
  std::vector<double> d2(M, std::numeric_limits<double>::infinity());
  std::size_t pick = static_cast<std::size_t>(rng.below(M));
  for (std::size_t c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (double v : d2) total += v;
      if (total > 0.0) {
        double r = rng.uniform() * total;
        pick = M - 1;
        for (std::size_t i = 0; i < M; ++i) {
          r -= d2[i];
          if (r < 0.0 && d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
        while (d2[pick] == 0.0) --pick;  // rounding fell past the end
      } else {
        pick = static_cast<std::size_t>(rng.below(M));
      }
    }
    std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < M; ++i) d2[i] = std::min(d2[i], sq_dist(points.row(i), centroids.row(c)));
  }
  return centroids;
}

}  // namespace detail

// Lloyd iterations from the given initial centroids. An emptied cluster
// takes the point farthest from its current centroid (from a cluster with
// more than one member).
inline ClusteringResult lloyd(const Tensor& points, Tensor centroids, const KMeansOptions& opt = {}) {
  const std::size_t M = points.dim(0), d = points.dim(1), k = centroids.dim(0);
  ClusteringResult r;
  r.assignments.assign(M, 0);
  std::vector<double> dist(M, 0.0);
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t iter = 0; iter < opt.max_iterations; ++iter) {
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < M; ++i) {
      r.assignments[i] = detail::nearest(centroids, points.row(i), &dist[i]);
      ++sizes[r.assignments[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t far = M;
      for (std::size_t i = 0; i < M; ++i)
        if (sizes[r.assignments[i]] > 1 && (far == M || dist[i] > dist[far])) far = i;
      --sizes[r.assignments[far]];
      r.assignments[far] = c;
      dist[far] = 0.0;
      sizes[c] = 1;
    }

    Tensor next({k, d});
    for (std::size_t i = 0; i < M; ++i) {
      auto dst = next.row(r.assignments[i]);
      auto src = points.row(i);
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      for (auto& v : next.row(c)) v /= static_cast<double>(sizes[c]);
      shift = std::max(shift, std::sqrt(detail::sq_dist(next.row(c), centroids.row(c))));
    }
    centroids = std::move(next);

    double wcss = 0.0;
    for (std::size_t i = 0; i < M; ++i) wcss += detail::sq_dist(points.row(i), centroids.row(r.assignments[i]));
    r.wcss_history.push_back(wcss);
    r.iterations = iter + 1;
    if (shift < opt.tolerance) break;
  }
  r.centroids = std::move(centroids);
  r.wcss = r.wcss_history.empty() ? 0.0 : r.wcss_history.back();
  return r;
}

// One k-means++ seeded run.
inline ClusteringResult kmeans_single(const Tensor& points, std::size_t k, std::uint64_t seed,
                                      const KMeansOptions& opt = {}) {
  detail::check_kmeans_args(points, k);
  Rng rng(seed);
  return lloyd(points, detail::kmeanspp_seed(points, k, rng), opt);
}

// Best (lowest WCSS) of opt.restarts k-means++ runs; earliest wins ties.
inline ClusteringResult kmeans(const Tensor& points, std::size_t k, std::uint64_t seed,
                               const KMeansOptions& opt = {}) {
  detail::check_kmeans_args(points, k);
  ClusteringResult best;
  const std::size_t restarts = std::max<std::size_t>(opt.restarts, 1);
  for (std::size_t r = 0; r < restarts; ++r) {
    auto run = kmeans_single(points, k, derive_seed(seed, r), opt);
    if (r == 0 || run.wcss < best.wcss) best = std::move(run);
  }
  return best;
}

// WCSS for each k in [k_min, k_max]. Besides the random restarts, each k
// also tries a warm start from the k-1 solution plus its worst-fit point,
// which can only lower WCSS, so the curve is non-increasing in k.
inline std::vector<std::pair<std::size_t, double>> wcss_curve(const Tensor& points, std::size_t k_min,
                                                              std::size_t k_max, std::uint64_t seed,
                                                              const KMeansOptions& opt = {}) {
  if (k_min < 1 || k_min > k_max) throw Error("wcss_curve: invalid k range");
  detail::check_kmeans_args(points, k_max);
  std::vector<std::pair<std::size_t, double>> curve;
  ClusteringResult prev;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    auto best = kmeans(points, k, derive_seed(seed, 1000 + k), opt);
    if (k > k_min) {
      const std::size_t M = points.dim(0), d = points.dim(1);
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < M; ++i) {
        const double dd = detail::sq_dist(points.row(i), prev.centroids.row(prev.assignments[i]));
        if (dd > far_d) {
          far_d = dd;
          far = i;
        }
      }
      Tensor init({k, d});
      std::copy(prev.centroids.values().begin(), prev.centroids.values().end(), init.values().begin());
      std::copy(points.row(far).begin(), points.row(far).end(), init.row(k - 1).begin());
      auto warm = lloyd(points, std::move(init), opt);
      if (warm.wcss < best.wcss) best = std::move(warm);
    }
    curve.emplace_back(k, best.wcss);
    prev = std::move(best);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Partition agreement
// ---------------------------------------------------------------------------

namespace detail {

struct Contingency {
  std::map<std::size_t, std::map<std::size_t, std::uint64_t>> joint;  // cluster -> class -> n
  std::map<std::size_t, std::uint64_t> clusters;
  std::map<std::size_t, std::uint64_t> classes;
  std::uint64_t n = 0;
};

inline Contingency contingency(std::span<const std::size_t> assignments, std::span<const std::size_t> labels) {
  if (assignments.size() != labels.size())
    throw Error("cluster assignments and labels differ in length");
  if (assignments.empty()) throw Error("cannot score an empty clustering");
  Contingency t;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    ++t.joint[assignments[i]][labels[i]];
    ++t.clusters[assignments[i]];
    ++t.classes[labels[i]];
  }
  t.n = assignments.size();
  return t;
}

inline double entropy(const std::map<std::size_t, std::uint64_t>& counts, double n) {
  double h = 0.0;
  for (const auto& [_, c] : counts) {
    const double p = static_cast<double>(c) / n;
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace detail

// (1/N) sum_k max_j |cluster_k ∩ class_j|
inline double purity(std::span<const std::size_t> assignments, std::span<const std::size_t> labels) {
  const auto t = detail::contingency(assignments, labels);
  std::uint64_t hit = 0;
  for (const auto& [_, row] : t.joint) {
    std::uint64_t best = 0;
    for (const auto& [__, c] : row) best = std::max(best, c);
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(t.n);
}

// I(cluster; class) / ((H(cluster) + H(class)) / 2), natural log. Both
// partitions trivial (zero entropy) scores 1.
inline double nmi(std::span<const std::size_t> assignments, std::span<const std::size_t> labels) {
  const auto t = detail::contingency(assignments, labels);
  const double n = static_cast<double>(t.n);
  const double h_sum = detail::entropy(t.clusters, n) + detail::entropy(t.classes, n);
  if (h_sum <= 0.0) return 1.0;
  double mi = 0.0;
  for (const auto& [k, row] : t.joint) {
    const double pk = static_cast<double>(t.clusters.at(k)) / n;
    for (const auto& [j, c] : row) {
      const double pkj = static_cast<double>(c) / n;
      const double pj = static_cast<double>(t.classes.at(j)) / n;
      mi += pkj * std::log(pkj / (pk * pj));
    }
  }
  return std::clamp(mi / (h_sum / 2.0), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Embedding-level evaluation
// ---------------------------------------------------------------------------

struct ScatterRow {
  std::string word;
  double x = 0, y = 0;
  std::size_t cluster = 0;
  std::string true_class;
};

struct IntrinsicResult {
  double purity = 0.0;
  double nmi = 0.0;
  ClusteringResult clustering;
  std::vector<ScatterRow> scatter;
};

// Rows of E for the labelled words -> 2-D PCA -> k-means with one cluster
// per class -> purity and NMI against the classes.
inline IntrinsicResult evaluate_intrinsic(const EmbeddingMatrix& emb, const LabeledWordSet& set,
                                          std::uint64_t seed, const KMeansOptions& opt = {}) {
  set.validate();
  std::vector<std::string> missing;
  std::vector<std::size_t> rows, labels;
  std::vector<std::string> words;
  for (std::size_t c = 0; c < set.classes.size(); ++c)
    for (const auto& w : set.classes[c].second) {
      if (auto i = emb.vocab.find(w)) {
        rows.push_back(*i);
        labels.push_back(c);
        words.push_back(w);
      } else {
        missing.push_back(w);
      }
    }
  if (!missing.empty()) {
    std::string msg = "labeled words missing from the embedding:";
    for (const auto& w : missing) msg += " " + w;
    throw Error(msg);
  }
  Tensor selected({rows.size(), emb.dim()});
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(emb.row(rows[i]).begin(), emb.row(rows[i]).end(), selected.row(i).begin());

  IntrinsicResult r;
  const Tensor projected = pca_project(selected, 2);
  r.clustering = kmeans(projected, set.classes.size(), seed, opt);
  r.purity = purity(r.clustering.assignments, labels);
  r.nmi = nmi(r.clustering.assignments, labels);
  for (std::size_t i = 0; i < rows.size(); ++i)
    r.scatter.push_back({words[i], projected(i, 0), projected(i, 1), r.clustering.assignments[i],
                         set.classes[labels[i]].first});
  return r;
}

inline void write_scatter_csv(const std::vector<ScatterRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "word,x,y,cluster,true_class\n";
  for (const auto& r : rows)
    out << csv::join({r.word, csv::format_double(r.x), csv::format_double(r.y), std::to_string(r.cluster),
                      r.true_class})
        << '\n';
}

inline void write_wcss_csv(const std::vector<std::pair<std::size_t, double>>& curve,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "k,wcss\n";
  for (const auto& [k, w] : curve) out << k << ',' << csv::format_double(w) << '\n';
}

inline std::string scatter_svg(const std::vector<ScatterRow>& rows, const std::string& title) {
  std::map<std::string, std::size_t> class_ids;
  for (const auto& r : rows) class_ids.emplace(r.true_class, class_ids.size());
  std::vector<svg::Point> pts;
  for (const auto& r : rows) pts.push_back({r.x, r.y, class_ids.at(r.true_class), r.word});
  return svg::scatter(pts, title, "PC1", "PC2");
}

inline std::string wcss_svg(const std::vector<std::pair<std::size_t, double>>& curve, const std::string& title) {
  svg::Series s{"WCSS", {}, {}};
  for (const auto& [k, w] : curve) {
    s.x.push_back(static_cast<double>(k));
    s.y.push_back(w);
  }
  return svg::line_chart({s}, title, "number of clusters k", "within-cluster sum of squares");
}

}  // namespace embedlab
