#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "embedlab/error.hpp"
#include "embedlab/extrinsic.hpp"
#include "embedlab/intrinsic.hpp"
#include "embedlab/preprocess.hpp"
#include "embedlab/vocab.hpp"
#include "embedlab/word2vec.hpp"

namespace embedlab {

struct SweepGrid {
  std::vector<Mode> modes = {Mode::SkipGram, Mode::Cbow};
  std::vector<std::size_t> windows = {2, 3, 4};
  std::vector<std::size_t> dims = {100, 200, 300, 400, 500};

  std::size_t cell_count() const { return modes.size() * windows.size() * dims.size(); }

  void validate() const {
    if (modes.empty() || windows.empty() || dims.empty()) throw Error("sweep grid has an empty axis");
    for (auto w : windows)
      if (w < 1) throw Error("sweep window must be at least 1");
    for (auto d : dims)
      if (d < 1) throw Error("sweep dimension must be at least 1");
  }
};

// Everything one experiment needs; paths are resolved against the config
// file's directory.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> corpus;
  std::optional<std::filesystem::path> labeled_set;
  std::optional<std::filesystem::path> label_map;
  PreprocessConfig preprocess;
  bool preprocess_given = false;
  std::uint64_t min_count = 1;
  W2VConfig word2vec;
  KMeansOptions kmeans;
  std::size_t elbow_k_max = 10;
  ClassifierConfig classifier;
  SweepGrid grid;
  std::size_t threads = 1;
};

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                                    const std::filesystem::path& base_dir = {}) {
  ExperimentConfig c;
  auto path = [&](const char* key) -> std::optional<std::filesystem::path> {
    if (!j.contains(key)) return std::nullopt;
    std::filesystem::path p(j.at(key).get<std::string>());
    return p.is_absolute() ? p : base_dir / p;
  };
  c.seed = j.value("seed", c.seed);
  c.corpus = path("corpus");
  c.labeled_set = path("labeled_set");
  c.label_map = path("label_map");
  if (j.contains("preprocess")) {
    c.preprocess = preprocess_config_from_json(j.at("preprocess"), base_dir);
    c.preprocess_given = true;
  }
  if (j.contains("vocab")) c.min_count = j.at("vocab").value("min_count", c.min_count);
  if (j.contains("word2vec")) {
    const auto& w = j.at("word2vec");
    if (w.contains("mode")) c.word2vec.mode = parse_mode(w.at("mode").get<std::string>());
    c.word2vec.dim = w.value("dim", c.word2vec.dim);
    c.word2vec.window = w.value("window", c.word2vec.window);
    c.word2vec.lr = w.value("lr", c.word2vec.lr);
    c.word2vec.batch_size = w.value("batch_size", c.word2vec.batch_size);
    c.word2vec.epochs = w.value("epochs", c.word2vec.epochs);
    c.word2vec.validate();
  }
  if (j.contains("intrinsic")) {
    const auto& i = j.at("intrinsic");
    c.kmeans.restarts = i.value("restarts", c.kmeans.restarts);
    c.kmeans.max_iterations = i.value("max_iterations", c.kmeans.max_iterations);
    c.elbow_k_max = i.value("k_max", c.elbow_k_max);
  }
  if (j.contains("classifier")) c.classifier = classifier_config_from_json(j.at("classifier"));
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    if (g.contains("modes")) {
      c.grid.modes.clear();
      for (const auto& m : g.at("modes")) c.grid.modes.push_back(parse_mode(m.get<std::string>()));
    }
    if (g.contains("windows")) c.grid.windows = g.at("windows").get<std::vector<std::size_t>>();
    if (g.contains("dims")) c.grid.dims = g.at("dims").get<std::vector<std::size_t>>();
    c.grid.validate();
  }
  c.threads = std::max<std::size_t>(1, j.value("threads", c.threads));
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
  try {
    return experiment_config_from_json(j, path.parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw Error("config " + path.string() + ": " + e.what());
  }
}

}  // namespace embedlab
