#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "embedlab/error.hpp"
#include "embedlab/preprocess.hpp"

namespace embedlab {

enum class Mode { SkipGram, Cbow };

inline const char* mode_name(Mode m) { return m == Mode::SkipGram ? "SG" : "CBOW"; }

inline Mode parse_mode(const std::string& s) {
  if (s == "SG" || s == "sg" || s == "skipgram" || s == "skip-gram") return Mode::SkipGram;
  if (s == "CBOW" || s == "cbow") return Mode::Cbow;
  throw Error("unknown training mode \"" + s + "\" (expected SG or CBOW)");
}

class Vocabulary {
 public:
  Vocabulary() = default;

  // Indices by descending frequency, ties in lexicographic (byte) order.
  // Words seen fewer than min_count times are left out.
  static Vocabulary build(std::span<const CleanSentence> sentences, std::uint64_t min_count = 1) {
    if (min_count < 1) throw Error("min_count must be at least 1");
    if (sentences.empty()) throw Error("cannot build a vocabulary from zero sentences");
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& s : sentences)
      for (const auto& t : s) ++counts[t];
    std::vector<std::pair<std::string, std::uint64_t>> entries;
    for (auto& [w, c] : counts)
      if (c >= min_count) entries.emplace_back(w, c);
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    Vocabulary v;
    for (auto& [w, c] : entries) v.add(std::move(w), c);
    return v;
  }

  static Vocabulary from_words(std::vector<std::string> words,
                               std::vector<std::uint64_t> freqs = {}) {
    if (!freqs.empty() && freqs.size() != words.size())
      throw Error("vocabulary frequency list does not match word list");
    Vocabulary v;
    for (std::size_t i = 0; i < words.size(); ++i)
      v.add(std::move(words[i]), freqs.empty() ? 0 : freqs[i]);
    return v;
  }

  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }

  std::optional<std::size_t> find(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const std::string& word) const { return index_.contains(word); }

  std::size_t index(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) throw Error("word \"" + word + "\" is not in the vocabulary");
    return it->second;
  }

  const std::string& word(std::size_t i) const { return words_.at(i); }
  std::uint64_t frequency(std::size_t i) const { return freqs_.at(i); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  // Line i: `word<TAB>frequency` for index i.
  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write vocabulary file " + path.string());
    for (std::size_t i = 0; i < size(); ++i) out << words_[i] << '\t' << freqs_[i] << '\n';
  }

  static Vocabulary load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open vocabulary file " + path.string());
    Vocabulary v;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0) throw ParseError(lineno, "expected word<TAB>frequency");
      std::uint64_t freq = 0;
      try {
        freq = std::stoull(line.substr(tab + 1));
      } catch (const std::exception&) {
        throw ParseError(lineno, "bad frequency");
      }
      std::string w = line.substr(0, tab);
      if (v.contains(w)) throw ParseError(lineno, "duplicate word \"" + w + "\"");
      v.add(std::move(w), freq);
    }
    return v;
  }

 private:
  void add(std::string w, std::uint64_t freq) {
    auto [it, inserted] = index_.emplace(w, words_.size());
    if (!inserted) throw Error("duplicate vocabulary word \"" + w + "\"");
    words_.push_back(std::move(w));
    freqs_.push_back(freq);
  }

  std::vector<std::string> words_;
  std::vector<std::uint64_t> freqs_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Index sequences with out-of-vocabulary tokens removed.
inline std::vector<std::vector<std::size_t>> to_indices(std::span<const CleanSentence> sentences,
                                                        const Vocabulary& vocab) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    std::vector<std::size_t> ids;
    ids.reserve(s.size());
    for (const auto& t : s)
      if (auto i = vocab.find(t)) ids.push_back(*i);
    out.push_back(std::move(ids));
  }
  return out;
}

// Skip-gram: input = {center}, target = one context word.
// CBOW: input = the context words (with multiplicity), target = center.
struct TrainingExample {
  std::vector<std::size_t> inputs;
  std::size_t target = 0;

  bool operator==(const TrainingExample&) const = default;
};

// Symmetric window of `window` tokens each side, clipped at the sentence
// boundary. Emission order: sentence, then center position, then context
// left to right.
inline std::vector<TrainingExample> generate_examples(
    std::span<const std::vector<std::size_t>> sentences, std::size_t window, Mode mode) {
  if (window < 1) throw Error("window must be at least 1");
  std::vector<TrainingExample> out;
  for (const auto& s : sentences) {
    const std::size_t n = s.size();
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t lo = t >= window ? t - window : 0;
      const std::size_t hi = std::min(n - 1, t + window);
      if (mode == Mode::SkipGram) {
        for (std::size_t c = lo; c <= hi; ++c)
          if (c != t) out.push_back({{s[t]}, s[c]});
      } else {
        TrainingExample ex;
        ex.target = s[t];
        for (std::size_t c = lo; c <= hi; ++c)
          if (c != t) ex.inputs.push_back(s[c]);
        if (!ex.inputs.empty()) out.push_back(std::move(ex));
      }
    }
  }
  return out;
}

inline std::vector<TrainingExample> generate_examples(std::span<const CleanSentence> sentences,
                                                      const Vocabulary& vocab, std::size_t window,
                                                      Mode mode) {
  const auto ids = to_indices(sentences, vocab);
  return generate_examples(std::span<const std::vector<std::size_t>>(ids), window, mode);
}

// Dense input vector: a one-hot for a single index, otherwise the mean of
// the inputs' one-hots.
inline std::vector<double> encode_input(const TrainingExample& ex, std::size_t vocab_size) {
  if (ex.inputs.empty()) throw Error("training example has no inputs");
  std::vector<double> x(vocab_size, 0.0);
  for (auto i : ex.inputs) {
    if (i >= vocab_size) throw Error("input index out of range");
    x[i] += 1.0;
  }
  const auto k = static_cast<double>(ex.inputs.size());
  for (auto& v : x) v /= k;
  return x;
}

}  // namespace embedlab
