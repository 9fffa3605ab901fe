#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "embedlab/corpus.hpp"
#include "embedlab/error.hpp"
#include "embedlab/utf8.hpp"

namespace embedlab {

struct CodepointRange {
  char32_t lo = 0;
  char32_t hi = 0;

  bool contains(char32_t cp) const noexcept { return cp >= lo && cp <= hi; }
};

struct StemRule {
  std::string suffix;
  std::string replacement;
};

// Tokens of one cleaned sentence, in text order.
using CleanSentence = std::vector<std::string>;

struct PreprocessConfig {
  std::unordered_set<std::string> stopwords;
  std::u32string sentence_delimiters = {0x0964, U'?', U'!', U'\n'};
  std::vector<CodepointRange> allowed_ranges = {{0x0980, 0x09FF}};
  // Kept longest-suffix-first; see sort_rules().
  std::vector<StemRule> stemmer_rules;
  std::size_t min_token_length = 1;

  bool is_delimiter(char32_t cp) const noexcept {
    return sentence_delimiters.find(cp) != std::u32string::npos;
  }

  bool is_allowed(char32_t cp) const noexcept {
    return std::any_of(allowed_ranges.begin(), allowed_ranges.end(),
                       [cp](const CodepointRange& r) { return r.contains(cp); });
  }

  void sort_rules() {
    std::stable_sort(stemmer_rules.begin(), stemmer_rules.end(),
                     [](const StemRule& a, const StemRule& b) {
                       return utf8::length(a.suffix) > utf8::length(b.suffix);
                     });
  }

  void validate() const {
    if (sentence_delimiters.empty()) throw Error("sentence delimiter set is empty");
    if (allowed_ranges.empty()) throw Error("allowed script range list is empty");
    for (const auto& r : allowed_ranges)
      if (r.lo > r.hi) throw Error("allowed range has lo > hi");
    std::size_t prev = SIZE_MAX;
    for (const auto& rule : stemmer_rules) {
      const std::size_t len = utf8::length(rule.suffix);
      if (len == 0) throw Error("stemmer rule with empty suffix");
      if (len > prev) throw Error("stemmer rules must be ordered longest suffix first");
      prev = len;
      for (char32_t cp : utf8::decode(rule.replacement))
        if (!is_allowed(cp))
          throw Error("stemmer replacement \"" + rule.replacement +
                      "\" contains characters outside the allowed ranges");
    }
  }
};

inline std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open stopword file " + path.string());
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    words.insert(line.substr(b, e - b + 1));
  }
  return words;
}

// `suffix<TAB>replacement` per line; a missing replacement means deletion.
// Returned rules are sorted longest suffix first (stable within a length).
inline std::vector<StemRule> load_stem_rules(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open stemmer rules file " + path.string());
  PreprocessConfig tmp;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    StemRule rule;
    const auto tab = line.find('\t');
    rule.suffix = line.substr(0, tab);
    if (tab != std::string::npos) rule.replacement = line.substr(tab + 1);
    if (rule.suffix.empty()) throw ParseError(lineno, "empty stemmer suffix");
    tmp.stemmer_rules.push_back(std::move(rule));
  }
  tmp.sort_rules();
  return tmp.stemmer_rules;
}

// Recognised keys: stopwords_file, stopwords, stemmer_rules_file,
// stemmer_rules ([[suffix, replacement], ...]), sentence_delimiters (string),
// allowed_ranges ([[lo, hi], ...]), min_token_length. File paths are
// resolved against base_dir.
inline PreprocessConfig preprocess_config_from_json(const nlohmann::json& j,
                                                    const std::filesystem::path& base_dir = {}) {
  PreprocessConfig cfg;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  if (j.contains("stopwords_file")) cfg.stopwords = load_stopwords(resolve(j.at("stopwords_file")));
  if (j.contains("stopwords"))
    for (const auto& w : j.at("stopwords")) cfg.stopwords.insert(w.get<std::string>());
  if (j.contains("stemmer_rules_file"))
    cfg.stemmer_rules = load_stem_rules(resolve(j.at("stemmer_rules_file")));
  if (j.contains("stemmer_rules"))
    for (const auto& r : j.at("stemmer_rules"))
      cfg.stemmer_rules.push_back({r.at(0).get<std::string>(), r.at(1).get<std::string>()});
  if (j.contains("sentence_delimiters"))
    cfg.sentence_delimiters = utf8::decode(j.at("sentence_delimiters").get<std::string>());
  if (j.contains("allowed_ranges")) {
    cfg.allowed_ranges.clear();
    for (const auto& r : j.at("allowed_ranges"))
      cfg.allowed_ranges.push_back(
          {static_cast<char32_t>(r.at(0).get<std::uint32_t>()),
           static_cast<char32_t>(r.at(1).get<std::uint32_t>())});
  }
  if (j.contains("min_token_length")) cfg.min_token_length = j.at("min_token_length").get<std::size_t>();
  cfg.sort_rules();
  cfg.validate();
  return cfg;
}

// Splits at delimiter characters. Delimiters and empty segments are dropped;
// segments are not trimmed.
inline std::vector<std::string> tokenize_sentences(std::string_view text, const PreprocessConfig& cfg) {
  std::vector<std::string> out;
  std::u32string current;
  for (char32_t cp : utf8::decode(text)) {
    if (cfg.is_delimiter(cp)) {
      if (!current.empty()) out.push_back(utf8::encode(current));
      current.clear();
    } else {
      current.push_back(cp);
    }
  }
  if (!current.empty()) out.push_back(utf8::encode(current));
  return out;
}

// Whitespace split, then every character outside the allowed ranges is
// removed from each token. Tokens left empty are dropped.
inline std::vector<std::string> tokenize_words(std::string_view sentence, const PreprocessConfig& cfg) {
  std::vector<std::string> out;
  std::u32string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(utf8::encode(current));
    current.clear();
  };
  for (char32_t cp : utf8::decode(sentence)) {
    if (utf8::is_space(cp)) {
      flush();
    } else if (cfg.is_allowed(cp)) {
      current.push_back(cp);
    }
  }
  flush();
  return out;
}

inline std::vector<std::string> remove_stopwords(std::vector<std::string> tokens,
                                                 const PreprocessConfig& cfg) {
  std::erase_if(tokens, [&](const std::string& t) { return cfg.stopwords.contains(t); });
  return tokens;
}

// Applies the first matching rule (rules are longest suffix first) whose
// result keeps at least min_token_length characters; rules that would cut
// the token too short are passed over.
inline std::string stem(const std::string& token, const PreprocessConfig& cfg) {
  const std::size_t min_len = std::max<std::size_t>(cfg.min_token_length, 1);
  const std::size_t token_len = utf8::length(token);
  for (const auto& rule : cfg.stemmer_rules) {
    if (rule.suffix.size() > token.size()) continue;
    if (token.compare(token.size() - rule.suffix.size(), rule.suffix.size(), rule.suffix) != 0)
      continue;
    const std::size_t out_len =
        token_len - utf8::length(rule.suffix) + utf8::length(rule.replacement);
    if (out_len < min_len) continue;
    return token.substr(0, token.size() - rule.suffix.size()) + rule.replacement;
  }
  return token;
}

// Sentences of script-filtered tokens, before stopword removal and stemming.
inline std::vector<std::vector<std::string>> tokenize_text(std::string_view text,
                                                           const PreprocessConfig& cfg) {
  std::vector<std::vector<std::string>> out;
  for (const auto& s : tokenize_sentences(text, cfg)) {
    auto words = tokenize_words(s, cfg);
    if (!words.empty()) out.push_back(std::move(words));
  }
  return out;
}

inline std::vector<CleanSentence> preprocess_text(std::string_view text, const PreprocessConfig& cfg) {
  std::vector<CleanSentence> out;
  for (const auto& s : tokenize_sentences(text, cfg)) {
    auto tokens = remove_stopwords(tokenize_words(s, cfg), cfg);
    for (auto& t : tokens) t = stem(t, cfg);
    // A stem can coincide with a stopword; those are dropped as well.
    tokens = remove_stopwords(std::move(tokens), cfg);
    if (!tokens.empty()) out.push_back(std::move(tokens));
  }
  return out;
}

// One entry per article, in corpus order.
inline std::vector<std::vector<CleanSentence>> preprocess_corpus(const Corpus& corpus,
                                                                 const PreprocessConfig& cfg) {
  std::vector<std::vector<CleanSentence>> out;
  out.reserve(corpus.size());
  for (const auto& a : corpus.articles) out.push_back(preprocess_text(a.text, cfg));
  return out;
}

inline TokenizedCorpus tokenize_corpus(const Corpus& corpus, const PreprocessConfig& cfg) {
  TokenizedCorpus out;
  out.reserve(corpus.size());
  for (const auto& a : corpus.articles) out.push_back(tokenize_text(a.text, cfg));
  return out;
}

inline std::vector<CleanSentence> flatten_sentences(
    const std::vector<std::vector<CleanSentence>>& per_article) {
  std::vector<CleanSentence> out;
  for (const auto& article : per_article)
    out.insert(out.end(), article.begin(), article.end());
  return out;
}

}  // namespace embedlab
