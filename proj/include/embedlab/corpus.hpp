#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "embedlab/error.hpp"

namespace embedlab {

struct Article {
  std::string id;
  std::string category;
  std::string title;
  std::string text;
};

struct Corpus {
  std::vector<Article> articles;

  std::size_t size() const noexcept { return articles.size(); }
  bool empty() const noexcept { return articles.empty(); }

  std::map<std::string, std::size_t> category_counts() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& a : articles) ++counts[a.category];
    return counts;
  }
};

// article -> sentence -> token
using TokenizedCorpus = std::vector<std::vector<std::vector<std::string>>>;

struct CorpusStats {
  std::uint64_t article_count = 0;
  std::uint64_t sentence_count = 0;
  std::uint64_t word_count = 0;
  std::uint64_t vocab_size = 0;
  double avg_sentences_per_article = 0.0;
  double avg_words_per_sentence = 0.0;
  double avg_words_per_article = 0.0;
};

namespace detail {

inline bool is_blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n\v\f") == std::string::npos;
}

}  // namespace detail

// One JSON object per line: {"category": ..., "text": ...} with optional
// "id" and "title". Whitespace-only lines are skipped. Missing ids default
// to the zero-based line index.
inline Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t index = 0;
  for (; std::getline(in, line); ++index) {
    const std::size_t lineno = index + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::is_blank(line)) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(lineno, "expected a JSON object");

    auto required = [&](const char* key) -> std::string {
      auto it = j.find(key);
      if (it == j.end()) throw ParseError(lineno, std::string("missing \"") + key + "\"");
      if (!it->is_string()) throw ParseError(lineno, std::string("\"") + key + "\" must be a string");
      return it->get<std::string>();
    };
    auto optional = [&](const char* key, std::string fallback) -> std::string {
      auto it = j.find(key);
      if (it == j.end() || it->is_null()) return fallback;
      if (it->is_string()) return it->get<std::string>();
      if (it->is_number_integer()) return std::to_string(it->get<long long>());
      throw ParseError(lineno, std::string("\"") + key + "\" must be a string");
    };

    Article a;
    a.category = required("category");
    a.text = required("text");
    a.id = optional("id", std::to_string(index));
    a.title = optional("title", "");
    if (detail::is_blank(a.text)) throw ParseError(lineno, "\"text\" is empty");
    if (!seen.insert(a.id).second) throw ParseError(lineno, "duplicate id \"" + a.id + "\"");
    corpus.articles.push_back(std::move(a));
  }
  if (corpus.empty()) throw Error("empty corpus");
  return corpus;
}

inline Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file " + path.string());
  return parse_corpus(in);
}

inline CorpusStats stats_from_counts(std::uint64_t articles, std::uint64_t sentences,
                                     std::uint64_t words, std::uint64_t vocab) {
  if (articles == 0) throw Error("corpus statistics need at least one article");
  CorpusStats s;
  s.article_count = articles;
  s.sentence_count = sentences;
  s.word_count = words;
  s.vocab_size = vocab;
  const auto a = static_cast<double>(articles);
  s.avg_sentences_per_article = static_cast<double>(sentences) / a;
  s.avg_words_per_article = static_cast<double>(words) / a;
  s.avg_words_per_sentence =
      sentences == 0 ? 0.0 : static_cast<double>(words) / static_cast<double>(sentences);
  return s;
}

inline CorpusStats compute_stats(const Corpus& corpus, const TokenizedCorpus& tokenized) {
  if (corpus.empty()) throw Error("corpus statistics need at least one article");
  if (tokenized.size() != corpus.size())
    throw Error("tokenized corpus has " + std::to_string(tokenized.size()) +
                " articles, expected " + std::to_string(corpus.size()));
  std::uint64_t sentences = 0;
  std::uint64_t words = 0;
  std::unordered_set<std::string> vocab;
  for (const auto& article : tokenized) {
    sentences += article.size();
    for (const auto& sentence : article) {
      words += sentence.size();
      vocab.insert(sentence.begin(), sentence.end());
    }
  }
  return stats_from_counts(corpus.size(), sentences, words, vocab.size());
}

inline nlohmann::ordered_json to_json(const CorpusStats& s) {
  nlohmann::ordered_json j;
  j["article_count"] = s.article_count;
  j["sentence_count"] = s.sentence_count;
  j["word_count"] = s.word_count;
  j["vocab_size"] = s.vocab_size;
  j["avg_sentences_per_article"] = s.avg_sentences_per_article;
  j["avg_words_per_sentence"] = s.avg_words_per_sentence;
  j["avg_words_per_article"] = s.avg_words_per_article;
  return j;
}

}  // namespace embedlab
