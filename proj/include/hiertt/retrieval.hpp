#pragma once

// Fact scoring and top-n selection.
//
// The built-in lexical scorer is BM25 with Lucene's non-negative idf,
//   idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)),
// where N, df and the average length are taken over the distinct fact texts
// of the candidate list. Duplicate facts therefore do not shift anyone
// else's score. Tokens are lowercased whitespace tokens with ASCII
// punctuation trimmed from both ends; query terms count once.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hiertt/document.hpp"
#include "hiertt/error.hpp"
#include "hiertt/facts.hpp"
#include "hiertt/text.hpp"

namespace hiertt {

enum class ScorerKind { Lexical, Oracle, External };

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct RetrievalConfig {
  std::size_t n = 10;
  ScorerKind scorer = ScorerKind::Lexical;
  Bm25Params bm25;
};

struct ScoredFact {
  std::string fact_id;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based
  std::size_t doc_order = 0;
  friend bool operator==(const ScoredFact&, const ScoredFact&) = default;
};

// Pairs facts with scores and ranks them: score descending, earlier doc_order first on ties.
inline std::vector<ScoredFact> rank_facts(const std::vector<Fact>& facts, const std::vector<double>& scores) {
  if (facts.size() != scores.size()) throw Error("score count does not match fact count");
  std::vector<ScoredFact> out;
  out.reserve(facts.size());
  for (std::size_t i = 0; i < facts.size(); ++i) out.push_back({facts[i].fact_id, scores[i], 0, facts[i].doc_order});
  std::sort(out.begin(), out.end(), [](const ScoredFact& a, const ScoredFact& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.doc_order != b.doc_order) return a.doc_order < b.doc_order;
    return a.fact_id < b.fact_id;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
  return out;
}

inline std::vector<std::string> lexical_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (std::string& w : split_words(to_lower_ascii(text))) {
    std::size_t a = 0, b = w.size();
    while (a < b && std::ispunct(static_cast<unsigned char>(w[a]))) ++a;
    while (b > a && std::ispunct(static_cast<unsigned char>(w[b - 1]))) --b;
    if (b > a) out.push_back(w.substr(a, b - a));
  }
  return out;
}

inline std::vector<ScoredFact> score_lexical(std::string_view question, const std::vector<Fact>& facts,
                                             const Bm25Params& params = {}) {
  std::vector<std::string> query = lexical_tokens(question);
  if (query.empty()) throw Error("lexical scoring needs a non-empty question");
  if (facts.empty()) throw Error("lexical scoring needs at least one fact");
  std::set<std::string> terms(query.begin(), query.end());

  // collection statistics over distinct texts
  std::map<std::string, std::vector<std::string>> distinct;
  for (const auto& f : facts) {
    if (!distinct.count(f.text)) distinct.emplace(f.text, lexical_tokens(f.text));
  }
  const double n_docs = static_cast<double>(distinct.size());
  double total_len = 0.0;
  std::map<std::string, double> df;
  for (const auto& [text, toks] : distinct) {
    total_len += static_cast<double>(toks.size());
    std::set<std::string_view> seen(toks.begin(), toks.end());
    for (const auto& t : terms) {
      if (seen.count(t)) df[t] += 1.0;
    }
  }
  const double avgdl = total_len / n_docs;

  std::unordered_map<std::string, double> score_of_text;
  for (const auto& [text, toks] : distinct) {
    double score = 0.0;
    if (avgdl > 0.0) {
      std::map<std::string_view, double> tf;
      for (const auto& t : toks) tf[t] += 1.0;
      const double dl = static_cast<double>(toks.size());
      for (const auto& t : terms) {
        auto it = tf.find(t);
        if (it == tf.end()) continue;
        double d = df[t];
        double idf = std::log(1.0 + (n_docs - d + 0.5) / (d + 0.5));
        double f = it->second;
        score += idf * f * (params.k1 + 1.0) / (f + params.k1 * (1.0 - params.b + params.b * dl / avgdl));
      }
    }
    score_of_text.emplace(text, score);
  }
  std::vector<double> scores;
  for (const auto& f : facts) scores.push_back(score_of_text.at(f.text));
  return rank_facts(facts, scores);
}

// Gold facts score 1, everything else 0.
inline std::vector<ScoredFact> score_oracle(const QAExample& example, const std::vector<Fact>& facts) {
  std::unordered_set<std::string> ids;
  for (const auto& f : facts) ids.insert(f.fact_id);
  std::unordered_set<std::string> gold;
  for (const auto& id : example.gold_evidence) {
    if (!ids.count(id)) throw DanglingEvidence(id);
    gold.insert(id);
  }
  std::vector<double> scores;
  for (const auto& f : facts) scores.push_back(gold.count(f.fact_id) ? 1.0 : 0.0);
  return rank_facts(facts, scores);
}

// The n best-ranked facts, returned in document order.
inline std::vector<Fact> select_top_n(const std::vector<ScoredFact>& scored, const std::vector<Fact>& facts,
                                      std::size_t n) {
  std::unordered_map<std::string, const Fact*> by_id;
  for (const auto& f : facts) by_id.emplace(f.fact_id, &f);
  std::vector<ScoredFact> ranked = scored;
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
  if (ranked.size() > n) ranked.resize(n);
  std::vector<Fact> out;
  for (const auto& s : ranked) {
    auto it = by_id.find(s.fact_id);
    if (it == by_id.end()) throw Error("scored fact '" + s.fact_id + "' missing from fact list");
    out.push_back(*it->second);
  }
  std::sort(out.begin(), out.end(), [](const Fact& a, const Fact& b) { return a.doc_order < b.doc_order; });
  return out;
}

// |selected ∩ gold| / |gold|; 1 for an example without gold facts.
inline double recall_at_n(const std::vector<Fact>& selected, const std::vector<std::string>& gold_evidence) {
  std::set<std::string> gold(gold_evidence.begin(), gold_evidence.end());
  if (gold.empty()) return 1.0;
  std::size_t hit = 0;
  for (const auto& f : selected) hit += gold.count(f.fact_id);
  return static_cast<double>(hit) / static_cast<double>(gold.size());
}

}  // namespace hiertt
