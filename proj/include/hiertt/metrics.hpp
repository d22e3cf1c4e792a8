#pragma once

// Exact match and numeracy-focused F1.
//
// Normalization: lowercase, split on whitespace, trim sentence punctuation at
// token edges. A token that parses under the numeric grammar becomes its value
// rounded to `places` decimals ("$1,959" -> "1959", "4.6%" -> "4.6"); other
// tokens lose all punctuation and currency symbols, and the articles a / an /
// the are dropped. The answer's numeric value is set when exactly one token
// is a number.
//
// Two numbers are equal when, scaled by 10^places and rounded, they differ by
// at most one unit.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hiertt/error.hpp"
#include "hiertt/numeric.hpp"
#include "hiertt/text.hpp"

namespace hiertt {

inline constexpr int kDefaultRoundPlaces = 4;

struct NormalizedAnswer {
  std::vector<std::string> tokens;  // sorted, so equal bags compare equal
  std::optional<double> numeric;
  std::size_t numeric_tokens = 0;
  bool percent = false;

  friend bool operator==(const NormalizedAnswer&, const NormalizedAnswer&) = default;
};

namespace detail {

inline bool is_edge_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '"' || c == '\'';
}

inline std::string strip_punctuation(std::string_view token) {
  std::string out;
  for (std::size_t i = 0; i < token.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(token[i]);
    if (c < 0x80) {
      if (!std::ispunct(c)) out.push_back(static_cast<char>(c));
      continue;
    }
    bool skipped = false;
    for (auto sym : kCurrencySymbols) {
      if (token.substr(i).starts_with(sym)) {
        i += sym.size() - 1;
        skipped = true;
        break;
      }
    }
    if (!skipped) out.push_back(static_cast<char>(c));
  }
  return out;
}

}  // namespace detail

inline NormalizedAnswer normalize_answer(std::string_view raw, int places = kDefaultRoundPlaces) {
  NormalizedAnswer out;
  std::optional<double> last_number;
  for (const std::string& word : split_words(to_lower_ascii(raw))) {
    std::string_view t = word;
    while (!t.empty() && detail::is_edge_punct(t.back())) t.remove_suffix(1);
    while (!t.empty() && (t.front() == '"' || t.front() == '\'')) t.remove_prefix(1);
    if (auto num = parse_number(t)) {
      double rounded = round_to(num->value, places);
      out.tokens.push_back(format_number(rounded));
      ++out.numeric_tokens;
      last_number = num->value;
      if (num->unit_hint.find('%') != std::string::npos) out.percent = true;
      continue;
    }
    std::string plain = detail::strip_punctuation(t);
    if (plain.empty() || plain == "a" || plain == "an" || plain == "the") continue;
    out.tokens.push_back(std::move(plain));
  }
  if (out.numeric_tokens == 1) out.numeric = last_number;
  std::sort(out.tokens.begin(), out.tokens.end());
  return out;
}

inline bool numbers_equal(double a, double b, int places = kDefaultRoundPlaces) {
  double scale = std::pow(10.0, places);
  return std::fabs(std::round(a * scale) - std::round(b * scale)) <= 1.0;
}

inline int exact_match(const NormalizedAnswer& pred, const NormalizedAnswer& gold, int places = kDefaultRoundPlaces) {
  if (pred.numeric && gold.numeric) return numbers_equal(*pred.numeric, *gold.numeric, places) ? 1 : 0;
  return pred.tokens == gold.tokens ? 1 : 0;
}

inline int exact_match(std::string_view pred, std::string_view gold, int places = kDefaultRoundPlaces) {
  return exact_match(normalize_answer(pred, places), normalize_answer(gold, places), places);
}

inline double bag_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  std::map<std::string_view, long> counts;
  for (const auto& t : gold) ++counts[t];
  long common = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  double recall = static_cast<double>(common) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

inline double numeracy_f1(const NormalizedAnswer& pred, const NormalizedAnswer& gold, int places = kDefaultRoundPlaces) {
  if (exact_match(pred, gold, places)) return 1.0;
  if (gold.numeric) {
    if (!pred.numeric || !numbers_equal(*pred.numeric, *gold.numeric, places)) return 0.0;
  }
  return bag_f1(pred.tokens, gold.tokens);
}

inline double numeracy_f1(std::string_view pred, std::string_view gold, int places = kDefaultRoundPlaces) {
  return numeracy_f1(normalize_answer(pred, places), normalize_answer(gold, places), places);
}

// Values that agree only after a x100 rescale, e.g. "4.6%" against "0.046".
inline bool percent_scale_mismatch(const NormalizedAnswer& pred, const NormalizedAnswer& gold,
                                   int places = kDefaultRoundPlaces) {
  if (!pred.numeric || !gold.numeric) return false;
  if (numbers_equal(*pred.numeric, *gold.numeric, places)) return false;
  return numbers_equal(*pred.numeric * 100.0, *gold.numeric, places) ||
         numbers_equal(*pred.numeric, *gold.numeric * 100.0, places);
}

struct Prediction {
  std::string example_id;
  std::string answer;
};

struct GoldAnswer {
  std::string example_id;
  std::string answer;
};

struct ExampleScore {
  std::string example_id;
  int em = 0;
  double f1 = 0.0;
  bool missing = false;
  bool scale_mismatch = false;
  bool multi_part = false;  // gold holds more than one number; single-value scoring may misjudge it
  friend bool operator==(const ExampleScore&, const ExampleScore&) = default;
};

struct EvalReport {
  double em = 0.0;
  double f1 = 0.0;
  std::vector<ExampleScore> per_example;
  std::size_t missing = 0;
};

// Scores every gold example; a gold example without prediction scores 0 and is flagged.
inline EvalReport evaluate_corpus(const std::vector<Prediction>& predictions, const std::vector<GoldAnswer>& golds,
                                  int places = kDefaultRoundPlaces) {
  std::unordered_map<std::string, const Prediction*> by_id;
  std::set<std::string_view> gold_ids;
  for (const auto& g : golds) gold_ids.insert(g.example_id);
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.example_id, &p).second) throw Error("duplicate prediction for '" + p.example_id + "'");
    if (!gold_ids.count(p.example_id)) throw Error("prediction for unknown example '" + p.example_id + "'");
  }
  EvalReport report;
  std::vector<double> f1_values;
  long em_sum = 0;
  for (const auto& g : golds) {
    ExampleScore s;
    s.example_id = g.example_id;
    NormalizedAnswer gold = normalize_answer(g.answer, places);
    s.multi_part = gold.numeric_tokens > 1;
    auto it = by_id.find(g.example_id);
    if (it == by_id.end()) {
      s.missing = true;
      ++report.missing;
    } else {
      NormalizedAnswer pred = normalize_answer(it->second->answer, places);
      s.em = exact_match(pred, gold, places);
      s.f1 = numeracy_f1(pred, gold, places);
      s.scale_mismatch = percent_scale_mismatch(pred, gold, places);
    }
    em_sum += s.em;
    f1_values.push_back(s.f1);
    report.per_example.push_back(std::move(s));
  }
  if (!golds.empty()) {
    // summing in sorted order keeps the mean independent of example order
    std::sort(f1_values.begin(), f1_values.end());
    double f1_sum = 0.0;
    for (double v : f1_values) f1_sum += v;
    report.em = static_cast<double>(em_sum) / static_cast<double>(golds.size());
    report.f1 = f1_sum / static_cast<double>(golds.size());
  }
  return report;
}

}  // namespace hiertt
