#pragma once

// Answer-type selection: pick the most probable answer type, then that type's
// best candidate. Equal type probabilities resolve to the program type.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "hiertt/error.hpp"

namespace hiertt {

enum class AnswerType { Program, Span };

inline std::string_view to_string(AnswerType t) { return t == AnswerType::Program ? "program" : "span"; }

inline std::optional<AnswerType> parse_answer_type(std::string_view s) {
  if (s == "program") return AnswerType::Program;
  if (s == "span") return AnswerType::Span;
  return std::nullopt;
}

struct AnswerCandidate {
  std::string answer;  // program text for the program type, a text span otherwise
  double p_answer_given_type = 1.0;
  friend bool operator==(const AnswerCandidate&, const AnswerCandidate&) = default;
};

struct AnswerDistribution {
  std::map<AnswerType, double> p_type;
  std::map<AnswerType, AnswerCandidate> candidates;
};

struct SelectedAnswer {
  AnswerType type = AnswerType::Program;
  std::string answer;
  friend bool operator==(const SelectedAnswer&, const SelectedAnswer&) = default;
};

inline SelectedAnswer select_answer(const AnswerDistribution& dist) {
  for (const auto& [type, p] : dist.p_type) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error("p_type(" + std::string(to_string(type)) + ") outside [0,1]");
    }
  }
  auto prob = [&](AnswerType t) {
    auto it = dist.p_type.find(t);
    return it == dist.p_type.end() ? 0.0 : it->second;
  };
  AnswerType chosen = prob(AnswerType::Span) > prob(AnswerType::Program) ? AnswerType::Span : AnswerType::Program;
  auto it = dist.candidates.find(chosen);
  if (it == dist.candidates.end()) {
    throw Error("no candidate for selected answer type '" + std::string(to_string(chosen)) + "'");
  }
  return {chosen, it->second.answer};
}

}  // namespace hiertt
