#pragma once

// Stratified results: supporting-fact coverage classes and reasoning-step
// buckets, plus the corpus-level question composition they summarize.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hiertt/document.hpp"
#include "hiertt/error.hpp"
#include "hiertt/facts.hpp"
#include "hiertt/metrics.hpp"
#include "hiertt/program.hpp"

namespace hiertt {

enum class Coverage { TextOnly, TableOnly, TableOnlyMultiTable, TableText, TableTextMultiTable };

inline std::string_view to_string(Coverage c) {
  switch (c) {
    case Coverage::TextOnly: return "text-only";
    case Coverage::TableOnly: return "table-only";
    case Coverage::TableOnlyMultiTable: return "table-only >=2 tables";
    case Coverage::TableText: return "table-text";
    case Coverage::TableTextMultiTable: return "table-text >=2 tables";
  }
  return "?";
}

// Fact lookup for one document.
class FactIndex {
 public:
  explicit FactIndex(const Document& doc) : facts_(enumerate_facts(doc)) {
    for (std::size_t i = 0; i < facts_.size(); ++i) by_id_.emplace(facts_[i].fact_id, i);
  }

  const Fact& at(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw DanglingEvidence(id);
    return facts_[it->second];
  }
  bool contains(const std::string& id) const { return by_id_.count(id) > 0; }
  const std::vector<Fact>& facts() const { return facts_; }

 private:
  std::vector<Fact> facts_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Finest class of the example. An example without evidence counts as text-only.
inline Coverage classify_coverage(const QAExample& example, const FactIndex& facts) {
  bool has_paragraph = false;
  std::set<std::string> tables;
  for (const auto& id : example.gold_evidence) {
    const Fact& f = facts.at(id);
    if (f.provenance == Provenance::Paragraph) {
      has_paragraph = true;
    } else {
      tables.insert(f.table_id.value_or(""));
    }
  }
  if (tables.empty()) return Coverage::TextOnly;
  bool multi = tables.size() >= 2;
  if (!has_paragraph) return multi ? Coverage::TableOnlyMultiTable : Coverage::TableOnly;
  return multi ? Coverage::TableTextMultiTable : Coverage::TableText;
}

inline Coverage classify_coverage(const QAExample& example, const Document& doc) {
  return classify_coverage(example, FactIndex(doc));
}

inline std::string step_bucket(std::size_t steps) {
  return steps > 3 ? ">3" : std::to_string(steps);
}

struct Stratum {
  std::string family;  // "coverage" or "steps"
  std::string label;
  std::size_t count = 0;
  std::optional<double> em;
  std::optional<double> f1;
  friend bool operator==(const Stratum&, const Stratum&) = default;
};

struct BreakdownReport {
  std::vector<Stratum> strata;
  std::size_t examples = 0;
  std::size_t program_examples = 0;
  std::size_t unparsed_programs = 0;  // program-type golds the DSL rejects; not bucketed
  std::optional<double> overall_em;
  std::optional<double> overall_f1;
};

// Example labels for both families. Coverage subclasses also count toward
// their parent, as in the usual presentation.
struct ExampleStrata {
  std::vector<std::string> coverage;
  std::optional<std::string> steps;
};

inline ExampleStrata strata_of(const QAExample& example, const FactIndex& facts) {
  ExampleStrata out;
  Coverage c = classify_coverage(example, facts);
  switch (c) {
    case Coverage::TextOnly: out.coverage = {"text-only"}; break;
    case Coverage::TableOnly: out.coverage = {"table-only"}; break;
    case Coverage::TableOnlyMultiTable: out.coverage = {"table-only", "table-only >=2 tables"}; break;
    case Coverage::TableText: out.coverage = {"table-text"}; break;
    case Coverage::TableTextMultiTable: out.coverage = {"table-text", "table-text >=2 tables"}; break;
  }
  if (example.answer_type == AnswerType::Program && example.gold_program) {
    try {
      out.steps = step_bucket(count_steps(parse_program(*example.gold_program)));
    } catch (const ProgramParseError&) {
    }
  }
  return out;
}

// `scores` maps example id to its (em, f1); pass nullptr for a counts-only report.
inline BreakdownReport breakdown(const Corpus& corpus, const std::map<std::string, ExampleScore>* scores) {
  static const std::vector<std::string> coverage_labels = {"text-only", "table-only", "table-only >=2 tables",
                                                           "table-text", "table-text >=2 tables"};
  static const std::vector<std::string> step_labels = {"1", "2", "3", ">3"};
  struct Acc {
    std::size_t count = 0;
    long em = 0;
    std::vector<double> f1;
  };
  std::map<std::string, Acc> coverage;
  std::map<std::string, Acc> steps;
  BreakdownReport report;
  Acc overall;
  auto add = [&](Acc& acc, const std::string& id) {
    ++acc.count;
    if (!scores) return;
    auto it = scores->find(id);
    if (it == scores->end()) {
      acc.f1.push_back(0.0);
      return;
    }
    acc.em += it->second.em;
    acc.f1.push_back(it->second.f1);
  };
  for (const auto& entry : corpus) {
    FactIndex facts(entry.document);
    for (const auto& ex : entry.examples) {
      ++report.examples;
      add(overall, ex.example_id);
      ExampleStrata s = strata_of(ex, facts);
      for (const auto& label : s.coverage) add(coverage[label], ex.example_id);
      if (ex.answer_type == AnswerType::Program) {
        ++report.program_examples;
        if (s.steps) {
          add(steps[*s.steps], ex.example_id);
        } else {
          ++report.unparsed_programs;
        }
      }
    }
  }
  auto mean = [](const Acc& a) {
    std::vector<double> v = a.f1;
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    return a.count == 0 ? 0.0 : sum / static_cast<double>(a.count);
  };
  auto emit = [&](const char* family, const std::vector<std::string>& labels, std::map<std::string, Acc>& accs) {
    for (const auto& label : labels) {
      const Acc& a = accs[label];
      Stratum s{family, label, a.count, std::nullopt, std::nullopt};
      if (scores) {
        s.em = a.count == 0 ? 0.0 : static_cast<double>(a.em) / static_cast<double>(a.count);
        s.f1 = mean(a);
      }
      report.strata.push_back(std::move(s));
    }
  };
  emit("coverage", coverage_labels, coverage);
  emit("steps", step_labels, steps);
  if (scores) {
    report.overall_em = overall.count == 0 ? 0.0 : static_cast<double>(overall.em) / static_cast<double>(overall.count);
    report.overall_f1 = mean(overall);
  }
  return report;
}

// Question composition of a corpus, in percent.
struct CompositionReport {
  std::size_t examples = 0;
  double text_only = 0.0;
  double table_only_single = 0.0;  // exactly one table, no paragraphs
  double table_only_multi = 0.0;
  double table_text = 0.0;
  double table_text_multi_within = 0.0;  // share of table-text questions needing >= 2 tables
  double mean_supporting_facts = 0.0;
  std::size_t program_examples = 0;
  std::size_t unparsed_programs = 0;
  double steps_1 = 0.0;
  double steps_2 = 0.0;
  double steps_3 = 0.0;
  double steps_more = 0.0;
  double mean_steps = 0.0;
};

inline CompositionReport question_composition(const Corpus& corpus) {
  CompositionReport r;
  std::size_t text_only = 0, table_single = 0, table_multi = 0, mixed = 0, mixed_multi = 0, evidence = 0;
  std::size_t bucket[4] = {0, 0, 0, 0};
  std::size_t step_total = 0;
  std::size_t parsed = 0;
  for (const auto& entry : corpus) {
    FactIndex facts(entry.document);
    for (const auto& ex : entry.examples) {
      ++r.examples;
      evidence += ex.gold_evidence.size();
      switch (classify_coverage(ex, facts)) {
        case Coverage::TextOnly: ++text_only; break;
        case Coverage::TableOnly: ++table_single; break;
        case Coverage::TableOnlyMultiTable: ++table_multi; break;
        case Coverage::TableText: ++mixed; break;
        case Coverage::TableTextMultiTable: ++mixed; ++mixed_multi; break;
      }
      if (ex.answer_type != AnswerType::Program || !ex.gold_program) continue;
      ++r.program_examples;
      try {
        std::size_t n = count_steps(parse_program(*ex.gold_program));
        ++parsed;
        step_total += n;
        ++bucket[n > 3 ? 3 : n - 1];
      } catch (const ProgramParseError&) {
        ++r.unparsed_programs;
      }
    }
  }
  auto pct = [](std::size_t part, std::size_t whole) {
    return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
  };
  r.text_only = pct(text_only, r.examples);
  r.table_only_single = pct(table_single, r.examples);
  r.table_only_multi = pct(table_multi, r.examples);
  r.table_text = pct(mixed, r.examples);
  r.table_text_multi_within = pct(mixed_multi, mixed);
  r.mean_supporting_facts = r.examples == 0 ? 0.0 : static_cast<double>(evidence) / static_cast<double>(r.examples);
  r.steps_1 = pct(bucket[0], parsed);
  r.steps_2 = pct(bucket[1], parsed);
  r.steps_3 = pct(bucket[2], parsed);
  r.steps_more = pct(bucket[3], parsed);
  r.mean_steps = parsed == 0 ? 0.0 : static_cast<double>(step_total) / static_cast<double>(parsed);
  return r;
}

}  // namespace hiertt
