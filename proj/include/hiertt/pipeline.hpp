#pragma once

// Batch commands behind the hiertt tool. Each command returns a JSON report
// and a text rendering of it; both start with the effective configuration.
// Exit codes: 0 success, 1 data issues found while running, 2 usage or I/O.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <nlohmann/json.hpp>

#include "hiertt/answer.hpp"
#include "hiertt/breakdown.hpp"
#include "hiertt/corpus_io.hpp"
#include "hiertt/curation.hpp"
#include "hiertt/error.hpp"
#include "hiertt/external_scorer.hpp"
#include "hiertt/facts.hpp"
#include "hiertt/metrics.hpp"
#include "hiertt/program.hpp"
#include "hiertt/release.hpp"
#include "hiertt/retrieval.hpp"
#include "hiertt/stats.hpp"

namespace hiertt {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

// Raised for problems the caller must fix before a rerun (bad flags, unreadable files).
class UsageError : public Error {
 public:
  using Error::Error;
};

inline std::string_view to_string(ScorerKind k) {
  switch (k) {
    case ScorerKind::Lexical: return "lexical";
    case ScorerKind::Oracle: return "oracle";
    case ScorerKind::External: return "external";
  }
  return "?";
}

inline std::optional<ScorerKind> parse_scorer(std::string_view s) {
  if (s == "lexical") return ScorerKind::Lexical;
  if (s == "oracle") return ScorerKind::Oracle;
  if (s == "external") return ScorerKind::External;
  return std::nullopt;
}

struct PipelineConfig {
  std::string corpus;
  ScorerKind scorer = ScorerKind::Lexical;
  std::string external_cmd;
  std::string external_addr;
  std::size_t n = 10;
  SentenceTemplate tmpl;
  int round_dp = kDefaultRoundPlaces;
  Bm25Params bm25;
  double external_timeout_s = 30.0;

  // Output paths are left out so reports do not depend on where they are written.
  json to_json() const {
    return {{"corpus", corpus},
            {"scorer", std::string(to_string(scorer))},
            {"external_cmd", external_cmd},
            {"external_addr", external_addr},
            {"n", n},
            {"template",
             {{"pattern", tmpl.pattern},
              {"row_separator", tmpl.row_separator},
              {"col_separator", tmpl.col_separator},
              {"innermost_first", tmpl.innermost_first},
              {"include_caption", tmpl.include_caption}}},
            {"round_dp", round_dp},
            {"bm25", {{"k1", bm25.k1}, {"b", bm25.b}}},
            {"external_timeout_s", external_timeout_s}};
  }

  // Overlays the keys present in `j`; unknown keys are an error so typos surface.
  void apply_json(const json& j) {
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    static const std::set<std::string> known = {"corpus", "scorer", "external_cmd", "external_addr", "n",
                                                "template", "round_dp", "bm25", "external_timeout_s"};
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) throw UsageError("unknown config key '" + key + "'");
    }
    try {
      if (j.contains("corpus")) corpus = j["corpus"].get<std::string>();
      if (j.contains("scorer")) set_scorer(j["scorer"].get<std::string>());
      if (j.contains("external_cmd")) external_cmd = j["external_cmd"].get<std::string>();
      if (j.contains("external_addr")) external_addr = j["external_addr"].get<std::string>();
      if (j.contains("n")) set_n(j["n"].get<long>());
      if (j.contains("round_dp")) set_round_dp(j["round_dp"].get<int>());
      if (j.contains("external_timeout_s")) external_timeout_s = j["external_timeout_s"].get<double>();
      if (j.contains("template")) {
        const json& t = j["template"];
        if (t.is_string()) {
          tmpl.pattern = t.get<std::string>();
        } else {
          if (t.contains("pattern")) tmpl.pattern = t["pattern"].get<std::string>();
          if (t.contains("row_separator")) tmpl.row_separator = t["row_separator"].get<std::string>();
          if (t.contains("col_separator")) tmpl.col_separator = t["col_separator"].get<std::string>();
          if (t.contains("innermost_first")) tmpl.innermost_first = t["innermost_first"].get<bool>();
          if (t.contains("include_caption")) tmpl.include_caption = t["include_caption"].get<bool>();
        }
      }
      if (j.contains("bm25")) {
        if (j["bm25"].contains("k1")) bm25.k1 = j["bm25"]["k1"].get<double>();
        if (j["bm25"].contains("b")) bm25.b = j["bm25"]["b"].get<double>();
      }
    } catch (const json::exception& e) {
      throw UsageError(std::string("config value has the wrong type: ") + e.what());
    }
  }

  void set_scorer(const std::string& s) {
    auto k = parse_scorer(s);
    if (!k) throw UsageError("unknown scorer '" + s + "' (expected lexical, oracle or external)");
    scorer = *k;
  }
  void set_n(long v) {
    if (v < 1) throw UsageError("n must be at least 1");
    n = static_cast<std::size_t>(v);
  }
  void set_round_dp(int v) {
    if (v < 0 || v > 12) throw UsageError("round_dp must lie in [0,12]");
    round_dp = v;
  }
};

inline json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing ") + what + " path");
  std::error_code ec;
  if (!fs::exists(path, ec)) throw UsageError(std::string(what) + " not found: '" + path + "'");
}

// Writes through a sibling temp file and renames it into place.
inline void write_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw UsageError("write failed for '" + path.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw UsageError("cannot move output into '" + path.string() + "'");
  }
}

struct LineError {
  std::size_t line = 0;
  std::string example_id;
  std::string message;
  friend bool operator==(const LineError&, const LineError&) = default;
};

inline void sort_by_line(std::vector<LineError>& errors) {
  std::stable_sort(errors.begin(), errors.end(), [](const LineError& a, const LineError& b) { return a.line < b.line; });
}

inline json to_json(const LineError& e) { return {{"line", e.line}, {"example_id", e.example_id}, {"message", e.message}}; }

struct JsonLine {
  std::size_t line = 0;
  json value;
};

// Reads a JSONL file; lines that are not JSON objects become errors.
inline std::vector<JsonLine> read_jsonl(const fs::path& path, std::vector<LineError>& errors) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  std::vector<JsonLine> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      json v = json::parse(line);
      if (!v.is_object()) throw std::runtime_error("not an object");
      out.push_back({n, std::move(v)});
    } catch (const std::exception& e) {
      errors.push_back({n, "", std::string("unreadable line: ") + e.what()});
    }
  }
  return out;
}

inline std::string jsonl(const std::vector<json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out.push_back('\n');
  }
  return out;
}

namespace detail {

inline std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline void kv(std::string& out, std::string_view key, std::string_view value) {
  out += key;
  out.append(key.size() < 32 ? 32 - key.size() : 1, ' ');
  out += value;
  out.push_back('\n');
}

inline std::string header(std::string_view title, const PipelineConfig& cfg) {
  return "# hiertt " + std::string(title) + "\n# config " + cfg.to_json().dump() + "\n";
}

}  // namespace detail

struct CommandResult {
  int exit_code = kExitOk;
  json report;
  std::string text;
};

// ---------------------------------------------------------------- ingest

struct IngestOutcome {
  Corpus corpus;
  std::vector<RejectEntry> rejects;
  std::vector<RejectEntry> reports;
  std::size_t records = 0;
  bool canonical_input = false;
};

namespace detail {

inline Split split_for_file(const fs::path& file, const ReleaseMapping& m) {
  std::string name = file.filename().string();
  for (const auto& [split, f] : m.split_files) {
    if (f == name) return *parse_split(split);
  }
  std::string stem = to_lower_ascii(file.stem().string());
  if (stem.find("dev") != std::string::npos) return Split::Dev;
  if (stem.find("test") != std::string::npos) return Split::Test;
  return Split::Train;
}

inline bool looks_canonical(const fs::path& file) {
  std::ifstream in(file);
  std::string line;
  while (std::getline(in, line)) {
    std::string_view t = trim(line);
    if (t.empty()) continue;
    if (t.front() != '{') return false;
    try {
      json j = json::parse(t);
      return j.is_object() && j.contains("doc_id") && j.contains("examples");
    } catch (const json::parse_error&) {
      return false;
    }
  }
  return false;
}

}  // namespace detail

// `input` is a canonical corpus file, one release file, or a release directory
// holding the split files named by the mapping.
inline IngestOutcome run_ingest(const fs::path& input, const ReleaseMapping& mapping) {
  IngestOutcome out;
  if (fs::is_regular_file(input) && detail::looks_canonical(input)) {
    LoadedCorpus loaded = load_corpus(input);
    out.canonical_input = true;
    out.corpus = std::move(loaded.corpus);
    out.rejects = std::move(loaded.rejects);
    out.records = example_count(out.corpus);
    return out;
  }
  std::vector<ReleaseRecord> records;
  auto add_file = [&](const fs::path& file, Split split) {
    for (auto& r : read_release_file(file)) records.push_back({std::move(r), split});
  };
  if (fs::is_directory(input)) {
    bool any = false;
    // fixed split order keeps record order independent of map iteration
    for (Split s : {Split::Train, Split::Dev, Split::Test}) {
      auto it = mapping.split_files.find(std::string(to_string(s)));
      if (it == mapping.split_files.end()) continue;
      fs::path file = input / it->second;
      if (!fs::exists(file)) continue;
      any = true;
      add_file(file, s);
    }
    if (!any) throw UsageError("no split files found in '" + input.string() + "'");
  } else {
    add_file(input, detail::split_for_file(input, mapping));
  }
  ReleaseIngest ingested = ingest_release(records, mapping);
  out.corpus = std::move(ingested.corpus);
  out.rejects = std::move(ingested.rejects);
  out.reports = std::move(ingested.reports);
  out.records = ingested.records;
  return out;
}

inline CommandResult ingest_report(const IngestOutcome& o, const PipelineConfig& cfg) {
  CommandResult r;
  json rejects = json::array(), reports = json::array();
  for (const auto& e : o.rejects) rejects.push_back({{"subject", e.subject}, {"rule", e.rule}, {"detail", e.detail}});
  for (const auto& e : o.reports) reports.push_back({{"subject", e.subject}, {"rule", e.rule}, {"detail", e.detail}});
  r.report = {{"config", cfg.to_json()},
              {"canonical_input", o.canonical_input},
              {"records", o.records},
              {"documents", o.corpus.size()},
              {"examples", example_count(o.corpus)},
              {"rejects", rejects},
              {"program_reports", reports}};
  r.text = detail::header("ingest", cfg);
  detail::kv(r.text, "input records", std::to_string(o.records));
  detail::kv(r.text, "documents", std::to_string(o.corpus.size()));
  detail::kv(r.text, "examples", std::to_string(example_count(o.corpus)));
  detail::kv(r.text, "rejected items", std::to_string(o.rejects.size()));
  detail::kv(r.text, "unparsed gold programs", std::to_string(o.reports.size()));
  for (const auto& e : o.rejects) r.text += "reject\t" + e.line() + "\n";
  for (const auto& e : o.reports) r.text += "report\t" + e.line() + "\n";
  return r;
}

// ---------------------------------------------------------------- stats

inline CommandResult stats_command(const Corpus& corpus, const PipelineConfig& cfg) {
  StatsReport s = corpus_stats(corpus);
  CompositionReport c = question_composition(corpus);
  CommandResult r;
  r.report = {{"config", cfg.to_json()},
              {"stats",
               {{"examples", s.examples},
                {"documents", s.documents},
                {"train", s.train},
                {"dev", s.dev},
                {"test", s.test},
                {"tables", s.tables},
                {"avg_tables_per_doc", s.avg_tables_per_doc},
                {"avg_rows_per_table", s.avg_rows_per_table},
                {"avg_cols_per_table", s.avg_cols_per_table},
                {"avg_question_length", s.avg_question_length},
                {"avg_words_per_doc", s.avg_words_per_doc},
                {"avg_sentences_per_doc", s.avg_sentences_per_doc}}},
              {"composition",
               {{"text_only", c.text_only},
                {"table_only_single", c.table_only_single},
                {"table_only_multi", c.table_only_multi},
                {"table_text", c.table_text},
                {"table_text_multi_within", c.table_text_multi_within},
                {"mean_supporting_facts", c.mean_supporting_facts},
                {"program_examples", c.program_examples},
                {"unparsed_programs", c.unparsed_programs},
                {"steps_1", c.steps_1},
                {"steps_2", c.steps_2},
                {"steps_3", c.steps_3},
                {"steps_more", c.steps_more},
                {"mean_steps", c.mean_steps}}}};
  using detail::fixed4;
  using detail::kv;
  std::string& t = r.text;
  t = detail::header("stats", cfg);
  kv(t, "examples", std::to_string(s.examples));
  kv(t, "documents", std::to_string(s.documents));
  kv(t, "train / dev / test", std::to_string(s.train) + " / " + std::to_string(s.dev) + " / " + std::to_string(s.test));
  kv(t, "tables", std::to_string(s.tables));
  kv(t, "avg tables per document", fixed4(s.avg_tables_per_doc));
  kv(t, "avg rows per table", fixed4(s.avg_rows_per_table));
  kv(t, "avg columns per table", fixed4(s.avg_cols_per_table));
  kv(t, "avg question length", fixed4(s.avg_question_length));
  kv(t, "avg words per document", fixed4(s.avg_words_per_doc));
  kv(t, "avg sentences per document", fixed4(s.avg_sentences_per_doc));
  kv(t, "% text-only", fixed4(c.text_only));
  kv(t, "% table-only, one table", fixed4(c.table_only_single));
  kv(t, "% table-only, >=2 tables", fixed4(c.table_only_multi));
  kv(t, "% table-text", fixed4(c.table_text));
  kv(t, "% of table-text, >=2 tables", fixed4(c.table_text_multi_within));
  kv(t, "mean supporting facts", fixed4(c.mean_supporting_facts));
  kv(t, "program examples", std::to_string(c.program_examples));
  kv(t, "unparsed gold programs", std::to_string(c.unparsed_programs));
  kv(t, "% 1 step", fixed4(c.steps_1));
  kv(t, "% 2 steps", fixed4(c.steps_2));
  kv(t, "% 3 steps", fixed4(c.steps_3));
  kv(t, "% >3 steps", fixed4(c.steps_more));
  kv(t, "mean steps", fixed4(c.mean_steps));
  return r;
}

// ---------------------------------------------------------------- predictions

struct PredictionSet {
  std::vector<Prediction> predictions;
  std::vector<LineError> errors;
  std::size_t lines = 0;
  std::size_t executed = 0;
};

inline std::string execute_to_answer(std::string_view program_text) {
  return format_number(execute(parse_program(program_text)));
}

// Reads {example_id, answer_text | program_text} lines. Program text is run
// through the executor; lines that fail are reported and skipped.
inline PredictionSet read_predictions(const fs::path& path) {
  PredictionSet out;
  std::set<std::string> seen;
  for (const JsonLine& l : read_jsonl(path, out.errors)) {
    ++out.lines;
    const json& v = l.value;
    std::string id;
    if (v.contains("example_id") && v["example_id"].is_string()) id = v["example_id"].get<std::string>();
    if (id.empty()) {
      out.errors.push_back({l.line, "", "missing example_id"});
      continue;
    }
    if (!seen.insert(id).second) {
      out.errors.push_back({l.line, id, "duplicate prediction"});
      continue;
    }
    try {
      if (v.contains("program_text") && v["program_text"].is_string()) {
        out.predictions.push_back({id, execute_to_answer(v["program_text"].get<std::string>())});
        ++out.executed;
      } else if (v.contains("answer_text") && (v["answer_text"].is_string() || v["answer_text"].is_number())) {
        const json& a = v["answer_text"];
        out.predictions.push_back({id, a.is_string() ? a.get<std::string>() : format_number(a.get<double>())});
      } else {
        out.errors.push_back({l.line, id, "neither answer_text nor program_text"});
      }
    } catch (const Error& e) {
      out.errors.push_back({l.line, id, e.what()});
    }
  }
  sort_by_line(out.errors);
  return out;
}

inline std::vector<GoldAnswer> gold_answers(const Corpus& corpus) {
  std::vector<GoldAnswer> out;
  for (const auto& entry : corpus) {
    for (const auto& ex : entry.examples) out.push_back({ex.example_id, ex.gold_answer});
  }
  return out;
}

// ---------------------------------------------------------------- evaluate

inline json to_json(const ExampleScore& s) {
  return {{"example_id", s.example_id}, {"em", s.em},         {"f1", s.f1},
          {"missing", s.missing},       {"scale_mismatch", s.scale_mismatch}, {"multi_part", s.multi_part}};
}

inline CommandResult evaluate_command(const Corpus& corpus, const PredictionSet& preds, const PipelineConfig& cfg) {
  CommandResult r;
  json errors = json::array();
  for (const auto& e : preds.errors) errors.push_back(to_json(e));
  std::string& t = r.text;
  t = detail::header("evaluate", cfg);
  if (preds.lines == 0 && preds.errors.empty()) {
    r.report = {{"config", cfg.to_json()}, {"examples", 0}, {"per_example", json::array()}, {"errors", errors}};
    detail::kv(t, "examples", "0");
    return r;
  }
  std::set<std::string> known;
  for (const auto& g : gold_answers(corpus)) known.insert(g.example_id);
  std::vector<Prediction> usable;
  std::vector<LineError> line_errors = preds.errors;
  for (const auto& p : preds.predictions) {
    if (known.count(p.example_id)) {
      usable.push_back(p);
    } else {
      line_errors.push_back({0, p.example_id, "prediction for unknown example"});
      errors.push_back(to_json(line_errors.back()));
    }
  }
  EvalReport rep = evaluate_corpus(usable, gold_answers(corpus), cfg.round_dp);
  json per = json::array();
  std::size_t scale = 0, multi = 0;
  for (const auto& s : rep.per_example) {
    per.push_back(to_json(s));
    scale += s.scale_mismatch;
    multi += s.multi_part;
  }
  r.report = {{"config", cfg.to_json()},
              {"examples", rep.per_example.size()},
              {"em", rep.em},
              {"f1", rep.f1},
              {"missing", rep.missing},
              {"executed_programs", preds.executed},
              {"failed_lines", line_errors.size()},
              {"scale_mismatches", scale},
              {"multi_part_golds", multi},
              {"per_example", per},
              {"errors", errors}};
  detail::kv(t, "examples", std::to_string(rep.per_example.size()));
  detail::kv(t, "EM", detail::fixed4(rep.em));
  detail::kv(t, "F1", detail::fixed4(rep.f1));
  detail::kv(t, "missing predictions", std::to_string(rep.missing));
  detail::kv(t, "executed programs", std::to_string(preds.executed));
  detail::kv(t, "failed lines", std::to_string(line_errors.size()));
  detail::kv(t, "percent scale mismatches", std::to_string(scale));
  detail::kv(t, "multi-part golds", std::to_string(multi));
  for (const auto& e : line_errors) {
    t += "error\tline " + std::to_string(e.line) + "\t" + e.example_id + "\t" + e.message + "\n";
  }
  if (!line_errors.empty()) r.exit_code = kExitData;
  return r;
}

// ---------------------------------------------------------------- breakdown

inline CommandResult breakdown_command(const Corpus& corpus, const PredictionSet* preds, const PipelineConfig& cfg) {
  std::map<std::string, ExampleScore> scores;
  std::size_t failed = 0;
  if (preds) {
    std::set<std::string> known;
    for (const auto& g : gold_answers(corpus)) known.insert(g.example_id);
    std::vector<Prediction> usable;
    for (const auto& p : preds->predictions) {
      if (known.count(p.example_id)) {
        usable.push_back(p);
      } else {
        ++failed;
      }
    }
    failed += preds->errors.size();
    for (auto& s : evaluate_corpus(usable, gold_answers(corpus), cfg.round_dp).per_example) {
      scores.emplace(s.example_id, s);
    }
  }
  BreakdownReport b = breakdown(corpus, preds ? &scores : nullptr);
  CommandResult r;
  json strata = json::array();
  for (const auto& s : b.strata) {
    json j = {{"family", s.family}, {"label", s.label}, {"count", s.count}};
    if (s.em) j["em"] = *s.em;
    if (s.f1) j["f1"] = *s.f1;
    strata.push_back(j);
  }
  r.report = {{"config", cfg.to_json()},
              {"examples", b.examples},
              {"program_examples", b.program_examples},
              {"unparsed_programs", b.unparsed_programs},
              {"strata", strata}};
  if (b.overall_em) r.report["em"] = *b.overall_em;
  if (b.overall_f1) r.report["f1"] = *b.overall_f1;
  if (preds) r.report["failed_lines"] = failed;
  std::string& t = r.text;
  t = detail::header("breakdown", cfg);
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %-24s %8s %8s %8s\n", "family", "stratum", "count", "EM", "F1");
  t += line;
  for (const auto& s : b.strata) {
    std::string em = s.em ? detail::fixed4(*s.em) : "-";
    std::string f1 = s.f1 ? detail::fixed4(*s.f1) : "-";
    std::snprintf(line, sizeof line, "%-10s %-24s %8zu %8s %8s\n", s.family.c_str(), s.label.c_str(), s.count,
                  em.c_str(), f1.c_str());
    t += line;
  }
  std::snprintf(line, sizeof line, "%-10s %-24s %8zu %8s %8s\n", "overall", "all", b.examples,
                b.overall_em ? detail::fixed4(*b.overall_em).c_str() : "-",
                b.overall_f1 ? detail::fixed4(*b.overall_f1).c_str() : "-");
  t += line;
  detail::kv(t, "unparsed gold programs", std::to_string(b.unparsed_programs));
  if (failed > 0) r.exit_code = kExitData;
  return r;
}

// ---------------------------------------------------------------- retrieve

struct RetrievedExample {
  std::string example_id;
  std::string doc_id;
  std::size_t gold_size = 0;
  double recall = 0.0;
  std::vector<ScoredFact> selected;  // document order
  std::vector<std::string> texts;    // parallel to `selected`
};

// Scores every fact of the example's document and keeps the top n.
class Retriever {
 public:
  explicit Retriever(const PipelineConfig& cfg) : cfg_(cfg) {
    if (cfg.scorer != ScorerKind::External) return;
    auto timeout = std::chrono::milliseconds(static_cast<long>(cfg.external_timeout_s * 1000.0));
    if (!cfg.external_cmd.empty()) {
      external_.emplace(std::make_unique<ProcessEndpoint>(cfg.external_cmd), timeout);
    } else if (!cfg.external_addr.empty()) {
      external_.emplace(std::make_unique<TcpEndpoint>(cfg.external_addr), timeout);
    } else {
      throw UsageError("external scorer needs --external-cmd or --external-addr");
    }
  }

  std::vector<ScoredFact> score(const QAExample& ex, const std::vector<Fact>& facts) {
    switch (cfg_.scorer) {
      case ScorerKind::Lexical: return score_lexical(ex.question, facts, cfg_.bm25);
      case ScorerKind::Oracle: return score_oracle(ex, facts);
      case ScorerKind::External: return score_external(ex.question, facts, *external_);
    }
    throw Error("unknown scorer");
  }

  RetrievedExample retrieve(const QAExample& ex, const std::vector<Fact>& facts, std::size_t n) {
    std::vector<ScoredFact> scored = score(ex, facts);
    std::vector<Fact> top = select_top_n(scored, facts, n);
    std::map<std::string, const ScoredFact*> by_id;
    for (const auto& s : scored) by_id.emplace(s.fact_id, &s);
    RetrievedExample out;
    out.example_id = ex.example_id;
    out.doc_id = ex.doc_id;
    out.gold_size = std::set<std::string>(ex.gold_evidence.begin(), ex.gold_evidence.end()).size();
    out.recall = recall_at_n(top, ex.gold_evidence);
    for (const auto& f : top) {
      out.selected.push_back(*by_id.at(f.fact_id));
      out.texts.push_back(f.text);
    }
    return out;
  }

 private:
  PipelineConfig cfg_;
  std::optional<ExternalScorer> external_;
};

struct RetrievalRun {
  std::vector<RetrievedExample> examples;
  double mean_recall = 0.0;
};

inline RetrievalRun run_retrieval(const Corpus& corpus, const PipelineConfig& cfg) {
  Retriever retriever(cfg);
  RetrievalRun run;
  std::vector<double> recalls;
  for (const auto& entry : corpus) {
    std::vector<Fact> facts = enumerate_facts(entry.document, cfg.tmpl);
    for (const auto& ex : entry.examples) {
      run.examples.push_back(retriever.retrieve(ex, facts, cfg.n));
      recalls.push_back(run.examples.back().recall);
    }
  }
  std::sort(recalls.begin(), recalls.end());
  double sum = 0.0;
  for (double r : recalls) sum += r;
  run.mean_recall = recalls.empty() ? 0.0 : sum / static_cast<double>(recalls.size());
  return run;
}

inline json to_json(const RetrievedExample& r) {
  json facts = json::array();
  for (std::size_t i = 0; i < r.selected.size(); ++i) {
    facts.push_back({{"fact_id", r.selected[i].fact_id},
                     {"rank", r.selected[i].rank},
                     {"score", r.selected[i].score},
                     {"text", r.texts[i]}});
  }
  return {{"example_id", r.example_id}, {"doc_id", r.doc_id}, {"gold_size", r.gold_size},
          {"recall", r.recall},         {"facts", facts}};
}

inline CommandResult retrieve_report(const RetrievalRun& run, const PipelineConfig& cfg) {
  CommandResult r;
  std::size_t full = 0;
  for (const auto& e : run.examples) full += e.recall == 1.0;
  r.report = {{"config", cfg.to_json()},
              {"examples", run.examples.size()},
              {"n", cfg.n},
              {"mean_recall", run.mean_recall},
              {"full_recall_examples", full}};
  r.text = detail::header("retrieve", cfg);
  detail::kv(r.text, "examples", std::to_string(run.examples.size()));
  detail::kv(r.text, "n", std::to_string(cfg.n));
  detail::kv(r.text, "mean recall@n", detail::fixed4(run.mean_recall));
  detail::kv(r.text, "examples with full recall", std::to_string(full));
  return r;
}

// Reads a retrieved-facts file back: example id -> selected fact texts.
inline std::map<std::string, std::vector<std::string>> read_retrieved(const fs::path& path) {
  std::vector<LineError> errors;
  std::map<std::string, std::vector<std::string>> out;
  for (const JsonLine& l : read_jsonl(path, errors)) {
    auto& texts = out[l.value.value("example_id", "")];
    for (const auto& f : l.value.value("facts", json::array())) texts.push_back(f.value("text", ""));
  }
  if (!errors.empty()) throw UsageError("unreadable retrieved-facts file '" + path.string() + "'");
  return out;
}

// ---------------------------------------------------------------- execute

struct ExecuteRun {
  std::vector<json> predictions;  // {example_id, answer_text, program_text?}
  std::vector<LineError> errors;
  std::size_t inputs = 0;
};

// Executes {example_id, program_text} lines.
inline ExecuteRun execute_program_file(const fs::path& path) {
  ExecuteRun run;
  for (const JsonLine& l : read_jsonl(path, run.errors)) {
    ++run.inputs;
    std::string id = l.value.value("example_id", "");
    if (id.empty() || !l.value.contains("program_text") || !l.value["program_text"].is_string()) {
      run.errors.push_back({l.line, id, "expected example_id and program_text"});
      continue;
    }
    std::string program = l.value["program_text"].get<std::string>();
    try {
      run.predictions.push_back({{"example_id", id}, {"answer_text", execute_to_answer(program)}, {"program_text", program}});
    } catch (const Error& e) {
      run.errors.push_back({l.line, id, e.what()});
    }
  }
  sort_by_line(run.errors);
  return run;
}

// Runs the gold program of every program-type example. A span example is
// answered with its gold span when that span occurs in one of the facts
// available to it: the retrieved facts if given, else every document fact.
inline ExecuteRun execute_gold(const Corpus& corpus, const PipelineConfig& cfg,
                               const std::map<std::string, std::vector<std::string>>* retrieved) {
  ExecuteRun run;
  std::size_t index = 0;
  for (const auto& entry : corpus) {
    std::vector<std::string> doc_texts;
    if (!retrieved) {
      for (const auto& f : enumerate_facts(entry.document, cfg.tmpl)) doc_texts.push_back(f.text);
    }
    for (const auto& ex : entry.examples) {
      ++index;
      ++run.inputs;
      if (ex.answer_type == AnswerType::Program) {
        try {
          run.predictions.push_back(
              {{"example_id", ex.example_id}, {"answer_text", execute_to_answer(*ex.gold_program)}, {"program_text", *ex.gold_program}});
        } catch (const Error& e) {
          run.errors.push_back({index, ex.example_id, e.what()});
        }
        continue;
      }
      const std::vector<std::string>* texts = &doc_texts;
      if (retrieved) {
        auto it = retrieved->find(ex.example_id);
        static const std::vector<std::string> none;
        texts = it == retrieved->end() ? &none : &it->second;
      }
      std::string needle = to_lower_ascii(trim(ex.gold_answer));
      bool found = false;
      for (const auto& t : *texts) found = found || to_lower_ascii(t).find(needle) != std::string::npos;
      if (found) {
        run.predictions.push_back({{"example_id", ex.example_id}, {"answer_text", ex.gold_answer}});
      } else {
        run.errors.push_back({index, ex.example_id, "gold span not present in the available facts"});
      }
    }
  }
  return run;
}

inline CommandResult execute_report(const ExecuteRun& run, const Corpus* corpus, const PipelineConfig& cfg) {
  CommandResult r;
  json errors = json::array();
  for (const auto& e : run.errors) errors.push_back(to_json(e));
  r.report = {{"config", cfg.to_json()},
              {"inputs", run.inputs},
              {"executed", run.predictions.size()},
              {"failures", run.errors.size()},
              {"errors", errors}};
  std::string& t = r.text;
  t = detail::header("execute", cfg);
  detail::kv(t, "inputs", std::to_string(run.inputs));
  detail::kv(t, "answered", std::to_string(run.predictions.size()));
  detail::kv(t, "failures", std::to_string(run.errors.size()));
  for (const auto& e : run.errors) {
    t += "error\tline " + std::to_string(e.line) + "\t" + e.example_id + "\t" + e.message + "\n";
  }
  if (corpus && run.inputs > 0) {
    std::vector<Prediction> preds;
    std::map<std::string, std::string> programs;
    for (const auto& p : run.predictions) {
      preds.push_back({p["example_id"].get<std::string>(), p["answer_text"].get<std::string>()});
      if (p.contains("program_text")) programs[preds.back().example_id] = p["program_text"].get<std::string>();
    }
    std::map<std::string, const QAExample*> by_id;
    for (const auto& entry : *corpus) {
      for (const auto& ex : entry.examples) by_id.emplace(ex.example_id, &ex);
    }
    std::vector<GoldAnswer> golds;
    std::vector<Prediction> scored;
    for (const auto& p : preds) {
      auto it = by_id.find(p.example_id);
      if (it == by_id.end()) {
        r.exit_code = kExitData;
        t += "error\tunknown example\t" + p.example_id + "\n";
        continue;
      }
      golds.push_back({p.example_id, it->second->gold_answer});
      scored.push_back(p);
    }
    EvalReport rep = evaluate_corpus(scored, golds, cfg.round_dp);
    json disagreements = json::array();
    std::size_t agree = 0;
    for (std::size_t i = 0; i < rep.per_example.size(); ++i) {
      const ExampleScore& s = rep.per_example[i];
      agree += s.em;
      if (s.em) continue;
      json d = {{"example_id", s.example_id}, {"gold", golds[i].answer}, {"predicted", scored[i].answer}, {"f1", s.f1}};
      if (programs.count(s.example_id)) d["program_text"] = programs[s.example_id];
      disagreements.push_back(d);
      t += "disagree\t" + s.example_id + "\tgold=" + golds[i].answer + "\tpredicted=" + scored[i].answer + "\n";
    }
    double rate = rep.per_example.empty() ? 0.0 : static_cast<double>(agree) / rep.per_example.size();
    r.report["scored"] = rep.per_example.size();
    r.report["em"] = rep.em;
    r.report["f1"] = rep.f1;
    r.report["agreement_rate"] = rate;
    r.report["disagreements"] = disagreements;
    detail::kv(t, "scored against gold", std::to_string(rep.per_example.size()));
    detail::kv(t, "EM", detail::fixed4(rep.em));
    detail::kv(t, "F1", detail::fixed4(rep.f1));
    detail::kv(t, "agreement rate", detail::fixed4(rate));
  }
  if (!run.errors.empty()) r.exit_code = kExitData;
  return r;
}

// ---------------------------------------------------------------- select

struct SelectRun {
  std::vector<json> predictions;
  std::vector<LineError> errors;
};

// Candidate lines: {example_id, p_type: {program, span}, candidates: {program|span: {answer, p}}}.
inline SelectRun select_candidates(const fs::path& path) {
  SelectRun run;
  for (const JsonLine& l : read_jsonl(path, run.errors)) {
    std::string id = l.value.value("example_id", "");
    try {
      if (id.empty()) throw Error("missing example_id");
      AnswerDistribution dist;
      for (const auto& [k, v] : l.value.at("p_type").items()) {
        auto type = parse_answer_type(k);
        if (!type) throw Error("unknown answer type '" + k + "'");
        dist.p_type[*type] = v.get<double>();
      }
      for (const auto& [k, v] : l.value.at("candidates").items()) {
        auto type = parse_answer_type(k);
        if (!type) throw Error("unknown answer type '" + k + "'");
        dist.candidates[*type] = {v.at("answer").get<std::string>(), v.value("p", 1.0)};
      }
      SelectedAnswer s = select_answer(dist);
      if (s.type == AnswerType::Program) {
        run.predictions.push_back({{"example_id", id}, {"program_text", s.answer}});
      } else {
        run.predictions.push_back({{"example_id", id}, {"answer_text", s.answer}});
      }
    } catch (const json::exception& e) {
      run.errors.push_back({l.line, id, std::string("malformed candidates: ") + e.what()});
    } catch (const Error& e) {
      run.errors.push_back({l.line, id, e.what()});
    }
  }
  sort_by_line(run.errors);
  return run;
}

// ---------------------------------------------------------------- facts

inline std::vector<json> fact_records(const Corpus& corpus, const SentenceTemplate& tmpl) {
  std::vector<json> out;
  for (const auto& entry : corpus) {
    for (const auto& f : enumerate_facts(entry.document, tmpl)) {
      json j = {{"fact_id", f.fact_id},
                {"doc_id", entry.document.doc_id},
                {"doc_order", f.doc_order},
                {"provenance", std::string(to_string(f.provenance))},
                {"text", f.text}};
      if (f.table_id) j["table_id"] = *f.table_id;
      out.push_back(j);
    }
  }
  return out;
}

// ---------------------------------------------------------------- curate

inline CommandResult curate_report(const CurationResult& res, const CurationFilter& f, const PipelineConfig& cfg) {
  CommandResult r;
  json rejects = json::array();
  std::map<std::string, std::size_t> by_rule;
  for (const auto& e : res.rejects) {
    rejects.push_back({{"subject", e.subject}, {"rule", e.rule}});
    ++by_rule[e.rule];
  }
  r.report = {{"config", cfg.to_json()},
              {"filter",
               {{"min_pages", f.min_pages},
                {"max_pages", f.max_pages},
                {"min_tables", f.min_tables},
                {"max_tables", f.max_tables},
                {"min_text_words", f.min_text_words},
                {"min_numeric_cell_fraction", f.min_numeric_cell_fraction}}},
              {"kept_documents", res.kept.size()},
              {"kept_examples", example_count(res.kept)},
              {"rejected_documents", res.rejects.size()},
              {"rejects", rejects}};
  r.text = detail::header("curate", cfg);
  detail::kv(r.text, "kept documents", std::to_string(res.kept.size()));
  detail::kv(r.text, "kept examples", std::to_string(example_count(res.kept)));
  detail::kv(r.text, "rejected documents", std::to_string(res.rejects.size()));
  for (const auto& [rule, n] : by_rule) detail::kv(r.text, "  " + rule, std::to_string(n));
  return r;
}

}  // namespace hiertt
