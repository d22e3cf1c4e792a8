// hiertt: batch tool over the hierarchical-table QA library.
//
//   hiertt ingest    --input <release dir|file|corpus> [--mapping m.json] --out corpus.jsonl
//   hiertt curate    --corpus c.jsonl --out kept.jsonl
//   hiertt stats     --corpus c.jsonl [--out report.json]
//   hiertt breakdown --corpus c.jsonl [--predictions p.jsonl] [--out report.json]
//   hiertt facts     --corpus c.jsonl --out facts.jsonl
//   hiertt retrieve  --corpus c.jsonl [--scorer lexical|oracle|external] [--n 10] --out retrieved.jsonl
//   hiertt execute   (--programs p.jsonl | --gold) [--corpus c.jsonl] --out predictions.jsonl
//   hiertt select    --candidates c.jsonl --out predictions.jsonl
//   hiertt evaluate  --corpus c.jsonl --predictions p.jsonl [--out report.json]
//
// Settings come from flags, then the JSON file named by HIERTT_CONFIG, then defaults.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hiertt/pipeline.hpp"

namespace {

using namespace hiertt;

struct Flags {
  std::string corpus;
  std::string scorer;
  std::string external_cmd;
  std::string external_addr;
  long n = 0;
  std::string tmpl;
  int round_dp = 0;
  std::string out;
  std::string report;
};

struct Options {
  CLI::Option* corpus = nullptr;
  CLI::Option* scorer = nullptr;
  CLI::Option* external_cmd = nullptr;
  CLI::Option* external_addr = nullptr;
  CLI::Option* n = nullptr;
  CLI::Option* tmpl = nullptr;
  CLI::Option* round_dp = nullptr;
};

void add_common(CLI::App* cmd, Flags& f, Options& o) {
  o.corpus = cmd->add_option("--corpus", f.corpus, "canonical corpus (JSONL)");
  o.scorer = cmd->add_option("--scorer", f.scorer, "lexical | oracle | external");
  o.external_cmd = cmd->add_option("--external-cmd", f.external_cmd, "scorer process command line");
  o.external_addr = cmd->add_option("--external-addr", f.external_addr, "scorer host:port");
  o.n = cmd->add_option("--n", f.n, "facts kept per question (default 10)");
  o.tmpl = cmd->add_option("--template", f.tmpl, "sentence pattern with {row_path} {col_path} {value}");
  o.round_dp = cmd->add_option("--round-dp", f.round_dp, "decimal places for numeric comparison (default 4)");
  cmd->add_option("--out", f.out, "output path");
  cmd->add_option("--report", f.report, "JSON report path");
}

PipelineConfig effective_config(const Flags& f, const Options& o) {
  PipelineConfig cfg;
  if (const char* path = std::getenv("HIERTT_CONFIG"); path && *path) {
    require_file(path, "config file");
    cfg.apply_json(read_json_file(path));
  }
  if (o.corpus->count()) cfg.corpus = f.corpus;
  if (o.scorer->count()) cfg.set_scorer(f.scorer);
  if (o.external_cmd->count()) cfg.external_cmd = f.external_cmd;
  if (o.external_addr->count()) cfg.external_addr = f.external_addr;
  if (o.n->count()) cfg.set_n(f.n);
  if (o.tmpl->count()) cfg.tmpl.pattern = f.tmpl;
  if (o.round_dp->count()) cfg.set_round_dp(f.round_dp);
  return cfg;
}

Corpus load(const PipelineConfig& cfg) {
  require_file(cfg.corpus, "corpus");
  return load_corpus(cfg.corpus).corpus;
}

void write_text_pair(const std::string& path, const CommandResult& r) {
  write_atomic(path, r.report.dump(2) + "\n");
  write_atomic(path + ".txt", r.text);
}

// Report commands: --out names the JSON report; the text copy goes next to it.
int finish_report(const CommandResult& r, const Flags& f) {
  std::cout << r.text;
  if (!f.out.empty()) write_text_pair(f.out, r);
  return r.exit_code;
}

// Artifact commands: --out names the artifact, --report the optional JSON report.
int finish_artifact(const CommandResult& r, const Flags& f, const std::string& artifact) {
  if (f.out.empty()) throw UsageError("--out is required");
  write_atomic(f.out, artifact);
  if (!f.report.empty()) write_text_pair(f.report, r);
  std::cout << r.text;
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical-table numerical QA toolkit"};
  app.require_subcommand(1);
  Flags flags;
  std::map<CLI::App*, Options> opts;

  std::string input, mapping_path, predictions, programs, candidates, retrieved;
  bool gold = false;
  CurationFilter filter;

  auto* ingest = app.add_subcommand("ingest", "convert a release (or re-read a corpus) into canonical JSONL");
  add_common(ingest, flags, opts[ingest]);
  ingest->add_option("--input", input, "release directory, release file or canonical corpus")->required();
  ingest->add_option("--mapping", mapping_path, "release field mapping (JSON)");

  auto* curate_cmd = app.add_subcommand("curate", "apply the document filter");
  add_common(curate_cmd, flags, opts[curate_cmd]);
  curate_cmd->add_option("--min-pages", filter.min_pages, "pages at least (default 1; skipped when unknown)");
  curate_cmd->add_option("--max-pages", filter.max_pages, "pages at most (default 4)");
  curate_cmd->add_option("--min-tables", filter.min_tables, "tables at least (default 2)");
  curate_cmd->add_option("--max-tables", filter.max_tables, "tables at most (default 6)");
  curate_cmd->add_option("--min-text-words", filter.min_text_words, "paragraph words at least (default 200)");
  curate_cmd->add_option("--min-numeric-fraction", filter.min_numeric_cell_fraction, "numeric share of filled data cells (default 0.3)");

  auto* stats = app.add_subcommand("stats", "corpus census and question composition");
  add_common(stats, flags, opts[stats]);

  auto* breakdown_cmd = app.add_subcommand("breakdown", "results by evidence coverage and step count");
  add_common(breakdown_cmd, flags, opts[breakdown_cmd]);
  breakdown_cmd->add_option("--predictions", predictions, "predictions (JSONL); counts only when absent");

  auto* facts = app.add_subcommand("facts", "dump linearized facts");
  add_common(facts, flags, opts[facts]);

  auto* retrieve = app.add_subcommand("retrieve", "rank facts and keep the top n per question");
  add_common(retrieve, flags, opts[retrieve]);

  auto* execute_cmd = app.add_subcommand("execute", "run programs into predictions");
  add_common(execute_cmd, flags, opts[execute_cmd]);
  execute_cmd->add_option("--programs", programs, "programs (JSONL {example_id, program_text})");
  execute_cmd->add_flag("--gold", gold, "run the corpus gold programs instead");
  execute_cmd->add_option("--retrieved", retrieved, "retrieved facts limiting gold span answers");

  auto* select = app.add_subcommand("select", "pick an answer per question from typed candidates");
  add_common(select, flags, opts[select]);
  select->add_option("--candidates", candidates, "candidates (JSONL)")->required();

  auto* evaluate = app.add_subcommand("evaluate", "score predictions with EM and numeracy F1");
  add_common(evaluate, flags, opts[evaluate]);
  evaluate->add_option("--predictions", predictions, "predictions (JSONL)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    PipelineConfig cfg = effective_config(flags, opts.at(app.get_subcommands().front()));
    if (*ingest) {
      require_file(input, "input");
      ReleaseMapping mapping;
      if (!mapping_path.empty()) {
        require_file(mapping_path, "mapping");
        mapping = ReleaseMapping::from_json(read_json_file(mapping_path));
      }
      IngestOutcome o = run_ingest(input, mapping);
      return finish_artifact(ingest_report(o, cfg), flags, serialize_corpus(o.corpus));
    }
    if (*curate_cmd) {
      try {
        filter.check();
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      Corpus corpus = load(cfg);
      CurationResult res = curate(corpus, filter);
      return finish_artifact(curate_report(res, filter, cfg), flags, serialize_corpus(res.kept));
    }
    if (*stats) return finish_report(stats_command(load(cfg), cfg), flags);
    if (*breakdown_cmd) {
      Corpus corpus = load(cfg);
      std::optional<PredictionSet> preds;
      if (!predictions.empty()) {
        require_file(predictions, "predictions");
        preds = read_predictions(predictions);
      }
      return finish_report(breakdown_command(corpus, preds ? &*preds : nullptr, cfg), flags);
    }
    if (*facts) {
      Corpus corpus = load(cfg);
      std::vector<json> records = fact_records(corpus, cfg.tmpl);
      CommandResult r;
      r.report = {{"config", cfg.to_json()}, {"facts", records.size()}};
      r.text = "# hiertt facts\n# config " + cfg.to_json().dump() + "\n";
      r.text += "facts                           " + std::to_string(records.size()) + "\n";
      return finish_artifact(r, flags, jsonl(records));
    }
    if (*retrieve) {
      Corpus corpus = load(cfg);
      RetrievalRun run = run_retrieval(corpus, cfg);
      std::vector<json> records;
      for (const auto& e : run.examples) records.push_back(to_json(e));
      return finish_artifact(retrieve_report(run, cfg), flags, jsonl(records));
    }
    if (*execute_cmd) {
      if (gold == !programs.empty()) throw UsageError("execute needs exactly one of --programs or --gold");
      std::optional<Corpus> corpus;
      if (!cfg.corpus.empty()) corpus = load(cfg);
      ExecuteRun run;
      if (gold) {
        if (!corpus) throw UsageError("--gold needs --corpus");
        std::optional<std::map<std::string, std::vector<std::string>>> kept;
        if (!retrieved.empty()) {
          require_file(retrieved, "retrieved facts");
          kept = read_retrieved(retrieved);
        }
        run = execute_gold(*corpus, cfg, kept ? &*kept : nullptr);
      } else {
        require_file(programs, "programs");
        run = execute_program_file(programs);
      }
      return finish_artifact(execute_report(run, corpus ? &*corpus : nullptr, cfg), flags, jsonl(run.predictions));
    }
    if (*select) {
      require_file(candidates, "candidates");
      SelectRun run = select_candidates(candidates);
      CommandResult r;
      json errors = json::array();
      for (const auto& e : run.errors) errors.push_back(to_json(e));
      r.report = {{"config", cfg.to_json()}, {"selected", run.predictions.size()}, {"errors", errors}};
      r.text = "# hiertt select\n# config " + cfg.to_json().dump() + "\n";
      r.text += "selected                        " + std::to_string(run.predictions.size()) + "\n";
      for (const auto& e : run.errors) {
        r.text += "error\tline " + std::to_string(e.line) + "\t" + e.example_id + "\t" + e.message + "\n";
      }
      r.exit_code = run.errors.empty() ? kExitOk : kExitData;
      return finish_artifact(r, flags, jsonl(run.predictions));
    }
    if (*evaluate) {
      Corpus corpus = load(cfg);
      require_file(predictions, "predictions");
      return finish_report(evaluate_command(corpus, read_predictions(predictions), cfg), flags);
    }
  } catch (const UsageError& e) {
    std::cerr << "hiertt: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "hiertt: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
