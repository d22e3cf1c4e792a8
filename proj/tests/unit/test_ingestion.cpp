#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>
#include <string>

#include "hiertt/corpus_io.hpp"
#include "hiertt/curation.hpp"
#include "hiertt/pipeline.hpp"
#include "hiertt/release.hpp"
#include "hiertt/stats.hpp"
#include "../support/synthetic.hpp"
#include "../support/test_util.hpp"

using namespace hiertt;

namespace {

const std::string kData = HIERTT_TEST_DATA;

json small_record() {
  return json::parse(R"j({
    "doc_id": "d1",
    "paragraphs": ["Sales rose. Costs fell."],
    "tables": [{"table_id": "t0",
                "row_tree": {"label": "", "children": [{"label": "A", "children": []}, {"label": "B", "children": []}]},
                "col_tree": {"label": "", "children": [{"label": "2020", "children": []}, {"label": "2019", "children": []}]},
                "cells": [["1", "2"], ["3", "4"]]}],
    "examples": [{"example_id": "q1", "question": "What is A in 2020?", "answer_type": "program",
                  "gold_answer": "1", "gold_program": "add(1, 0)", "gold_evidence": ["d1/t0:0:0"], "split": "train"}]
  })j");
}

LoadedCorpus parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_corpus(in);
}

std::vector<ReleaseRecord> release_records(std::vector<json> records) {
  std::vector<ReleaseRecord> out;
  for (auto& r : records) out.push_back({std::move(r), Split::Train});
  return out;
}

json release_record(const std::string& uid) {
  return json{{"uid", uid},
              {"paragraphs", {"Revenue grew. Margins held."}},
              {"tables", {"<table><tr><td></td><td>2020</td></tr><tr><td>Revenue</td><td>10</td></tr>"
                          "<tr><td>Cost</td><td>4</td></tr></table>"}},
              {"qa",
               {{"question", "What is revenue less cost?"},
                {"answer", 6},
                {"program", "subtract(10, 4)"},
                {"text_evidence", json::array()},
                {"table_evidence", {"0-1-1", "0-2-1"}},
                {"question_type", "arithmetic"}}}};
}

bool has_reject(const std::vector<RejectEntry>& rejects, const std::string& subject, const std::string& rule) {
  for (const auto& r : rejects) {
    if (r.subject == subject && r.rule == rule) return true;
  }
  return false;
}

}  // namespace

TEST(CorpusIo, SmallRecordRoundTrips) {
  ParsedRecord p = parse_document(small_record());
  ASSERT_EQ(p.entry.examples.size(), 1u);
  EXPECT_EQ(p.entry.document.tables[0].cells[1][1].raw, "4");
  json again = serialize_entry(p.entry);
  ParsedRecord q = parse_document(again);
  EXPECT_EQ(serialize_entry(q.entry), again);
}

TEST(CorpusIo, FixtureIsIdempotent) {
  std::string text = testutil::read_file(kData + "/fixture.jsonl");
  LoadedCorpus loaded = parse_text(text);
  EXPECT_EQ(loaded.corpus.size(), 3u);
  EXPECT_EQ(example_count(loaded.corpus), 16u);
  EXPECT_EQ(serialize_corpus(loaded.corpus), text);
}

TEST(CorpusIo, ZeroTablesIsSchemaError) {
  json r = small_record();
  r["tables"] = json::array();
  r["examples"][0]["gold_evidence"] = json::array();
  try {
    parse_document(r);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), "tables");
  }
}

TEST(CorpusIo, DanglingEvidenceNamesTheId) {
  json r = small_record();
  r["examples"][0]["gold_evidence"] = {"d1/t0:5:0"};
  try {
    parse_document(r);
    FAIL() << "expected DanglingEvidence";
  } catch (const DanglingEvidence& e) {
    EXPECT_EQ(e.id(), "d1/t0:5:0");
  }
  r["examples"][0]["gold_evidence"] = {"d1/para:0:2"};
  EXPECT_THROW(parse_document(r), DanglingEvidence);
  r["examples"][0]["gold_evidence"] = {"d1/para:0:1"};
  EXPECT_NO_THROW(parse_document(r));
}

TEST(CorpusIo, DuplicateIdsRejected) {
  json r = small_record();
  r["examples"].push_back(r["examples"][0]);
  EXPECT_THROW(parse_document(r), SchemaError);

  std::string line = small_record().dump();
  try {
    parse_text(line + "\n" + line + "\n");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(e.field().find("line 2"), std::string::npos);
  }
}

TEST(CorpusIo, FieldErrors) {
  json r = small_record();
  r["examples"][0]["gold_program"] = nullptr;
  EXPECT_THROW(parse_document(r), SchemaError);
  r = small_record();
  r["examples"][0]["split"] = "validation";
  EXPECT_THROW(parse_document(r), SchemaError);
  r = small_record();
  r["examples"][0]["answer_type"] = "span";
  r["examples"][0]["gold_program"] = nullptr;
  r["examples"][0]["gold_answer"] = "  ";
  EXPECT_THROW(parse_document(r), SchemaError);
  try {
    parse_text("\n{not json\n");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), "line 2");
  }
}

TEST(CorpusIo, InvalidTableDroppedAndLogged) {
  json r = small_record();
  json bad = r["tables"][0];
  bad["table_id"] = "t1";
  bad["cells"][1] = {"3"};
  r["tables"].push_back(bad);
  ParsedRecord p = parse_document(r);
  EXPECT_EQ(p.entry.document.tables.size(), 1u);
  ASSERT_EQ(p.rejected_tables.size(), 1u);
  EXPECT_EQ(p.rejected_tables[0].subject, "d1/t1");
  EXPECT_EQ(p.rejected_tables[0].rule, "invalid_table");
  r["examples"][0]["gold_evidence"] = {"d1/t1:0:0"};
  EXPECT_THROW(parse_document(r), DanglingEvidence);
}

TEST(Release, FixtureDirectoryMatchesCanonicalFixture) {
  IngestOutcome o = run_ingest(kData + "/release", ReleaseMapping{});
  EXPECT_FALSE(o.canonical_input);
  EXPECT_EQ(o.records, 16u);
  EXPECT_TRUE(o.rejects.empty());
  EXPECT_EQ(serialize_corpus(o.corpus), testutil::read_file(kData + "/fixture.jsonl"));
}

TEST(Release, CanonicalInputPassesThrough) {
  IngestOutcome o = run_ingest(kData + "/fixture.jsonl", ReleaseMapping{});
  EXPECT_TRUE(o.canonical_input);
  EXPECT_EQ(serialize_corpus(o.corpus), testutil::read_file(kData + "/fixture.jsonl"));
}

TEST(Release, EvidenceResolvesThroughFoldedColumns) {
  ReleaseIngest r = ingest_release(release_records({release_record("a")}), ReleaseMapping{});
  ASSERT_EQ(r.corpus.size(), 1u);
  const auto& entry = r.corpus[0];
  const std::string& doc = entry.document.doc_id;
  EXPECT_EQ(entry.examples[0].gold_evidence, (std::vector<std::string>{doc + "/t0:0:0", doc + "/t0:1:0"}));
  EXPECT_EQ(entry.examples[0].gold_program, "subtract(10,4)");
  EXPECT_EQ(entry.examples[0].gold_answer, "6");

  // "$" sits in its own source column and folds into the value column
  json rec = release_record("b");
  rec["tables"] = {"<table><tr><td></td><td colspan=2>2021</td></tr><tr><td>Income</td><td>$</td><td>120</td></tr></table>"};
  rec["qa"]["program"] = "add(120, 0)";
  rec["qa"]["table_evidence"] = {"0-1-2"};
  r = ingest_release(release_records({rec}), ReleaseMapping{});
  ASSERT_EQ(r.corpus.size(), 1u);
  EXPECT_EQ(r.corpus[0].examples[0].gold_evidence[0], r.corpus[0].document.doc_id + "/t0:0:0");
}

TEST(Release, TextEvidenceExpandsToSentences) {
  json rec = release_record("a");
  rec["qa"]["text_evidence"] = {0};
  rec["qa"]["table_evidence"] = json::array();
  ReleaseIngest r = ingest_release(release_records({rec}), ReleaseMapping{});
  const std::string& doc = r.corpus[0].document.doc_id;
  EXPECT_EQ(r.corpus[0].examples[0].gold_evidence,
            (std::vector<std::string>{doc + "/para:0:0", doc + "/para:0:1"}));
}

TEST(Release, RejectRules) {
  json dup = release_record("a");
  json no_program = release_record("np");
  no_program["qa"]["program"] = "";
  json empty_span = release_record("es");
  empty_span["qa"]["question_type"] = "span_selection";
  empty_span["qa"]["answer"] = " ";
  json dangling = release_record("dg");
  dangling["qa"]["table_evidence"] = {"0-9-9"};
  json dangling_text = release_record("dt");
  dangling_text["qa"]["text_evidence"] = {4};
  json bad_program = release_record("bp");
  bad_program["qa"]["program"] = "subtract(10, 4";
  json no_tables = release_record("nt");
  no_tables["tables"] = {"<table><tr><td><table><tr><td>1</td></tr></table></td></tr></table>"};

  ReleaseIngest r = ingest_release(
      release_records({release_record("a"), dup, no_program, empty_span, dangling, dangling_text, bad_program, no_tables}),
      ReleaseMapping{});
  EXPECT_TRUE(has_reject(r.rejects, "a", "duplicate_example"));
  EXPECT_TRUE(has_reject(r.rejects, "np", "missing_program"));
  EXPECT_TRUE(has_reject(r.rejects, "es", "empty_span_answer"));
  EXPECT_TRUE(has_reject(r.rejects, "dg", "dangling_evidence"));
  EXPECT_TRUE(has_reject(r.rejects, "dt", "dangling_evidence"));
  bool no_tables_logged = false, table_logged = false;
  for (const auto& e : r.rejects) {
    no_tables_logged = no_tables_logged || e.rule == "no_tables";
    table_logged = table_logged || e.rule == "table_rejected";
  }
  EXPECT_TRUE(no_tables_logged);
  EXPECT_TRUE(table_logged);
  ASSERT_EQ(r.reports.size(), 1u);
  EXPECT_EQ(r.reports[0].subject, "bp");
  EXPECT_EQ(r.reports[0].rule, "program_parse");

  ASSERT_EQ(r.corpus.size(), 1u);
  std::set<std::string> kept;
  for (const auto& e : r.corpus[0].examples) kept.insert(e.example_id);
  EXPECT_EQ(kept, (std::set<std::string>{"a", "bp"}));
  for (const auto& e : r.corpus[0].examples) {
    if (e.example_id == "bp") {
      EXPECT_EQ(e.gold_program, "subtract(10, 4");
    }
  }
}

TEST(Release, SameContentSharesADocument) {
  json other = release_record("b");
  other["paragraphs"] = {"Different text."};
  ReleaseIngest r = ingest_release(release_records({release_record("a"), release_record("c"), other}), ReleaseMapping{});
  ASSERT_EQ(r.corpus.size(), 2u);
  std::size_t examples = r.corpus[0].examples.size() + r.corpus[1].examples.size();
  EXPECT_EQ(examples, 3u);
  EXPECT_NE(r.corpus[0].document.doc_id, r.corpus[1].document.doc_id);
}

TEST(Release, MappingValidation) {
  json m = json::parse(testutil::read_file(std::string(HIERTT_SOURCE_DIR) + "/mapping/multihiertt.json"));
  ReleaseMapping loaded = ReleaseMapping::from_json(m);
  ReleaseMapping defaults;
  EXPECT_EQ(loaded.question, defaults.question);
  EXPECT_EQ(loaded.table_evidence, defaults.table_evidence);
  EXPECT_EQ(loaded.answer_type_values, defaults.answer_type_values);
  EXPECT_EQ(loaded.split_files, defaults.split_files);
  EXPECT_FALSE(loaded.doc_id);

  json partial = {{"question", "q.text"}};
  EXPECT_EQ(ReleaseMapping::from_json(partial).question, "q.text");
  EXPECT_EQ(ReleaseMapping::from_json(partial).answer, defaults.answer);
  EXPECT_THROW(ReleaseMapping::from_json({{"question", 3}}), SchemaError);
  EXPECT_THROW(ReleaseMapping::from_json({{"answer_type_values", {{"arithmetic", "number"}}}}), SchemaError);
  EXPECT_THROW(ReleaseMapping::from_json({{"splits", {{"validation", "val.json"}}}}), SchemaError);
}

TEST(Curation, SevenTablesRejectedAsMaxTables) {
  ParsedRecord p = parse_document(small_record());
  Document& doc = p.entry.document;
  HierTable t = doc.tables[0];
  for (int i = 1; i < 7; ++i) {
    t.table_id = "t" + std::to_string(i);
    doc.tables.push_back(t);
  }
  std::string words;
  for (int i = 0; i < 250; ++i) words += "word ";
  doc.paragraphs.push_back(words);
  CurationFilter f;
  EXPECT_EQ(first_violation(doc, f), "max_tables");
  CurationResult r = curate({p.entry}, f);
  EXPECT_TRUE(r.kept.empty());
  ASSERT_EQ(r.rejects.size(), 1u);
  EXPECT_EQ(r.rejects[0].subject, "d1");
  EXPECT_EQ(r.rejects[0].rule, "max_tables");

  doc.tables.resize(6);
  EXPECT_EQ(first_violation(doc, f), "");
  doc.source_pages = 5;
  EXPECT_EQ(first_violation(doc, f), "max_pages");
  doc.source_pages = 2;
  EXPECT_EQ(curate({p.entry}, f).kept.size(), 1u);
}

TEST(Curation, EmptyCorpusAndBadFilter) {
  CurationResult r = curate({}, CurationFilter{});
  EXPECT_TRUE(r.kept.empty());
  EXPECT_TRUE(r.rejects.empty());
  CurationFilter bad;
  bad.min_tables = 5;
  bad.max_tables = 2;
  EXPECT_THROW(curate({}, bad), Error);
}

// Kept set must equal an independently computed predicate under random filters.
TEST(Curation, SyntheticAgreesWithIndependentPredicate) {
  Corpus corpus = synth::make_corpus(100);
  for (std::size_t i = 0; i < corpus.size(); ++i) corpus[i].document.source_pages = 1 + static_cast<int>(i % 6);
  std::mt19937 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    CurationFilter f;
    f.min_pages = 1 + rng() % 3;
    f.max_pages = f.min_pages + rng() % 4;
    f.min_tables = 1 + rng() % 3;
    f.max_tables = f.min_tables + rng() % 3;
    f.min_text_words = rng() % 50;
    f.min_numeric_cell_fraction = (rng() % 11) / 10.0;
    CurationResult r = curate(corpus, f);
    std::set<std::string> expected;
    for (const auto& e : corpus) {
      const Document& d = e.document;
      std::size_t words = 0;
      for (const auto& p : d.paragraphs) {
        std::istringstream in(p);
        std::string w;
        while (in >> w) ++words;
      }
      std::size_t filled = 0, numeric = 0;
      for (const auto& t : d.tables) {
        for (const auto& row : t.cells) {
          for (const auto& c : row) {
            if (c.raw.empty()) continue;
            ++filled;
            if (c.numeric) ++numeric;
          }
        }
      }
      double fraction = filled ? static_cast<double>(numeric) / filled : 0.0;
      int tables = static_cast<int>(d.tables.size());
      bool keep = *d.source_pages >= f.min_pages && *d.source_pages <= f.max_pages && tables >= f.min_tables &&
                  tables <= f.max_tables && static_cast<int>(words) >= f.min_text_words &&
                  fraction >= f.min_numeric_cell_fraction;
      if (keep) expected.insert(d.doc_id);
    }
    std::set<std::string> kept;
    for (const auto& e : r.kept) kept.insert(e.document.doc_id);
    EXPECT_EQ(kept, expected) << "trial " << trial;
    EXPECT_EQ(r.kept.size() + r.rejects.size(), corpus.size());
  }
}

TEST(Stats, TwoByTwoHandComputed) {
  ParsedRecord p = parse_document(small_record());
  StatsReport s = corpus_stats({p.entry});
  EXPECT_EQ(s.examples, 1u);
  EXPECT_EQ(s.documents, 1u);
  EXPECT_EQ(s.train, 1u);
  EXPECT_EQ(s.tables, 1u);
  EXPECT_DOUBLE_EQ(s.avg_rows_per_table, 2.0);
  EXPECT_DOUBLE_EQ(s.avg_cols_per_table, 2.0);
  EXPECT_DOUBLE_EQ(s.avg_question_length, 5.0);
  // paragraph 4 words + 4 header labels + 4 cells
  EXPECT_DOUBLE_EQ(s.avg_words_per_doc, 12.0);
  EXPECT_DOUBLE_EQ(s.avg_sentences_per_doc, 2.0);
}

TEST(Stats, FixtureHandComputed) {
  Corpus c = load_corpus(kData + "/fixture.jsonl").corpus;
  StatsReport s = corpus_stats(c);
  EXPECT_EQ(s.examples, 16u);
  EXPECT_EQ(s.documents, 3u);
  EXPECT_EQ(s.train, 8u);
  EXPECT_EQ(s.dev, 5u);
  EXPECT_EQ(s.test, 3u);
  EXPECT_EQ(s.tables, 6u);
  EXPECT_DOUBLE_EQ(s.avg_tables_per_doc, 2.0);
  EXPECT_NEAR(s.avg_rows_per_table, 19.0 / 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.avg_cols_per_table, 2.5);
}

TEST(Stats, EmptyCorpusIsZero) {
  StatsReport s = corpus_stats({});
  EXPECT_EQ(s.examples, 0u);
  EXPECT_EQ(s.avg_rows_per_table, 0.0);
}
