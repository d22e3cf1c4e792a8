#pragma once

// Canonical corpus: one JSON document record per line. The schema ships in
// schema/corpus.schema.json. Header spans are not stored; they are derived
// from tree shape on load. Cell numerics are likewise derived from raw text.

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "hiertt/document.hpp"
#include "hiertt/error.hpp"
#include "hiertt/facts.hpp"
#include "hiertt/numeric.hpp"
#include "hiertt/program.hpp"
#include "hiertt/table.hpp"

namespace hiertt {

using json = nlohmann::json;

// One line of a reject log.
struct RejectEntry {
  std::string subject;  // doc id, "<doc>/<table>", or example id
  std::string rule;
  std::string detail;

  std::string line() const { return subject + "\t" + rule + (detail.empty() ? "" : "\t" + detail); }
  friend bool operator==(const RejectEntry&, const RejectEntry&) = default;
};

namespace io {

inline const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where.empty() ? key : where + "." + key, "missing field");
  return *it;
}

inline std::string string_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_string()) throw SchemaError(where.empty() ? key : where + "." + key, "expected a string");
  return v.get<std::string>();
}

inline const json& array_field(const json& obj, const char* key, const std::string& where) {
  const json& v = field(obj, key, where);
  if (!v.is_array()) throw SchemaError(where.empty() ? key : where + "." + key, "expected an array");
  return v;
}

inline json node_to_json(const HeaderNode& node) {
  json children = json::array();
  for (const auto& c : node.children) children.push_back(node_to_json(c));
  return json{{"label", node.label}, {"children", std::move(children)}};
}

inline HeaderNode node_from_json(const json& j, const std::string& where, std::size_t depth_guard = 0) {
  if (depth_guard > 64) throw SchemaError(where, "header tree deeper than 64 levels");
  HeaderNode node;
  node.label = string_field(j, "label", where);
  if (j.contains("children")) {
    const json& children = array_field(j, "children", where);
    for (std::size_t i = 0; i < children.size(); ++i) {
      node.children.push_back(
          node_from_json(children[i], where + ".children[" + std::to_string(i) + "]", depth_guard + 1));
    }
  }
  return node;
}

inline json table_to_json(const HierTable& t) {
  json cells = json::array();
  for (const auto& row : t.cells) {
    json r = json::array();
    for (const auto& c : row) r.push_back(c.raw);
    cells.push_back(std::move(r));
  }
  json out{{"table_id", t.table_id},
           {"row_tree", node_to_json(t.row_tree)},
           {"col_tree", node_to_json(t.col_tree)},
           {"cells", std::move(cells)}};
  if (t.caption) out["caption"] = *t.caption;
  return out;
}

inline HierTable table_from_json(const json& j, const std::string& where) {
  HierTable t;
  t.table_id = string_field(j, "table_id", where);
  if (t.table_id.empty()) throw SchemaError(where + ".table_id", "empty table id");
  t.row_tree = node_from_json(field(j, "row_tree", where), where + ".row_tree");
  t.col_tree = node_from_json(field(j, "col_tree", where), where + ".col_tree");
  finalize_root(t.row_tree);
  finalize_root(t.col_tree);
  const json& cells = array_field(j, "cells", where);
  for (std::size_t r = 0; r < cells.size(); ++r) {
    std::string row_where = where + ".cells[" + std::to_string(r) + "]";
    if (!cells[r].is_array()) throw SchemaError(row_where, "expected an array");
    std::vector<Cell> row;
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      const json& v = cells[r][c];
      if (!v.is_string()) throw SchemaError(row_where + "[" + std::to_string(c) + "]", "expected a string");
      row.push_back(Cell::from_raw(v.get<std::string>()));
    }
    t.cells.push_back(std::move(row));
  }
  if (j.contains("caption") && !j["caption"].is_null()) t.caption = string_field(j, "caption", where);
  return t;
}

inline json example_to_json(const QAExample& e) {
  json out{{"example_id", e.example_id},
           {"question", e.question},
           {"answer_type", std::string(to_string(e.answer_type))},
           {"gold_answer", e.gold_answer},
           {"gold_evidence", e.gold_evidence},
           {"split", std::string(to_string(e.split))}};
  out["gold_program"] = e.gold_program ? json(*e.gold_program) : json(nullptr);
  return out;
}

inline QAExample example_from_json(const json& j, const std::string& doc_id, const std::string& where) {
  QAExample e;
  e.example_id = string_field(j, "example_id", where);
  e.doc_id = doc_id;
  if (j.contains("doc_id") && string_field(j, "doc_id", where) != doc_id) {
    throw SchemaError(where + ".doc_id", "example belongs to a different document");
  }
  e.question = string_field(j, "question", where);
  std::string type = string_field(j, "answer_type", where);
  auto parsed_type = parse_answer_type(type);
  if (!parsed_type) throw SchemaError(where + ".answer_type", "expected 'program' or 'span', got '" + type + "'");
  e.answer_type = *parsed_type;
  const json& answer = field(j, "gold_answer", where);
  if (answer.is_string()) {
    e.gold_answer = answer.get<std::string>();
  } else if (answer.is_number()) {
    e.gold_answer = format_number(answer.get<double>());
  } else {
    throw SchemaError(where + ".gold_answer", "expected text or number");
  }
  if (j.contains("gold_program") && !j["gold_program"].is_null()) {
    e.gold_program = string_field(j, "gold_program", where);
  }
  if (e.answer_type == AnswerType::Program && !e.gold_program) {
    throw SchemaError(where + ".gold_program", "program-type example without a gold program");
  }
  if (e.answer_type == AnswerType::Span && (!answer.is_string() || trim(e.gold_answer).empty())) {
    throw SchemaError(where + ".gold_answer", "span-type example needs a non-empty text answer");
  }
  const json& evidence = array_field(j, "gold_evidence", where);
  for (std::size_t i = 0; i < evidence.size(); ++i) {
    if (!evidence[i].is_string()) {
      throw SchemaError(where + ".gold_evidence[" + std::to_string(i) + "]", "expected a string");
    }
    e.gold_evidence.push_back(evidence[i].get<std::string>());
  }
  std::string split = string_field(j, "split", where);
  auto parsed_split = parse_split(split);
  if (!parsed_split) throw SchemaError(where + ".split", "expected train/dev/test, got '" + split + "'");
  e.split = *parsed_split;
  return e;
}

}  // namespace io

struct ParsedRecord {
  CorpusEntry entry;
  std::vector<RejectEntry> rejected_tables;
};

// Canonical record -> document + examples. Tables that fail validation are
// dropped and logged; evidence must then still resolve.
inline ParsedRecord parse_document(const json& record) {
  ParsedRecord out;
  Document& doc = out.entry.document;
  doc.doc_id = io::string_field(record, "doc_id", "");
  if (doc.doc_id.empty()) throw SchemaError("doc_id", "empty document id");
  const json& paragraphs = io::array_field(record, "paragraphs", "");
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    if (!paragraphs[i].is_string()) throw SchemaError("paragraphs[" + std::to_string(i) + "]", "expected a string");
    doc.paragraphs.push_back(paragraphs[i].get<std::string>());
  }
  if (record.contains("source_pages") && !record["source_pages"].is_null()) {
    if (!record["source_pages"].is_number_integer()) throw SchemaError("source_pages", "expected an integer");
    doc.source_pages = record["source_pages"].get<int>();
  }
  const json& tables = io::array_field(record, "tables", "");
  if (tables.empty()) throw SchemaError("tables", "document has no tables");
  std::set<std::string> ids;
  std::vector<long> kept_index(tables.size(), -1);
  for (std::size_t i = 0; i < tables.size(); ++i) {
    HierTable t = io::table_from_json(tables[i], "tables[" + std::to_string(i) + "]");
    if (!ids.insert(t.table_id).second) {
      throw SchemaError("tables[" + std::to_string(i) + "].table_id", "duplicate table id '" + t.table_id + "'");
    }
    ValidationReport report = validate(t);
    if (!report.empty()) {
      out.rejected_tables.push_back(
          {doc.doc_id + "/" + t.table_id, "invalid_table", report.front().where + ": " + report.front().message});
      continue;
    }
    kept_index[i] = static_cast<long>(doc.tables.size());
    doc.tables.push_back(std::move(t));
  }
  if (record.contains("layout") && !record["layout"].is_null()) {
    const json& layout = io::array_field(record, "layout", "");
    for (std::size_t i = 0; i < layout.size(); ++i) {
      std::string where = "layout[" + std::to_string(i) + "]";
      std::string kind = io::string_field(layout[i], "kind", where);
      const json& index = io::field(layout[i], "index", where);
      if (!index.is_number_unsigned()) throw SchemaError(where + ".index", "expected a non-negative integer");
      std::size_t k = index.get<std::size_t>();
      if (kind == "paragraph") {
        if (k >= doc.paragraphs.size()) throw SchemaError(where + ".index", "no such paragraph");
        doc.layout.push_back({BlockRef::Kind::Paragraph, k});
      } else if (kind == "table") {
        if (k >= tables.size()) throw SchemaError(where + ".index", "no such table");
        if (kept_index[k] >= 0) doc.layout.push_back({BlockRef::Kind::Table, static_cast<std::size_t>(kept_index[k])});
      } else {
        throw SchemaError(where + ".kind", "expected 'paragraph' or 'table'");
      }
    }
    if (doc.layout.size() != doc.paragraphs.size() + doc.tables.size()) {
      throw SchemaError("layout", "layout must list every paragraph and table exactly once");
    }
    std::set<std::pair<int, std::size_t>> seen;
    for (const auto& b : doc.layout) {
      if (!seen.insert({static_cast<int>(b.kind), b.index}).second) throw SchemaError("layout", "block listed twice");
    }
  }

  const json& examples = io::array_field(record, "examples", "");
  std::set<std::string> example_ids;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    QAExample e = io::example_from_json(examples[i], doc.doc_id, "examples[" + std::to_string(i) + "]");
    if (!example_ids.insert(e.example_id).second) {
      throw SchemaError("examples[" + std::to_string(i) + "].example_id", "duplicate example id");
    }
    out.entry.examples.push_back(std::move(e));
  }

  std::unordered_set<std::string> fact_ids;
  for (const Fact& f : enumerate_facts(doc)) fact_ids.insert(f.fact_id);
  for (const auto& e : out.entry.examples) {
    for (const auto& id : e.gold_evidence) {
      if (!fact_ids.count(id)) throw DanglingEvidence(id);
    }
  }
  return out;
}

inline json serialize_entry(const CorpusEntry& entry) {
  const Document& doc = entry.document;
  json tables = json::array();
  for (const auto& t : doc.tables) tables.push_back(io::table_to_json(t));
  json examples = json::array();
  for (const auto& e : entry.examples) examples.push_back(io::example_to_json(e));
  json out{{"doc_id", doc.doc_id},
           {"paragraphs", doc.paragraphs},
           {"tables", std::move(tables)},
           {"examples", std::move(examples)}};
  out["source_pages"] = doc.source_pages ? json(*doc.source_pages) : json(nullptr);
  if (!doc.layout.empty()) {
    json layout = json::array();
    for (const auto& b : doc.layout) {
      layout.push_back({{"kind", b.kind == BlockRef::Kind::Paragraph ? "paragraph" : "table"}, {"index", b.index}});
    }
    out["layout"] = std::move(layout);
  }
  return out;
}

inline std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& e : corpus) {
    out += serialize_entry(e).dump();
    out += '\n';
  }
  return out;
}

struct LoadedCorpus {
  Corpus corpus;
  std::vector<RejectEntry> rejects;
};

// Parses a canonical JSONL stream. Errors carry the 1-based line number.
inline LoadedCorpus parse_corpus(std::istream& in) {
  LoadedCorpus out;
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> doc_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError("line " + std::to_string(line_no), std::string("invalid JSON: ") + e.what());
    }
    ParsedRecord parsed;
    // TODO: records are independent; parse them on a worker pool once corpora outgrow a single core
    try {
      parsed = parse_document(record);
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.field(), e.detail());
    }
    if (!doc_ids.insert(parsed.entry.document.doc_id).second) {
      throw SchemaError("line " + std::to_string(line_no) + ": doc_id", "duplicate document id");
    }
    out.rejects.insert(out.rejects.end(), parsed.rejected_tables.begin(), parsed.rejected_tables.end());
    out.corpus.push_back(std::move(parsed.entry));
  }
  return out;
}

inline LoadedCorpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus '" + path.string() + "'");
  return parse_corpus(in);
}

}  // namespace hiertt
