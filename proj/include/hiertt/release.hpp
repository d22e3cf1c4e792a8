#pragma once

// Adapter from the public dataset release to canonical corpus records.
//
// Release records are one QA example each, with the document's paragraphs and
// tables repeated in every record. A mapping config names where each field
// lives (dotted key paths). Records are grouped into documents by an explicit
// id when the mapping names one, otherwise by a content hash of paragraphs and
// tables. Documents come out sorted by doc id.
//
// Evidence conversion: paragraph evidence index i maps to every sentence
// fact of paragraph i; table evidence "t-r-c" maps through the HTML grid
// position (row r, column c) of table t to its data-cell fact.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hiertt/corpus_io.hpp"
#include "hiertt/document.hpp"
#include "hiertt/error.hpp"
#include "hiertt/facts.hpp"
#include "hiertt/html_table.hpp"
#include "hiertt/program.hpp"

namespace hiertt {

struct ReleaseMapping {
  std::optional<std::string> doc_id;
  std::string example_id = "uid";
  std::string paragraphs = "paragraphs";
  std::string tables = "tables";
  std::string question = "qa.question";
  std::string answer = "qa.answer";
  std::string program = "qa.program";
  std::string text_evidence = "qa.text_evidence";
  std::string table_evidence = "qa.table_evidence";
  std::string answer_type = "qa.question_type";
  std::optional<std::string> source_pages;
  std::map<std::string, std::string> answer_type_values = {{"arithmetic", "program"},
                                                           {"span_selection", "span"}};
  std::map<std::string, std::string> split_files = {{"train", "train.json"}, {"dev", "dev.json"}, {"test", "test.json"}};

  static ReleaseMapping from_json(const json& j) {
    ReleaseMapping m;
    auto str = [&](const char* key, std::string& out) {
      if (j.contains(key)) {
        if (!j[key].is_string()) throw SchemaError(std::string("mapping.") + key, "expected a string");
        out = j[key].get<std::string>();
      }
    };
    auto opt = [&](const char* key, std::optional<std::string>& out) {
      if (j.contains(key) && !j[key].is_null()) {
        if (!j[key].is_string()) throw SchemaError(std::string("mapping.") + key, "expected a string");
        out = j[key].get<std::string>();
      }
    };
    opt("doc_id", m.doc_id);
    str("example_id", m.example_id);
    str("paragraphs", m.paragraphs);
    str("tables", m.tables);
    str("question", m.question);
    str("answer", m.answer);
    str("program", m.program);
    str("text_evidence", m.text_evidence);
    str("table_evidence", m.table_evidence);
    str("answer_type", m.answer_type);
    opt("source_pages", m.source_pages);
    if (j.contains("answer_type_values")) {
      m.answer_type_values = j["answer_type_values"].get<std::map<std::string, std::string>>();
    }
    if (j.contains("splits")) m.split_files = j["splits"].get<std::map<std::string, std::string>>();
    for (const auto& [k, v] : m.answer_type_values) {
      if (!parse_answer_type(v)) throw SchemaError("mapping.answer_type_values." + k, "must map to program or span");
    }
    for (const auto& [k, v] : m.split_files) {
      if (!parse_split(k)) throw SchemaError("mapping.splits." + k, "unknown split");
    }
    return m;
  }
};

// Value at a dotted path, or nullptr.
inline const json* lookup_path(const json& record, const std::string& path) {
  const json* cur = &record;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t dot = path.find('.', start);
    std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(key);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return cur;
}

struct ReleaseRecord {
  json record;
  Split split = Split::Train;
};

struct ReleaseIngest {
  Corpus corpus;
  std::vector<RejectEntry> rejects;  // dropped tables, documents and examples
  std::vector<RejectEntry> reports;  // kept examples whose gold program the DSL rejects
  std::size_t records = 0;
};

namespace detail {

inline std::string content_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string("d") + buf;
}

inline std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// A table given as a grid of strings is rendered to HTML so both forms share one parser.
inline std::string grid_to_html(const json& grid) {
  std::string html = "<table>";
  for (const auto& row : grid) {
    if (!row.is_array()) throw TableRejected("grid row is not an array");
    html += "<tr>";
    for (const auto& cell : row) {
      html += "<td>";
      if (cell.is_string()) {
        html += html_escape(cell.get<std::string>());
      } else if (cell.is_number()) {
        html += format_number(cell.get<double>());
      }
      html += "</td>";
    }
    html += "</tr>";
  }
  return html + "</table>";
}

inline std::string answer_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return format_number(v.get<double>());
  if (v.is_array() && v.size() == 1) return answer_text(v[0]);
  if (v.is_null()) return "";
  return v.dump();
}

}  // namespace detail

inline ReleaseIngest ingest_release(const std::vector<ReleaseRecord>& records, const ReleaseMapping& m) {
  ReleaseIngest out;
  out.records = records.size();

  struct Group {
    const json* first = nullptr;
    std::vector<const ReleaseRecord*> members;
  };
  std::map<std::string, Group> groups;
  for (const auto& r : records) {
    std::string doc_id;
    if (m.doc_id) {
      const json* v = lookup_path(r.record, *m.doc_id);
      if (!v || !(v->is_string() || v->is_number())) throw SchemaError(*m.doc_id, "missing document id");
      doc_id = v->is_string() ? v->get<std::string>() : v->dump();
    } else {
      const json* p = lookup_path(r.record, m.paragraphs);
      const json* t = lookup_path(r.record, m.tables);
      doc_id = detail::content_hash((p ? p->dump() : "") + "\x1f" + (t ? t->dump() : ""));
    }
    Group& g = groups[doc_id];
    if (!g.first) g.first = &r.record;
    g.members.push_back(&r);
  }

  for (auto& [doc_id, group] : groups) {
    const json& first = *group.first;
    Document doc;
    doc.doc_id = doc_id;
    const json* paragraphs = lookup_path(first, m.paragraphs);
    if (!paragraphs || !paragraphs->is_array()) throw SchemaError(m.paragraphs, "missing paragraph list");
    for (const auto& p : *paragraphs) {
      if (p.is_string()) {
        doc.paragraphs.push_back(p.get<std::string>());
      } else if (p.is_array()) {
        std::string joined;
        for (const auto& s : p) {
          if (!s.is_string()) continue;
          if (!joined.empty()) joined += ' ';
          joined += s.get<std::string>();
        }
        doc.paragraphs.push_back(joined);
      } else {
        throw SchemaError(m.paragraphs, "paragraph is neither text nor a list of sentences");
      }
    }
    if (m.source_pages) {
      if (const json* pages = lookup_path(first, *m.source_pages); pages && pages->is_number_integer()) {
        doc.source_pages = pages->get<int>();
      }
    }
    const json* tables = lookup_path(first, m.tables);
    if (!tables || !tables->is_array()) throw SchemaError(m.tables, "missing table list");
    std::map<std::size_t, HtmlTable> parsed;  // release table index -> parsed table
    std::map<std::size_t, std::size_t> kept;  // release table index -> position in doc.tables
    for (std::size_t i = 0; i < tables->size(); ++i) {
      const json& t = (*tables)[i];
      std::string id = "t" + std::to_string(i);
      try {
        std::string html;
        if (t.is_string()) {
          html = t.get<std::string>();
        } else if (t.is_array()) {
          html = detail::grid_to_html(t);
        } else {
          throw TableRejected("table is neither HTML text nor a grid");
        }
        HtmlTable ht = parse_html_table(html, id);
        ValidationReport report = validate(ht.table);
        if (!report.empty()) throw TableRejected(report.front().where + ": " + report.front().message);
        kept[i] = doc.tables.size();
        doc.tables.push_back(ht.table);
        parsed.emplace(i, std::move(ht));
      } catch (const TableRejected& e) {
        out.rejects.push_back({doc_id + "/" + id, "table_rejected", e.what()});
      }
    }
    if (doc.tables.empty()) {
      out.rejects.push_back({doc_id, "no_tables", "no table survived parsing"});
      continue;
    }

    CorpusEntry entry;
    entry.document = doc;
    std::map<std::string, int> seen_ids;
    for (const ReleaseRecord* r : group.members) {
      const json& rec = r->record;
      const json* id = lookup_path(rec, m.example_id);
      if (!id || !(id->is_string() || id->is_number())) throw SchemaError(m.example_id, "missing example id");
      QAExample ex;
      ex.example_id = id->is_string() ? id->get<std::string>() : id->dump();
      if (seen_ids[ex.example_id]++) {
        out.rejects.push_back({ex.example_id, "duplicate_example", doc_id});
        continue;
      }
      ex.doc_id = doc_id;
      ex.split = r->split;
      const json* q = lookup_path(rec, m.question);
      if (!q || !q->is_string()) throw SchemaError(m.question, "missing question in " + ex.example_id);
      ex.question = q->get<std::string>();
      const json* a = lookup_path(rec, m.answer);
      ex.gold_answer = a ? detail::answer_text(*a) : "";
      const json* prog = lookup_path(rec, m.program);
      std::string program_text = prog && prog->is_string() ? prog->get<std::string>() : "";
      std::optional<AnswerType> type;
      if (const json* t = lookup_path(rec, m.answer_type); t && t->is_string()) {
        auto it = m.answer_type_values.find(t->get<std::string>());
        if (it != m.answer_type_values.end()) type = parse_answer_type(it->second);
      }
      if (!type) type = trim(program_text).empty() ? AnswerType::Span : AnswerType::Program;
      ex.answer_type = *type;
      if (ex.answer_type == AnswerType::Program) {
        if (trim(program_text).empty()) {
          out.rejects.push_back({ex.example_id, "missing_program", ""});
          continue;
        }
        try {
          ex.gold_program = format_program(parse_program(program_text));
        } catch (const ProgramParseError& e) {
          ex.gold_program = program_text;
          out.reports.push_back({ex.example_id, "program_parse", e.what()});
        }
      } else if (trim(ex.gold_answer).empty()) {
        out.rejects.push_back({ex.example_id, "empty_span_answer", ""});
        continue;
      }

      bool dangling = false;
      std::string dangling_what;
      if (const json* te = lookup_path(rec, m.text_evidence); te && te->is_array()) {
        for (const auto& v : *te) {
          if (!v.is_number_integer() || v.get<long>() < 0 ||
              static_cast<std::size_t>(v.get<long>()) >= doc.paragraphs.size()) {
            dangling = true;
            dangling_what = "text evidence " + v.dump();
            break;
          }
          std::size_t p = v.get<std::size_t>();
          auto facts = split_paragraph(doc_id, p, doc.paragraphs[p]);
          if (facts.empty()) {
            dangling = true;
            dangling_what = "empty paragraph " + v.dump();
            break;
          }
          for (const auto& f : facts) ex.gold_evidence.push_back(f.fact_id);
        }
      }
      if (const json* tev = lookup_path(rec, m.table_evidence); !dangling && tev && tev->is_array()) {
        for (const auto& v : *tev) {
          std::size_t t = 0, row = 0, col = 0;
          bool ok = v.is_string() && std::sscanf(v.get<std::string>().c_str(), "%zu-%zu-%zu", &t, &row, &col) == 3;
          auto pt = ok ? parsed.find(t) : parsed.end();
          if (pt == parsed.end()) {
            dangling = true;
            dangling_what = "table evidence " + v.dump();
            break;
          }
          auto cell = pt->second.source_to_grid.find({row, col});
          const HierTable& table = doc.tables[kept.at(t)];
          if (cell == pt->second.source_to_grid.end() ||
              table.cells[cell->second.first][cell->second.second].empty()) {
            dangling = true;
            dangling_what = "table evidence " + v.dump();
            break;
          }
          ex.gold_evidence.push_back(cell_fact_id(doc_id, table.table_id, cell->second.first, cell->second.second));
        }
      }
      if (dangling) {
        out.rejects.push_back({ex.example_id, "dangling_evidence", dangling_what});
        continue;
      }
      std::sort(ex.gold_evidence.begin(), ex.gold_evidence.end());
      ex.gold_evidence.erase(std::unique(ex.gold_evidence.begin(), ex.gold_evidence.end()), ex.gold_evidence.end());
      entry.examples.push_back(std::move(ex));
    }
    // canonical round trip enforces every record invariant
    ParsedRecord checked = parse_document(serialize_entry(entry));
    out.corpus.push_back(std::move(checked.entry));
  }
  return out;
}

// Reads a release file: a JSON array of records or one record per line.
inline std::vector<json> read_release_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  std::string_view body = trim(text);
  std::vector<json> out;
  if (body.empty()) return out;
  if (body.front() == '[') {
    json arr;
    try {
      arr = json::parse(body);
    } catch (const json::parse_error& e) {
      throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
    }
    for (auto& r : arr) out.push_back(std::move(r));
    return out;
  }
  std::istringstream lines(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw SchemaError(path.string() + ":" + std::to_string(n), std::string("invalid JSON: ") + e.what());
    }
  }
  return out;
}

}  // namespace hiertt
