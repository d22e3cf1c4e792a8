#pragma once

// Linearization: every non-empty data cell becomes one sentence carrying its
// full row and column header context, every paragraph sentence becomes one
// fact. Fact ids are stable:
//
//   <doc_id>/<table_id>:<row>:<col>     table cell
//   <doc_id>/para:<paragraph>:<sentence> paragraph sentence

#include <algorithm>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hiertt/document.hpp"
#include "hiertt/error.hpp"
#include "hiertt/table.hpp"
#include "hiertt/text.hpp"

namespace hiertt {

enum class Provenance { Paragraph, TableCell };

inline std::string_view to_string(Provenance p) { return p == Provenance::Paragraph ? "paragraph" : "table-cell"; }

struct Fact {
  std::string fact_id;
  std::string text;
  Provenance provenance = Provenance::Paragraph;
  std::optional<std::string> table_id;
  std::size_t doc_order = 0;

  friend bool operator==(const Fact&, const Fact&) = default;
};

struct SentenceTemplate {
  // {row_path}, {col_path} and {value} are substituted; everything else is literal.
  std::string pattern = "For {row_path}, {col_path} is {value}";
  std::string row_separator = " of ";
  std::string col_separator = ", ";
  // leaf label first, then its ancestors
  bool innermost_first = true;
  bool include_caption = false;

  friend bool operator==(const SentenceTemplate&, const SentenceTemplate&) = default;
};

inline std::string cell_fact_id(std::string_view doc_id, std::string_view table_id, std::size_t row, std::size_t col) {
  return std::string(doc_id) + "/" + std::string(table_id) + ":" + std::to_string(row) + ":" + std::to_string(col);
}

inline std::string paragraph_fact_id(std::string_view doc_id, std::size_t paragraph, std::size_t sentence) {
  return std::string(doc_id) + "/para:" + std::to_string(paragraph) + ":" + std::to_string(sentence);
}

namespace detail {

inline std::string join_path(std::vector<std::string> labels, const std::string& sep, bool reverse) {
  if (reverse) std::reverse(labels.begin(), labels.end());
  std::string out;
  for (const auto& l : labels) {
    if (l.empty()) continue;
    if (!out.empty()) out += sep;
    out += l;
  }
  return out;
}

}  // namespace detail

// nullopt for an empty cell: it is skipped, not linearized.
inline std::optional<Fact> linearize_cell(const HierTable& table, std::size_t row, std::size_t col,
                                          const SentenceTemplate& tmpl = {}, std::string_view doc_id = "") {
  const Cell& cell = table.at(row, col);
  if (cell.empty()) return std::nullopt;
  HeaderPath path = resolve_header_path(table, row, col);
  const std::string& text = tmpl.pattern;
  // one left-to-right pass, so labels that happen to contain "{value}" stay literal
  std::string rows = detail::join_path(path.row, tmpl.row_separator, tmpl.innermost_first);
  std::string cols = detail::join_path(path.col, tmpl.col_separator, tmpl.innermost_first);
  std::string value(trim(cell.raw));
  std::string out;
  for (std::size_t i = 0; i < text.size();) {
    if (text.compare(i, 10, "{row_path}") == 0) {
      out += rows;
      i += 10;
    } else if (text.compare(i, 10, "{col_path}") == 0) {
      out += cols;
      i += 10;
    } else if (text.compare(i, 7, "{value}") == 0) {
      out += value;
      i += 7;
    } else {
      out.push_back(text[i++]);
    }
  }
  if (tmpl.include_caption && table.caption && !table.caption->empty()) out += " (" + *table.caption + ")";
  Fact fact;
  fact.fact_id = cell_fact_id(doc_id, table.table_id, row, col);
  fact.text = std::move(out);
  fact.provenance = Provenance::TableCell;
  fact.table_id = table.table_id;
  return fact;
}

// Row-major over non-empty data cells.
inline std::vector<Fact> linearize_table(const HierTable& table, const SentenceTemplate& tmpl = {},
                                         std::string_view doc_id = "") {
  std::vector<Fact> facts;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cells[r].size(); ++c) {
      if (auto f = linearize_cell(table, r, c, tmpl, doc_id)) facts.push_back(std::move(*f));
    }
  }
  return facts;
}

inline std::vector<Fact> split_paragraph(std::string_view doc_id, std::size_t index, std::string_view paragraph) {
  std::vector<Fact> facts;
  auto sentences = split_sentences(paragraph);
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    Fact f;
    f.fact_id = paragraph_fact_id(doc_id, index, s);
    f.text = std::move(sentences[s]);
    f.provenance = Provenance::Paragraph;
    facts.push_back(std::move(f));
  }
  return facts;
}

inline std::vector<Fact> split_paragraphs(const Document& doc) {
  std::vector<Fact> facts;
  for (std::size_t i = 0; i < doc.paragraphs.size(); ++i) {
    auto part = split_paragraph(doc.doc_id, i, doc.paragraphs[i]);
    facts.insert(facts.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return facts;
}

// All facts of the document in reading order, doc_order = 0, 1, 2, ...
inline std::vector<Fact> enumerate_facts(const Document& doc, const SentenceTemplate& tmpl = {}) {
  std::vector<Fact> facts;
  for (const BlockRef& block : reading_order(doc)) {
    std::vector<Fact> part;
    if (block.kind == BlockRef::Kind::Paragraph) {
      if (block.index >= doc.paragraphs.size()) throw Error("layout references missing paragraph");
      part = split_paragraph(doc.doc_id, block.index, doc.paragraphs[block.index]);
    } else {
      if (block.index >= doc.tables.size()) throw Error("layout references missing table");
      part = linearize_table(doc.tables[block.index], tmpl, doc.doc_id);
    }
    facts.insert(facts.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < facts.size(); ++i) {
    facts[i].doc_order = i;
    if (!seen.insert(facts[i].fact_id).second) {
      throw Error("duplicate fact id '" + facts[i].fact_id + "' in document '" + doc.doc_id + "'");
    }
  }
  return facts;
}

}  // namespace hiertt
