#pragma once

#include <string>
#include <vector>

#include "hiertt/corpus_io.hpp"
#include "hiertt/document.hpp"
#include "hiertt/error.hpp"
#include "hiertt/text.hpp"

namespace hiertt {

struct CurationFilter {
  int min_pages = 1;
  int max_pages = 4;
  int min_tables = 2;
  int max_tables = 6;
  int min_text_words = 200;
  double min_numeric_cell_fraction = 0.3;

  void check() const {
    if (min_pages > max_pages) throw Error("curation filter: min_pages > max_pages");
    if (min_tables > max_tables) throw Error("curation filter: min_tables > max_tables");
    if (min_numeric_cell_fraction < 0.0 || min_numeric_cell_fraction > 1.0) {
      throw Error("curation filter: min_numeric_cell_fraction outside [0,1]");
    }
  }
};

inline std::size_t paragraph_words(const Document& doc) {
  std::size_t n = 0;
  for (const auto& p : doc.paragraphs) n += count_words(p);
  return n;
}

// Share of non-empty data cells that parse as numbers; 0 for a document without any.
inline double numeric_cell_fraction(const Document& doc) {
  std::size_t filled = 0;
  std::size_t numeric = 0;
  for (const auto& t : doc.tables) {
    for (const auto& row : t.cells) {
      for (const auto& c : row) {
        if (c.empty()) continue;
        ++filled;
        if (c.numeric) ++numeric;
      }
    }
  }
  return filled == 0 ? 0.0 : static_cast<double>(numeric) / static_cast<double>(filled);
}

// First rule the document breaks, empty when it passes. Page bounds apply
// only to documents that carry a page count.
inline std::string first_violation(const Document& doc, const CurationFilter& f) {
  if (doc.source_pages) {
    if (*doc.source_pages < f.min_pages) return "min_pages";
    if (*doc.source_pages > f.max_pages) return "max_pages";
  }
  const auto tables = static_cast<long>(doc.tables.size());
  if (tables < f.min_tables) return "min_tables";
  if (tables > f.max_tables) return "max_tables";
  if (static_cast<long>(paragraph_words(doc)) < f.min_text_words) return "min_text_words";
  if (numeric_cell_fraction(doc) < f.min_numeric_cell_fraction) return "min_numeric_cell_fraction";
  return {};
}

struct CurationResult {
  Corpus kept;
  std::vector<RejectEntry> rejects;
};

inline CurationResult curate(const Corpus& corpus, const CurationFilter& filter) {
  filter.check();
  CurationResult out;
  for (const auto& entry : corpus) {
    std::string rule = first_violation(entry.document, filter);
    if (rule.empty()) {
      out.kept.push_back(entry);
    } else {
      out.rejects.push_back({entry.document.doc_id, rule, ""});
    }
  }
  return out;
}

}  // namespace hiertt
