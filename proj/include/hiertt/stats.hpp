#pragma once

// Corpus census. Averages are per document for text, per table for shape and
// per example for question length. "Input text" words cover paragraphs, header
// labels and cell text; sentences cover paragraphs only.

#include <map>
#include <string>

#include "hiertt/document.hpp"
#include "hiertt/table.hpp"
#include "hiertt/text.hpp"

namespace hiertt {

struct StatsReport {
  std::size_t examples = 0;
  std::size_t documents = 0;
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
  std::size_t tables = 0;
  double avg_tables_per_doc = 0.0;
  double avg_rows_per_table = 0.0;
  double avg_cols_per_table = 0.0;
  double avg_question_length = 0.0;
  double avg_words_per_doc = 0.0;
  double avg_sentences_per_doc = 0.0;
};

namespace detail {

inline std::size_t header_words(const HeaderNode& node) {
  std::size_t n = count_words(node.label);
  for (const auto& c : node.children) n += header_words(c);
  return n;
}

}  // namespace detail

inline StatsReport corpus_stats(const Corpus& corpus) {
  StatsReport r;
  std::size_t rows = 0, cols = 0, question_words = 0, words = 0, sentences = 0;
  for (const auto& entry : corpus) {
    const Document& doc = entry.document;
    ++r.documents;
    r.tables += doc.tables.size();
    for (const auto& p : doc.paragraphs) {
      words += count_words(p);
      sentences += split_sentences(p).size();
    }
    for (const auto& t : doc.tables) {
      rows += t.rows();
      cols += t.cols();
      words += detail::header_words(t.row_tree) + detail::header_words(t.col_tree);
      for (const auto& row : t.cells) {
        for (const auto& c : row) words += count_words(c.raw);
      }
    }
    for (const auto& ex : entry.examples) {
      ++r.examples;
      question_words += count_words(ex.question);
      switch (ex.split) {
        case Split::Train: ++r.train; break;
        case Split::Dev: ++r.dev; break;
        case Split::Test: ++r.test; break;
      }
    }
  }
  auto avg = [](std::size_t total, std::size_t n) {
    return n == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(n);
  };
  r.avg_tables_per_doc = avg(r.tables, r.documents);
  r.avg_rows_per_table = avg(rows, r.tables);
  r.avg_cols_per_table = avg(cols, r.tables);
  r.avg_question_length = avg(question_words, r.examples);
  r.avg_words_per_doc = avg(words, r.documents);
  r.avg_sentences_per_doc = avg(sentences, r.documents);
  return r;
}

}  // namespace hiertt
