#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hiertt/answer.hpp"
#include "hiertt/table.hpp"

namespace hiertt {

// Position of one paragraph or table in reading order.
struct BlockRef {
  enum class Kind { Paragraph, Table };
  Kind kind = Kind::Paragraph;
  std::size_t index = 0;
  friend bool operator==(const BlockRef&, const BlockRef&) = default;
};

struct Document {
  std::string doc_id;
  std::vector<std::string> paragraphs;
  std::vector<HierTable> tables;
  std::optional<int> source_pages;  // unknown for sources without page metadata
  // Reading order of the blocks. Empty means paragraphs first, then tables.
  std::vector<BlockRef> layout;

  friend bool operator==(const Document&, const Document&) = default;
};

// Blocks in reading order.
inline std::vector<BlockRef> reading_order(const Document& doc) {
  if (!doc.layout.empty()) return doc.layout;
  std::vector<BlockRef> order;
  for (std::size_t i = 0; i < doc.paragraphs.size(); ++i) order.push_back({BlockRef::Kind::Paragraph, i});
  for (std::size_t i = 0; i < doc.tables.size(); ++i) order.push_back({BlockRef::Kind::Table, i});
  return order;
}

enum class Split { Train, Dev, Test };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "dev") return Split::Dev;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

struct QAExample {
  std::string example_id;
  std::string doc_id;
  std::string question;
  AnswerType answer_type = AnswerType::Program;
  std::string gold_answer;
  std::optional<std::string> gold_program;  // program text; present for program-type answers
  std::vector<std::string> gold_evidence;   // fact ids
  Split split = Split::Train;

  friend bool operator==(const QAExample&, const QAExample&) = default;
};

// One document with the questions asked about it.
struct CorpusEntry {
  Document document;
  std::vector<QAExample> examples;
  friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

using Corpus = std::vector<CorpusEntry>;

inline std::size_t example_count(const Corpus& corpus) {
  std::size_t n = 0;
  for (const auto& e : corpus) n += e.examples.size();
  return n;
}

}  // namespace hiertt
