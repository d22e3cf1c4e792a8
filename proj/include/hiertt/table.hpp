#pragma once

// Hierarchical tables: a dense cell grid addressed by the leaves of a row
// header tree and a column header tree. Both trees hang off a synthetic root
// with an empty label, so flat tables are depth-1 trees of the same shape.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hiertt/error.hpp"
#include "hiertt/numeric.hpp"

namespace hiertt {

struct HeaderNode {
  std::string label;
  std::vector<HeaderNode> children;
  // half-open leaf-index range [begin, end)
  std::size_t begin = 0;
  std::size_t end = 0;

  bool is_leaf() const noexcept { return children.empty(); }
  std::size_t width() const noexcept { return end - begin; }

  static HeaderNode leaf(std::string label) { return HeaderNode{std::move(label), {}, 0, 0}; }
  static HeaderNode branch(std::string label, std::vector<HeaderNode> children) {
    return HeaderNode{std::move(label), std::move(children), 0, 0};
  }

  friend bool operator==(const HeaderNode&, const HeaderNode&) = default;
};

// Recomputes every span from the tree shape; leaves are numbered in DFS order.
// Returns the leaf count.
inline std::size_t assign_spans(HeaderNode& node, std::size_t first = 0) {
  node.begin = first;
  if (node.children.empty()) {
    node.end = first + 1;
    return 1;
  }
  std::size_t next = first;
  for (auto& child : node.children) next += assign_spans(child, next);
  node.end = next;
  return next - first;
}

inline std::size_t leaf_count(const HeaderNode& node) {
  if (node.children.empty()) return 1;
  std::size_t n = 0;
  for (const auto& c : node.children) n += leaf_count(c);
  return n;
}

inline std::size_t depth(const HeaderNode& node) {
  std::size_t d = 0;
  for (const auto& c : node.children) d = std::max(d, depth(c));
  return node.children.empty() ? 0 : d + 1;
}

// Assigns spans below a synthetic root. A childless root is an empty axis
// and keeps the span [0,0).
inline void finalize_root(HeaderNode& root) {
  if (root.children.empty()) {
    root.begin = root.end = 0;
  } else {
    assign_spans(root);
  }
}

inline HeaderNode flat_header(const std::vector<std::string>& labels) {
  HeaderNode root;
  for (const auto& l : labels) root.children.push_back(HeaderNode::leaf(l));
  finalize_root(root);
  return root;
}

struct Cell {
  std::string raw;
  std::optional<double> numeric;
  std::optional<std::string> unit_hint;

  // Builds a cell whose numeric fields agree with `raw`.
  static Cell from_raw(std::string raw) {
    Cell c;
    if (auto parsed = parse_number(raw)) {
      c.numeric = parsed->value;
      if (!parsed->unit_hint.empty()) c.unit_hint = parsed->unit_hint;
    }
    c.raw = std::move(raw);
    return c;
  }

  bool empty() const { return trim(raw).empty(); }

  friend bool operator==(const Cell&, const Cell&) = default;
};

// Throws NotANumber when the cell holds no number.
inline double numeric_value(const Cell& cell) {
  if (cell.numeric) return *cell.numeric;
  if (auto parsed = parse_number(cell.raw)) return parsed->value;
  throw NotANumber("cell '" + cell.raw + "' is not a number");
}

struct HierTable {
  std::string table_id;
  HeaderNode row_tree;
  HeaderNode col_tree;
  std::vector<std::vector<Cell>> cells;  // [row leaf][col leaf]
  std::optional<std::string> caption;

  std::size_t rows() const noexcept { return cells.size(); }
  std::size_t cols() const noexcept { return cells.empty() ? 0 : cells.front().size(); }

  const Cell& at(std::size_t row, std::size_t col) const {
    if (row >= cells.size() || col >= cells[row].size()) {
      throw AddressingError("cell (" + std::to_string(row) + "," + std::to_string(col) + ") outside " +
                            std::to_string(rows()) + "x" + std::to_string(cols()) + " grid of table '" +
                            table_id + "'");
    }
    return cells[row][col];
  }

  friend bool operator==(const HierTable&, const HierTable&) = default;
};

struct HeaderPath {
  std::vector<std::string> row;
  std::vector<std::string> col;

  friend bool operator==(const HeaderPath&, const HeaderPath&) = default;
};

namespace detail {

// Root-to-leaf labels (root excluded) of the leaf whose span holds `index`.
inline std::vector<std::string> path_to_leaf(const HeaderNode& root, std::size_t index) {
  std::vector<std::string> path;
  const HeaderNode* node = &root;
  while (!node->children.empty()) {
    const HeaderNode* next = nullptr;
    for (const auto& c : node->children) {
      if (c.begin <= index && index < c.end) {
        next = &c;
        break;
      }
    }
    if (next == nullptr) return path;
    path.push_back(next->label);
    node = next;
  }
  return path;
}

}  // namespace detail

inline HeaderPath resolve_header_path(const HierTable& table, std::size_t row, std::size_t col) {
  const std::size_t nrows = table.row_tree.children.empty() ? 0 : table.row_tree.width();
  const std::size_t ncols = table.col_tree.children.empty() ? 0 : table.col_tree.width();
  if (row >= nrows || col >= ncols || row >= table.rows() || col >= table.cells[row].size()) {
    throw AddressingError("header path (" + std::to_string(row) + "," + std::to_string(col) +
                          ") outside table '" + table.table_id + "'");
  }
  return {detail::path_to_leaf(table.row_tree, row), detail::path_to_leaf(table.col_tree, col)};
}

struct Violation {
  std::string where;  // "row_tree/0/2", "cell(3,1)", "grid"
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

using ValidationReport = std::vector<Violation>;

namespace detail {

inline void check_node(const HeaderNode& node, const std::string& where, ValidationReport& out) {
  if (node.end < node.begin) {
    out.push_back({where, "negative span [" + std::to_string(node.begin) + "," + std::to_string(node.end) + ")"});
    return;
  }
  if (node.children.empty()) {
    if (node.width() != 1) {
      out.push_back({where, "leaf span width " + std::to_string(node.width()) + " != 1"});
    }
    return;
  }
  std::size_t cursor = node.begin;
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    const auto& c = node.children[i];
    std::string child_where = where + "/" + std::to_string(i);
    if (c.begin < cursor) {
      out.push_back({child_where, "span [" + std::to_string(c.begin) + "," + std::to_string(c.end) +
                                      ") overlaps previous sibling ending at " + std::to_string(cursor)});
    } else if (c.begin > cursor) {
      out.push_back({child_where, "gap before span start " + std::to_string(c.begin) + " (expected " +
                                      std::to_string(cursor) + ")"});
    }
    check_node(c, child_where, out);
    cursor = std::max(cursor, c.end);
  }
  if (cursor != node.end) {
    out.push_back({where, "children end at " + std::to_string(cursor) + " but parent span ends at " +
                              std::to_string(node.end)});
  }
}

}  // namespace detail

// Lists every broken invariant; an empty report means the table is well formed.
inline ValidationReport validate(const HierTable& table) {
  ValidationReport report;
  // a childless root is the empty axis, span [0,0)
  for (auto [root, name] : {std::pair{&table.row_tree, "row_tree"}, std::pair{&table.col_tree, "col_tree"}}) {
    if (!root->children.empty()) {
      detail::check_node(*root, name, report);
    } else if (root->begin != 0 || root->end != 0) {
      report.push_back({name, "empty axis must have span [0,0)"});
    }
  }

  const std::size_t row_leaves = table.row_tree.children.empty() ? 0 : leaf_count(table.row_tree);
  const std::size_t col_leaves = table.col_tree.children.empty() ? 0 : leaf_count(table.col_tree);
  if (table.row_tree.begin != 0) report.push_back({"row_tree", "root span does not start at 0"});
  if (table.col_tree.begin != 0) report.push_back({"col_tree", "root span does not start at 0"});
  if (table.cells.size() != row_leaves) {
    report.push_back({"grid", "grid has " + std::to_string(table.cells.size()) + " rows but row tree has " +
                                  std::to_string(row_leaves) + " leaves"});
  }
  for (std::size_t r = 0; r < table.cells.size(); ++r) {
    if (table.cells[r].size() != col_leaves) {
      report.push_back({"grid/row " + std::to_string(r), "row has " + std::to_string(table.cells[r].size()) +
                                                             " cells but column tree has " +
                                                             std::to_string(col_leaves) + " leaves"});
    }
    for (std::size_t c = 0; c < table.cells[r].size(); ++c) {
      const Cell& cell = table.cells[r][c];
      auto parsed = parse_number(cell.raw);
      std::string where = "cell(" + std::to_string(r) + "," + std::to_string(c) + ")";
      if (parsed.has_value() != cell.numeric.has_value()) {
        report.push_back({where, "numeric field disagrees with raw text '" + cell.raw + "'"});
      } else if (parsed && *cell.numeric != parsed->value) {
        report.push_back({where, "numeric value disagrees with raw text '" + cell.raw + "'"});
      }
    }
  }
  return report;
}

}  // namespace hiertt
