#pragma once

// HTML table -> HierTable.
//
// Columns: header rows are <thead> rows, else leading all-<th> rows, else the
// leading rows whose first cell is empty (at least one row). After colspan /
// rowspan expansion, each header row is one tree level and consecutive data
// columns that share an originating header cell are grouped under it. A group
// that straddles its parent's columns is rejected.
//
// Rows: the first column holds row labels. A body row whose label is set and
// whose other cells are all empty is a section header. Indentation (leading
// spaces / &nbsp; and padding-left or text-indent styles) decides nesting: a
// row attaches under the nearest preceding section with strictly smaller
// indentation.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hiertt/error.hpp"
#include "hiertt/numeric.hpp"
#include "hiertt/table.hpp"

namespace hiertt {

struct HtmlTable {
  HierTable table;
  // (html row, expanded html column) of each data cell -> (row leaf, col leaf)
  std::map<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, std::size_t>> source_to_grid;
};

namespace html {

struct RawCell {
  std::string text;  // entities decoded, whitespace collapsed, trimmed
  double indent = 0.0;
  bool is_header = false;
  std::size_t colspan = 1;
  std::size_t rowspan = 1;
};

struct RawRow {
  std::vector<RawCell> cells;
  bool in_thead = false;
};

struct RawTable {
  std::vector<RawRow> rows;
  std::optional<std::string> caption;
};

inline void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string decode_entities(std::string_view s) {
  static const std::map<std::string_view, std::uint32_t> named = {
      {"amp", '&'},      {"lt", '<'},       {"gt", '>'},       {"quot", '"'},     {"apos", '\''},
      {"nbsp", 0xA0},    {"mdash", 0x2014}, {"ndash", 0x2013}, {"rsquo", 0x2019}, {"lsquo", 0x2018},
      {"ldquo", 0x201C}, {"rdquo", 0x201D}, {"euro", 0x20AC},  {"pound", 0xA3},   {"cent", 0xA2},
      {"hellip", 0x2026}};
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    std::size_t semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    std::string_view name = s.substr(i + 1, semi - i - 1);
    std::optional<std::uint32_t> cp;
    if (!name.empty() && name[0] == '#') {
      bool hex = name.size() > 1 && (name[1] == 'x' || name[1] == 'X');
      std::string digits(name.substr(hex ? 2 : 1));
      if (!digits.empty()) {
        char* end = nullptr;
        unsigned long v = std::strtoul(digits.c_str(), &end, hex ? 16 : 10);
        if (end && *end == '\0' && v > 0 && v < 0x110000) cp = static_cast<std::uint32_t>(v);
      }
    } else if (auto it = named.find(name); it != named.end()) {
      cp = it->second;
    }
    if (!cp) {
      out.push_back('&');
      continue;
    }
    append_utf8(out, *cp);
    i = semi;
  }
  return out;
}

// Collapses whitespace runs (including no-break spaces) to one space and
// trims. `leading` receives the number of whitespace characters stripped
// from the front.
inline std::string collapse_whitespace(std::string_view s, std::size_t& leading) {
  std::string out;
  leading = 0;
  bool seen_text = false;
  bool pending_space = false;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t w = 0;
    if (detail::is_space_at(s, i, w)) {
      if (!seen_text) {
        ++leading;
      } else {
        pending_space = true;
      }
      i += w;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    seen_text = true;
    out.push_back(s[i]);
    ++i;
  }
  return out;
}

// padding-left / text-indent in px (pt and em converted), 0 when absent.
inline double style_indent(std::string_view style) {
  std::string lower;
  for (char c : style) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  double total = 0.0;
  for (std::string_view key : {std::string_view("padding-left"), std::string_view("text-indent"),
                               std::string_view("margin-left")}) {
    std::size_t p = lower.find(key);
    if (p == std::string::npos) continue;
    p = lower.find(':', p);
    if (p == std::string::npos) continue;
    const char* begin = lower.c_str() + p + 1;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) continue;
    std::string_view unit(end, std::min<std::size_t>(2, std::strlen(end)));
    if (unit == "pt") {
      v *= 4.0 / 3.0;
    } else if (unit == "em") {
      v *= 16.0;
    }
    total += v;
  }
  return total;
}

class Tokenizer {
 public:
  explicit Tokenizer(std::string_view html) : s_(html) {}

  RawTable run() {
    RawTable table;
    bool in_table = false;
    bool done = false;
    bool in_thead = false;
    bool in_caption = false;
    std::string caption_text;
    RawRow* row = nullptr;
    RawCell* cell = nullptr;
    std::string cell_buffer;
    std::string cell_style;

    auto close_cell = [&] {
      if (!cell) return;
      std::string decoded = decode_entities(cell_buffer);
      std::size_t leading = 0;
      cell->text = collapse_whitespace(decoded, leading);
      cell->indent = static_cast<double>(leading) * 4.0 + style_indent(cell_style);
      cell = nullptr;
      cell_buffer.clear();
      cell_style.clear();
    };
    auto close_row = [&] {
      close_cell();
      row = nullptr;
    };

    while (pos_ < s_.size() && !done) {
      if (s_[pos_] != '<') {
        std::size_t next = s_.find('<', pos_);
        if (next == std::string_view::npos) next = s_.size();
        if (cell) {
          cell_buffer.append(s_.substr(pos_, next - pos_));
        } else if (in_caption) {
          caption_text.append(s_.substr(pos_, next - pos_));
        }
        pos_ = next;
        continue;
      }
      if (s_.substr(pos_).starts_with("<!--")) {
        std::size_t end = s_.find("-->", pos_);
        pos_ = end == std::string_view::npos ? s_.size() : end + 3;
        continue;
      }
      Tag tag = read_tag();
      if (tag.name.empty()) continue;
      if (tag.name == "table") {
        if (tag.closing) {
          close_row();
          done = in_table;
        } else if (in_table) {
          throw TableRejected("nested table");
        } else {
          in_table = true;
        }
        continue;
      }
      if (!in_table) continue;
      if (tag.name == "caption") {
        in_caption = !tag.closing;
        if (tag.closing) {
          std::size_t leading = 0;
          std::string text = collapse_whitespace(decode_entities(caption_text), leading);
          if (!text.empty()) table.caption = text;
        }
      } else if (tag.name == "thead") {
        in_thead = !tag.closing;
      } else if (tag.name == "tbody" || tag.name == "tfoot") {
        if (!tag.closing) in_thead = false;
      } else if (tag.name == "tr") {
        close_row();
        if (!tag.closing) {
          table.rows.push_back(RawRow{{}, in_thead});
          row = &table.rows.back();
        }
      } else if (tag.name == "td" || tag.name == "th") {
        close_cell();
        if (tag.closing) continue;
        if (!row) {
          table.rows.push_back(RawRow{{}, in_thead});
          row = &table.rows.back();
        }
        RawCell c;
        c.is_header = tag.name == "th";
        c.colspan = span_attr(tag, "colspan");
        c.rowspan = span_attr(tag, "rowspan");
        row->cells.push_back(std::move(c));
        cell = &row->cells.back();
        if (auto it = tag.attrs.find("style"); it != tag.attrs.end()) cell_style = it->second;
      } else if (tag.name == "br" || tag.name == "p" || tag.name == "div") {
        if (cell) cell_buffer.push_back(' ');
      }
    }
    if (!in_table) throw TableRejected("no <table> element");
    close_row();
    return table;
  }

 private:
  struct Tag {
    std::string name;
    bool closing = false;
    std::map<std::string, std::string> attrs;
  };

  static std::size_t span_attr(const Tag& tag, const std::string& key) {
    auto it = tag.attrs.find(key);
    if (it == tag.attrs.end()) return 1;
    long v = std::strtol(it->second.c_str(), nullptr, 10);
    if (v < 1) return 1;
    if (v > 1000) throw TableRejected(key + " too large");
    return static_cast<std::size_t>(v);
  }

  Tag read_tag() {
    Tag tag;
    ++pos_;  // '<'
    if (pos_ < s_.size() && (s_[pos_] == '!' || s_[pos_] == '?')) {
      std::size_t end = s_.find('>', pos_);
      pos_ = end == std::string_view::npos ? s_.size() : end + 1;
      return tag;
    }
    if (pos_ < s_.size() && s_[pos_] == '/') {
      tag.closing = true;
      ++pos_;
    }
    while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) {
      tag.name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s_[pos_]))));
      ++pos_;
    }
    for (;;) {
      while (pos_ < s_.size() && (std::isspace(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '/')) ++pos_;
      if (pos_ >= s_.size()) break;
      if (s_[pos_] == '>') {
        ++pos_;
        break;
      }
      std::string key;
      while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '=' &&
             s_[pos_] != '>' && s_[pos_] != '/') {
        key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s_[pos_]))));
        ++pos_;
      }
      while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      std::string value;
      if (pos_ < s_.size() && s_[pos_] == '=') {
        ++pos_;
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == '"' || s_[pos_] == '\'')) {
          char q = s_[pos_++];
          std::size_t end = s_.find(q, pos_);
          if (end == std::string_view::npos) end = s_.size();
          value = decode_entities(s_.substr(pos_, end - pos_));
          pos_ = std::min(end + 1, s_.size());
        } else {
          while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '>') {
            value.push_back(s_[pos_++]);
          }
        }
      }
      if (key.empty()) {
        ++pos_;
        continue;
      }
      tag.attrs[key] = value;
    }
    return tag;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

inline bool is_currency_only(std::string_view t) {
  for (auto sym : detail::kCurrencySymbols) {
    if (t == sym) return true;
  }
  return false;
}

// Expanded grid entry: index into the flat cell list, or -1 for a hole.
struct Expanded {
  std::vector<RawCell> cells;
  std::vector<std::vector<long>> grid;
};

inline Expanded expand(const RawTable& raw) {
  Expanded ex;
  std::vector<std::vector<long>>& grid = ex.grid;
  grid.resize(raw.rows.size());
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    std::size_t c = 0;
    for (const RawCell& cell : raw.rows[r].cells) {
      while (c < grid[r].size() && grid[r][c] != -1) ++c;
      long id = static_cast<long>(ex.cells.size());
      ex.cells.push_back(cell);
      std::size_t last_row = std::min(raw.rows.size(), r + cell.rowspan);
      for (std::size_t rr = r; rr < last_row; ++rr) {
        if (grid[rr].size() < c + cell.colspan) grid[rr].resize(c + cell.colspan, -1);
        for (std::size_t cc = c; cc < c + cell.colspan; ++cc) {
          if (grid[rr][cc] != -1) throw TableRejected("overlapping cell spans");
          grid[rr][cc] = id;
        }
      }
      c += cell.colspan;
    }
  }
  std::size_t width = 0;
  for (const auto& row : grid) width = std::max(width, row.size());
  for (auto& row : grid) row.resize(width, -1);
  return ex;
}

}  // namespace html

namespace detail {

struct ColumnTreeBuilder {
  const std::vector<std::vector<long>>& header_ids;  // [level][data column] -> origin id (unique when hole)
  const std::vector<std::string>& labels_by_id;
  const std::map<long, std::pair<std::size_t, std::size_t>>& extent;  // id -> data column range per level
  std::size_t levels;

  void build(HeaderNode& parent, std::size_t a, std::size_t b, std::size_t level, long parent_id) const {
    if (level == levels) {
      if (b - a > 1) {
        for (std::size_t c = a; c < b; ++c) parent.children.push_back(HeaderNode::leaf(""));
      }
      return;
    }
    std::size_t c = a;
    while (c < b) {
      long id = header_ids[level][c];
      std::size_t run_end = c;
      while (run_end < b && header_ids[level][run_end] == id) ++run_end;
      auto ext = extent.at(id);
      if (ext.first < a || ext.second > b) {
        throw TableRejected("column header '" + label(id) + "' straddles its parent group");
      }
      if (id == parent_id) {
        // rowspan continuation of the parent header
        build(parent, c, run_end, level + 1, parent_id);
      } else {
        HeaderNode node = HeaderNode::leaf(label(id));
        build(node, c, run_end, level + 1, id);
        if (node.children.empty() && run_end - c > 1) {
          for (std::size_t k = c; k < run_end; ++k) node.children.push_back(HeaderNode::leaf(""));
        }
        parent.children.push_back(std::move(node));
      }
      c = run_end;
    }
  }

  std::string label(long id) const { return id >= 0 ? labels_by_id[static_cast<std::size_t>(id)] : std::string(); }
};

}  // namespace detail

inline HtmlTable parse_html_table(std::string_view html, std::string table_id = "t0") {
  html::RawTable raw = html::Tokenizer(html).run();
  if (raw.rows.empty()) throw TableRejected("table has no rows");
  html::Expanded ex = html::expand(raw);
  const std::size_t nrows = ex.grid.size();
  const std::size_t width = ex.grid.front().size();
  if (width < 2) throw TableRejected("table has no data columns");

  auto text_at = [&](std::size_t r, std::size_t c) -> std::string {
    long id = ex.grid[r][c];
    return id < 0 ? std::string() : ex.cells[static_cast<std::size_t>(id)].text;
  };

  // header rows
  std::size_t header_rows = 0;
  while (header_rows < nrows && raw.rows[header_rows].in_thead) ++header_rows;
  if (header_rows == 0) {
    auto all_th = [&](std::size_t r) {
      if (raw.rows[r].cells.empty()) return false;
      for (const auto& c : raw.rows[r].cells) {
        if (!c.is_header) return false;
      }
      return true;
    };
    while (header_rows < nrows && all_th(header_rows)) ++header_rows;
  }
  if (header_rows == 0) {
    auto has_text = [&](std::size_t r) {
      for (std::size_t c = 0; c < width; ++c) {
        if (!text_at(r, c).empty()) return true;
      }
      return false;
    };
    while (header_rows < nrows && text_at(header_rows, 0).empty() && has_text(header_rows)) ++header_rows;
    if (header_rows == 0) header_rows = 1;
  }
  if (header_rows >= nrows) throw TableRejected("table has no data rows");

  // body cell texts, with lone currency / percent / closing-paren cells folded into neighbours
  std::vector<std::vector<std::string>> body(nrows - header_rows, std::vector<std::string>(width));
  for (std::size_t r = header_rows; r < nrows; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      long id = ex.grid[r][c];
      if (id >= 0 && r > 0 && ex.grid[r - 1][c] == id && r - 1 >= header_rows) {
        throw TableRejected("row span inside the table body");
      }
      if (id >= 0 && c > 0 && ex.grid[r][c - 1] == id) continue;  // colspan continuation
      body[r - header_rows][c] = text_at(r, c);
    }
  }
  for (auto& row : body) {
    for (std::size_t c = 1; c < width; ++c) {
      if (html::is_currency_only(row[c])) {
        std::size_t next = c + 1;
        while (next < width && row[next].empty()) ++next;
        if (next < width && parse_number(row[c] + row[next])) {
          row[next] = row[c] + row[next];
          row[c].clear();
        }
      } else if ((row[c] == "%" || row[c] == ")" || row[c] == ")%") && c > 1) {
        std::size_t prev = c - 1;
        while (prev > 0 && row[prev].empty()) --prev;
        if (prev > 0 && parse_number(row[prev] + row[c])) {
          row[prev] += row[c];
          row[c].clear();
        }
      }
    }
  }

  // data columns: drop spacer columns (empty body and no own header label)
  std::vector<std::size_t> data_cols;
  for (std::size_t c = 1; c < width; ++c) {
    bool body_empty = std::all_of(body.begin(), body.end(), [&](const auto& row) { return row[c].empty(); });
    bool header_own_label = false;
    for (std::size_t h = 0; h < header_rows; ++h) {
      long id = ex.grid[h][c];
      if (id < 0) continue;
      const auto& cell = ex.cells[static_cast<std::size_t>(id)];
      if (!cell.text.empty() && cell.colspan == 1) header_own_label = true;
    }
    if (!(body_empty && !header_own_label)) data_cols.push_back(c);
  }
  if (data_cols.empty()) throw TableRejected("table has no data columns");

  // column tree
  std::vector<std::string> labels_by_id;
  for (const auto& c : ex.cells) labels_by_id.push_back(c.text);
  std::vector<std::vector<long>> header_ids(header_rows, std::vector<long>(data_cols.size()));
  std::map<long, std::pair<std::size_t, std::size_t>> extent;
  for (std::size_t h = 0; h < header_rows; ++h) {
    for (std::size_t k = 0; k < data_cols.size(); ++k) {
      long id = ex.grid[h][data_cols[k]];
      if (id < 0) id = -static_cast<long>(h * data_cols.size() + k) - 2;  // unique hole id
      header_ids[h][k] = id;
      auto [it, inserted] = extent.try_emplace(id, k, k + 1);
      if (!inserted) {
        it->second.first = std::min(it->second.first, k);
        it->second.second = std::max(it->second.second, k + 1);
      }
    }
  }
  HierTable table;
  table.table_id = std::move(table_id);
  table.caption = raw.caption;
  detail::ColumnTreeBuilder builder{header_ids, labels_by_id, extent, header_rows};
  builder.build(table.col_tree, 0, data_cols.size(), 0, -1);
  finalize_root(table.col_tree);

  // row tree by indentation
  // open sections are tracked by child-index path; pointers would dangle on reallocation
  std::vector<std::vector<std::size_t>> open_paths{{}};
  auto node_at = [&](const std::vector<std::size_t>& path) {
    HeaderNode* n = &table.row_tree;
    for (std::size_t i : path) n = &n->children[i];
    return n;
  };
  std::vector<double> open_indents{-1.0};
  std::vector<std::vector<std::string>> data_rows;
  std::vector<std::size_t> data_row_source;
  std::vector<std::vector<std::size_t>> leaf_paths;
  std::vector<bool> section_flags;

  for (std::size_t b = 0; b < body.size(); ++b) {
    const auto& row = body[b];
    const std::size_t r = b + header_rows;
    const std::string& label = row[0];
    long lead_id = ex.grid[r][0];
    double indent = lead_id >= 0 ? ex.cells[static_cast<std::size_t>(lead_id)].indent : 0.0;
    bool data_empty = std::all_of(data_cols.begin(), data_cols.end(), [&](std::size_t c) { return row[c].empty(); });
    if (data_empty && label.empty()) continue;
    if (!data_empty && label.empty()) {
      // a label sitting in a later column means row headers are not confined to the leading column
      std::size_t first = 0;
      while (first < data_cols.size() && row[data_cols[first]].empty()) ++first;
      bool later_numeric = false;
      for (std::size_t k = first + 1; k < data_cols.size(); ++k) {
        if (parse_number(row[data_cols[k]])) later_numeric = true;
      }
      if (!parse_number(row[data_cols[first]]) && later_numeric) {
        throw TableRejected("row header outside the leading column");
      }
    }
    while (open_indents.size() > 1 && open_indents.back() >= indent) {
      open_indents.pop_back();
      open_paths.pop_back();
    }
    HeaderNode* parent = node_at(open_paths.back());
    parent->children.push_back(HeaderNode::leaf(label));
    std::vector<std::size_t> path = open_paths.back();
    path.push_back(parent->children.size() - 1);
    if (data_empty) {
      open_paths.push_back(path);
      open_indents.push_back(indent);
    } else {
      std::vector<std::string> cells;
      for (std::size_t c : data_cols) cells.push_back(row[c]);
      data_rows.push_back(std::move(cells));
      data_row_source.push_back(r);
    }
    leaf_paths.push_back(path);
    section_flags.push_back(data_empty);
  }
  if (table.row_tree.children.empty()) throw TableRejected("table has no data rows");

  // DFS over the row tree yields rows in source order; childless sections become empty rows
  HtmlTable out;
  std::size_t data_index = 0;
  std::size_t leaf_index = 0;
  for (std::size_t i = 0; i < leaf_paths.size(); ++i) {
    HeaderNode* node = node_at(leaf_paths[i]);
    if (!node->children.empty()) continue;
    std::vector<Cell> cells;
    if (section_flags[i]) {
      cells.assign(data_cols.size(), Cell::from_raw(""));
    } else {
      const auto& texts = data_rows[data_index];
      for (std::size_t k = 0; k < texts.size(); ++k) {
        cells.push_back(Cell::from_raw(texts[k]));
        out.source_to_grid[{data_row_source[data_index], data_cols[k]}] = {leaf_index, k};
      }
      ++data_index;
    }
    table.cells.push_back(std::move(cells));
    ++leaf_index;
  }
  finalize_root(table.row_tree);
  out.table = std::move(table);
  return out;
}

}  // namespace hiertt
