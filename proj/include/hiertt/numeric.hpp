#pragma once

// Numeric grammar for financial table cells and answers.
//
//   number  := currency? ( "(" currency? unsigned "%"? ")" | sign? currency? unsigned ) "%"?
//   unsigned:= digits ( "," ddd )* ( "." digits )?  |  "." digits
//   currency:= "$" | "€" | "£"
//
// Parentheses negate. A parenthesized number never carries a sign. '%' is kept
// as a unit hint and the magnitude is not rescaled. Parsing goes through
// std::from_chars, so results do not depend on the C locale.

#include <array>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

namespace hiertt {

struct ParsedNumber {
  double value = 0.0;
  std::string unit_hint;  // currency symbol and/or "%", empty when undecorated

  friend bool operator==(const ParsedNumber&, const ParsedNumber&) = default;
};

namespace detail {

inline constexpr std::array<std::string_view, 3> kCurrencySymbols = {"$", "\xE2\x82\xAC", "\xC2\xA3"};

inline bool is_space_at(std::string_view s, std::size_t i, std::size_t& width) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
    width = 1;
    return true;
  }
  // U+00A0 no-break space, common in exported financial HTML
  if (c == 0xC2 && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0xA0) {
    width = 2;
    return true;
  }
  return false;
}

}  // namespace detail

// Trims ASCII whitespace and no-break spaces from both ends.
inline std::string_view trim(std::string_view s) {
  std::size_t w = 0;
  while (!s.empty() && detail::is_space_at(s, 0, w)) s.remove_prefix(w);
  for (;;) {
    if (s.empty()) break;
    if (s.size() >= 2 && static_cast<unsigned char>(s[s.size() - 2]) == 0xC2 &&
        static_cast<unsigned char>(s.back()) == 0xA0) {
      s.remove_suffix(2);
      continue;
    }
    unsigned char c = static_cast<unsigned char>(s.back());
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      s.remove_suffix(1);
      continue;
    }
    break;
  }
  return s;
}

namespace detail {

class NumberScanner {
 public:
  explicit NumberScanner(std::string_view s) : s_(s) {}

  std::optional<ParsedNumber> run() {
    std::string currency = take_currency();
    bool negative = false;
    bool percent = false;
    std::string digits;

    if (peek('(')) {
      ++pos_;
      if (currency.empty()) currency = take_currency();
      if (!take_unsigned(digits)) return std::nullopt;
      percent = take('%');
      if (!take(')')) return std::nullopt;
      negative = true;
    } else {
      if (peek('-') || peek('+')) {
        negative = s_[pos_] == '-';
        ++pos_;
      }
      if (currency.empty()) currency = take_currency();
      if (!take_unsigned(digits)) return std::nullopt;
    }
    if (take('%')) {
      if (percent) return std::nullopt;
      percent = true;
    }
    if (pos_ != s_.size()) return std::nullopt;

    double value = 0.0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value,
                                     std::chars_format::fixed);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || !std::isfinite(value)) {
      return std::nullopt;
    }
    ParsedNumber out;
    out.value = negative ? -value : value;
    if (out.value == 0.0) out.value = 0.0;  // no negative zero
    out.unit_hint = currency + (percent ? "%" : "");
    return out;
  }

 private:
  bool peek(char c) const { return pos_ < s_.size() && s_[pos_] == c; }
  bool take(char c) {
    if (!peek(c)) return false;
    ++pos_;
    return true;
  }
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  std::string take_currency() {
    for (auto sym : kCurrencySymbols) {
      if (s_.substr(pos_).starts_with(sym)) {
        pos_ += sym.size();
        return std::string(sym);
      }
    }
    return {};
  }

  // Writes the digits (commas removed) into `out`; false on malformed grouping.
  bool take_unsigned(std::string& out) {
    std::size_t start = pos_;
    while (pos_ < s_.size() && (is_digit(s_[pos_]) || s_[pos_] == ',')) ++pos_;
    std::string_view int_part = s_.substr(start, pos_ - start);
    if (int_part.find(',') != std::string_view::npos) {
      std::size_t first = int_part.find(',');
      if (first == 0 || first > 3) return false;
      std::size_t i = first;
      while (i < int_part.size()) {
        // each group: ',' followed by exactly three digits
        if (int_part[i] != ',' || i + 3 >= int_part.size()) return false;
        for (std::size_t k = 1; k <= 3; ++k) {
          if (!is_digit(int_part[i + k])) return false;
        }
        i += 4;
      }
    }
    for (char c : int_part) {
      if (c != ',') out.push_back(c);
    }
    if (take('.')) {
      std::size_t frac_start = pos_;
      while (pos_ < s_.size() && is_digit(s_[pos_])) ++pos_;
      if (pos_ == frac_start) return false;
      out.push_back('.');
      out.append(s_.substr(frac_start, pos_ - frac_start));
      if (int_part.empty()) out.insert(out.begin(), '0');
    }
    return !out.empty() && out != ".";
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// Parses `text` under the numeric grammar; nullopt when it is not a number.
inline std::optional<ParsedNumber> parse_number(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  return detail::NumberScanner(text).run();
}

// Shortest fixed-notation text that reads back to exactly `value`.
inline std::string format_number(double value) {
  if (value == 0.0) return "0";
  std::array<char, 512> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed);
  if (ec != std::errc{}) {
    auto r = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), r.ptr);
  }
  return std::string(buf.data(), ptr);
}

// Round half away from zero to `places` decimal places.
inline double round_to(double value, int places) {
  double scale = std::pow(10.0, places);
  double r = std::round(value * scale) / scale;
  return r == 0.0 ? 0.0 : r;
}

}  // namespace hiertt
