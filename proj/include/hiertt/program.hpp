#pragma once

// Reasoning programs: a sequence of binary arithmetic steps whose operands are
// literals or references "#k" to the value of an earlier step.
//
//   program := step ( "," step )*
//   step    := op "(" arg "," arg ")"
//   op      := add | subtract | multiply | divide | exp       (case-insensitive)
//   arg     := ["+"|"-"] digits [ "." digits ]  |  "#" digits  |  const_N | const_mN
//
// Whitespace between tokens is ignored. Execution is plain binary64 arithmetic
// in step order with no intermediate rounding.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hiertt/error.hpp"
#include "hiertt/numeric.hpp"

namespace hiertt {

enum class Op { Add, Subtract, Multiply, Divide, Exp };

inline std::string_view op_name(Op op) {
  switch (op) {
    case Op::Add: return "add";
    case Op::Subtract: return "subtract";
    case Op::Multiply: return "multiply";
    case Op::Divide: return "divide";
    case Op::Exp: return "exp";
  }
  return "?";
}

struct StepRef {
  std::size_t index = 0;
  friend bool operator==(const StepRef&, const StepRef&) = default;
};

using Operand = std::variant<double, StepRef>;

struct Step {
  Op op = Op::Add;
  Operand lhs;
  Operand rhs;
  friend bool operator==(const Step&, const Step&) = default;
};

struct Program {
  std::vector<Step> steps;
  friend bool operator==(const Program&, const Program&) = default;
};

namespace detail {

class ProgramParser {
 public:
  explicit ProgramParser(std::string_view text) : text_(text) {}

  Program parse() {
    Program program;
    skip_ws();
    if (at_end()) fail("empty program");
    for (;;) {
      program.steps.push_back(parse_step(program.steps.size()));
      skip_ws();
      if (at_end()) break;
      expect(',');
    }
    return program;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ProgramParseError(pos_, what); }

  bool at_end() const { return pos_ >= text_.size(); }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (at_end() || text_[pos_] != c) {
      fail(std::string("expected '") + c + "'" + (at_end() ? " but input ended" : ""));
    }
    ++pos_;
  }

  Step parse_step(std::size_t own_index) {
    skip_ws();
    std::size_t name_pos = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    std::string name;
    for (char c : text_.substr(name_pos, pos_ - name_pos)) {
      name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    Step step;
    if (name == "add") {
      step.op = Op::Add;
    } else if (name == "subtract") {
      step.op = Op::Subtract;
    } else if (name == "multiply") {
      step.op = Op::Multiply;
    } else if (name == "divide") {
      step.op = Op::Divide;
    } else if (name == "exp") {
      step.op = Op::Exp;
    } else {
      pos_ = name_pos;
      fail(name.empty() ? "expected operator name" : "unsupported operator '" + name + "'");
    }
    expect('(');
    step.lhs = parse_arg(own_index);
    skip_ws();
    if (!at_end() && text_[pos_] == ')') fail("operator '" + name + "' takes exactly 2 arguments");
    expect(',');
    step.rhs = parse_arg(own_index);
    skip_ws();
    if (!at_end() && text_[pos_] == ',') {
      // distinguish a third argument from the next step
      std::size_t save = pos_;
      ++pos_;
      skip_ws();
      bool looks_like_arg = !at_end() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                                          text_[pos_] == '#' || text_[pos_] == '-' || text_[pos_] == '+');
      pos_ = save;
      if (looks_like_arg) fail("operator '" + name + "' takes exactly 2 arguments");
    }
    expect(')');
    return step;
  }

  Operand parse_arg(std::size_t own_index) {
    skip_ws();
    if (at_end()) fail("expected argument but input ended");
    std::size_t start = pos_;
    if (text_[pos_] == ')') fail("operator takes exactly 2 arguments");
    if (text_[pos_] == '#') {
      ++pos_;
      std::size_t digits_start = pos_;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ == digits_start) fail("expected step index after '#'");
      std::size_t index = 0;
      auto [ptr, ec] = std::from_chars(text_.data() + digits_start, text_.data() + pos_, index);
      if (ec != std::errc{}) fail("step index out of range");
      if (index >= own_index) {
        pos_ = start;
        fail("reference #" + std::to_string(index) + " does not point to an earlier step (step " +
             std::to_string(own_index) + ")");
      }
      return StepRef{index};
    }
    if (text_.substr(pos_).starts_with("const_")) {
      pos_ += 6;
      bool negative = false;
      if (!at_end() && text_[pos_] == 'm') {
        negative = true;
        ++pos_;
      }
      std::size_t digits_start = pos_;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ == digits_start) {
        pos_ = start;
        fail("malformed constant");
      }
      double v = 0;
      std::from_chars(text_.data() + digits_start, text_.data() + pos_, v, std::chars_format::fixed);
      return negative ? -v : v;
    }
    std::size_t num_start = pos_;
    if (text_[pos_] == '-' || text_[pos_] == '+') ++pos_;
    std::size_t int_start = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    bool has_int = pos_ > int_start;
    bool has_frac = false;
    if (!at_end() && text_[pos_] == '.') {
      ++pos_;
      std::size_t frac_start = pos_;
      while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      has_frac = pos_ > frac_start;
      if (!has_frac) {
        pos_ = start;
        fail("malformed number");
      }
    }
    if (!has_int && !has_frac) {
      pos_ = start;
      fail("malformed number");
    }
    if (!at_end() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                      text_[pos_] == '%')) {
      pos_ = start;
      fail("malformed number");
    }
    std::string_view lexeme = text_.substr(num_start, pos_ - num_start);
    bool negative = lexeme.front() == '-';
    if (lexeme.front() == '-' || lexeme.front() == '+') lexeme.remove_prefix(1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), v, std::chars_format::fixed);
    if (ec != std::errc{} || !std::isfinite(v)) {
      pos_ = start;
      fail("number out of range");
    }
    return negative ? -v : v;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Program parse_program(std::string_view text) { return detail::ProgramParser(text).parse(); }

inline double apply_op(Op op, double a, double b, std::size_t step) {
  double r = 0;
  switch (op) {
    case Op::Add: r = a + b; break;
    case Op::Subtract: r = a - b; break;
    case Op::Multiply: r = a * b; break;
    case Op::Divide:
      if (b == 0.0) throw ExecutionError(ExecutionError::Kind::DivisionByZero, step, "division by zero");
      r = a / b;
      break;
    case Op::Exp:
      if (a < 0.0 && std::trunc(b) != b) {
        throw ExecutionError(ExecutionError::Kind::Domain, step,
                             "negative base " + format_number(a) + " with non-integer exponent " + format_number(b));
      }
      r = std::pow(a, b);
      break;
  }
  if (!std::isfinite(r)) {
    throw ExecutionError(ExecutionError::Kind::Overflow, step, "non-finite intermediate result");
  }
  return r;
}

// Value of every step, in order.
inline std::vector<double> execute_steps(const Program& program) {
  std::vector<double> values;
  values.reserve(program.steps.size());
  auto value_of = [&](const Operand& o, std::size_t step) -> double {
    if (const double* lit = std::get_if<double>(&o)) return *lit;
    std::size_t k = std::get<StepRef>(o).index;
    if (k >= step) throw Error("step " + std::to_string(step) + " references #" + std::to_string(k));
    return values[k];
  };
  for (std::size_t i = 0; i < program.steps.size(); ++i) {
    const Step& s = program.steps[i];
    values.push_back(apply_op(s.op, value_of(s.lhs, i), value_of(s.rhs, i), i));
  }
  return values;
}

inline double execute(const Program& program) {
  if (program.steps.empty()) throw Error("cannot execute an empty program");
  return execute_steps(program).back();
}

inline std::size_t count_steps(const Program& program) noexcept { return program.steps.size(); }

inline std::string format_program(const Program& program) {
  std::string out;
  auto arg = [&](const Operand& o) {
    if (const double* lit = std::get_if<double>(&o)) {
      out += format_number(*lit);
    } else {
      out += '#';
      out += std::to_string(std::get<StepRef>(o).index);
    }
  };
  for (std::size_t i = 0; i < program.steps.size(); ++i) {
    if (i) out += ',';
    const Step& s = program.steps[i];
    out += op_name(s.op);
    out += '(';
    arg(s.lhs);
    out += ',';
    arg(s.rhs);
    out += ')';
  }
  return out;
}

}  // namespace hiertt
