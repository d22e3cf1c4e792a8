#pragma once

// Test-only reference evaluator: arithmetic expression trees evaluated by
// recursion, independent of the program parser and executor. Trees flatten
// into program text in post-order, so the first failing node met by the
// left-to-right recursion is also the first failing step of the program.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace oracle {

enum class Outcome { Value, DivisionByZero, Domain, Overflow };

struct Result {
  Outcome outcome = Outcome::Value;
  double value = 0.0;
};

struct Expr {
  char op = 0;  // 0 for a literal, else one of + - * / ^
  std::string literal;
  std::unique_ptr<Expr> lhs, rhs;
};

inline Result eval(const Expr& e) {
  if (e.op == 0) return {Outcome::Value, std::strtod(e.literal.c_str(), nullptr)};
  Result a = eval(*e.lhs);
  if (a.outcome != Outcome::Value) return a;
  Result b = eval(*e.rhs);
  if (b.outcome != Outcome::Value) return b;
  double x = a.value, y = b.value, r = 0.0;
  if (e.op == '+') r = x + y;
  if (e.op == '-') r = x - y;
  if (e.op == '*') r = x * y;
  if (e.op == '/') {
    if (y == 0.0) return {Outcome::DivisionByZero, 0.0};
    r = x / y;
  }
  if (e.op == '^') {
    if (x < 0.0 && std::floor(y) != y) return {Outcome::Domain, 0.0};
    r = std::pow(x, y);
  }
  if (std::isnan(r) || std::isinf(r)) return {Outcome::Overflow, 0.0};
  return {Outcome::Value, r};
}

inline const char* op_word(char op) {
  switch (op) {
    case '+': return "add";
    case '-': return "subtract";
    case '*': return "multiply";
    case '/': return "divide";
    default: return "exp";
  }
}

// Appends the steps of `e` to `steps` and returns the argument text naming its value.
inline std::string flatten(const Expr& e, std::vector<std::string>& steps) {
  if (e.op == 0) return e.literal;
  std::string a = flatten(*e.lhs, steps);
  std::string b = flatten(*e.rhs, steps);
  steps.push_back(std::string(op_word(e.op)) + "(" + a + ", " + b + ")");
  return "#" + std::to_string(steps.size() - 1);
}

inline std::string to_program_text(const Expr& e) {
  std::vector<std::string> steps;
  flatten(e, steps);
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) out += (i ? ", " : "") + steps[i];
  return out;
}

// Random trees from raw engine outputs only, so the stream is identical on every
// standard library (distributions are implementation-defined).
class Generator {
 public:
  explicit Generator(std::uint32_t seed) : engine_(seed) {}

  std::string literal() {
    std::uint32_t kind = engine_() % 10;
    std::uint32_t raw = engine_();
    char buf[64];
    if (kind == 0) return "0";
    if (kind <= 4) {
      std::snprintf(buf, sizeof buf, "%u", raw % 5000);
    } else if (kind <= 7) {
      std::snprintf(buf, sizeof buf, "%u.%02u", (raw / 100) % 5000, raw % 100);
    } else if (kind == 8) {
      std::snprintf(buf, sizeof buf, "-%u.%u", (raw / 10) % 300, raw % 10);
    } else {
      std::snprintf(buf, sizeof buf, "0.%04u", raw % 10000);
    }
    return buf;
  }

  // Root is always an operator so the flattened program has at least one step.
  std::unique_ptr<Expr> tree(int max_depth, bool root = true) {
    auto e = std::make_unique<Expr>();
    if (max_depth <= 1 || (!root && engine_() % 3 == 0)) {
      e->literal = literal();
      return e;
    }
    static const char ops[] = {'+', '-', '*', '/', '^'};
    e->op = ops[engine_() % 5];
    e->lhs = tree(max_depth - 1, false);
    if (e->op == '^') {
      // small exponents keep most powers finite; some stay fractional to reach the domain rule
      e->rhs = std::make_unique<Expr>();
      std::uint32_t k = engine_() % 8;
      e->rhs->literal = k < 6 ? std::to_string(k) : (k == 6 ? "0.5" : "-1");
    } else {
      e->rhs = tree(max_depth - 1, false);
    }
    return e;
  }

  std::uint32_t raw() { return engine_(); }

 private:
  std::mt19937 engine_;
};

}  // namespace oracle
