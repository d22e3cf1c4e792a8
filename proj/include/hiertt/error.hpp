#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hiertt {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A (row, col) pair outside the table grid.
class AddressingError : public Error {
 public:
  using Error::Error;
};

// A cell that holds no number under the numeric grammar. Not a parser bug.
class NotANumber : public Error {
 public:
  using Error::Error;
};

// Dataset record violates the declared schema; `field` names the offender.
class SchemaError : public Error {
 public:
  SchemaError(std::string field, std::string detail)
      : Error("schema error at '" + field + "': " + detail), field_(std::move(field)), detail_(std::move(detail)) {}
  const std::string& field() const noexcept { return field_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string field_;
  std::string detail_;
};

// Gold evidence id that does not resolve to a fact of its document.
class DanglingEvidence : public Error {
 public:
  explicit DanglingEvidence(std::string id)
      : Error("dangling evidence id '" + id + "'"), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

// HTML table the parser refuses to handle.
class TableRejected : public Error {
 public:
  using Error::Error;
};

// Malformed program text; `position` is a byte offset into the input.
class ProgramParseError : public Error {
 public:
  ProgramParseError(std::size_t position, const std::string& what)
      : Error("program parse error at " + std::to_string(position) + ": " + what),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class ExecutionError : public Error {
 public:
  enum class Kind { DivisionByZero, Domain, Overflow };
  ExecutionError(Kind kind, std::size_t step, const std::string& what)
      : Error("step " + std::to_string(step) + ": " + what), kind_(kind), step_(step) {}
  Kind kind() const noexcept { return kind_; }
  std::size_t step() const noexcept { return step_; }

 private:
  Kind kind_;
  std::size_t step_;
};

// External scorer misbehaved: bad reply, wrong count, timeout, refused request.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace hiertt
