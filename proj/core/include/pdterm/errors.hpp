#pragma once

#include <stdexcept>
#include <string>

namespace pdterm {

// Base for anything wrong with inputs (files, configs, panels). CLI maps
// these to exit code 1.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Base for numeric failures during estimation (non-convergence, singular
// systems, degenerate estimators). CLI maps these to exit code 2.
class NumericError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class MissingColumn : public ValidationError {
  public:
    explicit MissingColumn(const std::string& column)
        : ValidationError("missing required column: " + column), column_(column) {}
    const std::string& column() const noexcept { return column_; }

  private:
    std::string column_;
};

class ParseError : public ValidationError {
  public:
    ParseError(std::size_t line, const std::string& what)
        : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;  // 1-based, header included
};

class InvariantViolation : public ValidationError {
  public:
    InvariantViolation(std::size_t line, const std::string& rule)
        : ValidationError("row at line " + std::to_string(line) + " violates: " + rule),
          line_(line), rule_(rule) {}
    std::size_t line() const noexcept { return line_; }
    const std::string& rule() const noexcept { return rule_; }

  private:
    std::size_t line_;
    std::string rule_;
};

class EmptyPanel : public ValidationError {
  public:
    EmptyPanel() : ValidationError("operation requires a non-empty panel") {}
};

class InvalidConfig : public ValidationError {
  public:
    using ValidationError::ValidationError;
};

class NotConverged : public NumericError {
  public:
    using NumericError::NumericError;
};

}  // namespace pdterm
