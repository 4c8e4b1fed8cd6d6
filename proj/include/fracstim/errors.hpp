#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fracstim {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PoleError : public Error {
 public:
  using Error::Error;
};

class MissingSymbol : public Error {
 public:
  using Error::Error;
};

class ZeroDivisor : public Error {
 public:
  using Error::Error;
};

class OrderMismatch : public Error {
 public:
  using Error::Error;
};

class NegativeExponent : public Error {
 public:
  using Error::Error;
};

class NegativeOmegaExponent : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

/// Semantic problem-file errors detected after a successful parse.
class SemanticError : public Error {
 public:
  using Error::Error;
};

/// Syntax error with a 1-based source position.
class SourceError : public Error {
 public:
  SourceError(int line, int column, std::string message, std::vector<std::string> expected = {})
      : Error(format(line, column, message, expected)),
        line_(line),
        column_(column),
        message_(std::move(message)),
        expected_(std::move(expected)) {}

  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  static std::string format(int line, int column, const std::string& message,
                            const std::vector<std::string>& expected) {
    std::string out = std::to_string(line) + ":" + std::to_string(column) + ": " + message;
    if (!expected.empty()) {
      out += " (expected ";
      for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i) out += i + 1 == expected.size() ? " or " : ", ";
        out += expected[i];
      }
      out += ")";
    }
    return out;
  }

  int line_;
  int column_;
  std::string message_;
  std::vector<std::string> expected_;
};

}  // namespace fracstim
