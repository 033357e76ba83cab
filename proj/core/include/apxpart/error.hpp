#pragma once

#include <stdexcept>
#include <string>

namespace apxpart {

// Every error carries the name of the module that raised it so that the CLI
// can report provenance and pick the right exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error("[" + module + "] " + message), module_(std::move(module)) {}

  [[nodiscard]] const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

// Malformed or inconsistent user input (declarations, traces, plans, configs).
class InputError : public Error {
 public:
  using Error::Error;
};

// Inputs parsed, but the analysis cannot produce a result (e.g. no misses).
class AnalysisError : public Error {
 public:
  using Error::Error;
};

// Parse error with a 1-based source location.
class SyntaxError : public InputError {
 public:
  SyntaxError(std::string module, std::size_t line, std::size_t column, const std::string& message)
      : InputError(std::move(module), "line " + std::to_string(line) + ", column " +
                                          std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }
  [[nodiscard]] std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace apxpart
