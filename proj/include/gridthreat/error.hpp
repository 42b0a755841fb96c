#pragma once

#include <stdexcept>
#include <string>

namespace gridthreat {

/// Base class for every error raised by the library. The CLI maps these to
/// exit code 2 (input or validation failure).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed case-file record. Carries the 1-based source line and the
/// section the parser was in.
class ParseError : public Error {
 public:
  ParseError(int line, std::string section, const std::string& what)
      : Error("line " + std::to_string(line) + " [" + section + "]: " + what),
        line_(line),
        section_(std::move(section)) {}

  int line() const noexcept { return line_; }
  const std::string& section() const noexcept { return section_; }

 private:
  int line_;
  std::string section_;
};

/// A structurally invalid GridCase (dangling reference, disconnected graph, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Singular DC system; normally means a disconnection was missed upstream.
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// Measurement set does not determine the state.
class UnobservableError : public Error {
 public:
  UnobservableError(int deficiency, const std::string& what)
      : Error(what), deficiency_(deficiency) {}
  int deficiency() const noexcept { return deficiency_; }

 private:
  int deficiency_;
};

/// No dispatch satisfies the security constraints.
class InfeasibleError : public Error {
 public:
  InfeasibleError(std::string hint, const std::string& what)
      : Error(what), hint_(std::move(hint)) {}
  const std::string& hint() const noexcept { return hint_; }

 private:
  std::string hint_;
};

}  // namespace gridthreat
