#pragma once

#include <stdexcept>
#include <string>

namespace ncx {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnboundSymbol : public Error {
 public:
  explicit UnboundSymbol(std::string name)
      : Error("unbound symbol '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// log/sqrt of a non-positive value, division by zero, overflow.
class DomainError : public Error {
 public:
  using Error::Error;
};

class NonDifferentiable : public Error {
 public:
  explicit NonDifferentiable(std::string location)
      : Error("not differentiable at " + location), location_(std::move(location)) {}
  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

class SyntaxError : public Error {
 public:
  SyntaxError(int line, int col, std::string expected)
      : Error("syntax error at " + std::to_string(line) + ":" + std::to_string(col) +
              ": expected " + expected),
        line_(line),
        col_(col),
        expected_(std::move(expected)) {}
  int line() const noexcept { return line_; }
  int col() const noexcept { return col_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  int line_;
  int col_;
  std::string expected_;
};

class UndeclaredSymbol : public Error {
 public:
  explicit UndeclaredSymbol(std::string name)
      : Error("undeclared symbol '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class DuplicateDeclaration : public Error {
 public:
  explicit DuplicateDeclaration(std::string name)
      : Error("duplicate declaration of '" + name + "'"), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class BoundViolation : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  SchemaError(std::string path, std::string reason)
      : Error("schema error at " + path + ": " + reason),
        path_(std::move(path)),
        reason_(std::move(reason)) {}
  const std::string& path() const noexcept { return path_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string path_;
  std::string reason_;
};

}  // namespace ncx
