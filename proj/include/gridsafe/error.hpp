#pragma once

#include <stdexcept>
#include <string>

namespace gridsafe {

/// Base class for all errors raised by the library. The category maps onto
/// the CLI exit codes (config/user = 1, numeric = 2, io = 3).
class Error : public std::runtime_error {
 public:
  enum class Category { user, numeric, io };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

/// Malformed input text (case file, chronics, config).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(Category::user, what) {}
};

/// Well-formed input that violates a model invariant.
class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& what) : Error(Category::user, what) {}
};

/// Precondition violated by the caller (stepping a terminal state, underfull buffer, ...).
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(Category::user, what) {}
};

/// Newton-Raphson ran out of iterations or hit a singular Jacobian.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(Category::numeric, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(Category::io, what) {}
};

}  // namespace gridsafe
