#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace qsynth {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter block violates its documented invariants.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// The requested duration/rate would produce more samples than we can hold.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// A signal has no defined scale (e.g. a constant channel).
class DegenerateSignalError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

/// Lengths, channel counts or sample rates do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Unsupported or malformed audio container.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Text parse failure; line() is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A document value failed validation. field() is the dotted/indexed path,
/// e.g. "voices[0].freq_hz". Range violations carry the accepted limits.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what,
                  std::optional<double> min = std::nullopt,
                  std::optional<double> max = std::nullopt)
      : Error(field.empty() ? what : field + ": " + what),
        field_(std::move(field)),
        min_(min),
        max_(max) {}

  const std::string& field() const noexcept { return field_; }
  std::optional<double> min() const noexcept { return min_; }
  std::optional<double> max() const noexcept { return max_; }
  bool is_range() const noexcept { return min_.has_value() || max_.has_value(); }

 private:
  std::string field_;
  std::optional<double> min_;
  std::optional<double> max_;
};

}  // namespace qsynth
