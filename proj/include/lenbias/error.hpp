#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lenbias {

/// Base of every error raised by the library. `kind()` is a stable short
/// identifier used by the CLI when it reports a structured failure.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("parse", "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

#define LENBIAS_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& message) : Error(Kind, message) {}   \
  };

LENBIAS_DEFINE_ERROR(ArityError, "arity")
LENBIAS_DEFINE_ERROR(UniquenessError, "uniqueness")
LENBIAS_DEFINE_ERROR(ProfileError, "profile")
LENBIAS_DEFINE_ERROR(InjectionError, "injection")
LENBIAS_DEFINE_ERROR(SearchError, "search")
LENBIAS_DEFINE_ERROR(FilterError, "filter")
LENBIAS_DEFINE_ERROR(TrainingError, "training")
LENBIAS_DEFINE_ERROR(FillError, "fill")
LENBIAS_DEFINE_ERROR(TransportError, "transport")
LENBIAS_DEFINE_ERROR(CoverageError, "coverage")
LENBIAS_DEFINE_ERROR(ConfigError, "config")
LENBIAS_DEFINE_ERROR(IoError, "io")

#undef LENBIAS_DEFINE_ERROR

}  // namespace lenbias
