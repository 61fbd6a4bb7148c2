#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace blendkg {

/// Base for every error raised by the library. `code()` is a stable
/// identifier suitable for records and exit-code mapping.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define BLENDKG_DEFINE_ERROR(Name)                               \
  class Name : public Error {                                    \
   public:                                                       \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

// rdf_core
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& message)
      : Error("SyntaxError", std::to_string(line) + ":" + std::to_string(column) +
                                 ": " + message),
        line_(line),
        column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class UnknownPrefix : public Error {
 public:
  explicit UnknownPrefix(std::string prefix)
      : Error("UnknownPrefix", "unknown prefix '" + prefix + ":'"),
        prefix_(std::move(prefix)) {}
  const std::string& prefix() const noexcept { return prefix_; }

 private:
  std::string prefix_;
};

// blending_ontology
BLENDKG_DEFINE_ERROR(NoVerdict);
BLENDKG_DEFINE_ERROR(AmbiguousVerdict);
BLENDKG_DEFINE_ERROR(MissingLabels);

class StructureError : public Error {
 public:
  StructureError(std::string finding, const std::string& message)
      : Error("StructureError", finding + ": " + message), finding_(std::move(finding)) {}
  /// The Strict-validation finding code that triggered the error.
  const std::string& finding() const noexcept { return finding_; }

 private:
  std::string finding_;
};

// skg_client
BLENDKG_DEFINE_ERROR(ServiceUnavailable);
BLENDKG_DEFINE_ERROR(BadServiceResponse);
BLENDKG_DEFINE_ERROR(CacheMiss);
BLENDKG_DEFINE_ERROR(EmptyCaption);
BLENDKG_DEFINE_ERROR(ImageDecodeError);

// llm_gateway
BLENDKG_DEFINE_ERROR(AuthError);
BLENDKG_DEFINE_ERROR(ServiceError);
BLENDKG_DEFINE_ERROR(ReplayMiss);
BLENDKG_DEFINE_ERROR(NoTurtleFound);

class RateLimited : public Error {
 public:
  RateLimited(double retry_after_seconds, const std::string& message)
      : Error("RateLimited", message), retry_after_(retry_after_seconds) {}
  double retry_after() const noexcept { return retry_after_; }

 private:
  double retry_after_;
};

// prompt_engine / cli
BLENDKG_DEFINE_ERROR(ConfigError);

// eval_harness
class FormatError : public Error {
 public:
  FormatError(std::size_t row, const std::string& reason)
      : Error("FormatError", "row " + std::to_string(row) + ": " + reason), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

BLENDKG_DEFINE_ERROR(InsufficientClass);
BLENDKG_DEFINE_ERROR(JoinError);
BLENDKG_DEFINE_ERROR(ScorerError);
BLENDKG_DEFINE_ERROR(TieError);
BLENDKG_DEFINE_ERROR(DegenerateMatrix);
BLENDKG_DEFINE_ERROR(DegenerateInput);
BLENDKG_DEFINE_ERROR(UnknownCategory);
BLENDKG_DEFINE_ERROR(IoError);

#undef BLENDKG_DEFINE_ERROR

}  // namespace blendkg
