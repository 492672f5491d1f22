#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace xgen {

enum class ErrorCode {
  kMalformedLine,
  kMissingField,
  kDuplicateId,
  kDomainMismatch,
  kInvalidSample,
  kEmptyText,
  kEmptyCorpus,
  kSingleClassData,
  kNonFiniteLoss,
  kEmptyTestSet,
  kKeyMismatch,
  kUnknownGenerator,
  kLengthMismatch,
  kTooFewSamples,
  kEmptyEnsemble,
  kInsufficientSamples,
  kCorpusTooSmall,
  kUnknownContext,
  kInconsistentUniverse,
  kInvalidArgument,
  kInvalidConfig,
  kDigestMismatch,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Validation errors come from bad inputs (files, configs, arguments); the CLI
// maps them to exit code 1. Everything else is a runtime failure (exit 2).
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::size_t line = 0)
      : std::runtime_error(message), code_(code), line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  // 1-based input line for ingestion errors, 0 otherwise.
  std::size_t line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::size_t line_;
};

}  // namespace xgen
