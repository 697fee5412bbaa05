#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace supertc {

enum class ErrorCode {
  // formula parsing
  kEmptyFormula,
  kUnknownElement,
  kMalformedNumber,
  kZeroAmount,
  // dataset ingestion
  kIo,
  kParseRow,
  kNegativeTc,
  kEmptyDataset,
  // tensor engine
  kShapeMismatch,
  kInvalidGeometry,
  kGraphConsumed,
  // model / checkpoint
  kInvalidConfig,
  kVersionMismatch,
  kCorruptCheckpoint,
  // training and metrics
  kNonFiniteLoss,
  kLengthMismatch,
  kEmpty,
  kUsage,
};

// Coarse grouping used by the CLI for exit codes.
enum class ErrorCategory { kUsage, kData, kNumeric };

std::string_view error_code_name(ErrorCode code);
ErrorCategory error_category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> position = std::nullopt)
      : std::runtime_error(message), code_(code), position_(position) {}

  ErrorCode code() const noexcept { return code_; }

  // Byte offset (formula errors), line number (CSV rows), file offset
  // (checkpoints) or epoch (non-finite loss), depending on the code.
  std::optional<std::size_t> position() const noexcept { return position_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> position_;
};

// Formula errors additionally carry the offending symbol text.
class FormulaError : public Error {
 public:
  FormulaError(ErrorCode code, const std::string& message, std::size_t offset,
               std::string symbol = {})
      : Error(code, message, offset), symbol_(std::move(symbol)) {}

  std::size_t offset() const noexcept { return *position(); }
  const std::string& symbol() const noexcept { return symbol_; }

 private:
  std::string symbol_;
};

}  // namespace supertc
