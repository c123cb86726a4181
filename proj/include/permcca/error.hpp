#pragma once

#include <stdexcept>
#include <string>

namespace permcca {

enum class ErrorCode {
  RankDeficient,
  NoConvergence,
  NotSymmetric,
  SingularMatrix,
  DimensionMismatch,
  NonFinite,
  NoValidSelection,
  InvalidBlocks,
  InvalidOptions,
  InvalidDims,
  TooLarge,
  TooManyComponents,
  UnknownScenario,
  ParseError,
  RaggedRows,
  Io,
};

const char* to_string(ErrorCode code);

// Numeric failures and validation failures share one exception type; the
// code tells callers (and the CLI exit status) which kind it was.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // True for errors caused by bad input rather than numerical breakdown.
  bool is_validation() const noexcept;

private:
  ErrorCode code_;
};

} // namespace permcca
