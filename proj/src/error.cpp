#include "permcca/error.hpp"

namespace permcca {

const char* to_string(ErrorCode code)
{
  switch (code) {
  case ErrorCode::RankDeficient: return "RankDeficient";
  case ErrorCode::NoConvergence: return "NoConvergence";
  case ErrorCode::NotSymmetric: return "NotSymmetric";
  case ErrorCode::SingularMatrix: return "SingularMatrix";
  case ErrorCode::DimensionMismatch: return "DimensionMismatch";
  case ErrorCode::NonFinite: return "NonFinite";
  case ErrorCode::NoValidSelection: return "NoValidSelection";
  case ErrorCode::InvalidBlocks: return "InvalidBlocks";
  case ErrorCode::InvalidOptions: return "InvalidOptions";
  case ErrorCode::InvalidDims: return "InvalidDims";
  case ErrorCode::TooLarge: return "TooLarge";
  case ErrorCode::TooManyComponents: return "TooManyComponents";
  case ErrorCode::UnknownScenario: return "UnknownScenario";
  case ErrorCode::ParseError: return "ParseError";
  case ErrorCode::RaggedRows: return "RaggedRows";
  case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

bool Error::is_validation() const noexcept
{
  switch (code_) {
  case ErrorCode::RankDeficient:
  case ErrorCode::NoConvergence:
  case ErrorCode::NotSymmetric:
  case ErrorCode::SingularMatrix:
  case ErrorCode::NonFinite:
    return false;
  default:
    return true;
  }
}

} // namespace permcca
