#include "ehgm/error.hpp"

namespace ehgm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicatePoint: return "DuplicatePoint";
    case ErrorCode::PointOutOfRange: return "PointOutOfRange";
    case ErrorCode::DegreeOutOfRange: return "DegreeOutOfRange";
    case ErrorCode::KNotDivisor: return "KNotDivisor";
    case ErrorCode::BranchOrderViolation: return "BranchOrderViolation";
    case ErrorCode::InfeasibleSize: return "InfeasibleSize";
    case ErrorCode::SeedConflict: return "SeedConflict";
    case ErrorCode::SeedNotPrefix: return "SeedNotPrefix";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NegativeCost: return "NegativeCost";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::TemplateMismatch: return "TemplateMismatch";
    case ErrorCode::InvalidTimeline: return "InvalidTimeline";
    case ErrorCode::EmptyBin: return "EmptyBin";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace ehgm
