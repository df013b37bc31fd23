#include "splatscape/error.hpp"

namespace splatscape {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::NoTargets: return "NoTargets";
    case ErrorCode::DegenerateDepth: return "DegenerateDepth";
    case ErrorCode::Exhausted: return "Exhausted";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::TimestepOutOfRange: return "TimestepOutOfRange";
    case ErrorCode::DegenerateRender: return "DegenerateRender";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EndpointUnavailable: return "EndpointUnavailable";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::UnparseableAnswer: return "UnparseableAnswer";
    case ErrorCode::EmptyOverlap: return "EmptyOverlap";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::AdapterFailure: return "AdapterFailure";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace splatscape
