#include "mdcontour/error.hpp"

namespace mdcontour {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::MissingHeader: return "MissingHeader";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::BadArity: return "BadArity";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::NoNumericColumns: return "NoNumericColumns";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::VarianceZero: return "VarianceZero";
    case ErrorCode::InsufficientDimensions: return "InsufficientDimensions";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::ZeroAreaTriangle: return "ZeroAreaTriangle";
    case ErrorCode::TOutOfRange: return "TOutOfRange";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::UnknownDimension: return "UnknownDimension";
    case ErrorCode::FormatError: return "FormatError";
    }
    return "Unknown";
}

} // namespace mdcontour
