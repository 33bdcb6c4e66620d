#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mdcontour {

enum class ErrorCode {
    MissingHeader,
    NonNumericCell,
    BadArity,
    TooFewRows,
    NoNumericColumns,
    IoError,
    VarianceZero,
    InsufficientDimensions,
    DegenerateInput,
    ZeroAreaTriangle,
    TOutOfRange,
    InvalidParameter,
    UnknownDimension,
    FormatError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace mdcontour
