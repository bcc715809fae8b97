#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evtfair {

enum class ErrorCode {
    MissingColumn,
    TypeMismatch,
    EmptyDataset,
    InvalidSchema,
    InvalidRatios,
    ValueNotInGroup,
    InvalidGroup,
    DegenerateLabels,
    SchemaMismatch,
    ExternalModelFailure,
    GroupTooSmall,
    EmptySamples,
    EmptyValues,
    MissingGroup,
    TooFewSamples,
    AllEqual,
    DegenerateExcesses,
    DegenerateExceedances,
    FitDiverged,
    InvalidFit,
    BootstrapUnstable,
    DegenerateFit,
    EmptyInput,
    InvalidArgument,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every domain failure in the library is reported through this type; the
// code is stable and machine-parsable, the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace evtfair
