#include "evtfair/error.hpp"

namespace evtfair {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::TypeMismatch: return "TypeMismatch";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::InvalidSchema: return "InvalidSchema";
        case ErrorCode::InvalidRatios: return "InvalidRatios";
        case ErrorCode::ValueNotInGroup: return "ValueNotInGroup";
        case ErrorCode::InvalidGroup: return "InvalidGroup";
        case ErrorCode::DegenerateLabels: return "DegenerateLabels";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::ExternalModelFailure: return "ExternalModelFailure";
        case ErrorCode::GroupTooSmall: return "GroupTooSmall";
        case ErrorCode::EmptySamples: return "EmptySamples";
        case ErrorCode::EmptyValues: return "EmptyValues";
        case ErrorCode::MissingGroup: return "MissingGroup";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::AllEqual: return "AllEqual";
        case ErrorCode::DegenerateExcesses: return "DegenerateExcesses";
        case ErrorCode::DegenerateExceedances: return "DegenerateExceedances";
        case ErrorCode::FitDiverged: return "FitDiverged";
        case ErrorCode::InvalidFit: return "InvalidFit";
        case ErrorCode::BootstrapUnstable: return "BootstrapUnstable";
        case ErrorCode::DegenerateFit: return "DegenerateFit";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace evtfair
