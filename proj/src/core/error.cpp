// SPDX-License-Identifier: Apache-2.0
#include "chop/error.hpp"

namespace chop {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::UnknownActionName: return "UnknownActionName";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::BadAttribute: return "BadAttribute";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::NoSuchElement: return "NoSuchElement";
    case ErrorCode::NoFocusedField: return "NoFocusedField";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::Terminated: return "Terminated";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::NoVerbFound: return "NoVerbFound";
    case ErrorCode::UnparseableSummary: return "UnparseableSummary";
    case ErrorCode::MissingDoc: return "MissingDoc";
    case ErrorCode::EmptyPlan: return "EmptyPlan";
    case ErrorCode::NoActionFound: return "NoActionFound";
    case ErrorCode::BatchNotAllowed: return "BatchNotAllowed";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::ScriptExhausted: return "ScriptExhausted";
    case ErrorCode::CassetteMiss: return "CassetteMiss";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::MissingGolden: return "MissingGolden";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::NotAFailure: return "NotAFailure";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace chop
