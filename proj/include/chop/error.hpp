// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chop {

enum class ErrorCode {
    // core
    UnknownActionName,
    ArityMismatch,
    BadAttribute,
    InvalidInput,
    // simenv
    SchemaError,
    DanglingReference,
    NoSuchElement,
    NoFocusedField,
    OutOfBounds,
    Terminated,
    // miner
    EmptyCorpus,
    NoVerbFound,
    UnparseableSummary,
    MissingDoc,
    // agents
    EmptyPlan,
    NoActionFound,
    BatchNotAllowed,
    // backends
    BackendError,
    ScriptExhausted,
    CassetteMiss,
    TransportError,
    // eval
    MissingGolden,
    DivisionByZero,
    EmptyReference,
    NotAFailure,
    // io
    IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace chop
