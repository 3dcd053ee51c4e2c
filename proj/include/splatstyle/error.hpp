// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace splatstyle {

enum class ErrorCode {
    EmptyScene,
    MismatchedForward,
    EmptyCameraList,
    NonDivisibleResolution,
    ShapeMismatch,
    DimensionMismatch,
    TimestepMismatch,
    IndexOutOfRange,
    DegenerateAlpha,
    ChannelMismatch,
    TooSmallImage,
    LengthMismatch,
    TooShort,
    ZeroDescriptor,
    MalformedFile,
    UnsupportedCameraModel,
    MalformedHeader,
    TruncatedBody,
    DivergenceDetected,
    IoFailure,
    UsageError,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::EmptyScene: return "EmptyScene";
        case ErrorCode::MismatchedForward: return "MismatchedForward";
        case ErrorCode::EmptyCameraList: return "EmptyCameraList";
        case ErrorCode::NonDivisibleResolution: return "NonDivisibleResolution";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::TimestepMismatch: return "TimestepMismatch";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::DegenerateAlpha: return "DegenerateAlpha";
        case ErrorCode::ChannelMismatch: return "ChannelMismatch";
        case ErrorCode::TooSmallImage: return "TooSmallImage";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::ZeroDescriptor: return "ZeroDescriptor";
        case ErrorCode::MalformedFile: return "MalformedFile";
        case ErrorCode::UnsupportedCameraModel: return "UnsupportedCameraModel";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::TruncatedBody: return "TruncatedBody";
        case ErrorCode::DivergenceDetected: return "DivergenceDetected";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::UsageError: return "UsageError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace splatstyle
