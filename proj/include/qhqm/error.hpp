#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qhqm {

enum class ErrorCode {
    NonFinite,
    NotSquare,
    DimensionMismatch,
    DegenerateSpectrum,
    ComplexSpectrum,
    IllConditioned,
    SelfOrthogonal,
    NotObservable,
    PredictionMismatch,
    NotHermitian,
    DegenerateLevel,
    MissingMetric,
    BadParams,
    BranchCollision,
    TruncationTooSmall,
    OverflowGuard,
    InsufficientOrders,
    SpuriousPole,
    ConfigInvalid,
    Io,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::NotSquare: return "NotSquare";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
        case ErrorCode::ComplexSpectrum: return "ComplexSpectrum";
        case ErrorCode::IllConditioned: return "IllConditioned";
        case ErrorCode::SelfOrthogonal: return "SelfOrthogonal";
        case ErrorCode::NotObservable: return "NotObservable";
        case ErrorCode::PredictionMismatch: return "PredictionMismatch";
        case ErrorCode::NotHermitian: return "NotHermitian";
        case ErrorCode::DegenerateLevel: return "DegenerateLevel";
        case ErrorCode::MissingMetric: return "MissingMetric";
        case ErrorCode::BadParams: return "BadParams";
        case ErrorCode::BranchCollision: return "BranchCollision";
        case ErrorCode::TruncationTooSmall: return "TruncationTooSmall";
        case ErrorCode::OverflowGuard: return "OverflowGuard";
        case ErrorCode::InsufficientOrders: return "InsufficientOrders";
        case ErrorCode::SpuriousPole: return "SpuriousPole";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

/// Every library failure carries the module that raised it and a stable code,
/// so the CLI can turn it into a machine-readable error object.
/// Shortest round-trip decimal form, for messages.
inline std::string format_number(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

class Error : public std::runtime_error {
public:
    Error(std::string_view module, ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(module) + ": " + std::string(to_string(code)) + ": " + message),
          module_(module),
          code_(code),
          detail_(message) {}

    const std::string& module() const noexcept { return module_; }
    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string module_;
    ErrorCode code_;
    std::string detail_;
};

}  // namespace qhqm
