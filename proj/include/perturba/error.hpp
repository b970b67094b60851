#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace perturba {

enum class ErrorKind {
    NotHermitian,
    NotSkewHermitian,
    NotProjection,
    NotPartialIsometry,
    DimensionMismatch,
    DefectTooLarge,
    ProjectionsTooFar,
    RankMismatch,
    CompressionSingular,
    AmbiguousSupport,
    NotRefined,
    SupportMismatch,
    FrameMismatch,
    DimensionOverflow,
    InvalidConfig,
    Io,
};

std::string_view to_string(ErrorKind kind);

// Hypothesis failures are the "input too far from the structure" family;
// everything else is a validation or I/O problem with the input itself.
constexpr bool is_hypothesis_failure(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::DefectTooLarge:
    case ErrorKind::ProjectionsTooFar:
    case ErrorKind::RankMismatch:
    case ErrorKind::CompressionSingular:
    case ErrorKind::AmbiguousSupport:
    case ErrorKind::NotRefined:
    case ErrorKind::SupportMismatch:
    case ErrorKind::FrameMismatch:
        return true;
    default:
        return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string stage, const std::string& detail);

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& stage() const noexcept { return stage_; }
    const std::string& detail() const noexcept { return detail_; }

    // Same error with an outer stage prefixed, e.g. "level 2/regular_stabilize".
    Error within(std::string_view outer) const;

private:
    ErrorKind kind_;
    std::string stage_;
    std::string detail_;
};

} // namespace perturba
