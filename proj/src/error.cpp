#include "perturba/error.hpp"

namespace perturba {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotSkewHermitian: return "NotSkewHermitian";
    case ErrorKind::NotProjection: return "NotProjection";
    case ErrorKind::NotPartialIsometry: return "NotPartialIsometry";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DefectTooLarge: return "DefectTooLarge";
    case ErrorKind::ProjectionsTooFar: return "ProjectionsTooFar";
    case ErrorKind::RankMismatch: return "RankMismatch";
    case ErrorKind::CompressionSingular: return "CompressionSingular";
    case ErrorKind::AmbiguousSupport: return "AmbiguousSupport";
    case ErrorKind::NotRefined: return "NotRefined";
    case ErrorKind::SupportMismatch: return "SupportMismatch";
    case ErrorKind::FrameMismatch: return "FrameMismatch";
    case ErrorKind::DimensionOverflow: return "DimensionOverflow";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

namespace {

std::string compose(ErrorKind kind, const std::string& stage, const std::string& detail) {
    std::string msg(to_string(kind));
    if (!stage.empty()) {
        msg += " [" + stage + "]";
    }
    if (!detail.empty()) {
        msg += ": " + detail;
    }
    return msg;
}

} // namespace

Error::Error(ErrorKind kind, std::string stage, const std::string& detail)
    : std::runtime_error(compose(kind, stage, detail)), kind_(kind), stage_(std::move(stage)), detail_(detail) {}

Error Error::within(std::string_view outer) const {
    std::string stage(outer);
    if (!stage_.empty()) {
        stage += "/" + stage_;
    }
    return Error(kind_, std::move(stage), detail_);
}

} // namespace perturba
