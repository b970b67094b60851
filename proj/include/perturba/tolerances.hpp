#pragma once

#include <cstddef>

namespace perturba {

/// Every numerical threshold used by the toolkit, in one place.
///
/// Dimension-scaled quantities are stored per unit dimension; use the
/// accessors to obtain the value for a concrete matrix size.
struct Tolerances {
    double herm_tol = 1e-10;   // relative: ||b - b*|| <= herm_tol * ||b||
    double recon_tol = 1e-11;  // per dimension, relative to ||input||
    double rank_tol = 1e-10;   // relative to the largest singular value
    double struct_tol = 1e-9;  // per dimension, absolute
    std::size_t brute_limit = 12;

    double struct_tol_for(std::size_t n) const { return struct_tol * static_cast<double>(n == 0 ? 1 : n); }
    double recon_tol_for(std::size_t n, double scale) const {
        return recon_tol * static_cast<double>(n == 0 ? 1 : n) * (scale > 1.0 ? scale : 1.0);
    }
};

inline const Tolerances& default_tolerances() {
    static const Tolerances tol{};
    return tol;
}

// Hypothesis thresholds from the correction constructions.
inline constexpr double kRoundingCeiling = 0.25;     // ||b^2 - b|| must stay below this
inline constexpr double kSpectralCut = 0.5;          // eigenvalue rounding threshold
inline constexpr double kSelfadjointGate = 0.125;    // half the rounding ceiling
inline constexpr double kSupportThreshold = 0.5;     // |v_ij| > 1/2 selects the support

} // namespace perturba
