#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "perturba/algebra_model.hpp"

namespace perturba {

/// Measured record of one correction.
struct CorrectionCertificate {
    double input_defect = 0.0;         // the epsilon of the hypothesis
    double correction_distance = 0.0;  // ||x - xhat||
    double structural_residual = 0.0;  // violation of the target identity by xhat
    std::optional<double> bound_claimed;
};

template <class T>
struct Corrected {
    T value;
    CorrectionCertificate cert;
};

/// Spectral rounding of an approximately idempotent Hermitian b at 1/2.
/// Requires ||b^2 - b|| < 1/4; the result commutes with b and ||p - b|| <= 2||b^2 - b||.
Corrected<CMatrix> round_to_projection(const CMatrix& b, const Tolerances& tol = default_tolerances());

/// vbar * p where vbar is the polar isometric part of v and p rounds v*v at 1/2.
/// Works for rectangular v; requires ||v*v - (v*v)^2|| < 1/4.
Corrected<CMatrix> fix_partial_isometry(const CMatrix& v, const Tolerances& tol = default_tolerances());

/// Unitary u with u p u* = q, from the polar part of I - p - q + 2qp.
Corrected<CMatrix> conjugating_unitary(const CMatrix& p, const CMatrix& q, const Tolerances& tol = default_tolerances());

/// u v where u carries the range projection of v onto its block-diagonal rounding.
Corrected<CMatrix> align_block_diagonal_range(const CMatrix& w, const BlockComposition& comp, const CMatrix& v,
                                              const Tolerances& tol = default_tolerances());

struct TriangularizeOptions {
    // Off: skip the block-diagonal final projection hypothesis (the open case).
    bool require_block_diagonal_range = true;
};

/// Partial isometry with zero sub-diagonal blocks, built by peeling off the first block row.
Corrected<CMatrix> block_triangularize(const CMatrix& v, const BlockComposition& comp,
                                       const TriangularizeOptions& options = {},
                                       const Tolerances& tol = default_tolerances());

/// Block upper-triangular partial isometry from ran Q onto ran P, for block-diagonal P, Q.
Corrected<CMatrix> frame_triangularize(const CMatrix& b, const BlockComposition& comp, const CMatrix& P,
                                       const CMatrix& Q, const Tolerances& tol = default_tolerances());

/// rank v == rank w for two partial isometries; guaranteed whenever ||v - w|| < 1.
bool check_rank_stability(const CMatrix& v, const CMatrix& w, const Tolerances& tol = default_tolerances());

/// max_{i > j} ||I_i x I_j||.
double subdiagonal_norm(const CMatrix& x, const BlockComposition& comp);

/// Block-diagonal projection obtained by rounding each diagonal block of p at 1/2.
CMatrix round_blockwise(const CMatrix& p, const std::vector<std::size_t>& sizes);

namespace detail {

// Rectangular variants used inside the constructions. Sizes may contain zeros.
Corrected<CMatrix> align_rows(const CMatrix& w, const std::vector<std::size_t>& row_sizes, const CMatrix& v,
                              const Tolerances& tol);

CMatrix triangularize_blocks(const CMatrix& v, const std::vector<std::size_t>& row_sizes,
                             const std::vector<std::size_t>& col_sizes, const Tolerances& tol, std::size_t depth = 0);

double subdiagonal_norm(const CMatrix& x, const std::vector<std::size_t>& row_sizes,
                        const std::vector<std::size_t>& col_sizes);

} // namespace detail

} // namespace perturba
