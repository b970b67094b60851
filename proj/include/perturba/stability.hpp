#pragma once

#include <vector>

#include "perturba/algebra_model.hpp"
#include "perturba/perturb.hpp"

namespace perturba {

/// Generator-level defect of sys1's self-adjoint units relative to the block diagonal of comp2.
double selfadjoint_containment_check(const MatrixUnitSystem& sys1, const BlockComposition& comp2);

/// Exact units f_ij in the block diagonal of comp2 for every self-adjoint pair of sys1's pattern.
/// Diagonal projections are rounded and orthogonalized in ascending order; each off-diagonal
/// unit is the polar part of a cut-down against the first vertex of its block.
MatrixUnitSystem selfadjoint_matrix_units(const MatrixUnitSystem& sys1, const BlockComposition& comp2,
                                          const Tolerances& tol = default_tolerances());

/// Exact partial isometry v in the nest pattern with v*v = fpp and vv* = fqq.
Corrected<CMatrix> lift_tree_edge(const CMatrix& e_img, const CMatrix& fpp, const CMatrix& fqq,
                                  const IncidencePattern& a2_pattern, const BlockComposition& comp2,
                                  const Tolerances& tol = default_tolerances());

struct StabilityReport {
    double containment_defect = 0.0;   // full generator-level defect of phi1 in A2
    double selfadjoint_defect = 0.0;
    double diagonal_distance = 0.0;    // max ||phi1(e_ij) - f_ij|| over self-adjoint pairs
    double edge_distance = 0.0;        // max over tree edges
    double max_distance = 0.0;         // ||phi1 - psi|| over all units
    double matrix_unit_residual = 0.0;
    double support_violation = 0.0;    // largest entry of an image outside A2's pattern
    bool block_bound_holds = true;     // distance <= 2 diag + (#edges crossed) edge + slack, per pair
    std::vector<CorrectionCertificate> edge_certificates;
};

struct StabilityResult {
    StarEmbedding psi;
    StabilityReport report;
};

/// Perturbs an approximate inclusion of a nest algebra into the nest algebra of comp2 to an exact one.
StabilityResult stabilize_nest_inclusion(const StarEmbedding& phi1, const BlockComposition& comp2,
                                         const Tolerances& tol = default_tolerances());

} // namespace perturba
