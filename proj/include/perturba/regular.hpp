#pragma once

#include <map>
#include <vector>

#include "perturba/algebra_model.hpp"
#include "perturba/perturb.hpp"

namespace perturba {

/// Spanning forest of a digraph pattern with a word over its edges for every related pair.
struct TreeWords {
    IncidencePattern digraph{0};
    std::vector<IndexPair> tree_edges;
    // Entry +k stands for edge k (1-based), -k for its adjoint.
    std::map<IndexPair, std::vector<int>> words;
};

struct ProjectionTransport {
    CMatrix p1;  // rounds w* p w
    CMatrix p2;  // rounds w p w*
    double residual_initial = 0.0;  // ||w* p w - p1||
    double residual_final = 0.0;    // ||w p w* - p2||
};

/// Masa projections close to w* p w and w p w*, by expectation and cellwise rounding.
ProjectionTransport approx_projection_transport(const CMatrix& w, const CMatrix& p, const MasaPartition& masa,
                                                const Tolerances& tol = default_tolerances());

/// Nearby normalizer: unimodular phases on the entries of modulus above 1/2.
Corrected<CMatrix> fix_normalizer(const CMatrix& v, const IncidencePattern& pattern, const MasaPartition& masa,
                                  const Tolerances& tol = default_tolerances());

/// For each cell of c1, the cells of c2 it is split into. Throws NotRefined otherwise.
std::vector<std::vector<std::size_t>> masa_containment(const MasaPartition& c1, const MasaPartition& c2);

/// Truncates v to A2's pattern and repairs the result to a normalizer of C2 in A2.
Corrected<CMatrix> transfer_normalizer(const CMatrix& v, const IncidencePattern& a2, const MasaPartition& c2,
                                       const Tolerances& tol = default_tolerances());

TreeWords tree_words(const IncidencePattern& a1);

/// Multiplies out a word over the given edge matrices.
CMatrix evaluate_word(const std::vector<int>& word, const std::vector<CMatrix>& edges, const CMatrix& empty_value);

struct RegularSynthesis {
    StarEmbedding embedding;
    CorrectionCertificate cert;  // distances are measured against the reference units
};

/// Exact regular embedding from corrected tree edges and diagonal projections.
/// `reference` holds the approximate units being replaced.
RegularSynthesis synthesize_regular_embedding(const MatrixUnitSystem& reference, const TreeWords& words,
                                              const std::vector<CMatrix>& edge_images,
                                              const std::vector<CMatrix>& f_diag, const IncidencePattern& a2,
                                              const MasaPartition& c2, const Tolerances& tol = default_tolerances());

struct RegularReport {
    std::vector<std::vector<std::size_t>> refinement;
    double containment_defect = 0.0;  // truncation defect of the units in A2
    double diagonal_distance = 0.0;
    double edge_distance = 0.0;
    double max_distance = 0.0;        // ||phi1 - phi||
    double bound = 0.0;               // n1 * max(edge, diagonal)
    double matrix_unit_residual = 0.0;
    double regularity_defect = 0.0;   // max normalizer defect of the images w.r.t. C2
    double support_violation = 0.0;
    std::size_t ambient_dim = 0;
};

struct RegularResult {
    StarEmbedding phi;
    RegularReport report;
};

/// Exact regular embedding close to phi1, carrying c1 into c2 and landing in a2.
RegularResult regular_stabilize(const StarEmbedding& phi1, const MasaPartition& c1, const IncidencePattern& a2,
                                const MasaPartition& c2, const Tolerances& tol = default_tolerances());

} // namespace perturba
