#include "perturba/stability.hpp"

#include <algorithm>
#include <sstream>

#include "perturba/error.hpp"

namespace perturba {

namespace {

std::string num(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

std::string vertex(std::size_t i) {
    return std::to_string(i + 1);
}

// Polar isometric part computed block by block, so the result is exactly block diagonal.
CMatrix blockwise_polar(const CMatrix& y, const BlockComposition& comp, const Tolerances& tol) {
    CMatrix out = CMatrix::Zero(y.rows(), y.cols());
    for (std::size_t k = 0; k < comp.block_count(); ++k) {
        const auto off = static_cast<Eigen::Index>(comp.offset(k));
        const auto len = static_cast<Eigen::Index>(comp.size(k));
        out.block(off, off, len, len) = polar_svd(y.block(off, off, len, len), tol).isometric_part;
    }
    return out;
}

void require_ambient(const MatrixUnitSystem& sys, const BlockComposition& comp2, const char* stage) {
    if (sys.ambient_dim != comp2.total()) {
        throw Error(ErrorKind::DimensionMismatch, stage,
                    "units act on C^" + std::to_string(sys.ambient_dim) + ", target composition covers " +
                        std::to_string(comp2.total()));
    }
}

} // namespace

double selfadjoint_containment_check(const MatrixUnitSystem& sys1, const BlockComposition& comp2) {
    require_ambient(sys1, comp2, "selfadjoint_containment_check");
    const IncidencePattern sa = sys1.pattern.selfadjoint_part();
    double worst = 0.0;
    for (const auto& [key, g] : sys1.units) {
        if (sa.contains(key.first, key.second)) {
            worst = std::max(worst, operator_norm(g - block_diagonal_part(g, comp2)));
        }
    }
    return worst;
}

MatrixUnitSystem selfadjoint_matrix_units(const MatrixUnitSystem& sys1, const BlockComposition& comp2,
                                          const Tolerances& tol) {
    const double defect = selfadjoint_containment_check(sys1, comp2);
    if (defect >= kSelfadjointGate) {
        throw Error(ErrorKind::DefectTooLarge, "selfadjoint",
                    "self-adjoint containment defect " + num(defect) + " (needs < 1/8)");
    }
    const std::size_t n1 = sys1.pattern.dim();
    const auto N = static_cast<Eigen::Index>(sys1.ambient_dim);
    const IncidencePattern sa = sys1.pattern.selfadjoint_part();

    MatrixUnitSystem out;
    out.pattern = sa;
    out.ambient_dim = sys1.ambient_dim;

    // Diagonal projections, orthogonalized in ascending order.
    std::vector<CMatrix> proj(n1);
    CMatrix taken = CMatrix::Zero(N, N);
    const CMatrix id = CMatrix::Identity(N, N);
    for (std::size_t i = 0; i < n1; ++i) {
        const CMatrix& e = sys1.unit(i, i);
        const CMatrix free = id - taken;
        proj[i] = round_blockwise(free * block_diagonal_part(e, comp2) * free, comp2.sizes());
        const std::size_t want = projection_rank(e);
        const std::size_t got = projection_rank(proj[i]);
        if (got != want) {
            throw Error(ErrorKind::DefectTooLarge, "selfadjoint",
                        "vertex " + vertex(i) + ": rounded projection has rank " + std::to_string(got) + ", expected " +
                            std::to_string(want));
        }
        taken += proj[i];
        out.units.emplace(IndexPair{i, i}, proj[i]);
    }

    // Each class of the self-adjoint part is anchored at its smallest vertex.
    std::vector<std::size_t> root(n1);
    for (std::size_t i = 0; i < n1; ++i) {
        root[i] = i;
        for (std::size_t j = 0; j < i; ++j) {
            if (sa.contains(i, j)) {
                root[i] = j;
                break;
            }
        }
    }
    std::vector<CMatrix> to_root(n1);  // f_{i, root(i)}
    for (std::size_t i = 0; i < n1; ++i) {
        const std::size_t a = root[i];
        if (a == i) {
            to_root[i] = proj[i];
            continue;
        }
        const CMatrix y = proj[i] * block_diagonal_part(sys1.unit(i, a), comp2) * proj[a];
        const double gap = hermitian_norm(y.adjoint() * y - proj[a]);
        if (gap >= 1.0) {
            throw Error(ErrorKind::DefectTooLarge, "selfadjoint",
                        "cut-down of unit (" + vertex(i) + "," + vertex(a) + ") is singular (gap " + num(gap) + ")");
        }
        to_root[i] = blockwise_polar(y, comp2, tol);
    }
    for (const auto& [i, j] : sa.pairs()) {
        if (i == j) {
            continue;
        }
        out.units.emplace(IndexPair{i, j}, to_root[i] * to_root[j].adjoint());
    }
    return out;
}

Corrected<CMatrix> lift_tree_edge(const CMatrix& e_img, const CMatrix& fpp, const CMatrix& fqq,
                                  const IncidencePattern& a2_pattern, const BlockComposition& comp2,
                                  const Tolerances& tol) {
    const auto N = static_cast<Eigen::Index>(comp2.total());
    for (const CMatrix* m : {&e_img, &fpp, &fqq}) {
        if (m->rows() != N || m->cols() != N) {
            throw Error(ErrorKind::DimensionMismatch, "lift_tree_edge", "operands must be square of the target size");
        }
    }
    if (a2_pattern.dim() != comp2.total()) {
        throw Error(ErrorKind::DimensionMismatch, "lift_tree_edge", "pattern and composition disagree in size");
    }
    const std::size_t rank_p = projection_rank(fpp);
    const std::size_t rank_q = projection_rank(fqq);
    if (rank_p != rank_q) {
        throw Error(ErrorKind::RankMismatch, "lift_tree_edge",
                    "initial projection has rank " + std::to_string(rank_p) + ", final projection has rank " +
                        std::to_string(rank_q));
    }
    const CMatrix b1 = a2_pattern.truncate(e_img);
    const CMatrix b = fqq * b1 * fpp;
    const double gap = hermitian_norm(b.adjoint() * b - fpp);
    if (gap >= 1.0) {
        throw Error(ErrorKind::CompressionSingular, "lift_tree_edge",
                    "compressed edge is not invertible on its initial space (||b*b - P|| = " + num(gap) + ")");
    }
    const CMatrix bbar = polar_svd(b, tol).isometric_part;
    Corrected<CMatrix> framed = frame_triangularize(bbar, comp2, fqq, fpp, tol);

    Corrected<CMatrix> out{std::move(framed.value), {}};
    const CMatrix& v = out.value;
    out.cert.input_defect = operator_norm(e_img - b1);
    out.cert.correction_distance = operator_norm(e_img - v);
    out.cert.structural_residual =
        std::max({operator_norm(v.adjoint() * v - fpp), operator_norm(v * v.adjoint() - fqq),
                  support_violation(v, a2_pattern)});
    return out;
}

StabilityResult stabilize_nest_inclusion(const StarEmbedding& phi1, const BlockComposition& comp2,
                                         const Tolerances& tol) {
    const auto comp1 = phi1.source.pattern.as_nest();
    if (!comp1) {
        throw Error(ErrorKind::InvalidConfig, "stabilize_nest_inclusion", "source pattern is not a nest pattern");
    }
    const MatrixUnitSystem& images = phi1.images;
    require_ambient(images, comp2, "stabilize_nest_inclusion");
    const IncidencePattern a2 = nest_pattern(comp2);

    StabilityResult result;
    StabilityReport& report = result.report;
    report.containment_defect = containment_defect(images, a2).value;
    report.selfadjoint_defect = selfadjoint_containment_check(images, comp2);

    // Stage 1: self-adjoint part.
    MatrixUnitSystem diag;
    try {
        diag = selfadjoint_matrix_units(images, comp2, tol);
    } catch (const Error& e) {
        throw e.within("stabilize_nest_inclusion");
    }
    report.diagonal_distance = unit_distance(diag, images);

    // Stage 2: edges between the first vertices of consecutive blocks.
    const std::size_t r = comp1->block_count();
    std::vector<CMatrix> edges;
    for (std::size_t k = 0; k + 1 < r; ++k) {
        const std::size_t a = comp1->offset(k);
        const std::size_t b = comp1->offset(k + 1);
        try {
            Corrected<CMatrix> lifted =
                lift_tree_edge(images.unit(a, b), diag.unit(b, b), diag.unit(a, a), a2, comp2, tol);
            report.edge_distance = std::max(report.edge_distance, lifted.cert.correction_distance);
            report.edge_certificates.push_back(lifted.cert);
            edges.push_back(std::move(lifted.value));
        } catch (const Error& e) {
            throw e.within("stabilize_nest_inclusion/tree edge " + std::to_string(k + 1));
        }
    }

    // Stage 3: words f_ij = f_{i a_k} e_k ... e_{l-1} f_{a_l j}.
    MatrixUnitSystem& psi = result.psi.images;
    result.psi.source = phi1.source;
    psi.pattern = images.pattern;
    psi.ambient_dim = images.ambient_dim;
    const double slack = tol.struct_tol_for(comp2.total());
    for (const auto& [i, j] : images.pattern.pairs()) {
        const std::size_t k = comp1->block_of(i);
        const std::size_t l = comp1->block_of(j);
        CMatrix f;
        if (k == l) {
            f = diag.unit(i, j);
        } else {
            f = diag.unit(i, comp1->offset(k));
            for (std::size_t t = k; t < l; ++t) {
                f = f * edges[t];
            }
            f = f * diag.unit(comp1->offset(l), j);
        }
        const double dist = operator_norm(images.unit(i, j) - f);
        report.max_distance = std::max(report.max_distance, dist);
        const double bound = 2.0 * report.diagonal_distance + static_cast<double>(l - k) * report.edge_distance;
        if (dist > bound + slack) {
            report.block_bound_holds = false;
        }
        report.support_violation = std::max(report.support_violation, support_violation(f, a2));
        psi.units.emplace(IndexPair{i, j}, std::move(f));
    }
    report.matrix_unit_residual = matrix_unit_residual(psi);
    return result;
}

} // namespace perturba
