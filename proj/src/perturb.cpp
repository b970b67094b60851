#include "perturba/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "perturba/error.hpp"

namespace perturba {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

std::string num(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

std::vector<Eigen::Index> offsets_of(const std::vector<std::size_t>& sizes) {
    std::vector<Eigen::Index> off(sizes.size() + 1, 0);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        off[i + 1] = off[i] + static_cast<Eigen::Index>(sizes[i]);
    }
    return off;
}

void require_square(const CMatrix& x, const char* stage, const char* name) {
    if (x.rows() != x.cols()) {
        throw Error(ErrorKind::DimensionMismatch, stage, std::string(name) + " is not square");
    }
}

void require_dim(const CMatrix& x, Eigen::Index n, const char* stage, const char* name) {
    if (x.rows() != n || x.cols() != n) {
        throw Error(ErrorKind::DimensionMismatch, stage,
                    std::string(name) + " must be " + std::to_string(n) + "x" + std::to_string(n));
    }
}

struct PiRounding {
    CMatrix value;
    double defect = 0.0;  // ||v*v - (v*v)^2||
    double bound = 0.0;   // || |v| - p ||
};

// One SVD gives the defect, the rounded partial isometry and || |v| - p ||.
PiRounding round_partial_isometry(const CMatrix& v) {
    PiRounding out;
    out.value = CMatrix::Zero(v.rows(), v.cols());
    if (v.size() == 0) {
        return out;
    }
    Eigen::JacobiSVD<CMatrix> svd(v, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& s = svd.singularValues();
    Eigen::Index keep = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const double s2 = s(i) * s(i);
        out.defect = std::max(out.defect, std::abs(s2 - s2 * s2));
        const bool kept = s(i) > kInvSqrt2;
        out.bound = std::max(out.bound, std::abs(s(i) - (kept ? 1.0 : 0.0)));
        if (kept) {
            ++keep;
        }
    }
    if (keep > 0) {
        out.value = svd.matrixU().leftCols(keep) * svd.matrixV().leftCols(keep).adjoint();
    }
    return out;
}

// Polar part of I - p - q + 2qp; conjugates p onto q.
CMatrix conjugator(const CMatrix& p, const CMatrix& q, const Tolerances& tol) {
    const auto n = p.rows();
    const CMatrix v = CMatrix::Identity(n, n) - p - q + 2.0 * q * p;
    const PolarData polar = polar_svd(v, tol);
    if (polar.rank < static_cast<std::size_t>(n)) {
        throw Error(ErrorKind::ProjectionsTooFar, "conjugating_unitary",
                    "I - p - q + 2qp is singular (rank " + std::to_string(polar.rank) + " of " + std::to_string(n) +
                        ")");
    }
    return polar.isometric_part;
}

double block_offdiagonal_norm(const CMatrix& x, const std::vector<std::size_t>& sizes) {
    const auto off = offsets_of(sizes);
    CMatrix rest = x;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const auto len = static_cast<Eigen::Index>(sizes[i]);
        rest.block(off[i], off[i], len, len).setZero();
    }
    return operator_norm(rest);
}

struct Aligned {
    CMatrix value;
    CMatrix target;        // block-diagonal projection p
    double tilt = 0.0;     // ||p' - p||
};

Aligned align_core(const CMatrix& v, const std::vector<std::size_t>& row_sizes, const Tolerances& tol) {
    Aligned out;
    const CMatrix pprime = v * v.adjoint();
    out.target = round_blockwise(pprime, row_sizes);
    out.tilt = operator_norm(pprime - out.target);
    if (out.tilt >= 1.0) {
        throw Error(ErrorKind::ProjectionsTooFar, "align_block_diagonal_range",
                    "range projection is at distance " + num(out.tilt) + " from its block-diagonal rounding");
    }
    out.value = conjugator(pprime, out.target, tol) * v;
    return out;
}

std::vector<std::size_t> tail(const std::vector<std::size_t>& sizes) {
    return std::vector<std::size_t>(sizes.begin() + 1, sizes.end());
}

std::size_t nonempty_blocks(const std::vector<std::size_t>& sizes) {
    return static_cast<std::size_t>(std::count_if(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; }));
}

// Orthonormal basis of the range of each diagonal block of a block-diagonal projection.
std::vector<CMatrix> block_frames(const CMatrix& p, const BlockComposition& comp) {
    std::vector<CMatrix> frames;
    for (std::size_t i = 0; i < comp.block_count(); ++i) {
        const auto off = static_cast<Eigen::Index>(comp.offset(i));
        const auto len = static_cast<Eigen::Index>(comp.size(i));
        const CMatrix blk = p.block(off, off, len, len);
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (blk + blk.adjoint()));
        const RealVector& ev = eig.eigenvalues();
        Eigen::Index count = 0;
        for (Eigen::Index k = 0; k < ev.size(); ++k) {
            if (ev(k) > kSpectralCut) {
                ++count;
            }
        }
        // eigenvalues ascending: the retained vectors are the last ones
        frames.push_back(eig.eigenvectors().rightCols(count));
    }
    return frames;
}

} // namespace

// ---------------------------------------------------------------------------

CMatrix round_blockwise(const CMatrix& p, const std::vector<std::size_t>& sizes) {
    const auto off = offsets_of(sizes);
    CMatrix out = CMatrix::Zero(p.rows(), p.cols());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const auto len = static_cast<Eigen::Index>(sizes[i]);
        if (len == 0) {
            continue;
        }
        const CMatrix blk = p.block(off[i], off[i], len, len);
        Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (blk + blk.adjoint()));
        Eigen::Index count = 0;
        for (Eigen::Index k = 0; k < len; ++k) {
            if (eig.eigenvalues()(k) > kSpectralCut) {
                ++count;
            }
        }
        const CMatrix vecs = eig.eigenvectors().rightCols(count);
        out.block(off[i], off[i], len, len) = vecs * vecs.adjoint();
    }
    return out;
}

Corrected<CMatrix> round_to_projection(const CMatrix& b, const Tolerances& tol) {
    const SpectralData spec = herm_eig(b, tol);
    const CMatrix h = 0.5 * (b + b.adjoint());
    const double delta = hermitian_norm(h * h - h);
    if (delta >= kRoundingCeiling) {
        throw Error(ErrorKind::DefectTooLarge, "round_to_projection",
                    "||b^2 - b|| = " + num(delta) + " but the spectral rounding needs < 1/4");
    }
    Eigen::Index keep = 0;
    while (keep < spec.eigenvalues.size() && spec.eigenvalues(keep) > kSpectralCut) {
        ++keep;
    }
    const CMatrix vecs = spec.eigenvectors.leftCols(keep);
    Corrected<CMatrix> out{vecs * vecs.adjoint(), {}};
    out.cert.input_defect = delta;
    out.cert.correction_distance = operator_norm(out.value - b);
    out.cert.structural_residual = projection_defect(out.value);
    out.cert.bound_claimed = 2.0 * delta;
    return out;
}

Corrected<CMatrix> fix_partial_isometry(const CMatrix& v, const Tolerances& /*tol*/) {
    if (!all_finite(v)) {
        throw Error(ErrorKind::NotPartialIsometry, "fix_partial_isometry", "matrix has non-finite entries");
    }
    PiRounding r = round_partial_isometry(v);
    if (r.defect >= kRoundingCeiling) {
        throw Error(ErrorKind::DefectTooLarge, "fix_partial_isometry",
                    "||v*v - (v*v)^2|| = " + num(r.defect) + " but the rounding needs < 1/4");
    }
    Corrected<CMatrix> out{std::move(r.value), {}};
    out.cert.input_defect = r.defect;
    out.cert.correction_distance = operator_norm(v - out.value);
    out.cert.structural_residual = partial_isometry_defect(out.value);
    out.cert.bound_claimed = r.bound;
    return out;
}

Corrected<CMatrix> conjugating_unitary(const CMatrix& p, const CMatrix& q, const Tolerances& tol) {
    require_square(p, "conjugating_unitary", "p");
    require_dim(q, p.rows(), "conjugating_unitary", "q");
    const auto n = static_cast<std::size_t>(p.rows());
    const double st = tol.struct_tol_for(n);
    if (const double d = projection_defect(p); d > st) {
        throw Error(ErrorKind::NotProjection, "conjugating_unitary", "p has projection defect " + num(d));
    }
    if (const double d = projection_defect(q); d > st) {
        throw Error(ErrorKind::NotProjection, "conjugating_unitary", "q has projection defect " + num(d));
    }
    const double gap = operator_norm(q - p);
    if (gap >= 1.0) {
        throw Error(ErrorKind::ProjectionsTooFar, "conjugating_unitary",
                    "||q - p|| = " + num(gap) + " but a conjugating unitary needs < 1");
    }
    Corrected<CMatrix> out{conjugator(p, q, tol), {}};
    const CMatrix& u = out.value;
    out.cert.input_defect = gap;
    out.cert.correction_distance = operator_norm(identity(n) - u);
    out.cert.structural_residual = std::max(unitary_defect(u), operator_norm(u * p * u.adjoint() - q));
    out.cert.bound_claimed = std::sqrt(2.0) * gap;
    return out;
}

Corrected<CMatrix> detail::align_rows(const CMatrix& w, const std::vector<std::size_t>& row_sizes, const CMatrix& v,
                                      const Tolerances& tol) {
    const auto total = std::accumulate(row_sizes.begin(), row_sizes.end(), std::size_t{0});
    if (static_cast<std::size_t>(v.rows()) != total) {
        throw Error(ErrorKind::DimensionMismatch, "align_block_diagonal_range",
                    "composition covers " + std::to_string(total) + " rows, v has " + std::to_string(v.rows()));
    }
    if (w.rows() != v.rows() || w.cols() != v.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "align_block_diagonal_range", "w and v differ in shape");
    }
    if (const double d = partial_isometry_defect(v); d > tol.struct_tol_for(total)) {
        throw Error(ErrorKind::NotPartialIsometry, "align_block_diagonal_range",
                    "v has partial isometry defect " + num(d));
    }
    Aligned a = align_core(v, row_sizes, tol);
    Corrected<CMatrix> out{std::move(a.value), {}};
    out.cert.input_defect = operator_norm(w * w.adjoint() - a.target);
    out.cert.correction_distance = operator_norm(w - out.value);
    out.cert.structural_residual = operator_norm(out.value * out.value.adjoint() - a.target);
    out.cert.bound_claimed = operator_norm(w - v) + std::sqrt(2.0) * a.tilt;
    return out;
}

Corrected<CMatrix> align_block_diagonal_range(const CMatrix& w, const BlockComposition& comp, const CMatrix& v,
                                              const Tolerances& tol) {
    return detail::align_rows(w, comp.sizes(), v, tol);
}

double detail::subdiagonal_norm(const CMatrix& x, const std::vector<std::size_t>& row_sizes,
                                const std::vector<std::size_t>& col_sizes) {
    const auto ro = offsets_of(row_sizes);
    const auto co = offsets_of(col_sizes);
    double worst = 0.0;
    for (std::size_t i = 1; i < row_sizes.size(); ++i) {
        const auto len = static_cast<Eigen::Index>(row_sizes[i]);
        // blocks (i, j < i) form one contiguous strip to the left of column co[i]
        const CMatrix strip = x.block(ro[i], 0, len, co[std::min(i, col_sizes.size())]);
        if (strip.size() == 0 || strip.norm() <= worst) {
            continue;
        }
        for (std::size_t j = 0; j < i && j < col_sizes.size(); ++j) {
            const CMatrix blk = x.block(ro[i], co[j], len, static_cast<Eigen::Index>(col_sizes[j]));
            if (blk.size() > 0 && blk.norm() > worst) {
                worst = std::max(worst, operator_norm(blk));
            }
        }
    }
    return worst;
}

double subdiagonal_norm(const CMatrix& x, const BlockComposition& comp) {
    return detail::subdiagonal_norm(x, comp.sizes(), comp.sizes());
}

CMatrix detail::triangularize_blocks(const CMatrix& v, const std::vector<std::size_t>& row_sizes,
                                     const std::vector<std::size_t>& col_sizes, const Tolerances& tol,
                                     std::size_t depth) {
    if (row_sizes.size() <= 1) {
        return v;
    }
    const std::string stage = "block_triangularize/depth " + std::to_string(depth);
    const auto h1 = static_cast<Eigen::Index>(row_sizes[0]);
    const auto k1 = static_cast<Eigen::Index>(col_sizes[0]);
    const Eigen::Index rows = v.rows();
    const Eigen::Index cols = v.cols();

    // Lower-right corner: round to a partial isometry, then align its range.
    const CMatrix corner = v.bottomRightCorner(rows - h1, cols - k1);
    const PiRounding rounded = round_partial_isometry(corner);
    if (rounded.defect >= kRoundingCeiling) {
        throw Error(ErrorKind::DefectTooLarge, stage,
                    "lower corner has partial isometry defect " + num(rounded.defect) + " (needs < 1/4)");
    }
    const std::vector<std::size_t> row_tail = tail(row_sizes);
    CMatrix aligned = rounded.value;
    if (nonempty_blocks(row_tail) > 1) {
        try {
            aligned = align_core(rounded.value, row_tail, tol).value;
        } catch (const Error& e) {
            throw Error(ErrorKind::DefectTooLarge, stage, "range alignment failed: " + e.detail());
        }
    }
    const CMatrix lower = triangularize_blocks(aligned, row_tail, tail(col_sizes), tol, depth + 1);

    CMatrix result = CMatrix::Zero(rows, cols);
    result.bottomRightCorner(rows - h1, cols - k1) = lower;

    // First block row, compressed onto the complement of the lower rows' initial space.
    const CMatrix below = result.bottomRows(rows - h1);
    const CMatrix initial = below.adjoint() * below;
    const CMatrix first = v.topRows(h1) * (CMatrix::Identity(cols, cols) - initial);
    const PiRounding top = round_partial_isometry(first);
    if (top.defect >= kRoundingCeiling) {
        throw Error(ErrorKind::DefectTooLarge, stage,
                    "compressed first block row has partial isometry defect " + num(top.defect) + " (needs < 1/4)");
    }
    result.topRows(h1) = top.value;
    return result;
}

Corrected<CMatrix> block_triangularize(const CMatrix& v, const BlockComposition& comp,
                                       const TriangularizeOptions& options, const Tolerances& tol) {
    const auto n = static_cast<Eigen::Index>(comp.total());
    require_dim(v, n, "block_triangularize", "v");
    const double st = tol.struct_tol_for(comp.total());
    const double pid = partial_isometry_defect(v);
    if (pid > st) {
        throw Error(ErrorKind::NotPartialIsometry, "block_triangularize", "v has partial isometry defect " + num(pid));
    }
    if (options.require_block_diagonal_range) {
        if (const double off = block_offdiagonal_norm(v * v.adjoint(), comp.sizes()); off > st) {
            throw Error(ErrorKind::DefectTooLarge, "block_triangularize",
                        "final projection vv* is " + num(off) + " away from block diagonal");
        }
    }

    Corrected<CMatrix> out{v, {}};
    out.cert.input_defect = subdiagonal_norm(v, comp);
    if (out.cert.input_defect == 0.0) {
        out.cert.structural_residual = pid;
        return out;
    }
    out.value = detail::triangularize_blocks(v, comp.sizes(), comp.sizes(), tol);
    out.cert.correction_distance = operator_norm(v - out.value);
    out.cert.structural_residual = std::max(partial_isometry_defect(out.value),
                                            block_offdiagonal_norm(out.value * out.value.adjoint(), comp.sizes()));
    return out;
}

Corrected<CMatrix> frame_triangularize(const CMatrix& b, const BlockComposition& comp, const CMatrix& P,
                                       const CMatrix& Q, const Tolerances& tol) {
    const auto n = static_cast<Eigen::Index>(comp.total());
    require_dim(b, n, "frame_triangularize", "b");
    require_dim(P, n, "frame_triangularize", "P");
    require_dim(Q, n, "frame_triangularize", "Q");
    const double st = tol.struct_tol_for(comp.total());
    for (const auto& [name, proj] : {std::pair<const char*, const CMatrix*>{"P", &P}, {"Q", &Q}}) {
        if (const double d = projection_defect(*proj); d > st) {
            throw Error(ErrorKind::NotProjection, "frame_triangularize",
                        std::string(name) + " has projection defect " + num(d));
        }
        if (const double d = block_offdiagonal_norm(*proj, comp.sizes()); d > st) {
            throw Error(ErrorKind::NotProjection, "frame_triangularize",
                        std::string(name) + " is " + num(d) + " away from block diagonal");
        }
    }
    const std::size_t rank_p = projection_rank(P);
    const std::size_t rank_q = projection_rank(Q);
    if (rank_p != rank_q) {
        throw Error(ErrorKind::RankMismatch, "frame_triangularize",
                    "rank P = " + std::to_string(rank_p) + ", rank Q = " + std::to_string(rank_q));
    }
    const double frame_defect =
        std::max(operator_norm(b.adjoint() * b - Q), operator_norm(b * b.adjoint() - P));
    if (frame_defect > st) {
        throw Error(ErrorKind::NotPartialIsometry, "frame_triangularize",
                    "b is " + num(frame_defect) + " away from a partial isometry from ran Q onto ran P");
    }

    Corrected<CMatrix> out{b, {}};
    out.cert.input_defect = subdiagonal_norm(b, comp);
    if (out.cert.input_defect == 0.0) {
        out.cert.structural_residual = frame_defect;
        return out;
    }

    const std::vector<CMatrix> xs = block_frames(P, comp);
    const std::vector<CMatrix> ys = block_frames(Q, comp);
    std::vector<std::size_t> h;
    std::vector<std::size_t> k;
    for (std::size_t i = 0; i < comp.block_count(); ++i) {
        h.push_back(static_cast<std::size_t>(xs[i].cols()));
        k.push_back(static_cast<std::size_t>(ys[i].cols()));
    }
    const auto ho = offsets_of(h);
    const auto ko = offsets_of(k);
    const auto r = static_cast<Eigen::Index>(rank_p);

    // Reduced matrix X* b Y : ran Q -> ran P in the block frames.
    CMatrix reduced = CMatrix::Zero(r, r);
    for (std::size_t i = 0; i < comp.block_count(); ++i) {
        for (std::size_t j = 0; j < comp.block_count(); ++j) {
            const CMatrix bij = b.block(static_cast<Eigen::Index>(comp.offset(i)),
                                        static_cast<Eigen::Index>(comp.offset(j)), static_cast<Eigen::Index>(comp.size(i)),
                                        static_cast<Eigen::Index>(comp.size(j)));
            reduced.block(ho[i], ko[j], xs[i].cols(), ys[j].cols()) = xs[i].adjoint() * bij * ys[j];
        }
    }
    const CMatrix tri = detail::triangularize_blocks(reduced, h, k, tol);
    if (r > 0) {
        const double lost = operator_norm(tri.adjoint() * tri - CMatrix::Identity(r, r));
        if (lost > 0.5) {
            throw Error(ErrorKind::DefectTooLarge, "frame_triangularize",
                        "triangularized reduced matrix lost rank (defect " + num(lost) + ")");
        }
    }

    out.value = CMatrix::Zero(n, n);
    for (std::size_t i = 0; i < comp.block_count(); ++i) {
        for (std::size_t j = i; j < comp.block_count(); ++j) {
            out.value.block(static_cast<Eigen::Index>(comp.offset(i)), static_cast<Eigen::Index>(comp.offset(j)),
                            static_cast<Eigen::Index>(comp.size(i)), static_cast<Eigen::Index>(comp.size(j))) =
                xs[i] * tri.block(ho[i], ko[j], xs[i].cols(), ys[j].cols()) * ys[j].adjoint();
        }
    }
    out.cert.correction_distance = operator_norm(b - out.value);
    out.cert.structural_residual = std::max(operator_norm(out.value.adjoint() * out.value - Q),
                                            operator_norm(out.value * out.value.adjoint() - P));
    return out;
}

bool check_rank_stability(const CMatrix& v, const CMatrix& w, const Tolerances& tol) {
    if (v.rows() != w.rows() || v.cols() != w.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "check_rank_stability", "v and w differ in shape");
    }
    const double st = tol.struct_tol_for(static_cast<std::size_t>(std::max(v.rows(), v.cols())));
    for (const auto& [name, x] : {std::pair<const char*, const CMatrix*>{"v", &v}, {"w", &w}}) {
        if (const double d = partial_isometry_defect(*x); d > st) {
            throw Error(ErrorKind::NotPartialIsometry, "check_rank_stability",
                        std::string(name) + " has partial isometry defect " + num(d));
        }
    }
    return partial_isometry_rank(v) == partial_isometry_rank(w);
}

} // namespace perturba
