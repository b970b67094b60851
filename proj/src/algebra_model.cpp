#include "perturba/algebra_model.hpp"

#include <algorithm>
#include <numeric>

#include "perturba/error.hpp"
#include "perturba/random.hpp"

namespace perturba {

namespace {

void require_square(const CMatrix& x, std::size_t dim, const char* stage) {
    if (x.rows() != x.cols() || static_cast<std::size_t>(x.rows()) != dim) {
        throw Error(ErrorKind::DimensionMismatch, stage,
                    "expected " + std::to_string(dim) + "x" + std::to_string(dim) + ", got " +
                        std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
    }
}

// Tracks the largest operator norm seen; skips the SVD when the Frobenius
// norm already rules a candidate out.
struct MaxNorm {
    double value = 0.0;
    void offer(const CMatrix& x) {
        if (x.size() == 0 || x.norm() <= value) {
            return;
        }
        value = std::max(value, operator_norm(x));
    }
};

} // namespace

// ---------------------------------------------------------------------------
// BlockComposition

BlockComposition::BlockComposition(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) {
        throw Error(ErrorKind::InvalidConfig, "BlockComposition", "at least one block is required");
    }
    offsets_.reserve(sizes_.size() + 1);
    offsets_.push_back(0);
    for (std::size_t s : sizes_) {
        if (s == 0) {
            throw Error(ErrorKind::InvalidConfig, "BlockComposition", "block sizes must be positive");
        }
        offsets_.push_back(offsets_.back() + s);
    }
}

std::size_t BlockComposition::block_of(std::size_t index) const {
    const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), index);
    return static_cast<std::size_t>(it - offsets_.begin()) - 1;
}

CMatrix BlockComposition::nest_projection(std::size_t k) const {
    const auto n = static_cast<Eigen::Index>(total());
    CMatrix p = CMatrix::Zero(n, n);
    for (std::size_t i = 0; i < offsets_[k]; ++i) {
        p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    }
    return p;
}

CMatrix BlockComposition::block_projection(std::size_t block) const {
    const auto n = static_cast<Eigen::Index>(total());
    CMatrix p = CMatrix::Zero(n, n);
    for (std::size_t i = offsets_[block]; i < offsets_[block + 1]; ++i) {
        p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    }
    return p;
}

BlockComposition BlockComposition::ampliate(std::size_t m) const {
    std::vector<std::size_t> sizes = sizes_;
    for (auto& s : sizes) {
        s *= m;
    }
    return BlockComposition(std::move(sizes));
}

// ---------------------------------------------------------------------------
// IncidencePattern

IncidencePattern::IncidencePattern(std::size_t dim) : dim_(dim), rel_(dim * dim, 0) {
    for (std::size_t i = 0; i < dim; ++i) {
        set(i, i);
    }
}

IncidencePattern IncidencePattern::from_pairs(std::size_t dim, const std::vector<IndexPair>& pairs) {
    IncidencePattern p(dim);
    for (const auto& [i, j] : pairs) {
        if (i >= dim || j >= dim) {
            throw Error(ErrorKind::InvalidConfig, "IncidencePattern", "pair index out of range");
        }
        p.set(i, j);
    }
    if (!p.is_transitive()) {
        throw Error(ErrorKind::InvalidConfig, "IncidencePattern", "relation is not transitive");
    }
    return p;
}

IncidencePattern IncidencePattern::closure_of(std::size_t dim, const std::vector<IndexPair>& pairs) {
    IncidencePattern p(dim);
    for (const auto& [i, j] : pairs) {
        if (i >= dim || j >= dim) {
            throw Error(ErrorKind::InvalidConfig, "IncidencePattern", "pair index out of range");
        }
        p.set(i, j);
    }
    // Warshall
    for (std::size_t k = 0; k < dim; ++k) {
        for (std::size_t i = 0; i < dim; ++i) {
            if (!p.contains(i, k)) {
                continue;
            }
            for (std::size_t j = 0; j < dim; ++j) {
                if (p.contains(k, j)) {
                    p.set(i, j);
                }
            }
        }
    }
    return p;
}

IncidencePattern IncidencePattern::full(std::size_t dim) {
    IncidencePattern p(dim);
    std::fill(p.rel_.begin(), p.rel_.end(), 1);
    return p;
}

std::vector<IndexPair> IncidencePattern::pairs() const {
    std::vector<IndexPair> out;
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            if (contains(i, j)) {
                out.emplace_back(i, j);
            }
        }
    }
    return out;
}

std::size_t IncidencePattern::pair_count() const {
    return static_cast<std::size_t>(std::count(rel_.begin(), rel_.end(), 1));
}

bool IncidencePattern::is_reflexive() const {
    for (std::size_t i = 0; i < dim_; ++i) {
        if (!contains(i, i)) {
            return false;
        }
    }
    return true;
}

bool IncidencePattern::is_transitive() const {
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t k = 0; k < dim_; ++k) {
            if (!contains(i, k)) {
                continue;
            }
            for (std::size_t j = 0; j < dim_; ++j) {
                if (contains(k, j) && !contains(i, j)) {
                    return false;
                }
            }
        }
    }
    return true;
}

IncidencePattern IncidencePattern::selfadjoint_part() const {
    IncidencePattern p(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            if (contains(i, j) && contains(j, i)) {
                p.set(i, j);
            }
        }
    }
    return p;
}

IncidencePattern IncidencePattern::ampliate(std::size_t m) const {
    IncidencePattern p(dim_ * m);
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            if (!contains(i, j)) {
                continue;
            }
            for (std::size_t a = 0; a < m; ++a) {
                for (std::size_t b = 0; b < m; ++b) {
                    p.set(i * m + a, j * m + b);
                }
            }
        }
    }
    return p;
}

std::optional<BlockComposition> IncidencePattern::as_nest() const {
    if (dim_ == 0) {
        return std::nullopt;
    }
    std::vector<std::size_t> sizes{1};
    for (std::size_t i = 1; i < dim_; ++i) {
        if (contains(i, i - 1)) {
            ++sizes.back();
        } else {
            sizes.push_back(1);
        }
    }
    BlockComposition comp(std::move(sizes));
    if (nest_pattern(comp) == *this) {
        return comp;
    }
    return std::nullopt;
}

CMatrix IncidencePattern::truncate(const CMatrix& x) const {
    require_square(x, dim_, "truncate");
    CMatrix out = x;
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            if (!contains(i, j)) {
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 0.0;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// MasaPartition

MasaPartition::MasaPartition(std::vector<std::vector<std::size_t>> cells) : cells_(std::move(cells)) {
    std::size_t dim = 0;
    for (auto& c : cells_) {
        if (c.empty()) {
            throw Error(ErrorKind::InvalidConfig, "MasaPartition", "cells must be nonempty");
        }
        std::sort(c.begin(), c.end());
        dim += c.size();
    }
    cell_of_.assign(dim, dim);
    for (std::size_t k = 0; k < cells_.size(); ++k) {
        for (std::size_t i : cells_[k]) {
            if (i >= dim || cell_of_[i] != dim) {
                throw Error(ErrorKind::InvalidConfig, "MasaPartition", "cells must partition {1..N}");
            }
            cell_of_[i] = k;
        }
    }
}

MasaPartition MasaPartition::full_diagonal(std::size_t dim) {
    std::vector<std::vector<std::size_t>> cells(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        cells[i] = {i};
    }
    return MasaPartition(std::move(cells));
}

MasaPartition MasaPartition::single_cell(std::size_t dim) {
    std::vector<std::size_t> all(dim);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return MasaPartition({std::move(all)});
}

MasaPartition MasaPartition::ampliated(std::size_t vertices, std::size_t m) {
    std::vector<std::vector<std::size_t>> cells(vertices);
    for (std::size_t i = 0; i < vertices; ++i) {
        for (std::size_t a = 0; a < m; ++a) {
            cells[i].push_back(i * m + a);
        }
    }
    return MasaPartition(std::move(cells));
}

CMatrix MasaPartition::cell_projection(std::size_t c) const {
    const auto n = static_cast<Eigen::Index>(dim());
    CMatrix p = CMatrix::Zero(n, n);
    for (std::size_t i : cells_[c]) {
        p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    }
    return p;
}

const CMatrix& MatrixUnitSystem::unit(std::size_t i, std::size_t j) const {
    const auto it = units.find({i, j});
    if (it == units.end()) {
        throw Error(ErrorKind::DimensionMismatch, "MatrixUnitSystem",
                    "no unit stored for (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
    }
    return it->second;
}

// ---------------------------------------------------------------------------
// Operations

IncidencePattern nest_pattern(const BlockComposition& comp) {
    std::vector<IndexPair> pairs;
    const std::size_t n = comp.total();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (comp.block_of(i) <= comp.block_of(j)) {
                pairs.emplace_back(i, j);
            }
        }
    }
    return IncidencePattern::from_pairs(n, pairs);
}

double arveson_distance(const CMatrix& x, const BlockComposition& comp) {
    require_square(x, comp.total(), "arveson_distance");
    const auto n = static_cast<Eigen::Index>(comp.total());
    double best = 0.0;
    for (std::size_t k = 1; k < comp.block_count(); ++k) {
        const auto cut = static_cast<Eigen::Index>(comp.offset(k));
        best = std::max(best, operator_norm(x.bottomLeftCorner(n - cut, cut)));
    }
    return best;
}

CMatrix expectation(const CMatrix& b, const MasaPartition& masa) {
    require_square(b, masa.dim(), "expectation");
    CMatrix out = CMatrix::Zero(b.rows(), b.cols());
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
        for (Eigen::Index j = 0; j < b.cols(); ++j) {
            if (masa.cell_of(static_cast<std::size_t>(i)) == masa.cell_of(static_cast<std::size_t>(j))) {
                out(i, j) = b(i, j);
            }
        }
    }
    return out;
}

CMatrix block_diagonal_part(const CMatrix& b, const BlockComposition& comp) {
    require_square(b, comp.total(), "block_diagonal_part");
    CMatrix out = CMatrix::Zero(b.rows(), b.cols());
    for (std::size_t k = 0; k < comp.block_count(); ++k) {
        const auto off = static_cast<Eigen::Index>(comp.offset(k));
        const auto len = static_cast<Eigen::Index>(comp.size(k));
        out.block(off, off, len, len) = b.block(off, off, len, len);
    }
    return out;
}

double masa_distance_estimate(const CMatrix& w, const MasaPartition& masa) {
    return operator_norm(w - expectation(w, masa));
}

MasaDistance masa_distance(const CMatrix& w, const MasaPartition& masa, const Tolerances& tol) {
    MasaDistance out;
    out.estimate = masa_distance_estimate(w, masa);

    const std::size_t cells = masa.cell_count();
    const auto n = w.rows();
    auto commutator_norm = [&](const std::vector<char>& in_subset) {
        // (wp - pw)_st = w_st (p_t - p_s)
        CMatrix c = CMatrix::Zero(n, n);
        for (Eigen::Index s = 0; s < n; ++s) {
            const int ps = in_subset[masa.cell_of(static_cast<std::size_t>(s))];
            for (Eigen::Index t = 0; t < n; ++t) {
                const int pt = in_subset[masa.cell_of(static_cast<std::size_t>(t))];
                if (ps != pt) {
                    c(s, t) = w(s, t) * static_cast<double>(pt - ps);
                }
            }
        }
        return operator_norm(c);
    };

    std::vector<char> subset(cells, 0);
    if (cells <= tol.brute_limit) {
        out.exhaustive = true;
        // p and I - p give the same commutator norm, so fix the last cell outside.
        const std::uint64_t count = cells == 0 ? 0 : (std::uint64_t{1} << (cells - 1));
        for (std::uint64_t mask = 1; mask < count; ++mask) {
            for (std::size_t c = 0; c < cells; ++c) {
                subset[c] = static_cast<char>((mask >> c) & 1U);
            }
            out.commutator_bound = std::max(out.commutator_bound, commutator_norm(subset));
        }
    } else {
        out.exhaustive = false;
        for (std::size_t c = 0; c < cells; ++c) {
            std::fill(subset.begin(), subset.end(), 0);
            subset[c] = 1;
            out.commutator_bound = std::max(out.commutator_bound, commutator_norm(subset));
        }
    }
    return out;
}

double support_violation(const CMatrix& x, const IncidencePattern& pattern) {
    require_square(x, pattern.dim(), "support_violation");
    double worst = 0.0;
    for (std::size_t i = 0; i < pattern.dim(); ++i) {
        for (std::size_t j = 0; j < pattern.dim(); ++j) {
            if (!pattern.contains(i, j)) {
                worst = std::max(worst, std::abs(x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
            }
        }
    }
    return worst;
}

ContainmentDefect containment_defect(const MatrixUnitSystem& gens, const IncidencePattern& target) {
    if (gens.ambient_dim != target.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "containment_defect",
                    "generators act on C^" + std::to_string(gens.ambient_dim) + ", target pattern has dim " +
                        std::to_string(target.dim()));
    }
    ContainmentDefect out;
    const auto nest = target.as_nest();
    out.exact = nest.has_value();
    for (const auto& [key, g] : gens.units) {
        const double d = nest ? arveson_distance(g, *nest) : operator_norm(g - target.truncate(g));
        out.value = std::max(out.value, d);
    }
    return out;
}

double normalizer_defect(const CMatrix& v, const MasaPartition& masa) {
    require_square(v, masa.dim(), "normalizer_defect");
    double worst = 0.0;
    auto offer = [&](const CMatrix& x) {
        const CMatrix off = x - expectation(x, masa);
        if (off.norm() > worst) {
            worst = std::max(worst, hermitian_norm(off));
        }
    };
    for (std::size_t c = 0; c < masa.cell_count(); ++c) {
        const auto& cell = masa.cell(c);
        CMatrix cols(v.rows(), static_cast<Eigen::Index>(cell.size()));
        CMatrix rows(static_cast<Eigen::Index>(cell.size()), v.cols());
        for (std::size_t k = 0; k < cell.size(); ++k) {
            cols.col(static_cast<Eigen::Index>(k)) = v.col(static_cast<Eigen::Index>(cell[k]));
            rows.row(static_cast<Eigen::Index>(k)) = v.row(static_cast<Eigen::Index>(cell[k]));
        }
        const CMatrix forward = cols * cols.adjoint();   // v e v*
        const CMatrix backward = rows.adjoint() * rows;  // v* e v
        offer(forward);
        offer(backward);
    }
    return worst;
}

double matrix_unit_residual(const MatrixUnitSystem& sys) {
    MaxNorm worst;
    for (const auto& [ij, f] : sys.units) {
        const auto [i, j] = ij;
        if (const auto adj = sys.units.find({j, i}); adj != sys.units.end()) {
            worst.offer(f.adjoint() - adj->second);
        }
        // f_ij* f_ij = f_jj and f_ij f_ij* = f_ii
        if (const auto fjj = sys.units.find({j, j}); fjj != sys.units.end()) {
            worst.offer(f.adjoint() * f - fjj->second);
        }
        if (const auto fii = sys.units.find({i, i}); fii != sys.units.end()) {
            worst.offer(f * f.adjoint() - fii->second);
        }
        for (const auto& [kl, g] : sys.units) {
            const auto [k, l] = kl;
            const CMatrix prod = f * g;
            if (j != k) {
                worst.offer(prod);
            } else if (const auto fil = sys.units.find({i, l}); fil != sys.units.end()) {
                worst.offer(prod - fil->second);
            }
        }
    }
    return worst.value;
}

DefectReport measure_defects(const MatrixUnitSystem& gens, const IncidencePattern& target, const MasaPartition& masa) {
    DefectReport report;
    const auto nest = target.as_nest();
    report.containment_exact = nest.has_value();
    for (const auto& [key, g] : gens.units) {
        const double pi = partial_isometry_defect(g);
        const double nd = normalizer_defect(g, masa);
        const double cd = nest ? arveson_distance(g, *nest) : operator_norm(g - target.truncate(g));
        report.pisometry_defect = std::max(report.pisometry_defect, pi);
        report.normalizer_defect = std::max(report.normalizer_defect, nd);
        report.containment_defect = std::max(report.containment_defect, cd);
        const std::string name = "e" + std::to_string(key.first + 1) + "," + std::to_string(key.second + 1);
        report.per_generator.emplace_back(name + ":pisometry", pi);
        report.per_generator.emplace_back(name + ":normalizer", nd);
        report.per_generator.emplace_back(name + ":containment", cd);
    }
    return report;
}

MatrixUnitSystem ampliated_units(const IncidencePattern& pattern, std::size_t multiplicity) {
    MatrixUnitSystem sys;
    sys.pattern = pattern;
    sys.ambient_dim = pattern.dim() * multiplicity;
    const auto n = static_cast<Eigen::Index>(sys.ambient_dim);
    for (const auto& [i, j] : pattern.pairs()) {
        CMatrix e = CMatrix::Zero(n, n);
        for (std::size_t a = 0; a < multiplicity; ++a) {
            e(static_cast<Eigen::Index>(i * multiplicity + a), static_cast<Eigen::Index>(j * multiplicity + a)) = 1.0;
        }
        sys.units.emplace(IndexPair{i, j}, std::move(e));
    }
    return sys;
}

MatrixUnitSystem canonical_units(const IncidencePattern& pattern) {
    return ampliated_units(pattern, 1);
}

MatrixUnitSystem conjugate(const MatrixUnitSystem& sys, const CMatrix& u) {
    MatrixUnitSystem out;
    out.pattern = sys.pattern;
    out.ambient_dim = sys.ambient_dim;
    const CMatrix ustar = u.adjoint();
    for (const auto& [key, f] : sys.units) {
        out.units.emplace(key, u * f * ustar);
    }
    return out;
}

StarEmbedding random_near_identity_embedding(const IncidencePattern& pattern, std::size_t multiplicity,
                                             double epsilon, std::uint64_t seed) {
    if (epsilon < 0.0) {
        throw Error(ErrorKind::InvalidConfig, "random_near_identity_embedding", "epsilon must be nonnegative");
    }
    if (multiplicity == 0) {
        throw Error(ErrorKind::InvalidConfig, "random_near_identity_embedding", "multiplicity must be positive");
    }
    Rng rng(seed);
    StarEmbedding emb;
    emb.source = canonical_units(pattern);
    const MatrixUnitSystem exact = ampliated_units(pattern, multiplicity);
    if (epsilon == 0.0) {
        emb.images = exact;
        return emb;
    }
    const CMatrix u = exp_skew(random_skew(exact.ambient_dim, epsilon, rng));
    emb.images = conjugate(exact, u);
    return emb;
}

double unit_distance(const MatrixUnitSystem& a, const MatrixUnitSystem& b) {
    double worst = 0.0;
    for (const auto& [key, f] : a.units) {
        const auto it = b.units.find(key);
        if (it == b.units.end()) {
            throw Error(ErrorKind::DimensionMismatch, "unit_distance", "systems index different pairs");
        }
        worst = std::max(worst, operator_norm(f - it->second));
    }
    return worst;
}

} // namespace perturba
