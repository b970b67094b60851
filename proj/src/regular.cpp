#include "perturba/regular.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
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

std::string cell_text(const std::vector<std::size_t>& cell) {
    std::string s = "{";
    for (std::size_t k = 0; k < cell.size(); ++k) {
        s += (k ? "," : "") + std::to_string(cell[k] + 1);
    }
    return s + "}";
}

// Spectral rounding at 1/2 inside every cell; the result commutes with the cell projections.
CMatrix round_cellwise(const CMatrix& x, const MasaPartition& masa) {
    CMatrix out = CMatrix::Zero(x.rows(), x.cols());
    for (const auto& cell : masa.cells()) {
        const auto len = static_cast<Eigen::Index>(cell.size());
        CMatrix sub(len, len);
        for (Eigen::Index a = 0; a < len; ++a) {
            for (Eigen::Index b = 0; b < len; ++b) {
                sub(a, b) = x(static_cast<Eigen::Index>(cell[a]), static_cast<Eigen::Index>(cell[b]));
            }
        }
        const CMatrix rounded = round_blockwise(sub, {cell.size()});
        for (Eigen::Index a = 0; a < len; ++a) {
            for (Eigen::Index b = 0; b < len; ++b) {
                out(static_cast<Eigen::Index>(cell[a]), static_cast<Eigen::Index>(cell[b])) = rounded(a, b);
            }
        }
    }
    return out;
}

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) {
            return false;
        }
        parent[std::max(a, b)] = std::min(a, b);
        return true;
    }
};

} // namespace

ProjectionTransport approx_projection_transport(const CMatrix& w, const CMatrix& p, const MasaPartition& masa,
                                                const Tolerances& tol) {
    const auto n = static_cast<Eigen::Index>(masa.dim());
    if (w.rows() != n || w.cols() != n || p.rows() != n || p.cols() != n) {
        throw Error(ErrorKind::DimensionMismatch, "approx_projection_transport", "operands must match the masa");
    }
    const double st = tol.struct_tol_for(masa.dim());
    if (projection_defect(p) > st || operator_norm(p - expectation(p, masa)) > st) {
        throw Error(ErrorKind::NotProjection, "approx_projection_transport", "p is not a projection of the masa");
    }
    const double defect = std::max(partial_isometry_defect(w), normalizer_defect(w, masa));
    if (defect >= kRoundingCeiling) {
        throw Error(ErrorKind::DefectTooLarge, "approx_projection_transport",
                    "w has defect " + num(defect) + " (needs < 1/4)");
    }
    ProjectionTransport out;
    const CMatrix fin = w * p * w.adjoint();
    const CMatrix ini = w.adjoint() * p * w;
    out.p2 = round_cellwise(expectation(fin, masa), masa);
    out.p1 = round_cellwise(expectation(ini, masa), masa);
    out.residual_final = operator_norm(fin - out.p2);
    out.residual_initial = operator_norm(ini - out.p1);
    return out;
}

Corrected<CMatrix> fix_normalizer(const CMatrix& v, const IncidencePattern& pattern, const MasaPartition& masa,
                                  const Tolerances& tol) {
    const auto n = static_cast<Eigen::Index>(masa.dim());
    if (v.rows() != n || v.cols() != n || pattern.dim() != masa.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "fix_normalizer", "v, pattern and masa must share one dimension");
    }
    const double pid = partial_isometry_defect(v);
    const double nd = normalizer_defect(v, masa);
    const double eps = std::max(pid, nd);
    if (eps >= kRoundingCeiling) {
        throw Error(ErrorKind::DefectTooLarge, "fix_normalizer",
                    "partial isometry defect " + num(pid) + ", normalizer defect " + num(nd) + " (need < 1/4)");
    }

    // Support S = {(i, j) : |v_ij| > 1/2}, at most one entry per row and column.
    CMatrix v1 = CMatrix::Zero(n, n);
    std::vector<char> row_used(masa.dim(), 0);
    std::vector<char> col_used(masa.dim(), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (std::abs(v(i, j)) <= kSupportThreshold) {
                continue;
            }
            const auto ui = static_cast<std::size_t>(i);
            const auto uj = static_cast<std::size_t>(j);
            if (row_used[ui] || col_used[uj]) {
                throw Error(ErrorKind::AmbiguousSupport, "fix_normalizer",
                            "two entries above 1/2 share row " + std::to_string(i + 1) + " or column " +
                                std::to_string(j + 1));
            }
            if (!pattern.contains(ui, uj)) {
                throw Error(ErrorKind::DefectTooLarge, "fix_normalizer",
                            "entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                ") above 1/2 lies outside the pattern");
            }
            row_used[ui] = col_used[uj] = 1;
            v1(i, j) = 1.0;
        }
    }

    // d = E(v1* v) on the diagonal, rounded to a diagonal partial isometry.
    const CMatrix d = v1.adjoint() * v;
    CMatrix vhat = CMatrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Complex dj = d(j, j);
        if (std::abs(dj) > kSupportThreshold) {
            vhat.col(j) = v1.col(j) * (dj / std::abs(dj));
        }
    }
    const double nd_hat = normalizer_defect(vhat, masa);
    if (nd_hat > tol.struct_tol_for(masa.dim())) {
        throw Error(ErrorKind::DefectTooLarge, "fix_normalizer",
                    "rounded support does not normalize the masa (defect " + num(nd_hat) + ")");
    }
    Corrected<CMatrix> out{std::move(vhat), {}};
    out.cert.input_defect = eps;
    out.cert.correction_distance = operator_norm(v - out.value);
    out.cert.structural_residual = std::max(partial_isometry_defect(out.value), nd_hat);
    return out;
}

std::vector<std::vector<std::size_t>> masa_containment(const MasaPartition& c1, const MasaPartition& c2) {
    if (c1.dim() != c2.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "masa_containment", "partitions of different sets");
    }
    std::vector<std::vector<std::size_t>> refinement(c1.cell_count());
    for (std::size_t k = 0; k < c2.cell_count(); ++k) {
        const auto& cell = c2.cell(k);
        const std::size_t owner = c1.cell_of(cell.front());
        for (std::size_t i : cell) {
            if (c1.cell_of(i) != owner) {
                throw Error(ErrorKind::NotRefined, "masa_containment",
                            "cell " + cell_text(cell) + " of C2 straddles cells " + cell_text(c1.cell(owner)) +
                                " and " + cell_text(c1.cell(c1.cell_of(i))) + " of C1");
            }
        }
        refinement[owner].push_back(k);
    }
    return refinement;
}

Corrected<CMatrix> transfer_normalizer(const CMatrix& v, const IncidencePattern& a2, const MasaPartition& c2,
                                       const Tolerances& tol) {
    const CMatrix w = a2.truncate(v);
    const double eps = operator_norm(v - w);
    if (eps >= kRoundingCeiling) {
        throw Error(ErrorKind::DefectTooLarge, "transfer_normalizer",
                    "distance to the span of A2 is " + num(eps) + " (needs < 1/4)");
    }
    Corrected<CMatrix> fixed;
    try {
        fixed = fix_normalizer(w, a2, c2, tol);
    } catch (const Error& e) {
        throw e.within("transfer_normalizer");
    }
    fixed.cert.input_defect = eps;
    fixed.cert.correction_distance = operator_norm(v - fixed.value);
    fixed.cert.bound_claimed.reset();
    return fixed;
}

TreeWords tree_words(const IncidencePattern& a1) {
    const std::size_t n = a1.dim();
    TreeWords out;
    out.digraph = a1;

    // Classes of the self-adjoint part, each listed in ascending order.
    const IncidencePattern sa = a1.selfadjoint_part();
    std::vector<std::size_t> cls(n, n);
    std::vector<std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) {
        if (cls[i] != n) {
            continue;
        }
        members.emplace_back();
        for (std::size_t j = i; j < n; ++j) {
            if (sa.contains(i, j)) {
                cls[j] = members.size() - 1;
                members.back().push_back(j);
            }
        }
    }

    // Chains inside classes plus covering relations between class representatives.
    std::vector<IndexPair> candidates;
    for (const auto& m : members) {
        for (std::size_t t = 0; t + 1 < m.size(); ++t) {
            candidates.emplace_back(m[t], m[t + 1]);
        }
    }
    const std::size_t classes = members.size();
    auto below = [&](std::size_t x, std::size_t y) {  // class x strictly below class y
        return x != y && a1.contains(members[x].front(), members[y].front());
    };
    for (std::size_t x = 0; x < classes; ++x) {
        for (std::size_t y = 0; y < classes; ++y) {
            if (!below(x, y)) {
                continue;
            }
            bool covering = true;
            for (std::size_t z = 0; z < classes && covering; ++z) {
                if (below(x, z) && below(z, y)) {
                    covering = false;
                }
            }
            if (covering) {
                candidates.emplace_back(members[x].front(), members[y].front());
            }
        }
    }
    std::sort(candidates.begin(), candidates.end());
    DisjointSets forest(n);
    std::vector<std::vector<std::pair<std::size_t, int>>> adjacent(n);
    for (const auto& [i, j] : candidates) {
        if (forest.unite(i, j)) {
            out.tree_edges.emplace_back(i, j);
            const int label = static_cast<int>(out.tree_edges.size());
            adjacent[i].emplace_back(j, label);
            adjacent[j].emplace_back(i, -label);
        }
    }

    // Word for (i, j): the signed edge labels along the tree path from i to j.
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> prev(n, n);
        std::vector<int> via(n, 0);
        std::queue<std::size_t> frontier;
        prev[i] = i;
        frontier.push(i);
        while (!frontier.empty()) {
            const std::size_t u = frontier.front();
            frontier.pop();
            for (const auto& [w, label] : adjacent[u]) {
                if (prev[w] == n) {
                    prev[w] = u;
                    via[w] = label;
                    frontier.push(w);
                }
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (!a1.contains(i, j)) {
                continue;
            }
            std::vector<int> word;
            for (std::size_t x = j; x != i; x = prev[x]) {
                word.push_back(via[x]);
            }
            std::reverse(word.begin(), word.end());
            out.words.emplace(IndexPair{i, j}, std::move(word));
        }
    }
    return out;
}

CMatrix evaluate_word(const std::vector<int>& word, const std::vector<CMatrix>& edges, const CMatrix& empty_value) {
    if (word.empty()) {
        return empty_value;
    }
    CMatrix acc;
    for (std::size_t t = 0; t < word.size(); ++t) {
        const int label = word[t];
        const CMatrix& e = edges.at(static_cast<std::size_t>(std::abs(label)) - 1);
        const CMatrix factor = label > 0 ? e : CMatrix(e.adjoint());
        acc = t == 0 ? factor : CMatrix(acc * factor);
    }
    return acc;
}

RegularSynthesis synthesize_regular_embedding(const MatrixUnitSystem& reference, const TreeWords& words,
                                              const std::vector<CMatrix>& edge_images,
                                              const std::vector<CMatrix>& f_diag, const IncidencePattern& a2,
                                              const MasaPartition& c2, const Tolerances& tol) {
    const std::size_t n1 = words.digraph.dim();
    const std::size_t N = reference.ambient_dim;
    if (f_diag.size() != n1 || edge_images.size() != words.tree_edges.size() || a2.dim() != N || c2.dim() != N) {
        throw Error(ErrorKind::DimensionMismatch, "synthesize_regular_embedding",
                    "edge, diagonal, pattern and masa data do not fit together");
    }
    const double st = tol.struct_tol_for(N);
    for (std::size_t i = 0; i < n1; ++i) {
        if (const double d = projection_defect(f_diag[i]); d > st) {
            throw Error(ErrorKind::NotProjection, "synthesize_regular_embedding",
                        "diagonal image " + std::to_string(i + 1) + " has projection defect " + num(d));
        }
    }
    double delta = 0.0;
    for (std::size_t k = 0; k < edge_images.size(); ++k) {
        const auto [i, j] = words.tree_edges[k];
        const CMatrix& e = edge_images[k];
        const double initial = operator_norm(e.adjoint() * e - f_diag[j]);
        const double final = operator_norm(e * e.adjoint() - f_diag[i]);
        if (initial > st || final > st) {
            throw Error(ErrorKind::FrameMismatch, "synthesize_regular_embedding",
                        "edge " + std::to_string(k + 1) + " has initial/final projection errors " + num(initial) +
                            ", " + num(final));
        }
        delta = std::max(delta, operator_norm(reference.unit(i, j) - e));
    }
    for (std::size_t i = 0; i < n1; ++i) {
        delta = std::max(delta, operator_norm(reference.unit(i, i) - f_diag[i]));
    }

    RegularSynthesis out;
    out.embedding.source = canonical_units(words.digraph);
    MatrixUnitSystem& images = out.embedding.images;
    images.pattern = words.digraph;
    images.ambient_dim = N;
    double regularity = 0.0;
    for (const auto& [key, word] : words.words) {
        CMatrix f = evaluate_word(word, edge_images, f_diag[key.first]);
        if (const double s = support_violation(f, a2); s > st) {
            throw Error(ErrorKind::SupportMismatch, "synthesize_regular_embedding",
                        "unit (" + std::to_string(key.first + 1) + "," + std::to_string(key.second + 1) +
                            ") leaves the pattern of A2 (entry " + num(s) + ")");
        }
        regularity = std::max(regularity, normalizer_defect(f, c2));
        out.cert.correction_distance = std::max(out.cert.correction_distance, operator_norm(reference.unit(key.first, key.second) - f));
        images.units.emplace(key, std::move(f));
    }
    out.cert.input_defect = delta;
    out.cert.structural_residual = std::max(matrix_unit_residual(images), regularity);
    out.cert.bound_claimed = static_cast<double>(n1) * delta;
    return out;
}

RegularResult regular_stabilize(const StarEmbedding& phi1, const MasaPartition& c1, const IncidencePattern& a2,
                                const MasaPartition& c2, const Tolerances& tol) {
    const MatrixUnitSystem& images = phi1.images;
    const std::size_t N = images.ambient_dim;
    const std::size_t n1 = images.pattern.dim();
    if (c1.dim() != N || c2.dim() != N || a2.dim() != N) {
        throw Error(ErrorKind::DimensionMismatch, "regular_stabilize",
                    "masas and target pattern must act on C^" + std::to_string(N));
    }
    RegularResult result;
    RegularReport& report = result.report;
    report.ambient_dim = N;
    try {
        report.refinement = masa_containment(c1, c2);
    } catch (const Error& e) {
        throw e.within("regular_stabilize");
    }
    for (const auto& [key, g] : images.units) {
        report.containment_defect = std::max(report.containment_defect, operator_norm(g - a2.truncate(g)));
    }

    // Each vertex goes to the nearest cell of C1.
    std::vector<CMatrix> f_diag(n1);
    std::vector<char> cell_taken(c1.cell_count(), 0);
    for (std::size_t i = 0; i < n1; ++i) {
        // A cell within 1/2 has average diagonal weight above 1/2; every other cell below it.
        const CMatrix& e = images.unit(i, i);
        double heaviest = -1.0;
        std::size_t best_cell = 0;
        for (std::size_t c = 0; c < c1.cell_count(); ++c) {
            double weight = 0.0;
            for (std::size_t a : c1.cell(c)) {
                weight += e(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)).real();
            }
            weight /= static_cast<double>(c1.cell(c).size());
            if (weight > heaviest) {
                heaviest = weight;
                best_cell = c;
            }
        }
        const double best = operator_norm(e - c1.cell_projection(best_cell));
        if (best >= 0.5 || cell_taken[best_cell]) {
            throw Error(ErrorKind::DefectTooLarge, "regular_stabilize/diagonal",
                        "vertex " + std::to_string(i + 1) + " is at distance " + num(best) +
                            " from the nearest free cell of C1 (needs < 1/2)");
        }
        cell_taken[best_cell] = 1;
        f_diag[i] = c1.cell_projection(best_cell);
        report.diagonal_distance = std::max(report.diagonal_distance, best);
    }

    const TreeWords words = tree_words(images.pattern);
    std::vector<CMatrix> edges;
    for (std::size_t k = 0; k < words.tree_edges.size(); ++k) {
        const auto [i, j] = words.tree_edges[k];
        try {
            Corrected<CMatrix> e = transfer_normalizer(images.unit(i, j), a2, c2, tol);
            report.edge_distance = std::max(report.edge_distance, e.cert.correction_distance);
            edges.push_back(std::move(e.value));
        } catch (const Error& e) {
            throw e.within("regular_stabilize/tree edge " + std::to_string(k + 1));
        }
    }

    RegularSynthesis synth;
    try {
        synth = synthesize_regular_embedding(images, words, edges, f_diag, a2, c2, tol);
    } catch (const Error& e) {
        throw e.within("regular_stabilize");
    }
    result.phi = std::move(synth.embedding);
    result.phi.source = phi1.source;
    report.max_distance = synth.cert.correction_distance;
    report.bound = synth.cert.bound_claimed.value_or(0.0);
    report.matrix_unit_residual = matrix_unit_residual(result.phi.images);
    for (const auto& [key, f] : result.phi.images.units) {
        report.regularity_defect = std::max(report.regularity_defect, normalizer_defect(f, c2));
        report.support_violation = std::max(report.support_violation, support_violation(f, a2));
    }
    return result;
}

} // namespace perturba
