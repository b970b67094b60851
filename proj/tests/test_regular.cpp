#include <doctest.h>

#include <cmath>
#include <vector>

#include "perturba/error.hpp"
#include "perturba/random.hpp"
#include "perturba/regular.hpp"
#include "support.hpp"

using namespace perturba;
using testing::diag;
using testing::dist;
using testing::mat;

namespace {

template <class F>
Error caught(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e;
    }
    FAIL("expected an Error");
    return Error(ErrorKind::Io, "", "");
}

IncidencePattern chain(std::size_t n) {
    std::vector<IndexPair> pairs;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        pairs.emplace_back(i, i + 1);
    }
    return IncidencePattern::closure_of(n, pairs);
}

// Every reflexive transitive relation on n points.
std::vector<IncidencePattern> all_patterns(std::size_t n) {
    std::vector<IndexPair> off;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) {
                off.emplace_back(i, j);
            }
        }
    }
    std::vector<IncidencePattern> out;
    for (unsigned long mask = 0; mask < (1UL << off.size()); ++mask) {
        std::vector<IndexPair> chosen;
        for (std::size_t k = 0; k < off.size(); ++k) {
            if (mask & (1UL << k)) {
                chosen.push_back(off[k]);
            }
        }
        const IncidencePattern p = IncidencePattern::closure_of(n, chosen);
        if (p.pair_count() == n + chosen.size()) {
            out.push_back(p);
        }
    }
    return out;
}

bool is_exact_normalizer(const CMatrix& v) {
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        int row = 0;
        int col = 0;
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            for (const Complex z : {v(i, j), v(j, i)}) {
                if (z == Complex(0.0)) {
                    continue;
                }
                if (std::abs(std::abs(z) - 1.0) > 1e-15) {
                    return false;
                }
            }
            row += v(i, j) != Complex(0.0);
            col += v(j, i) != Complex(0.0);
        }
        if (row > 1 || col > 1) {
            return false;
        }
    }
    return true;
}

StarEmbedding regular_exact(const IncidencePattern& a1, std::size_t m) {
    StarEmbedding e;
    e.source = canonical_units(a1);
    e.images = ampliated_units(a1, m);
    return e;
}

} // namespace

TEST_CASE("approx_projection_transport") {
    const MasaPartition d4 = MasaPartition::full_diagonal(4);
    const CMatrix p = diag({1, 1, 0, 0});
    Rng rng(3);
    SUBCASE("exact normalizer") {
        const CMatrix w = random_phase_permutation(4, rng);
        const ProjectionTransport t = approx_projection_transport(w, p, d4);
        CHECK(t.residual_initial < 1e-15);
        CHECK(t.residual_final < 1e-15);
        CHECK(dist(t.p2, w * p * w.adjoint()) < 1e-15);
    }
    SUBCASE("perturbed permutation") {
        for (int k = 0; k < 10; ++k) {
            const CMatrix w = exp_skew(random_skew(4, 0.01, rng)) * random_phase_permutation(4, rng);
            const ProjectionTransport t = approx_projection_transport(w, p, d4);
            CHECK(t.residual_initial <= 0.1);
            CHECK(t.residual_final <= 0.1);
            CHECK(dist(t.p1, expectation(t.p1, d4)) == 0.0);
            CHECK(projection_defect(t.p1) == 0.0);
        }
    }
    SUBCASE("zero") {
        const ProjectionTransport t = approx_projection_transport(CMatrix::Zero(4, 4), p, d4);
        CHECK(t.p1.norm() == 0.0);
        CHECK(t.p2.norm() == 0.0);
    }
    CHECK(caught([&] { approx_projection_transport(CMatrix::Zero(4, 4), 0.5 * p, d4); }).kind() ==
          ErrorKind::NotProjection);
}

TEST_CASE("fix_normalizer") {
    const MasaPartition d2 = MasaPartition::full_diagonal(2);
    const IncidencePattern m2 = IncidencePattern::full(2);
    SUBCASE("exact normalizer is kept") {
        Rng rng(5);
        const CMatrix v = random_phase_permutation(5, rng);
        const auto r = fix_normalizer(v, IncidencePattern::full(5), MasaPartition::full_diagonal(5));
        CHECK(dist(r.value, v) < 1e-15);
    }
    SUBCASE("two large entries with a phase") {
        const Complex phase = std::polar(1.0, 0.7);
        const CMatrix v = mat({{0, 0.98 * phase}, {0.99, 0}});
        const auto r = fix_normalizer(v, m2, d2);
        CHECK(dist(r.value, mat({{0, phase}, {1, 0}})) < 1e-15);
        CHECK(r.cert.correction_distance <= 0.05);
    }
    SUBCASE("zero") {
        const auto r = fix_normalizer(CMatrix::Zero(2, 2), m2, d2);
        CHECK(r.value.norm() == 0.0);
    }
    SUBCASE("output is structurally a normalizer") {
        Rng rng(6);
        for (int k = 0; k < 30; ++k) {
            const CMatrix v = exp_skew(random_skew(6, 0.05, rng)) * random_phase_permutation(6, rng);
            const auto r = fix_normalizer(v, IncidencePattern::full(6), MasaPartition::full_diagonal(6));
            CHECK(is_exact_normalizer(r.value));
        }
    }
    SUBCASE("entry above 1/2 outside the pattern") {
        const IncidencePattern t2 = chain(2);
        CHECK(caught([&] { fix_normalizer(mat({{0, 0}, {1, 0}}), t2, d2); }).kind() == ErrorKind::DefectTooLarge);
    }
    SUBCASE("defect too large") {
        const double r = 1.0 / std::sqrt(2.0);
        CHECK(caught([&] { fix_normalizer(mat({{r, r}, {r, -r}}), m2, d2); }).kind() == ErrorKind::DefectTooLarge);
    }
}

TEST_CASE("masa_containment") {
    const auto all = masa_containment(MasaPartition::single_cell(3), MasaPartition::full_diagonal(3));
    CHECK(all == std::vector<std::vector<std::size_t>>{{0, 1, 2}});

    const auto split = masa_containment(MasaPartition({{0, 1}, {2}}), MasaPartition::full_diagonal(3));
    CHECK(split == std::vector<std::vector<std::size_t>>{{0, 1}, {2}});

    const Error e = caught([] { masa_containment(MasaPartition::full_diagonal(2), MasaPartition::single_cell(2)); });
    CHECK(e.kind() == ErrorKind::NotRefined);
    CHECK(std::string(e.what()).find("{1,2}") != std::string::npos);
}

TEST_CASE("transfer_normalizer") {
    const IncidencePattern a2 = chain(2).ampliate(2);
    const MasaPartition c2 = MasaPartition::full_diagonal(4);
    CMatrix e = CMatrix::Zero(4, 4);
    e(0, 2) = 1.0;
    e(1, 3) = 1.0;
    SUBCASE("already a normalizer in A2") {
        CHECK(dist(transfer_normalizer(e, a2, c2).value, e) == 0.0);
    }
    SUBCASE("conjugated ensemble") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Rng rng(seed);
            const CMatrix u = random_unitary_at_distance(4, 1e-3, rng);
            const auto r = transfer_normalizer(u * e * u.adjoint(), a2, c2);
            CHECK(r.cert.correction_distance <= 0.1);
            CHECK(dist(r.value.cwiseAbs().cast<Complex>(), e) < 1e-15);
        }
    }
    SUBCASE("orthogonal to the pattern") {
        CHECK(caught([&] { transfer_normalizer(e.adjoint(), a2, c2); }).kind() == ErrorKind::DefectTooLarge);
    }
}

TEST_CASE("tree_words") {
    SUBCASE("two-vertex chain") {
        const TreeWords w = tree_words(chain(2));
        CHECK(w.tree_edges == std::vector<IndexPair>{{0, 1}});
        CHECK(w.words.at({0, 1}) == std::vector<int>{1});
        CHECK(w.words.at({0, 0}).empty());
    }
    SUBCASE("three-vertex chain") {
        const TreeWords w = tree_words(chain(3));
        CHECK(w.tree_edges == std::vector<IndexPair>{{0, 1}, {1, 2}});
        CHECK(w.words.at({0, 2}) == std::vector<int>{1, 2});
    }
    SUBCASE("two components") {
        const TreeWords w = tree_words(IncidencePattern(2));
        CHECK(w.tree_edges.empty());
        CHECK(w.words.size() == 2);
    }
    SUBCASE("self-adjoint blocks use adjoint edges") {
        const TreeWords w = tree_words(IncidencePattern::full(2));
        CHECK(w.words.at({1, 0}) == std::vector<int>{-1});
    }
    SUBCASE("words evaluate to the canonical units on every pattern up to 4 vertices") {
        std::size_t patterns = 0;
        for (std::size_t n = 1; n <= 4; ++n) {
            for (const IncidencePattern& p : all_patterns(n)) {
                ++patterns;
                const TreeWords w = tree_words(p);
                const auto dim = static_cast<Eigen::Index>(n);
                std::vector<CMatrix> edges;
                for (const auto& [i, j] : w.tree_edges) {
                    CHECK(p.contains(i, j));
                    edges.push_back(testing::unit(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j), dim));
                }
                CHECK(w.words.size() == p.pair_count());
                for (const auto& [key, word] : w.words) {
                    const auto i = static_cast<Eigen::Index>(key.first);
                    const auto j = static_cast<Eigen::Index>(key.second);
                    CHECK(evaluate_word(word, edges, testing::unit(i, i, dim)) == testing::unit(i, j, dim));
                }
            }
        }
        CHECK(patterns == 1 + 4 + 29 + 355);
    }
}

TEST_CASE("synthesize_regular_embedding") {
    SUBCASE("identity data") {
        const IncidencePattern a1 = chain(3);
        const MatrixUnitSystem ref = canonical_units(a1);
        const TreeWords w = tree_words(a1);
        std::vector<CMatrix> edges;
        for (const auto& [i, j] : w.tree_edges) {
            edges.push_back(ref.unit(i, j));
        }
        std::vector<CMatrix> fd;
        for (std::size_t i = 0; i < 3; ++i) {
            fd.push_back(ref.unit(i, i));
        }
        const RegularSynthesis s = synthesize_regular_embedding(ref, w, edges, fd, a1, MasaPartition::full_diagonal(3));
        CHECK(unit_distance(s.embedding.images, ref) == 0.0);
        CHECK(s.cert.structural_residual == 0.0);
    }
    SUBCASE("multiplicity 2 inside M_4") {
        const IncidencePattern a1 = chain(2);
        const MatrixUnitSystem ref = ampliated_units(a1, 2);
        const TreeWords w = tree_words(a1);
        const RegularSynthesis s = synthesize_regular_embedding(
            ref, w, {ref.unit(0, 1)}, {ref.unit(0, 0), ref.unit(1, 1)}, a1.ampliate(2), MasaPartition::full_diagonal(4));
        CHECK(s.cert.structural_residual == 0.0);
        CHECK(matrix_unit_residual(s.embedding.images) == 0.0);
    }
    SUBCASE("edge with the wrong final projection") {
        const IncidencePattern a1 = chain(2);
        const MatrixUnitSystem ref = ampliated_units(a1, 2);
        CMatrix bad = CMatrix::Zero(4, 4);
        bad(0, 2) = 1.0;
        CHECK(caught([&] {
                  synthesize_regular_embedding(ref, tree_words(a1), {bad}, {ref.unit(0, 0), ref.unit(1, 1)},
                                               a1.ampliate(2), MasaPartition::full_diagonal(4));
              }).kind() == ErrorKind::FrameMismatch);
    }
}

TEST_CASE("regular_stabilize") {
    const IncidencePattern t3 = chain(3);
    const MasaPartition c1 = MasaPartition::ampliated(3, 2);
    const IncidencePattern a2 = t3.ampliate(2);
    const MasaPartition c2 = MasaPartition::full_diagonal(6);
    SUBCASE("exact regular inclusion") {
        const RegularResult r = regular_stabilize(regular_exact(t3, 2), c1, a2, c2);
        CHECK(r.report.max_distance == 0.0);
        CHECK(unit_distance(r.phi.images, ampliated_units(t3, 2)) == 0.0);
    }
    SUBCASE("conjugated ensemble") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const StarEmbedding phi = random_near_identity_embedding(t3, 2, 1e-3, seed);
            const RegularResult r = regular_stabilize(phi, c1, a2, c2);
            CHECK(r.report.max_distance <= 0.1);
            CHECK(r.report.max_distance <= r.report.bound + 1e-9 * 6);
            CHECK(r.report.matrix_unit_residual <= 1e-9 * 6);
            CHECK(r.report.regularity_defect == 0.0);
            CHECK(r.report.support_violation == 0.0);
        }
    }
    SUBCASE("non-nest digraph") {
        const IncidencePattern vee = IncidencePattern::closure_of(3, {{0, 2}, {1, 2}});
        const StarEmbedding phi = random_near_identity_embedding(vee, 2, 1e-3, 4);
        const RegularResult r = regular_stabilize(phi, c1, vee.ampliate(2), c2);
        CHECK(r.report.matrix_unit_residual <= 1e-9 * 6);
        CHECK(r.report.max_distance <= 0.1);
    }
    SUBCASE("masa not refined") {
        const Error e = caught(
            [&] { regular_stabilize(regular_exact(t3, 2), c2, a2, MasaPartition::ampliated(3, 2)); });
        CHECK(e.kind() == ErrorKind::NotRefined);
        CHECK(e.stage() == "regular_stabilize/masa_containment");
    }
}
