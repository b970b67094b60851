#include <doctest.h>

#include <algorithm>
#include <vector>

#include "perturba/error.hpp"
#include "perturba/random.hpp"
#include "perturba/stability.hpp"
#include "support.hpp"

using namespace perturba;
using testing::dist;

namespace {

StarEmbedding conjugated(const IncidencePattern& pattern, std::size_t m, const CMatrix& u) {
    StarEmbedding e;
    e.source = canonical_units(pattern);
    e.images = conjugate(ampliated_units(pattern, m), u);
    return e;
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    return xs[xs.size() / 2];
}

} // namespace

TEST_CASE("selfadjoint_containment_check") {
    const BlockComposition c1({2, 1});
    const IncidencePattern a1 = nest_pattern(c1);
    const BlockComposition c2 = c1.ampliate(2);
    CHECK(selfadjoint_containment_check(ampliated_units(a1, 2), c2) == 0.0);

    Rng rng(1);
    const CMatrix u = random_unitary_at_distance(6, 0.01, rng);
    CHECK(selfadjoint_containment_check(conjugated(a1, 2, u).images, c2) <= 0.02 + 1e-10);
}

TEST_CASE("selfadjoint_matrix_units") {
    const BlockComposition c1({2, 2});
    const IncidencePattern a1 = nest_pattern(c1);
    const BlockComposition c2 = c1.ampliate(2);

    SUBCASE("exact inclusion is reproduced") {
        const MatrixUnitSystem exact = ampliated_units(a1, 2);
        const MatrixUnitSystem f = selfadjoint_matrix_units(exact, c2);
        for (const auto& [key, g] : f.units) {
            CHECK(dist(g, exact.unit(key.first, key.second)) == 0.0);
        }
    }
    SUBCASE("perturbed ensemble") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Rng rng(seed);
            const StarEmbedding phi = conjugated(a1, 2, random_unitary_at_distance(8, 1e-3, rng));
            const MatrixUnitSystem f = selfadjoint_matrix_units(phi.images, c2);
            CHECK(matrix_unit_residual(f) <= 1e-9);
            CHECK(unit_distance(f, phi.images) <= 0.1);
            for (const auto& [key, g] : f.units) {
                CHECK(dist(g, block_diagonal_part(g, c2)) == 0.0);
            }
        }
    }
    SUBCASE("self-adjoint part straddling the target blocks") {
        const IncidencePattern m2 = IncidencePattern::full(2);
        try {
            selfadjoint_matrix_units(ampliated_units(m2, 2), BlockComposition({2, 2}));
            FAIL("expected DefectTooLarge");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::DefectTooLarge);
            CHECK(e.stage() == "selfadjoint");
        }
    }
}

TEST_CASE("lift_tree_edge") {
    const BlockComposition c2({2, 2});
    const IncidencePattern a2 = nest_pattern(c2);
    const CMatrix fpp = testing::diag({0, 0, 1, 1});
    const CMatrix fqq = testing::diag({1, 1, 0, 0});
    CMatrix e = CMatrix::Zero(4, 4);
    e(0, 2) = 1.0;
    e(1, 3) = 1.0;

    SUBCASE("compliant edge is kept") {
        const auto r = lift_tree_edge(e, fpp, fqq, a2, c2);
        CHECK(dist(r.value, e) == 0.0);
        CHECK(r.cert.structural_residual == 0.0);
    }
    SUBCASE("perturbed edges") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Rng rng(seed);
            const CMatrix u = random_unitary_at_distance(4, 1e-3, rng);
            const auto r = lift_tree_edge(u * e * u.adjoint(), fpp, fqq, a2, c2);
            CHECK(r.cert.correction_distance <= 0.05);
            CHECK(r.cert.structural_residual <= 1e-9);
            CHECK(support_violation(r.value, a2) == 0.0);
        }
    }
    SUBCASE("rank mismatch") {
        CHECK_THROWS_AS(lift_tree_edge(e, fpp, testing::diag({1, 0, 0, 0}), a2, c2), Error);
        try {
            lift_tree_edge(e, fpp, testing::diag({1, 0, 0, 0}), a2, c2);
        } catch (const Error& err) {
            CHECK(err.kind() == ErrorKind::RankMismatch);
        }
    }
    SUBCASE("edge orthogonal to its frames") {
        try {
            lift_tree_edge(e.adjoint(), fpp, fqq, a2, c2);
            FAIL("expected CompressionSingular");
        } catch (const Error& err) {
            CHECK(err.kind() == ErrorKind::CompressionSingular);
        }
    }
}

TEST_CASE("stabilize_nest_inclusion") {
    const BlockComposition c1({2, 2, 2});
    const IncidencePattern a1 = nest_pattern(c1);
    const BlockComposition c2 = c1.ampliate(2);

    SUBCASE("exact input is returned unchanged") {
        const StarEmbedding phi = random_near_identity_embedding(a1, 2, 0.0, 3);
        const StabilityResult r = stabilize_nest_inclusion(phi, c2);
        CHECK(r.report.max_distance == 0.0);
        CHECK(unit_distance(r.psi.images, phi.images) == 0.0);
    }
    SUBCASE("ensemble: exact output, distances shrink with epsilon") {
        std::vector<double> medians;
        for (double eps : {1e-2, 1e-3}) {
            std::vector<double> d;
            for (std::uint64_t seed = 0; seed < 11; ++seed) {
                const StarEmbedding phi = random_near_identity_embedding(a1, 2, eps, seed);
                const StabilityResult r = stabilize_nest_inclusion(phi, c2);
                CHECK(r.report.matrix_unit_residual <= 1e-9);
                CHECK(r.report.support_violation == 0.0);
                CHECK(r.report.block_bound_holds);
                CHECK(r.report.edge_certificates.size() == 2);
                d.push_back(r.report.max_distance);
            }
            medians.push_back(median(d));
        }
        CHECK(medians[1] < medians[0]);
    }
    SUBCASE("products of words agree with the direct unit") {
        const StarEmbedding phi = random_near_identity_embedding(a1, 2, 5e-3, 7);
        const StabilityResult r = stabilize_nest_inclusion(phi, c2);
        const auto pairs = a1.pairs();
        for (const auto& [i, j] : pairs) {
            for (std::size_t k = 0; k < a1.dim(); ++k) {
                if (a1.contains(j, k)) {
                    CHECK(dist(r.psi.images.unit(i, j) * r.psi.images.unit(j, k), r.psi.images.unit(i, k)) <= 1e-9 * 12);
                }
            }
        }
    }
    SUBCASE("idempotent") {
        const StarEmbedding phi = random_near_identity_embedding(a1, 2, 1e-2, 9);
        const StabilityResult once = stabilize_nest_inclusion(phi, c2);
        const StabilityResult twice = stabilize_nest_inclusion(once.psi, c2);
        CHECK(twice.report.max_distance <= 1e-9 * 12);
    }
    SUBCASE("undersized target blocks") {
        const StarEmbedding phi = random_near_identity_embedding(a1, 2, 1e-3, 1);
        try {
            stabilize_nest_inclusion(phi, BlockComposition({6, 6}));
            FAIL("expected DefectTooLarge");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::DefectTooLarge);
            CHECK(e.stage() == "stabilize_nest_inclusion/selfadjoint");
        }
    }
    SUBCASE("non-nest source") {
        StarEmbedding phi;
        const IncidencePattern vee = IncidencePattern::closure_of(3, {{0, 2}, {1, 2}});
        phi.source = canonical_units(vee);
        phi.images = ampliated_units(vee, 1);
        CHECK_THROWS_AS(stabilize_nest_inclusion(phi, BlockComposition({1, 1, 1})), Error);
    }
}
