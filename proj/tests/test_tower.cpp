#include <doctest.h>

#include <cmath>
#include <vector>

#include "perturba/error.hpp"
#include "perturba/random.hpp"
#include "perturba/tower.hpp"
#include "support.hpp"

using namespace perturba;

namespace {

const IncidencePattern kT2 = IncidencePattern::closure_of(2, {{0, 1}});

std::vector<double> schedule(std::size_t depth, double eps0) {
    std::vector<double> out;
    for (std::size_t k = 1; k <= depth; ++k) {
        out.push_back(eps0 * std::ldexp(1.0, -static_cast<int>(k)));
    }
    return out;
}

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

// Smallest enclosing disc over every candidate disc through two or three points.
double brute_radius(const std::vector<Complex>& pts) {
    if (pts.size() < 2) {
        return 0.0;
    }
    auto covers = [&](Complex c, double r) {
        for (Complex z : pts) {
            if (std::abs(z - c) > r * (1 + 1e-12)) {
                return false;
            }
        }
        return true;
    };
    double best = INFINITY;
    for (std::size_t a = 0; a < pts.size(); ++a) {
        for (std::size_t b = a + 1; b < pts.size(); ++b) {
            const Complex c = 0.5 * (pts[a] + pts[b]);
            const double r = 0.5 * std::abs(pts[a] - pts[b]);
            if (covers(c, r)) {
                best = std::min(best, r);
            }
            for (std::size_t d = b + 1; d < pts.size(); ++d) {
                const Complex p = pts[a], q = pts[b], s = pts[d];
                const Complex qp = q - p, sp = s - p;
                const double den = 2.0 * (qp.real() * sp.imag() - qp.imag() * sp.real());
                if (std::abs(den) < 1e-14) {
                    continue;
                }
                const Complex centre = p + Complex(sp.imag() * std::norm(qp) - qp.imag() * std::norm(sp),
                                                   qp.real() * std::norm(sp) - sp.real() * std::norm(qp)) /
                                               den;
                const double rr = std::abs(centre - p);
                if (covers(centre, rr)) {
                    best = std::min(best, rr);
                }
            }
        }
    }
    return best;
}

} // namespace

TEST_CASE("doubling towers") {
    const TowerConfig cfg = doubling_tower(kT2, 3, schedule(3, 0.01), 1);
    CHECK(cfg.depth() == 3);
    CHECK(cfg.multiplicities == std::vector<std::size_t>{4, 2, 1});
    CHECK(cfg.patterns[2] == kT2.ampliate(4));
}

TEST_CASE("generate_tower") {
    SUBCASE("depth 1") {
        const Tower t = generate_tower(doubling_tower(kT2, 1, {0.0}, 0));
        REQUIRE(t.size() == 1);
        CHECK(matrix_unit_residual(t[0].embedding.images) == 0.0);
    }
    SUBCASE("depth 3: exact levels, nested masas") {
        const Tower t = generate_tower(doubling_tower(kT2, 3, schedule(3, 0.01), 0));
        REQUIRE(t.size() == 3);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(t[k].embedding.images.ambient_dim == 8);
            CHECK(matrix_unit_residual(t[k].embedding.images) == 0.0);
            CHECK(containment_defect(t[k].embedding.images, t[k].ambient_pattern).value == 0.0);
            if (k + 1 < 3) {
                CHECK_NOTHROW(masa_containment(t[k].masa, t[k + 1].masa));
            }
        }
        CHECK(t[2].masa == MasaPartition::full_diagonal(8));
    }
    SUBCASE("invalid configurations") {
        TowerConfig cfg = doubling_tower(kT2, 2, schedule(2, 0.01), 0);
        cfg.multiplicities[1] = 0;
        CHECK(caught([&] { generate_tower(cfg); }).kind() == ErrorKind::InvalidConfig);

        CHECK(caught([] { generate_tower(doubling_tower(kT2, 2, {0.3, 0.1}, 0)); }).kind() == ErrorKind::InvalidConfig);
        CHECK(caught([] { generate_tower(doubling_tower(kT2, 2, {0.1}, 0)); }).kind() == ErrorKind::InvalidConfig);
        CHECK(caught([] { generate_tower(doubling_tower(kT2, 10, schedule(10, 0.01), 0)); }).kind() ==
              ErrorKind::DimensionOverflow);
    }
}

TEST_CASE("perturb_tower") {
    const TowerConfig cfg = doubling_tower(kT2, 3, schedule(3, 0.01), 7);
    const Tower exact = generate_tower(cfg);
    const Tower p1 = perturb_tower(exact, cfg);
    const Tower p2 = perturb_tower(exact, cfg);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(unit_distance(p1[k].embedding.images, p2[k].embedding.images) == 0.0);
        const double d = unit_distance(p1[k].embedding.images, exact[k].embedding.images);
        CHECK(d > 0.0);
        CHECK(d <= 2 * cfg.eps_schedule[k] + 1e-12);
    }
}

TEST_CASE("recover_chain") {
    SUBCASE("unperturbed tower") {
        const TowerConfig cfg = doubling_tower(kT2, 4, std::vector<double>(4, 0.0), 0);
        const ChainRecovery r = recover_chain(generate_tower(cfg));
        REQUIRE(r.c.size() == 3);
        for (double c : r.c) {
            CHECK(c <= 1e-9 * 16);
        }
    }
    SUBCASE("geometric schedule") {
        const TowerConfig cfg = doubling_tower(kT2, 4, schedule(4, 0.01), 3);
        const Tower perturbed = perturb_tower(generate_tower(cfg), cfg);
        const ChainRecovery r = recover_chain(perturbed);
        REQUIRE(r.c.size() == 3);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(r.reports[k].matrix_unit_residual <= 1e-9 * 16);
            CHECK(r.reports[k].regularity_defect == 0.0);
            if (k > 0) {
                CHECK(r.c[k] < r.c[k - 1]);
                CHECK(r.partial_sums[k] == doctest::Approx(r.partial_sums[k - 1] + r.c[k]));
            }
        }
    }
    SUBCASE("over-perturbed level is named") {
        const TowerConfig cfg = doubling_tower(kT2, 3, schedule(3, 0.01), 3);
        TowerConfig rough = cfg;
        rough.eps_schedule[1] = 0.5;
        const Tower perturbed = perturb_tower(generate_tower(cfg), rough);
        const Error e = caught([&] { recover_chain(perturbed); });
        CHECK(is_hypothesis_failure(e.kind()));
        CHECK(e.stage().rfind("recover_chain/level 2", 0) == 0);
    }
}

TEST_CASE("masa_density_report") {
    const Tower t = generate_tower(doubling_tower(kT2, 3, schedule(3, 0.01), 0));
    SUBCASE("probe in the first masa") {
        const CMatrix c = t[0].masa.cell_projection(1) * 2.5;
        const auto table = masa_density_report(t, {c});
        for (double x : table.at(0)) {
            CHECK(x == 0.0);
        }
    }
    SUBCASE("generic diagonal probe") {
        CMatrix c = CMatrix::Zero(8, 8);
        for (Eigen::Index i = 0; i < 8; ++i) {
            c(i, i) = Complex(std::cos(1.3 * i), std::sin(0.7 * i * i));
        }
        const auto row = masa_density_report(t, {c}).at(0);
        CHECK(row.back() == 0.0);
        CHECK(row[0] >= row[1]);
        CHECK(row[1] >= row[2]);
    }
    SUBCASE("no probes") {
        CHECK(masa_density_report(t, {}).empty());
    }
    SUBCASE("non-diagonal probe") {
        CHECK(caught([&] { masa_density_report(t, {CMatrix::Ones(8, 8)}); }).kind() == ErrorKind::InvalidConfig);
    }
}

TEST_CASE("enclosing_radius") {
    CHECK(enclosing_radius({}) == 0.0);
    CHECK(enclosing_radius({Complex(1, 1)}) == 0.0);
    CHECK(enclosing_radius({Complex(0, 0), Complex(2, 0)}) == doctest::Approx(1.0));
    Rng rng(13);
    for (int t = 0; t < 50; ++t) {
        std::vector<Complex> pts;
        const std::size_t n = 2 + rng.index(9);
        for (std::size_t k = 0; k < n; ++k) {
            pts.push_back(rng.complex_normal());
        }
        CHECK(enclosing_radius(pts) == doctest::Approx(brute_radius(pts)).epsilon(1e-10));
    }
}
