#include "perturba/tower.hpp"

#include <cmath>

#include "perturba/error.hpp"
#include "perturba/random.hpp"

namespace perturba {

namespace {

std::string level_name(std::size_t k) {
    return "level " + std::to_string(k + 1);
}

struct Disc {
    Complex centre;
    double radius = 0.0;
    bool contains(Complex z) const { return std::abs(z - centre) <= radius * (1.0 + 1e-12) + 1e-300; }
};

Disc disc_of(Complex a, Complex b) {
    return {0.5 * (a + b), 0.5 * std::abs(a - b)};
}

Disc disc_of(Complex a, Complex b, Complex c) {
    const double d = 2.0 * (a.real() * (b.imag() - c.imag()) + b.real() * (c.imag() - a.imag()) +
                            c.real() * (a.imag() - b.imag()));
    if (std::abs(d) < 1e-300) {
        // collinear: the widest pair decides
        Disc best = disc_of(a, b);
        for (const Disc& cand : {disc_of(a, c), disc_of(b, c)}) {
            if (cand.radius > best.radius) {
                best = cand;
            }
        }
        return best;
    }
    const double a2 = std::norm(a);
    const double b2 = std::norm(b);
    const double c2 = std::norm(c);
    const Complex centre((a2 * (b.imag() - c.imag()) + b2 * (c.imag() - a.imag()) + c2 * (a.imag() - b.imag())) / d,
                         (a2 * (c.real() - b.real()) + b2 * (a.real() - c.real()) + c2 * (b.real() - a.real())) / d);
    return {centre, std::max({std::abs(a - centre), std::abs(b - centre), std::abs(c - centre)})};
}

} // namespace

double enclosing_radius(const std::vector<Complex>& pts) {
    if (pts.empty()) {
        return 0.0;
    }
    // Incremental Welzl construction, deterministic input order.
    Disc d{pts[0], 0.0};
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (d.contains(pts[i])) {
            continue;
        }
        d = {pts[i], 0.0};
        for (std::size_t j = 0; j < i; ++j) {
            if (d.contains(pts[j])) {
                continue;
            }
            d = disc_of(pts[i], pts[j]);
            for (std::size_t k = 0; k < j; ++k) {
                if (!d.contains(pts[k])) {
                    d = disc_of(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    return d.radius;
}

TowerConfig doubling_tower(const IncidencePattern& base, std::size_t depth, std::vector<double> eps_schedule,
                           std::uint64_t seed) {
    TowerConfig cfg;
    cfg.seed = seed;
    cfg.eps_schedule = std::move(eps_schedule);
    IncidencePattern pattern = base;
    for (std::size_t k = 0; k < depth; ++k) {
        cfg.patterns.push_back(pattern);
        cfg.multiplicities.push_back(std::size_t{1} << (depth - 1 - k));
        pattern = pattern.ampliate(2);
    }
    return cfg;
}

Tower generate_tower(const TowerConfig& cfg) {
    const std::size_t depth = cfg.depth();
    if (depth == 0) {
        throw Error(ErrorKind::InvalidConfig, "generate_tower", "depth must be at least 1");
    }
    if (cfg.multiplicities.size() != depth || cfg.eps_schedule.size() != depth) {
        throw Error(ErrorKind::InvalidConfig, "generate_tower",
                    "patterns, multiplicities and eps_schedule must have one entry per level");
    }
    std::size_t ambient = 0;
    for (std::size_t k = 0; k < depth; ++k) {
        const std::size_t m = cfg.multiplicities[k];
        if (m == 0) {
            throw Error(ErrorKind::InvalidConfig, "generate_tower", level_name(k) + ": multiplicity must be positive");
        }
        const double eps = cfg.eps_schedule[k];
        if (!(eps >= 0.0 && eps < kRoundingCeiling)) {
            throw Error(ErrorKind::InvalidConfig, "generate_tower", level_name(k) + ": epsilon must lie in [0, 1/4)");
        }
        const std::size_t n = cfg.patterns[k].dim() * m;
        if (n > kMaxAmbientDim) {
            throw Error(ErrorKind::DimensionOverflow, "generate_tower",
                        level_name(k) + " acts on C^" + std::to_string(n) + " (limit 512)");
        }
        if (k == 0) {
            ambient = n;
        } else if (n != ambient) {
            throw Error(ErrorKind::InvalidConfig, "generate_tower",
                        level_name(k) + " acts on C^" + std::to_string(n) + ", level 1 on C^" + std::to_string(ambient));
        }
        if (k > 0 && cfg.multiplicities[k - 1] % m != 0) {
            throw Error(ErrorKind::InvalidConfig, "generate_tower",
                        level_name(k) + ": multiplicity must divide the previous one");
        }
    }

    Tower tower;
    for (std::size_t k = 0; k < depth; ++k) {
        const std::size_t m = cfg.multiplicities[k];
        TowerLevel level;
        level.embedding.source = canonical_units(cfg.patterns[k]);
        level.embedding.images = ampliated_units(cfg.patterns[k], m);
        level.masa = MasaPartition::ampliated(cfg.patterns[k].dim(), m);
        level.ambient_pattern = cfg.patterns[k].ampliate(m);
        tower.push_back(std::move(level));
    }
    for (std::size_t k = 0; k + 1 < depth; ++k) {
        const IncidencePattern& lower = tower[k].ambient_pattern;
        const IncidencePattern& upper = tower[k + 1].ambient_pattern;
        for (const auto& [i, j] : lower.pairs()) {
            if (!upper.contains(i, j)) {
                throw Error(ErrorKind::InvalidConfig, "generate_tower",
                            level_name(k) + " is not contained in " + level_name(k + 1));
            }
        }
    }
    return tower;
}

Tower perturb_tower(const Tower& tower, const TowerConfig& cfg) {
    if (cfg.eps_schedule.size() != tower.size()) {
        throw Error(ErrorKind::InvalidConfig, "perturb_tower", "eps_schedule must have one entry per level");
    }
    Tower out = tower;
    for (std::size_t k = 0; k < tower.size(); ++k) {
        const double eps = cfg.eps_schedule[k];
        if (eps == 0.0) {
            continue;
        }
        Rng rng(derive_seed(cfg.seed, k));
        const CMatrix u = random_unitary_at_distance(tower[k].embedding.images.ambient_dim, eps, rng);
        out[k].embedding.images = conjugate(tower[k].embedding.images, u);
    }
    return out;
}

ChainRecovery recover_chain(const Tower& perturbed, const Tolerances& tol) {
    ChainRecovery out;
    double running = 0.0;
    for (std::size_t k = 0; k + 1 < perturbed.size(); ++k) {
        const TowerLevel& lower = perturbed[k];
        const TowerLevel& upper = perturbed[k + 1];
        try {
            RegularResult r = regular_stabilize(lower.embedding, lower.masa, upper.ambient_pattern, upper.masa, tol);
            out.c.push_back(r.report.max_distance);
            running += r.report.max_distance;
            out.partial_sums.push_back(running);
            out.reports.push_back(std::move(r.report));
            out.maps.push_back(std::move(r.phi));
        } catch (const Error& e) {
            throw e.within("recover_chain/" + level_name(k));
        }
    }
    return out;
}

std::vector<std::vector<double>> masa_density_report(const Tower& tower, const std::vector<CMatrix>& probes) {
    std::vector<std::vector<double>> table;
    for (const CMatrix& c : probes) {
        const CMatrix diag = c.diagonal().asDiagonal();
        if (c.rows() != c.cols() || (c - diag).cwiseAbs().maxCoeff() != 0.0) {
            throw Error(ErrorKind::InvalidConfig, "masa_density_report", "probes must be diagonal matrices");
        }
        std::vector<double> row;
        for (const TowerLevel& level : tower) {
            if (static_cast<std::size_t>(c.rows()) != level.masa.dim()) {
                throw Error(ErrorKind::DimensionMismatch, "masa_density_report", "probe size differs from the tower");
            }
            double worst = 0.0;
            for (const auto& cell : level.masa.cells()) {
                std::vector<Complex> pts;
                for (std::size_t i : cell) {
                    pts.push_back(c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
                }
                worst = std::max(worst, enclosing_radius(pts));
            }
            row.push_back(worst);
        }
        table.push_back(std::move(row));
    }
    return table;
}

} // namespace perturba
