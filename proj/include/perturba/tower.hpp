#pragma once

#include <cstdint>
#include <vector>

#include "perturba/regular.hpp"

namespace perturba {

inline constexpr std::size_t kMaxAmbientDim = 512;

struct TowerConfig {
    std::vector<IncidencePattern> patterns;    // one per level
    std::vector<std::size_t> multiplicities;   // level k acts as pattern_k (x) M_{m_k}
    std::vector<double> eps_schedule;          // ||u_k - I|| per level, each < 1/4
    std::uint64_t seed = 0;

    std::size_t depth() const { return patterns.size(); }
};

/// Level k+1 is level k's pattern (x) M_2; multiplicities halve so every level acts on the same space.
TowerConfig doubling_tower(const IncidencePattern& base, std::size_t depth, std::vector<double> eps_schedule,
                           std::uint64_t seed);

struct TowerLevel {
    StarEmbedding embedding;
    MasaPartition masa{std::vector<std::vector<std::size_t>>{{0}}};
    IncidencePattern ambient_pattern{0};  // pattern (x) M_m on the common space
};

using Tower = std::vector<TowerLevel>;

/// Exact chain of regular inclusions in one M_N with nested masas.
Tower generate_tower(const TowerConfig& cfg);

/// Level k conjugated by a unitary at distance eps_k from I.
Tower perturb_tower(const Tower& tower, const TowerConfig& cfg);

struct ChainRecovery {
    std::vector<StarEmbedding> maps;      // pi_k : A_k -> A_{k+1}
    std::vector<RegularReport> reports;
    std::vector<double> c;                // max unit distance of pi_k
    std::vector<double> partial_sums;
};

ChainRecovery recover_chain(const Tower& perturbed, const Tolerances& tol = default_tolerances());

/// dist(c, span C_k) for each probe and level; probes must be diagonal.
std::vector<std::vector<double>> masa_density_report(const Tower& tower, const std::vector<CMatrix>& probes);

/// Radius of the smallest disc containing the points.
double enclosing_radius(const std::vector<Complex>& points);

} // namespace perturba
