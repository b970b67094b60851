// Calibration runs for the frozen acceptance thresholds.
// Seeds here are disjoint from the ones the acceptance binary uses.

#include <cstdio>
#include <vector>

#include "acceptance/ensembles.hpp"

int main() {
    using namespace ensembles;
    const std::uint64_t base = 1000;

    double worst_ratio = 0.0;
    for (std::uint64_t t = 0; t < 500; ++t) {
        const NormfixSample s = normfix_trial(derive_seed(base, t));
        if (s.nearest > 0.0) {
            worst_ratio = std::max(worst_ratio, s.fixed / s.nearest);
        }
    }
    std::printf("normfix: max fixed/nearest over 500 = %.6f\n", worst_ratio);

    for (double eps : {1e-2, 1e-3, 1e-4}) {
        std::vector<double> d;
        for (std::uint64_t t = 0; t < 50; ++t) {
            d.push_back(stability_trial(eps, derive_seed(base + 1, t)).max_distance);
        }
        std::printf("stability eps=%g: median %.6e (ratio %.4f), max %.6e\n", eps, median(d), median(d) / eps,
                    *std::max_element(d.begin(), d.end()));
    }

    for (double eps : {1e-2, 1e-3}) {
        for (std::size_t m : {2, 4}) {
            std::vector<double> d;
            for (std::uint64_t t = 0; t < 50; ++t) {
                d.push_back(regular_trial(m, eps, derive_seed(base + 2, t)).max_distance);
            }
            std::printf("regular eps=%g m=%zu: median %.6e\n", eps, m, median(d));
        }
    }

    double cal = 0.0;
    for (std::uint64_t t = 0; t < 50; ++t) {
        const TowerRun r = tower_trial(derive_seed(base + 3, t));
        for (std::size_t k = 0; k < r.eps.size(); ++k) {
            cal = std::max(cal, r.chain.c[k] / r.eps[k]);
        }
    }
    std::printf("tower: max c_k/eps_k over 50 runs = %.6f\n", cal);
    return 0;
}
