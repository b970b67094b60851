#include "perturba/random.hpp"

#include <cmath>
#include <algorithm>
#include <numbers>
#include <vector>

namespace perturba {

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::size_t Rng::index(std::size_t bound) {
    return bound == 0 ? 0 : static_cast<std::size_t>(engine_() % bound);
}

Complex Rng::complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over a combined key
    std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

CMatrix random_gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
    CMatrix a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            a(i, j) = rng.complex_normal();
        }
    }
    return a;
}

CMatrix random_unitary(std::size_t n, Rng& rng) {
    if (n == 0) {
        return CMatrix(0, 0);
    }
    const CMatrix g = random_gaussian(n, n, rng);
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ();
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < q.cols(); ++j) {
        const double mag = std::abs(r(j, j));
        if (mag > 0.0) {
            q.col(j) *= r(j, j) / mag;
        }
    }
    return q;
}

CMatrix random_skew(std::size_t n, double norm, Rng& rng) {
    const auto m = static_cast<Eigen::Index>(n);
    if (n == 0 || norm == 0.0) {
        return CMatrix::Zero(m, m);
    }
    const CMatrix g = random_gaussian(n, n, rng);
    const CMatrix k = 0.5 * (g - g.adjoint());
    const double scale = operator_norm(k);
    if (scale == 0.0) {
        return CMatrix::Zero(m, m);
    }
    return k * (norm / scale);
}

CMatrix random_unitary_at_distance(std::size_t n, double distance, Rng& rng) {
    const double angle = 2.0 * std::asin(std::min(1.0, distance / 2.0));
    return exp_skew(random_skew(n, angle, rng));
}

CMatrix random_phase_permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) {
        perm[i] = i;
    }
    for (std::size_t i = n; i > 1; --i) {
        std::swap(perm[i - 1], perm[rng.index(i)]);
    }
    const auto m = static_cast<Eigen::Index>(n);
    CMatrix p = CMatrix::Zero(m, m);
    for (std::size_t i = 0; i < n; ++i) {
        const double phase = 2.0 * std::numbers::pi * rng.uniform();
        p(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(i)) = std::polar(1.0, phase);
    }
    return p;
}

} // namespace perturba
