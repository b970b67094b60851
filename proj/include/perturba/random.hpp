#pragma once

#include <cstdint>
#include <random>

#include "perturba/numkernel.hpp"

namespace perturba {

/// Seeded generator with portable uniform/normal draws.
///
/// std::mt19937_64 output is fixed by the standard, but the library
/// distributions are not, so the conversions are done here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform();                      // [0, 1)
    double normal();                       // standard normal, Box-Muller
    std::size_t index(std::size_t bound);  // [0, bound)
    Complex complex_normal();              // real and imaginary parts N(0, 1/2)

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Stream seed for (seed, stream) pairs, independent of evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

CMatrix random_gaussian(std::size_t rows, std::size_t cols, Rng& rng);

/// Haar-distributed unitary (QR of a Gaussian matrix with phase fix).
CMatrix random_unitary(std::size_t n, Rng& rng);

/// Skew-Hermitian matrix with operator norm exactly `norm`.
CMatrix random_skew(std::size_t n, double norm, Rng& rng);

/// Unitary u with ||u - I|| = distance (requires distance <= 2).
CMatrix random_unitary_at_distance(std::size_t n, double distance, Rng& rng);

/// Random permutation matrix with unimodular phases.
CMatrix random_phase_permutation(std::size_t n, Rng& rng);

} // namespace perturba
