#pragma once

#include <cmath>
#include <initializer_list>

#include "perturba/numkernel.hpp"

namespace testing {

using perturba::CMatrix;
using perturba::Complex;

inline CMatrix mat(std::initializer_list<std::initializer_list<Complex>> rows) {
    CMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (const Complex& z : r) {
            m(i, j++) = z;
        }
        ++i;
    }
    return m;
}

inline CMatrix diag(std::initializer_list<Complex> d) {
    CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
    Eigen::Index i = 0;
    for (const Complex& z : d) {
        m(i, i) = z;
        ++i;
    }
    return m;
}

inline CMatrix rotation(double t) {
    return mat({{std::cos(t), -std::sin(t)}, {std::sin(t), std::cos(t)}});
}

// e_ij on C^n, 0-based.
inline CMatrix unit(Eigen::Index i, Eigen::Index j, Eigen::Index n) {
    CMatrix m = CMatrix::Zero(n, n);
    m(i, j) = 1.0;
    return m;
}

inline double dist(const CMatrix& a, const CMatrix& b) {
    return perturba::operator_norm(a - b);
}

} // namespace testing
