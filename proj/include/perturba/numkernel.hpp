#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

#include "perturba/tolerances.hpp"

namespace perturba {

using Complex = std::complex<double>;

/// Dense complex matrix; all distances are taken in the operator norm.
using CMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
struct SpectralData {
    RealVector eigenvalues;
    CMatrix eigenvectors;  // columns, unitary
};

/// v = isometric_part * positive_part.
struct PolarData {
    CMatrix isometric_part;  // partial isometry, zero on ker |v|
    CMatrix positive_part;   // |v| = (v*v)^{1/2}
    RealVector singular_values;
    std::size_t rank = 0;
};

// Largest singular value.
double operator_norm(const CMatrix& a);

// Operator norm of the Hermitian part; faster than operator_norm for Hermitian input.
double hermitian_norm(const CMatrix& h);

SpectralData herm_eig(const CMatrix& b, const Tolerances& tol = default_tolerances());

PolarData polar_svd(const CMatrix& v, const Tolerances& tol = default_tolerances());

// Unitary exp(k) for skew-Hermitian k.
CMatrix exp_skew(const CMatrix& k, const Tolerances& tol = default_tolerances());

// ---------------------------------------------------------------------------
// Small helpers shared by every module.

CMatrix identity(std::size_t n);
bool all_finite(const CMatrix& a);

double hermitian_defect(const CMatrix& b);              // ||b - b*||
double projection_defect(const CMatrix& p);             // max(||p - p*||, ||p^2 - p||)
double partial_isometry_defect(const CMatrix& v);       // ||v*v - (v*v)^2||
double unitary_defect(const CMatrix& u);                // max(||u*u - I||, ||uu* - I||)

/// Number of singular values above 1/2; exact for (near) partial isometries.
std::size_t partial_isometry_rank(const CMatrix& v);

/// Rank of a (near) projection, from its trace.
std::size_t projection_rank(const CMatrix& p);

/// Singular values, descending.
RealVector singular_values(const CMatrix& a);

} // namespace perturba
