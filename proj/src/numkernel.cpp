#include "perturba/numkernel.hpp"

#include <cmath>
#include <sstream>

#include "perturba/error.hpp"

namespace perturba {

namespace {

constexpr unsigned kThinVectors = Eigen::ComputeThinU | Eigen::ComputeThinV;

std::string fmt_double(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

} // namespace

CMatrix identity(std::size_t n) {
    const auto m = static_cast<Eigen::Index>(n);
    return CMatrix::Identity(m, m);
}

bool all_finite(const CMatrix& a) {
    return a.allFinite();
}

RealVector singular_values(const CMatrix& a) {
    if (a.size() == 0) {
        return RealVector();
    }
    Eigen::JacobiSVD<CMatrix> svd(a);
    return svd.singularValues();
}

double operator_norm(const CMatrix& a) {
    if (a.size() == 0) {
        return 0.0;
    }
    if (a.rows() == 1 || a.cols() == 1) {
        return a.norm();
    }
    // Top eigenvalue of the smaller Gram matrix; relative accuracy of the largest one is all we need.
    const CMatrix g = a.rows() <= a.cols() ? CMatrix(a * a.adjoint()) : CMatrix(a.adjoint() * a);
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(g, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, solver.eigenvalues()(g.rows() - 1)));
}

double hermitian_norm(const CMatrix& h) {
    if (h.size() == 0) {
        return 0.0;
    }
    const CMatrix sym = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(sym, Eigen::EigenvaluesOnly);
    const RealVector& ev = solver.eigenvalues();
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

double hermitian_defect(const CMatrix& b) {
    return operator_norm(b - b.adjoint());
}

double projection_defect(const CMatrix& p) {
    return std::max(operator_norm(p - p.adjoint()), operator_norm(p * p - p));
}

double partial_isometry_defect(const CMatrix& v) {
    const CMatrix g = v.adjoint() * v;
    return operator_norm(g - g * g);
}

double unitary_defect(const CMatrix& u) {
    const auto n = u.rows();
    const CMatrix id = CMatrix::Identity(n, n);
    return std::max(operator_norm(u.adjoint() * u - id), operator_norm(u * u.adjoint() - id));
}

std::size_t partial_isometry_rank(const CMatrix& v) {
    const RealVector s = singular_values(v);
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > 0.5) {
            ++r;
        }
    }
    return r;
}

std::size_t projection_rank(const CMatrix& p) {
    const double tr = p.trace().real();
    return tr <= 0.0 ? 0 : static_cast<std::size_t>(std::llround(tr));
}

SpectralData herm_eig(const CMatrix& b, const Tolerances& tol) {
    if (b.rows() != b.cols()) {
        throw Error(ErrorKind::NotHermitian, "herm_eig", "matrix is not square");
    }
    if (!all_finite(b)) {
        throw Error(ErrorKind::NotHermitian, "herm_eig", "matrix has non-finite entries");
    }
    const double norm = operator_norm(b);
    const double defect = hermitian_defect(b);
    if (defect > tol.herm_tol * norm) {
        throw Error(ErrorKind::NotHermitian, "herm_eig", "||b - b*|| = " + fmt_double(defect));
    }

    SpectralData out;
    if (b.size() == 0) {
        return out;
    }
    const CMatrix h = 0.5 * (b + b.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
    out.eigenvalues = solver.eigenvalues().reverse();
    out.eigenvectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

PolarData polar_svd(const CMatrix& v, const Tolerances& tol) {
    PolarData out;
    const auto m = v.rows();
    const auto n = v.cols();
    out.isometric_part = CMatrix::Zero(m, n);
    out.positive_part = CMatrix::Zero(n, n);
    if (m == 0 || n == 0) {
        return out;
    }

    Eigen::JacobiSVD<CMatrix> svd(v, kThinVectors);
    out.singular_values = svd.singularValues();
    const CMatrix& u = svd.matrixU();
    const CMatrix& w = svd.matrixV();
    const double top = out.singular_values(0);
    const double cutoff = tol.rank_tol * top;

    std::size_t rank = 0;
    for (Eigen::Index k = 0; k < out.singular_values.size(); ++k) {
        if (top > 0.0 && out.singular_values(k) > cutoff) {
            ++rank;
        }
    }
    out.rank = rank;
    const auto r = static_cast<Eigen::Index>(rank);
    if (r > 0) {
        out.isometric_part = u.leftCols(r) * w.leftCols(r).adjoint();
        out.positive_part =
            w.leftCols(r) * out.singular_values.head(r).cast<Complex>().asDiagonal() * w.leftCols(r).adjoint();
    }
    return out;
}

CMatrix exp_skew(const CMatrix& k, const Tolerances& tol) {
    if (k.rows() != k.cols()) {
        throw Error(ErrorKind::NotSkewHermitian, "exp_skew", "matrix is not square");
    }
    const double defect = operator_norm(k + k.adjoint());
    if (!all_finite(k) || defect > tol.herm_tol * std::max(1.0, operator_norm(k))) {
        throw Error(ErrorKind::NotSkewHermitian, "exp_skew", "||k + k*|| = " + fmt_double(defect));
    }
    // k = -i h with h Hermitian, so exp(k) = U diag(exp(-i lambda)) U*.
    const CMatrix h = Complex(0.0, 1.0) * k;
    const SpectralData spec = herm_eig(0.5 * (h + h.adjoint()), tol);
    Eigen::VectorXcd phases(spec.eigenvalues.size());
    for (Eigen::Index i = 0; i < phases.size(); ++i) {
        phases(i) = std::polar(1.0, -spec.eigenvalues(i));
    }
    return spec.eigenvectors * phases.asDiagonal() * spec.eigenvectors.adjoint();
}

} // namespace perturba
