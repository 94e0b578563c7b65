#pragma once

// Thin wrappers around Eigen's dense decompositions that pin down the
// conventions the rest of the library relies on: descending singular values,
// a deterministic sign choice, and a single least-squares kernel used by all
// alternating updates.

#include <complex>
#include <cstddef>
#include <optional>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "bmd/errors.hpp"
#include "bmd/tensor.hpp"

namespace bmd {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

struct SvdResult {
    Matrix U;   // left singular vectors, one column per singular value
    Vector S;   // singular values, descending
    Matrix V;   // right singular vectors; M == U * S.asDiagonal() * V^T
};

struct EigResult {
    ComplexVector values;   // conjugate pairs adjacent for real input
    ComplexMatrix vectors;  // unit-norm columns
};

// Relative cutoff below which singular values are treated as zero when
// forming minimum-norm least-squares solutions.
inline constexpr double kMinNormCutoff = 1e-12;

// Thin SVD with a deterministic sign convention: the largest-magnitude entry
// of each left singular vector is made positive (first occurrence wins on
// ties), with the matching right vector flipped to compensate.
inline SvdResult svd(const Matrix& M) {
    if (M.size() == 0) throw dim_error("svd: empty matrix");
    if (!M.allFinite()) throw std::domain_error("svd: non-finite input");

    SvdResult out;
    // BDC is much faster on tall DMD snapshot matrices; Jacobi is fine (and
    // slightly more accurate) for the small blocks everywhere else.
    if (M.rows() > 128 || M.cols() > 128) {
        Eigen::BDCSVD<Matrix> dec(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.U = dec.matrixU();
        out.S = dec.singularValues();
        out.V = dec.matrixV();
    } else {
        Eigen::JacobiSVD<Matrix> dec(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
        out.U = dec.matrixU();
        out.S = dec.singularValues();
        out.V = dec.matrixV();
    }

    for (Eigen::Index t = 0; t < out.U.cols(); ++t) {
        Eigen::Index imax = 0;
        out.U.col(t).cwiseAbs().maxCoeff(&imax);
        if (out.U(imax, t) < 0.0) {
            out.U.col(t) = -out.U.col(t);
            out.V.col(t) = -out.V.col(t);
        }
    }
    return out;
}

// Number of singular values above tol_rel * sigma_max.
inline std::size_t numerical_rank(const Vector& S, double tol_rel = 1e-10) {
    if (S.size() == 0 || S(0) <= 0.0) return 0;
    const double cut = tol_rel * S(0);
    std::size_t r = 0;
    while (r < static_cast<std::size_t>(S.size()) && S(r) > cut) ++r;
    return r;
}

inline std::size_t numerical_rank(const Matrix& M, double tol_rel = 1e-10) {
    return numerical_rank(svd(M).S, tol_rel);
}

// Dense nonsymmetric eigendecomposition for the small systems that appear in
// dynamic-mode analysis.  Real input keeps complex-conjugate eigenpairs in
// adjacent columns (positive imaginary part first).
inline EigResult eig_small(const Matrix& M) {
    if (M.rows() != M.cols()) throw dim_error("eig_small: matrix not square");
    if (M.rows() > 64) throw dim_error("eig_small: order capped at 64");
    if (!M.allFinite()) throw std::domain_error("eig_small: non-finite input");
    Eigen::EigenSolver<Matrix> dec(M, /*computeEigenvectors=*/true);
    if (dec.info() != Eigen::Success)
        throw numerical_error("eig_small: eigensolver failed to converge");
    return EigResult{dec.eigenvalues(), dec.eigenvectors()};
}

// Least-squares kernel shared by every alternating update:
//
//   minimize  ||y - H v||^2 + ||L v||^2        (L optional)
//
// Without L the minimum-norm solution is returned, with singular values below
// kMinNormCutoff * sigma_max treated as zero.  With L the stacked system
// [H; L] v = [y; 0] is solved the same way, which yields the unique minimizer
// whenever H^T H + L^T L is nonsingular and a minimum-norm completion when it
// is not.  Callers fold any scalar weights into L before the call.
inline Vector solve_reg_ls(const Matrix& H, const Vector& y,
                           const Matrix* L = nullptr) {
    if (H.rows() != y.size())
        throw dim_error("solve_reg_ls: H and y row counts differ");
    if (!H.allFinite() || !y.allFinite())
        throw std::domain_error("solve_reg_ls: non-finite input");

    const Matrix* sys = &H;
    Matrix stacked;
    Vector rhs;
    const Vector* b = &y;
    if (L != nullptr && L->size() > 0) {
        if (L->cols() != H.cols())
            throw dim_error("solve_reg_ls: L column count differs from H");
        if (!L->allFinite())
            throw std::domain_error("solve_reg_ls: non-finite regularizer");
        stacked.resize(H.rows() + L->rows(), H.cols());
        stacked.topRows(H.rows()) = H;
        stacked.bottomRows(L->rows()) = *L;
        rhs = Vector::Zero(stacked.rows());
        rhs.head(y.size()) = y;
        sys = &stacked;
        b = &rhs;
    }

    Eigen::JacobiSVD<Matrix> dec(*sys, Eigen::ComputeThinU | Eigen::ComputeThinV);
    dec.setThreshold(kMinNormCutoff);
    return dec.solve(*b);
}

}  // namespace bmd
