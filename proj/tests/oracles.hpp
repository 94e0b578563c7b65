#pragma once

// Independent reference implementations used only by the tests.  These are
// deliberately written as plain nested loops over the defining formulas --
// no Eigen, no slice blocking -- so that agreement with the production code
// is meaningful.

#include <cstddef>
#include <random>

#include <Eigen/Dense>

#include "bmd/tensor.hpp"

namespace oracle {

// Entrywise triple-product sum, straight from the definition.
inline bmd::Tensor3 reference_bmp(const bmd::Tensor3& A, const bmd::Tensor3& B,
                                  const bmd::Tensor3& C) {
    const std::size_t m = A.m(), l = A.p(), n = A.n(), p = B.p();
    bmd::Tensor3 X(m, p, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                double acc = 0.0;
                for (std::size_t t = 0; t < l; ++t)
                    acc += A(i, t, k) * B(i, j, t) * C(t, j, k);
                X(i, j, k) = acc;
            }
    return X;
}

inline bmd::Tensor4 reference_bmp4(const bmd::Tensor4& A, const bmd::Tensor4& B,
                                   const bmd::Tensor4& C) {
    const std::size_t m = A.m(), l = A.p(), n = A.n(), q = A.q(), p = B.p();
    bmd::Tensor4 X(m, p, n, q);
    for (std::size_t z = 0; z < q; ++z)
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < p; ++j)
                for (std::size_t k = 0; k < n; ++k) {
                    double acc = 0.0;
                    for (std::size_t t = 0; t < l; ++t)
                        acc += A(i, t, k, z) * B(i, j, t, z) * C(t, j, k, z);
                    X(i, j, k, z) = acc;
                }
    return X;
}

// Moore-Penrose pseudoinverse applied to a vector, via a plain SVD.
inline bmd::Vector pinv_solve(const bmd::Matrix& H, const bmd::Vector& y,
                              double tol_rel = 1e-12) {
    Eigen::JacobiSVD<bmd::Matrix> dec(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const bmd::Vector& S = dec.singularValues();
    const double cut = S.size() > 0 ? tol_rel * S(0) : 0.0;
    bmd::Vector z = dec.matrixU().transpose() * y;
    for (Eigen::Index r = 0; r < S.size(); ++r)
        z(r) = S(r) > cut ? z(r) / S(r) : 0.0;
    return dec.matrixV() * z;
}

// ---------------------------------------------------------------------------
// Deterministic random inputs
// ---------------------------------------------------------------------------

inline bmd::Tensor3 random_tensor3(std::size_t m, std::size_t p, std::size_t n,
                                   std::mt19937_64& gen, double lo = -1.0,
                                   double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    bmd::Tensor3 X(m, p, n);
    for (std::size_t idx = 0; idx < X.size(); ++idx) X.data()[idx] = dist(gen);
    return X;
}

inline bmd::Tensor4 random_tensor4(std::size_t m, std::size_t p, std::size_t n,
                                   std::size_t q, std::mt19937_64& gen,
                                   double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    bmd::Tensor4 X(m, p, n, q);
    for (std::size_t idx = 0; idx < X.size(); ++idx) X.data()[idx] = dist(gen);
    return X;
}

inline bmd::Matrix random_matrix(std::size_t r, std::size_t c,
                                 std::mt19937_64& gen, double lo = -1.0,
                                 double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    bmd::Matrix M(r, c);
    for (Eigen::Index j = 0; j < M.cols(); ++j)
        for (Eigen::Index i = 0; i < M.rows(); ++i) M(i, j) = dist(gen);
    return M;
}

}  // namespace oracle
