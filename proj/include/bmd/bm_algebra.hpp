#pragma once

// The Bhattacharya-Mesner triple product and its rank-l factor form.
//
// For factors A (m x l x n), B (m x p x l), C (l x p x n) the product is
//
//   X(i,j,k) = sum_t A(i,t,k) * B(i,j,t) * C(t,j,k),        X: m x p x n
//
// evaluated here one frontal slice at a time: slice k accumulates, for
// t = 0..l-1 in ascending order, the elementwise product of B(:,:,t) with
// the rank-1 matrix A(:,t,k) * C(t,:,k).  Slices are independent, so they
// may be computed concurrently without changing any bit of the result.

#include <cstddef>

#include "bmd/linalg.hpp"
#include "bmd/parallel.hpp"
#include "bmd/tensor.hpp"

namespace bmd {

// ---------------------------------------------------------------------------
// Factor bundles
// ---------------------------------------------------------------------------

struct BmdFactors {
    Tensor3 A;  // m x l x n
    Tensor3 B;  // m x p x l
    Tensor3 C;  // l x p x n

    BmdFactors() = default;
    BmdFactors(Tensor3 a, Tensor3 b, Tensor3 c)
        : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
        validate();
    }

    std::size_t m() const noexcept { return A.m(); }
    std::size_t p() const noexcept { return B.p(); }
    std::size_t n() const noexcept { return A.n(); }
    std::size_t rank() const noexcept { return A.p(); }

    void validate() const {
        if (A.m() != B.m() || A.p() != B.n() || A.p() != C.m() ||
            B.p() != C.p() || A.n() != C.n())
            throw dim_error("BmdFactors: factors do not conform");
    }
};

struct Bmd4Factors {
    Tensor4 A;  // m x l x n x q
    Tensor4 B;  // m x p x l x q
    Tensor4 C;  // l x p x n x q

    Bmd4Factors() = default;
    Bmd4Factors(Tensor4 a, Tensor4 b, Tensor4 c)
        : A(std::move(a)), B(std::move(b)), C(std::move(c)) {
        validate();
    }

    std::size_t m() const noexcept { return A.m(); }
    std::size_t p() const noexcept { return B.p(); }
    std::size_t n() const noexcept { return A.n(); }
    std::size_t q() const noexcept { return A.q(); }
    std::size_t rank() const noexcept { return A.p(); }

    void validate() const {
        if (A.m() != B.m() || A.p() != B.n() || A.p() != C.m() ||
            B.p() != C.p() || A.n() != C.n() || A.q() != B.q() ||
            A.q() != C.q())
            throw dim_error("Bmd4Factors: factors do not conform");
    }
};

// ---------------------------------------------------------------------------
// Products
// ---------------------------------------------------------------------------

inline Tensor3 bmp(const Tensor3& A, const Tensor3& B, const Tensor3& C,
                   unsigned threads = 1) {
    if (A.m() != B.m() || A.p() != B.n() || A.p() != C.m() || B.p() != C.p() ||
        A.n() != C.n())
        throw dim_error("bmp: factors do not conform");

    const std::size_t m = A.m(), p = B.p(), n = A.n(), l = A.p();
    Tensor3 X(m, p, n);
    parallel_for(n, threads, [&](std::size_t k0, std::size_t k1) {
        for (std::size_t k = k0; k < k1; ++k) {
            auto Xk = frontal_map(X, k);
            for (std::size_t t = 0; t < l; ++t) {
                Eigen::Map<const Vector> a(A.data() + A.m() * (t + A.p() * k),
                                           static_cast<Eigen::Index>(m));
                StridedConstVec c(C.data() + t + C.m() * C.p() * k,
                                  static_cast<Eigen::Index>(p),
                                  Eigen::InnerStride<>(static_cast<Eigen::Index>(C.m())));
                Eigen::Map<const Matrix> Bt(B.data() + B.m() * B.p() * t,
                                            static_cast<Eigen::Index>(m),
                                            static_cast<Eigen::Index>(p));
                Xk.noalias() += (a * c.transpose()).cwiseProduct(Bt);
            }
        }
    });
    return X;
}

inline Tensor3 bmp(const BmdFactors& f, unsigned threads = 1) {
    return bmp(f.A, f.B, f.C, threads);
}

// Rank-1 (outer) product of matrix slices a (m x n), b (m x p), c (p x n):
// X(i,j,k) = a(i,k) * b(i,j) * c(j,k).
inline Tensor3 bmp_outer(const Matrix& a, const Matrix& b, const Matrix& c) {
    const auto m = a.rows(), n = a.cols(), p = b.cols();
    if (b.rows() != m || c.rows() != p || c.cols() != n)
        throw dim_error("bmp_outer: slices do not conform");
    Tensor3 X(static_cast<std::size_t>(m), static_cast<std::size_t>(p),
              static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k)
        frontal_map(X, static_cast<std::size_t>(k)) =
            (a.col(k) * c.col(k).transpose()).cwiseProduct(b);
    return X;
}

// Order-4 product: channels are independent third-order products.
inline Tensor4 bmp4(const Tensor4& A, const Tensor4& B, const Tensor4& C,
                    unsigned threads = 1) {
    if (A.m() != B.m() || A.p() != B.n() || A.p() != C.m() || B.p() != C.p() ||
        A.n() != C.n() || A.q() != B.q() || A.q() != C.q())
        throw dim_error("bmp4: factors do not conform");
    const std::size_t m = A.m(), p = B.p(), n = A.n(), l = A.p(), q = A.q();
    Tensor4 X(m, p, n, q);
    parallel_for(n * q, threads, [&](std::size_t s0, std::size_t s1) {
        for (std::size_t s = s0; s < s1; ++s) {
            const std::size_t k = s % n, z = s / n;
            Eigen::Map<Matrix> Xk(X.data() + m * p * (k + n * z),
                                  static_cast<Eigen::Index>(m),
                                  static_cast<Eigen::Index>(p));
            for (std::size_t t = 0; t < l; ++t) {
                Eigen::Map<const Vector> a(
                    A.data() + A.m() * (t + A.p() * (k + A.n() * z)),
                    static_cast<Eigen::Index>(m));
                StridedConstVec c(C.data() + t + C.m() * C.p() * (k + C.n() * z),
                                  static_cast<Eigen::Index>(p),
                                  Eigen::InnerStride<>(static_cast<Eigen::Index>(C.m())));
                Eigen::Map<const Matrix> Bt(B.data() + B.m() * B.p() * (t + B.n() * z),
                                            static_cast<Eigen::Index>(m),
                                            static_cast<Eigen::Index>(p));
                Xk.noalias() += (a * c.transpose()).cwiseProduct(Bt);
            }
        }
    });
    return X;
}

inline Tensor4 bmp4(const Bmd4Factors& f, unsigned threads = 1) {
    return bmp4(f.A, f.B, f.C, threads);
}

// ---------------------------------------------------------------------------
// Factor rotation.  bmp(A,B,C) transposed equals bmp(B^T, C^T, A^T) with the
// cyclic tensor transpose; rotating a bundle keeps that correspondence.
// ---------------------------------------------------------------------------

inline BmdFactors transpose_factors(const BmdFactors& f) {
    return BmdFactors(transpose_t(f.B), transpose_t(f.C), transpose_t(f.A));
}

inline Bmd4Factors transpose_factors(const Bmd4Factors& f) {
    return Bmd4Factors(transpose_t(f.B), transpose_t(f.C), transpose_t(f.A));
}

// ---------------------------------------------------------------------------
// Slicewise upper bound on the BM rank: the smallest, over the three slice
// orientations, of the largest numerical matrix rank among that orientation's
// slices.
// ---------------------------------------------------------------------------

inline std::size_t bm_rank_upper_bound(const Tensor3& X, double tol_rel = 1e-10) {
    std::size_t frontal = 0, horizontal = 0, lateral = 0;
    for (std::size_t k = 0; k < X.n(); ++k)
        frontal = std::max(frontal, numerical_rank(frontal_slice(X, k), tol_rel));
    for (std::size_t i = 0; i < X.m(); ++i)
        horizontal = std::max(horizontal, numerical_rank(horizontal_slice(X, i), tol_rel));
    for (std::size_t j = 0; j < X.p(); ++j)
        lateral = std::max(lateral, numerical_rank(lateral_slice(X, j), tol_rel));
    return std::min(frontal, std::min(horizontal, lateral));
}

}  // namespace bmd
