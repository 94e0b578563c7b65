#pragma once

// Dense order-3 and order-4 tensors with first-index-fastest storage, plus
// the slicing, fiber, stacking and transpose operations the BM-product
// algebra is built from.
//
// Layout: entry (i,j,k) of an m x p x n tensor lives at offset
// i + m*j + m*p*k, i.e. MATLAB/Fortran column-major order.  A frontal slice
// X(:,:,k) is therefore a contiguous m x p column-major matrix, which the
// hot paths exploit via Eigen maps.  Indices are 0-based throughout the
// code; the accompanying docs use the usual 1-based math convention.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bmd/errors.hpp"

namespace bmd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using StridedConstVec =
    Eigen::Map<const Vector, 0, Eigen::InnerStride<Eigen::Dynamic>>;
using StridedVec = Eigen::Map<Vector, 0, Eigen::InnerStride<Eigen::Dynamic>>;

namespace detail {
inline void check_index(std::size_t v, std::size_t bound, const char* what) {
    if (v >= bound)
        throw dim_error(std::string(what) + " index out of range");
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Tensor3: m x p x n
// ---------------------------------------------------------------------------

class Tensor3 {
public:
    Tensor3() = default;

    Tensor3(std::size_t m, std::size_t p, std::size_t n, double fill = 0.0)
        : m_(m), p_(p), n_(n), data_(m * p * n, fill) {
        if (m == 0 || p == 0 || n == 0)
            throw dim_error("Tensor3: dimensions must be positive");
    }

    static Tensor3 ones(std::size_t m, std::size_t p, std::size_t n) {
        return Tensor3(m, p, n, 1.0);
    }

    std::size_t m() const noexcept { return m_; }
    std::size_t p() const noexcept { return p_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t size() const noexcept { return data_.size(); }

    std::size_t dim(std::size_t d) const {
        switch (d) {
            case 0: return m_;
            case 1: return p_;
            case 2: return n_;
            default: throw dim_error("Tensor3::dim: axis out of range");
        }
    }

    double operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return data_[i + m_ * (j + p_ * k)];
    }
    double& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept {
        return data_[i + m_ * (j + p_ * k)];
    }

    double at(std::size_t i, std::size_t j, std::size_t k) const {
        detail::check_index(i, m_, "Tensor3 i");
        detail::check_index(j, p_, "Tensor3 j");
        detail::check_index(k, n_, "Tensor3 k");
        return (*this)(i, j, k);
    }

    const double* data() const noexcept { return data_.data(); }
    double* data() noexcept { return data_.data(); }

    bool same_dims(const Tensor3& o) const noexcept {
        return m_ == o.m_ && p_ == o.p_ && n_ == o.n_;
    }

private:
    std::size_t m_ = 0, p_ = 0, n_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Tensor4: m x p x n x q (channel index last; channels never mix in storage)
// ---------------------------------------------------------------------------

class Tensor4 {
public:
    Tensor4() = default;

    Tensor4(std::size_t m, std::size_t p, std::size_t n, std::size_t q,
            double fill = 0.0)
        : m_(m), p_(p), n_(n), q_(q), data_(m * p * n * q, fill) {
        if (m == 0 || p == 0 || n == 0 || q == 0)
            throw dim_error("Tensor4: dimensions must be positive");
    }

    static Tensor4 ones(std::size_t m, std::size_t p, std::size_t n, std::size_t q) {
        return Tensor4(m, p, n, q, 1.0);
    }

    std::size_t m() const noexcept { return m_; }
    std::size_t p() const noexcept { return p_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t q() const noexcept { return q_; }
    std::size_t size() const noexcept { return data_.size(); }

    double operator()(std::size_t i, std::size_t j, std::size_t k,
                      std::size_t z) const noexcept {
        return data_[i + m_ * (j + p_ * (k + n_ * z))];
    }
    double& operator()(std::size_t i, std::size_t j, std::size_t k,
                       std::size_t z) noexcept {
        return data_[i + m_ * (j + p_ * (k + n_ * z))];
    }

    const double* data() const noexcept { return data_.data(); }
    double* data() noexcept { return data_.data(); }

    bool same_dims(const Tensor4& o) const noexcept {
        return m_ == o.m_ && p_ == o.p_ && n_ == o.n_ && q_ == o.q_;
    }

private:
    std::size_t m_ = 0, p_ = 0, n_ = 0, q_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Slices and fibers
// ---------------------------------------------------------------------------

// X(:,:,k) as a zero-copy map (contiguous m x p block).
inline Eigen::Map<const Matrix> frontal_map(const Tensor3& X, std::size_t k) {
    detail::check_index(k, X.n(), "frontal slice");
    return Eigen::Map<const Matrix>(X.data() + X.m() * X.p() * k,
                                    static_cast<Eigen::Index>(X.m()),
                                    static_cast<Eigen::Index>(X.p()));
}

inline Eigen::Map<Matrix> frontal_map(Tensor3& X, std::size_t k) {
    detail::check_index(k, X.n(), "frontal slice");
    return Eigen::Map<Matrix>(X.data() + X.m() * X.p() * k,
                              static_cast<Eigen::Index>(X.m()),
                              static_cast<Eigen::Index>(X.p()));
}

inline Matrix frontal_slice(const Tensor3& X, std::size_t k) {
    return frontal_map(X, k);
}

// X(:,j,:) as an m x n matrix; column k holds frame column X(:,j,k).
inline Matrix lateral_slice(const Tensor3& X, std::size_t j) {
    detail::check_index(j, X.p(), "lateral slice");
    Matrix S(X.m(), X.n());
    for (std::size_t k = 0; k < X.n(); ++k)
        for (std::size_t i = 0; i < X.m(); ++i) S(i, k) = X(i, j, k);
    return S;
}

// X(i,:,:) as a p x n matrix.
inline Matrix horizontal_slice(const Tensor3& X, std::size_t i) {
    detail::check_index(i, X.m(), "horizontal slice");
    Matrix S(X.p(), X.n());
    for (std::size_t k = 0; k < X.n(); ++k)
        for (std::size_t j = 0; j < X.p(); ++j) S(j, k) = X(i, j, k);
    return S;
}

// Tube fiber X(i,j,:) of length n.
inline Vector tube_fiber(const Tensor3& X, std::size_t i, std::size_t j) {
    detail::check_index(i, X.m(), "tube fiber i");
    detail::check_index(j, X.p(), "tube fiber j");
    Vector f(X.n());
    for (std::size_t k = 0; k < X.n(); ++k) f(k) = X(i, j, k);
    return f;
}

inline StridedConstVec tube_map(const Tensor3& X, std::size_t i, std::size_t j) {
    return StridedConstVec(X.data() + i + X.m() * j,
                           static_cast<Eigen::Index>(X.n()),
                           Eigen::InnerStride<>(static_cast<Eigen::Index>(X.m() * X.p())));
}

inline void set_lateral_slice(Tensor3& X, std::size_t j, const Matrix& S) {
    detail::check_index(j, X.p(), "lateral slice");
    if (S.rows() != static_cast<Eigen::Index>(X.m()) ||
        S.cols() != static_cast<Eigen::Index>(X.n()))
        throw dim_error("set_lateral_slice: shape mismatch");
    for (std::size_t k = 0; k < X.n(); ++k)
        for (std::size_t i = 0; i < X.m(); ++i) X(i, j, k) = S(i, k);
}

// X(:,:,:,z) of an order-4 tensor, a contiguous order-3 block.
inline Tensor3 channel_slice(const Tensor4& X, std::size_t z) {
    detail::check_index(z, X.q(), "channel slice");
    Tensor3 T(X.m(), X.p(), X.n());
    const std::size_t len = X.m() * X.p() * X.n();
    const double* src = X.data() + len * z;
    std::copy(src, src + len, T.data());
    return T;
}

inline void set_channel_slice(Tensor4& X, std::size_t z, const Tensor3& T) {
    detail::check_index(z, X.q(), "channel slice");
    if (T.m() != X.m() || T.p() != X.p() || T.n() != X.n())
        throw dim_error("set_channel_slice: shape mismatch");
    const std::size_t len = T.size();
    std::copy(T.data(), T.data() + len, X.data() + len * z);
}

inline Tensor4 stack_channels(const std::vector<Tensor3>& channels) {
    if (channels.empty())
        throw dim_error("stack_channels: need at least one channel");
    const Tensor3& c0 = channels.front();
    Tensor4 X(c0.m(), c0.p(), c0.n(), channels.size());
    for (std::size_t z = 0; z < channels.size(); ++z)
        set_channel_slice(X, z, channels[z]);
    return X;
}

// ---------------------------------------------------------------------------
// Tube-fiber vectorization.  tvec stacks the tube fibers X(i,j,:) in
// lexicographic (i,j) order (i outer, j inner); tfold is its inverse.
// ---------------------------------------------------------------------------

inline Vector tvec(const Tensor3& X) {
    Vector v(X.size());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < X.m(); ++i)
        for (std::size_t j = 0; j < X.p(); ++j)
            for (std::size_t k = 0; k < X.n(); ++k) v(pos++) = X(i, j, k);
    return v;
}

inline Tensor3 tfold(const Vector& v, std::size_t m, std::size_t p, std::size_t n) {
    if (static_cast<std::size_t>(v.size()) != m * p * n)
        throw dim_error("tfold: length does not match m*p*n");
    Tensor3 X(m, p, n);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = 0; k < n; ++k) X(i, j, k) = v(pos++);
    return X;
}

// ---------------------------------------------------------------------------
// Cyclic tensor transposes.  transpose_t maps entry (i,j,k) of the result to
// X(k,i,j) (dims m x p x n -> p x n x m); applying it three times is the
// identity, and transpose_t2 == transpose_t applied twice.
// ---------------------------------------------------------------------------

inline Tensor3 transpose_t(const Tensor3& X) {
    Tensor3 Y(X.p(), X.n(), X.m());
    for (std::size_t c = 0; c < X.m(); ++c)
        for (std::size_t b = 0; b < X.n(); ++b)
            for (std::size_t a = 0; a < X.p(); ++a) Y(a, b, c) = X(c, a, b);
    return Y;
}

inline Tensor3 transpose_t2(const Tensor3& X) {
    Tensor3 Y(X.n(), X.m(), X.p());
    for (std::size_t c = 0; c < X.p(); ++c)
        for (std::size_t b = 0; b < X.m(); ++b)
            for (std::size_t a = 0; a < X.n(); ++a) Y(a, b, c) = X(b, c, a);
    return Y;
}

// Order-4 variants rotate the first three modes and leave channels in place.
inline Tensor4 transpose_t(const Tensor4& X) {
    Tensor4 Y(X.p(), X.n(), X.m(), X.q());
    for (std::size_t z = 0; z < X.q(); ++z)
        for (std::size_t c = 0; c < X.m(); ++c)
            for (std::size_t b = 0; b < X.n(); ++b)
                for (std::size_t a = 0; a < X.p(); ++a)
                    Y(a, b, c, z) = X(c, a, b, z);
    return Y;
}

inline Tensor4 transpose_t2(const Tensor4& X) {
    Tensor4 Y(X.n(), X.m(), X.p(), X.q());
    for (std::size_t z = 0; z < X.q(); ++z)
        for (std::size_t c = 0; c < X.p(); ++c)
            for (std::size_t b = 0; b < X.m(); ++b)
                for (std::size_t a = 0; a < X.n(); ++a)
                    Y(a, b, c, z) = X(b, c, a, z);
    return Y;
}

// ---------------------------------------------------------------------------
// Norms and error measures
// ---------------------------------------------------------------------------

inline double frobenius_norm(const Tensor3& X) {
    return Eigen::Map<const Vector>(X.data(), static_cast<Eigen::Index>(X.size())).norm();
}

inline double frobenius_norm(const Tensor4& X) {
    return Eigen::Map<const Vector>(X.data(), static_cast<Eigen::Index>(X.size())).norm();
}

template <typename TensorT>
double relative_error(const TensorT& ref, const TensorT& est) {
    if (!ref.same_dims(est))
        throw dim_error("relative_error: shape mismatch");
    const Eigen::Index len = static_cast<Eigen::Index>(ref.size());
    Eigen::Map<const Vector> r(ref.data(), len), e(est.data(), len);
    const double rn = r.norm();
    if (rn == 0.0)
        throw std::domain_error("relative_error: zero-norm reference");
    return (r - e).norm() / rn;
}

template <typename TensorT>
double max_abs_diff(const TensorT& a, const TensorT& b) {
    if (!a.same_dims(b))
        throw dim_error("max_abs_diff: shape mismatch");
    const Eigen::Index len = static_cast<Eigen::Index>(a.size());
    Eigen::Map<const Vector> va(a.data(), len), vb(b.data(), len);
    return (va - vb).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Coefficient block for the fiberwise least-squares subproblems:
// H(k,t) = A(i,t,k) * C(t,j,k), an n x l matrix for fixed (i,j).  The full
// block-diagonal system matrix is never materialized; solvers consume one
// block at a time.
// ---------------------------------------------------------------------------

inline Matrix build_h_block(const Tensor3& A, const Tensor3& C, std::size_t i,
                            std::size_t j) {
    if (A.p() != C.m() || A.n() != C.n())
        throw dim_error("build_h_block: A and C do not conform");
    detail::check_index(i, A.m(), "build_h_block i");
    detail::check_index(j, C.p(), "build_h_block j");
    const std::size_t n = A.n(), l = A.p();
    Matrix H(n, l);
    for (std::size_t t = 0; t < l; ++t)
        for (std::size_t k = 0; k < n; ++k) H(k, t) = A(i, t, k) * C(t, j, k);
    return H;
}

}  // namespace bmd
