#pragma once

// Fourth-order (color) alternating least squares.  The product decouples per
// channel, so left alone each channel would be fit independently; the point
// of this module is the cross-channel difference penalty that ties the B and
// C factors of neighboring channels together.
//
// Per (i,j) the B subproblem collects all channels into one stacked vector
// b = vec(B(i,j,:,:)) in column-major (t,z) order and solves
//
//   minimize ||y - H b||^2 + ||w R b||^2
//
// where H is block diagonal (one n-by-l block per channel) and R differences
// consecutive channel blocks.  C is handled the same way on the rotated
// tensor; A is left unpenalized by default (an optional per-slice ridge can
// be switched on).

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>

#include "bmd/als.hpp"
#include "bmd/bm_algebra.hpp"
#include "bmd/init.hpp"
#include "bmd/linalg.hpp"
#include "bmd/parallel.hpp"
#include "bmd/tensor.hpp"

namespace bmd {

struct ChannelCoupling {
    bool enabled = true;
    double weight = 1.0;

    void validate() const {
        if (weight < 0)
            throw dim_error("ChannelCoupling: weight must be nonnegative");
    }
};

// Difference operator between consecutive channel blocks: maps a stacked
// (t,z)-ordered vector of length q*l to the q-1 block differences.  A vector
// whose l-blocks are identical across channels lies in its null space.
inline Matrix build_r(std::size_t l, std::size_t q = 3) {
    if (l < 1) throw dim_error("build_r: rank must be >= 1");
    if (q < 2) throw dim_error("build_r: need at least two channels");
    Matrix R = Matrix::Zero(static_cast<Eigen::Index>((q - 1) * l),
                            static_cast<Eigen::Index>(q * l));
    for (std::size_t v = 0; v + 1 < q; ++v)
        for (std::size_t t = 0; t < l; ++t) {
            const Eigen::Index row = static_cast<Eigen::Index>(v * l + t);
            R(row, static_cast<Eigen::Index>(v * l + t)) = 1.0;
            R(row, static_cast<Eigen::Index>((v + 1) * l + t)) = -1.0;
        }
    return R;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

// All-ones B plus an independent slicewise SVD of every channel.
inline Bmd4Factors als4_init(const Tensor4& X, std::size_t l,
                             unsigned threads = 1) {
    const std::size_t m = X.m(), p = X.p(), n = X.n(), q = X.q();
    Tensor4 A(m, l, n, q), C(l, p, n, q);
    Tensor4 B = Tensor4::ones(m, p, l, q);
    for (std::size_t z = 0; z < q; ++z) {
        BmdFactors f = slicewise_svd_init(channel_slice(X, z), l, threads);
        set_channel_slice(A, z, f.A);
        set_channel_slice(C, z, f.C);
    }
    return Bmd4Factors(std::move(A), std::move(B), std::move(C));
}

// ---------------------------------------------------------------------------
// Block updates
// ---------------------------------------------------------------------------

namespace detail {

// Solve for the middle factor of bmp4(left, M, right) ~= T, one stacked
// subproblem per (i,j).  `L` penalizes the stacked (t,z)-ordered vector.
inline Tensor4 update_middle4(const Tensor4& T, const Tensor4& left,
                              const Tensor4& right, const Matrix* L,
                              unsigned threads) {
    if (left.m() != T.m() || right.p() != T.p() || left.n() != T.n() ||
        right.n() != T.n() || left.p() != right.m() || left.q() != T.q() ||
        right.q() != T.q())
        throw dim_error("update4: factors do not conform with data");
    const std::size_t m = T.m(), p = T.p(), n = T.n(), q = T.q(), l = left.p();
    if (L != nullptr && L->cols() != static_cast<Eigen::Index>(q * l))
        throw dim_error("update4: penalty has the wrong number of columns");

    Tensor4 M(m, p, l, q);
    parallel_for(m * p, threads, [&](std::size_t s0, std::size_t s1) {
        for (std::size_t s = s0; s < s1; ++s) {
            const std::size_t i = s / p, j = s % p;
            Matrix H = Matrix::Zero(static_cast<Eigen::Index>(n * q),
                                    static_cast<Eigen::Index>(l * q));
            Vector y(static_cast<Eigen::Index>(n * q));
            for (std::size_t z = 0; z < q; ++z)
                for (std::size_t k = 0; k < n; ++k) {
                    y(static_cast<Eigen::Index>(z * n + k)) = T(i, j, k, z);
                    for (std::size_t t = 0; t < l; ++t)
                        H(static_cast<Eigen::Index>(z * n + k),
                          static_cast<Eigen::Index>(z * l + t)) =
                            left(i, t, k, z) * right(t, j, k, z);
                }
            Vector v;
            try {
                v = solve_reg_ls(H, y, L);
            } catch (const std::domain_error& e) {
                throw numerical_error("update4 fiber (" + std::to_string(i) +
                                      "," + std::to_string(j) + "): " + e.what());
            }
            for (std::size_t z = 0; z < q; ++z)
                for (std::size_t t = 0; t < l; ++t)
                    M(i, j, t, z) = v(static_cast<Eigen::Index>(z * l + t));
        }
    });
    return M;
}

inline bool coupling_active(const ChannelCoupling& c, std::size_t q) {
    return c.enabled && c.weight > 0 && q >= 2;
}

}  // namespace detail

inline Tensor4 update_b4(const Tensor4& T, const Tensor4& A, const Tensor4& C,
                         const ChannelCoupling& coupling, unsigned threads = 1) {
    Matrix L;
    const Matrix* lptr = nullptr;
    if (detail::coupling_active(coupling, T.q())) {
        L = coupling.weight * build_r(A.p(), T.q());
        lptr = &L;
    }
    return detail::update_middle4(T, A, C, lptr, threads);
}

inline Tensor4 update_c4(const Tensor4& T, const Tensor4& A, const Tensor4& B,
                         const ChannelCoupling& coupling, unsigned threads = 1) {
    Matrix L;
    const Matrix* lptr = nullptr;
    if (detail::coupling_active(coupling, T.q())) {
        L = coupling.weight * build_r(A.p(), T.q());
        lptr = &L;
    }
    Tensor4 Ct = detail::update_middle4(transpose_t(T), transpose_t(B),
                                        transpose_t(A), lptr, threads);
    return transpose_t2(Ct);
}

// A is unpenalized unless a per-slice ridge is explicitly requested.
inline Tensor4 update_a4(const Tensor4& T, const Tensor4& B, const Tensor4& C,
                         const Regularization* a_reg = nullptr,
                         unsigned threads = 1) {
    Matrix L;
    const Matrix* lptr = nullptr;
    if (a_reg != nullptr && a_reg->enabled) {
        const std::size_t l = C.m(), q = T.q();
        const Vector lam = a_reg->resolved_lambda(l);
        Vector diag(static_cast<Eigen::Index>(q * l));
        for (std::size_t z = 0; z < q; ++z)
            for (std::size_t t = 0; t < l; ++t)
                diag(static_cast<Eigen::Index>(z * l + t)) =
                    lam(static_cast<Eigen::Index>(t)) * detail::kHalf;
        L = diag.asDiagonal();
        lptr = &L;
    }
    Tensor4 At2 = detail::update_middle4(transpose_t2(T), transpose_t2(C),
                                         transpose_t2(B), lptr, threads);
    return transpose_t(At2);
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

namespace detail {

// Sum of ||w R v||^2 over all stacked middle-factor fibers of F.  F is the
// factor in B position (fibers over (i,j), stacked index (t,z)).
inline double coupling_penalty(const Tensor4& F, const Matrix& R, double w) {
    const std::size_t m = F.m(), p = F.p(), l = F.n(), q = F.q();
    double acc = 0.0;
    Vector v(static_cast<Eigen::Index>(q * l));
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t z = 0; z < q; ++z)
                for (std::size_t t = 0; t < l; ++t)
                    v(static_cast<Eigen::Index>(z * l + t)) = F(i, j, t, z);
            acc += (R * v).squaredNorm() * w * w;
        }
    return acc;
}

}  // namespace detail

// Misfit plus the channel-difference penalties on B and C (and, when a ridge
// on A is requested, the same half-weighted per-slice term as third order).
inline double objective_psi4(const Tensor4& T, const Bmd4Factors& f,
                             const ChannelCoupling& coupling,
                             const Regularization* a_reg = nullptr,
                             unsigned threads = 1) {
    if (T.m() != f.m() || T.p() != f.p() || T.n() != f.n() || T.q() != f.q())
        throw dim_error("objective_psi4: data and factors do not conform");
    const double misfit = detail::misfit_norm(T, bmp4(f, threads));
    double psi = misfit * misfit;
    if (detail::coupling_active(coupling, T.q())) {
        const Matrix R = build_r(f.rank(), T.q());
        psi += detail::coupling_penalty(f.B, R, coupling.weight);
        // C fibers stack the same way once rotated into B position:
        // transpose_t(C)(j,k,t,z) = C(t,j,k,z) with fiber index (j,k).
        psi += detail::coupling_penalty(transpose_t(f.C), R, coupling.weight);
    }
    if (a_reg != nullptr && a_reg->enabled) {
        const Vector lam = a_reg->resolved_lambda(f.rank());
        double a_pen = 0.0;
        for (std::size_t z = 0; z < f.q(); ++z)
            for (std::size_t t = 0; t < f.rank(); ++t) {
                double slice2 = 0.0;
                for (std::size_t k = 0; k < f.A.n(); ++k)
                    for (std::size_t i = 0; i < f.A.m(); ++i)
                        slice2 += f.A(i, t, k, z) * f.A(i, t, k, z);
                a_pen += lam(static_cast<Eigen::Index>(t)) *
                         lam(static_cast<Eigen::Index>(t)) * slice2;
            }
        psi += 0.5 * a_pen;
    }
    return psi;
}

// ---------------------------------------------------------------------------
// Full solver
// ---------------------------------------------------------------------------

inline std::pair<Bmd4Factors, SolveReport> bmd_als4(
    const Tensor4& T, const Bmd4Factors& init, const SolveOptions& opts,
    const ChannelCoupling& coupling = ChannelCoupling{},
    bool regularize_a = false) {
    opts.validate();
    coupling.validate();
    init.validate();
    if (T.m() != init.m() || T.p() != init.p() || T.n() != init.n() ||
        T.q() != init.q())
        throw dim_error("bmd_als4: data and init factors do not conform");
    const Regularization* a_reg = regularize_a ? &opts.reg : nullptr;
    if (a_reg != nullptr && a_reg->enabled)
        (void)a_reg->resolved_lambda(init.rank());

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    };

    Bmd4Factors f = init;
    SolveReport report;
    const double norm_t = frobenius_norm(T);
    Tensor4 prev = bmp4(f, opts.threads);

    for (std::size_t sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
        f.B = update_b4(T, f.A, f.C, coupling, opts.threads);
        f.C = update_c4(T, f.A, f.B, coupling, opts.threads);
        f.A = update_a4(T, f.B, f.C, a_reg, opts.threads);

        Tensor4 xhat = bmp4(f, opts.threads);
        SweepStats row;
        row.sweep = sweep;
        row.misfit = detail::misfit_norm(T, xhat);
        row.psi = objective_psi4(T, f, coupling, a_reg, opts.threads);
        row.re = norm_t > 0 ? row.misfit / norm_t : row.misfit;
        const double prev_norm = frobenius_norm(prev);
        const double diff = detail::misfit_norm(prev, xhat);
        row.rel_change = prev_norm > 0
                             ? diff / prev_norm
                             : (diff == 0.0 ? 0.0
                                            : std::numeric_limits<double>::infinity());
        row.seconds = elapsed();

        if (!std::isfinite(row.psi))
            throw numerical_error("bmd_als4: objective diverged at sweep " +
                                  std::to_string(sweep) +
                                  " (psi=" + std::to_string(row.psi) + ")");

        report.sweeps_run = sweep;
        if (opts.record_trace) report.trace.push_back(row);

        if (row.rel_change < opts.rel_tol) {
            report.reason = StopReason::tolerance;
            report.wall_seconds = elapsed();
            return {std::move(f), std::move(report)};
        }
        prev = std::move(xhat);
    }
    report.reason = StopReason::max_sweeps;
    report.wall_seconds = elapsed();
    return {std::move(f), std::move(report)};
}

// ---------------------------------------------------------------------------
// Background / foreground split
// ---------------------------------------------------------------------------

inline Bmd4Factors factor_term4(const Bmd4Factors& f, std::size_t t) {
    if (t >= f.rank()) throw dim_error("factor_term4: slice out of range");
    const std::size_t m = f.m(), p = f.p(), n = f.n(), q = f.q();
    Tensor4 A(m, 1, n, q), B(m, p, 1, q), C(1, p, n, q);
    for (std::size_t z = 0; z < q; ++z) {
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < m; ++i) A(i, 0, k, z) = f.A(i, t, k, z);
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t i = 0; i < m; ++i) B(i, j, 0, z) = f.B(i, j, t, z);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < p; ++j) C(0, j, k, z) = f.C(t, j, k, z);
    }
    return Bmd4Factors(std::move(A), std::move(B), std::move(C));
}

inline std::pair<Tensor4, Tensor4> separate4(const Bmd4Factors& f,
                                             unsigned threads = 1) {
    Tensor4 full = bmp4(f, threads);
    Tensor4 bg = bmp4(factor_term4(f, 0), threads);
    Tensor4 fg(f.m(), f.p(), f.n(), f.q());
    for (std::size_t s = 0; s < full.size(); ++s)
        fg.data()[s] = full.data()[s] - bg.data()[s];
    return {std::move(bg), std::move(fg)};
}

}  // namespace bmd
