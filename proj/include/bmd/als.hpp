#pragma once

// Alternating least squares for the rank-l factor model, sweep order B, C, A.
//
// Each update holds two factors fixed and solves one small least-squares
// problem per tube fiber of the (suitably rotated) data tensor:
//
//   B:  for every (i,j)   minimize ||T(i,j,:) - H_{A,C}^{(i,j)} b||^2
//   C:  the same problem on the rotated tensor with factors (B^T, A^T)
//   A:  rotated twice, factors (C^T2, B^T2)
//
// With regularization enabled the subproblem gains a ||L v||^2 term whose
// weights are pre-scaled by 1/sqrt(2) so that each block update exactly
// minimizes the penalized objective
//
//   Psi = ||T - bmp(A,B,C)||_F^2
//         + 1/2 (sum_t lambda_t^2 ||A(:,t,:)||_F^2
//                + beta^2 ||B||_F^2 + gamma^2 ||C||_F^2),
//
// which is what makes Psi nonincreasing across updates.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "bmd/bm_algebra.hpp"
#include "bmd/linalg.hpp"
#include "bmd/parallel.hpp"
#include "bmd/tensor.hpp"

namespace bmd {

// ---------------------------------------------------------------------------
// Configuration and reporting
// ---------------------------------------------------------------------------

struct Regularization {
    Vector lambda;       // per-slice weights on A (length l); empty = defaults
    double beta = 1.0;   // weight on B
    double gamma = 1.0;  // weight on C
    bool enabled = true;

    static Regularization none() {
        Regularization r;
        r.enabled = false;
        return r;
    }

    // The working defaults: a light touch on the first (background) slice of
    // A, unit weight elsewhere.
    static Regularization defaults(std::size_t rank) {
        Regularization r;
        r.lambda = Vector::Ones(static_cast<Eigen::Index>(rank));
        r.lambda(0) = 0.01;
        return r;
    }

    // Lambda resolved against a concrete rank (fills defaults when empty).
    Vector resolved_lambda(std::size_t rank) const {
        if (lambda.size() == 0) return defaults(rank).lambda;
        if (lambda.size() != static_cast<Eigen::Index>(rank))
            throw dim_error("Regularization: lambda length does not match rank");
        return lambda;
    }

    void validate() const {
        if (beta < 0 || gamma < 0 || (lambda.size() > 0 && lambda.minCoeff() < 0))
            throw dim_error("Regularization: weights must be nonnegative");
    }
};

struct SolveOptions {
    std::size_t max_sweeps = 100;
    double rel_tol = 1e-5;
    Regularization reg;
    bool record_trace = true;
    unsigned threads = 1;

    void validate() const {
        if (max_sweeps < 1) throw dim_error("SolveOptions: max_sweeps must be >= 1");
        if (!(rel_tol > 0)) throw dim_error("SolveOptions: rel_tol must be positive");
        reg.validate();
    }
};

enum class StopReason { tolerance, max_sweeps };

struct SweepStats {
    std::size_t sweep = 0;
    double misfit = 0.0;      // ||T - bmp(factors)||_F
    double psi = 0.0;         // penalized objective
    double rel_change = 0.0;  // ||Xhat_new - Xhat_old|| / ||Xhat_old||
    double re = 0.0;          // misfit / ||T||
    double seconds = 0.0;     // cumulative wall clock
};

struct SolveReport {
    std::size_t sweeps_run = 0;
    StopReason reason = StopReason::max_sweeps;
    std::vector<SweepStats> trace;
    double wall_seconds = 0.0;
};

inline const char* to_string(StopReason r) {
    return r == StopReason::tolerance ? "tolerance" : "max_sweeps";
}

inline void write_trace_csv(const SolveReport& report, std::ostream& os) {
    os.precision(17);
    os << "sweep,misfit,psi,rel_change,re,seconds\n";
    for (const auto& row : report.trace)
        os << row.sweep << ',' << row.misfit << ',' << row.psi << ','
           << row.rel_change << ',' << row.re << ',' << row.seconds << '\n';
}

// ---------------------------------------------------------------------------
// Decoupled block updates
// ---------------------------------------------------------------------------

namespace detail {

// Solve for the middle factor of bmp(left, M, right) ~= T.  One subproblem
// per (i,j) fiber; `ldiag` is the (already scaled) diagonal of the penalty.
inline Tensor3 update_middle(const Tensor3& T, const Tensor3& left,
                             const Tensor3& right, const Vector* ldiag,
                             unsigned threads) {
    if (left.m() != T.m() || right.p() != T.p() || left.n() != T.n() ||
        right.n() != T.n() || left.p() != right.m())
        throw dim_error("update: factors do not conform with data");
    const std::size_t m = T.m(), p = T.p(), l = left.p();

    Matrix L;
    const Matrix* lptr = nullptr;
    if (ldiag != nullptr) {
        L = ldiag->asDiagonal();
        lptr = &L;
    }

    Tensor3 M(m, p, l);
    parallel_for(m * p, threads, [&](std::size_t s0, std::size_t s1) {
        for (std::size_t s = s0; s < s1; ++s) {
            const std::size_t i = s / p, j = s % p;
            Matrix H = build_h_block(left, right, i, j);
            Vector y = tube_fiber(T, i, j);
            Vector v;
            try {
                v = solve_reg_ls(H, y, lptr);
            } catch (const std::domain_error& e) {
                throw numerical_error("update fiber (" + std::to_string(i) + "," +
                                      std::to_string(j) + "): " + e.what());
            }
            for (std::size_t t = 0; t < l; ++t) M(i, j, t) = v(t);
        }
    });
    return M;
}

constexpr double kHalf = 0.70710678118654752440;  // 1/sqrt(2)

}  // namespace detail

inline Tensor3 update_b(const Tensor3& T, const Tensor3& A, const Tensor3& C,
                        const Regularization& reg, unsigned threads = 1) {
    Vector ldiag;
    const Vector* lptr = nullptr;
    if (reg.enabled) {
        ldiag = Vector::Constant(static_cast<Eigen::Index>(A.p()),
                                 reg.beta * detail::kHalf);
        lptr = &ldiag;
    }
    return detail::update_middle(T, A, C, lptr, threads);
}

inline Tensor3 update_c(const Tensor3& T, const Tensor3& A, const Tensor3& B,
                        const Regularization& reg, unsigned threads = 1) {
    Vector ldiag;
    const Vector* lptr = nullptr;
    if (reg.enabled) {
        ldiag = Vector::Constant(static_cast<Eigen::Index>(A.p()),
                                 reg.gamma * detail::kHalf);
        lptr = &ldiag;
    }
    Tensor3 Ct = detail::update_middle(transpose_t(T), transpose_t(B),
                                       transpose_t(A), lptr, threads);
    return transpose_t2(Ct);
}

inline Tensor3 update_a(const Tensor3& T, const Tensor3& B, const Tensor3& C,
                        const Regularization& reg, unsigned threads = 1) {
    Vector ldiag;
    const Vector* lptr = nullptr;
    if (reg.enabled) {
        ldiag = reg.resolved_lambda(C.m()) * detail::kHalf;
        lptr = &ldiag;
    }
    Tensor3 At2 = detail::update_middle(transpose_t2(T), transpose_t2(C),
                                        transpose_t2(B), lptr, threads);
    return transpose_t(At2);
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

namespace detail {

inline double penalty_term(const BmdFactors& f, const Regularization& reg) {
    if (!reg.enabled) return 0.0;
    const Vector lam = reg.resolved_lambda(f.rank());
    double a_pen = 0.0;
    for (std::size_t t = 0; t < f.rank(); ++t) {
        double slice2 = 0.0;
        for (std::size_t k = 0; k < f.A.n(); ++k)
            for (std::size_t i = 0; i < f.A.m(); ++i)
                slice2 += f.A(i, t, k) * f.A(i, t, k);
        a_pen += lam(static_cast<Eigen::Index>(t)) * lam(static_cast<Eigen::Index>(t)) * slice2;
    }
    const double b2 = frobenius_norm(f.B), c2 = frobenius_norm(f.C);
    return 0.5 * (a_pen + reg.beta * reg.beta * b2 * b2 +
                  reg.gamma * reg.gamma * c2 * c2);
}

template <typename TensorT>
double misfit_norm(const TensorT& T, const TensorT& Xhat) {
    const Eigen::Index len = static_cast<Eigen::Index>(T.size());
    Eigen::Map<const Vector> a(T.data(), len), b(Xhat.data(), len);
    return (a - b).norm();
}

}  // namespace detail

inline double objective_psi(const Tensor3& T, const BmdFactors& f,
                            const Regularization& reg, unsigned threads = 1) {
    if (T.m() != f.m() || T.p() != f.p() || T.n() != f.n())
        throw dim_error("objective_psi: data and factors do not conform");
    const double misfit = detail::misfit_norm(T, bmp(f, threads));
    return misfit * misfit + detail::penalty_term(f, reg);
}

// ---------------------------------------------------------------------------
// Full solver
// ---------------------------------------------------------------------------

inline std::pair<BmdFactors, SolveReport> bmd_als(const Tensor3& T,
                                                  const BmdFactors& init,
                                                  const SolveOptions& opts) {
    opts.validate();
    init.validate();
    if (T.m() != init.m() || T.p() != init.p() || T.n() != init.n())
        throw dim_error("bmd_als: data and init factors do not conform");
    if (opts.reg.enabled)
        (void)opts.reg.resolved_lambda(init.rank());  // catches bad lambda size

    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    };

    BmdFactors f = init;
    SolveReport report;
    const double norm_t = frobenius_norm(T);
    Tensor3 prev = bmp(f, opts.threads);

    for (std::size_t sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
        f.B = update_b(T, f.A, f.C, opts.reg, opts.threads);
        f.C = update_c(T, f.A, f.B, opts.reg, opts.threads);
        f.A = update_a(T, f.B, f.C, opts.reg, opts.threads);

        Tensor3 xhat = bmp(f, opts.threads);
        SweepStats row;
        row.sweep = sweep;
        row.misfit = detail::misfit_norm(T, xhat);
        row.psi = row.misfit * row.misfit + detail::penalty_term(f, opts.reg);
        row.re = norm_t > 0 ? row.misfit / norm_t : row.misfit;
        const double prev_norm = frobenius_norm(prev);
        const double diff = detail::misfit_norm(prev, xhat);
        row.rel_change = prev_norm > 0
                             ? diff / prev_norm
                             : (diff == 0.0 ? 0.0
                                            : std::numeric_limits<double>::infinity());
        row.seconds = elapsed();

        if (!std::isfinite(row.psi))
            throw numerical_error("bmd_als: objective diverged at sweep " +
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

// Rank-1 sub-bundle made of slice t of each factor.
inline BmdFactors factor_term(const BmdFactors& f, std::size_t t) {
    if (t >= f.rank()) throw dim_error("factor_term: slice out of range");
    const std::size_t m = f.m(), p = f.p(), n = f.n();
    Tensor3 A(m, 1, n), B(m, p, 1), C(1, p, n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < m; ++i) A(i, 0, k) = f.A(i, t, k);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t i = 0; i < m; ++i) B(i, j, 0) = f.B(i, j, t);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < p; ++j) C(0, j, k) = f.C(t, j, k);
    return BmdFactors(std::move(A), std::move(B), std::move(C));
}

// background = first rank-1 term; foreground = full product minus background,
// so the two add back to bmp(factors) without any rounding gap.
inline std::pair<Tensor3, Tensor3> separate(const BmdFactors& f,
                                            unsigned threads = 1) {
    Tensor3 full = bmp(f, threads);
    Tensor3 bg = bmp(factor_term(f, 0), threads);
    Tensor3 fg(f.m(), f.p(), f.n());
    for (std::size_t s = 0; s < full.size(); ++s)
        fg.data()[s] = full.data()[s] - bg.data()[s];
    return {std::move(bg), std::move(fg)};
}

}  // namespace bmd
