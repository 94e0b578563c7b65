#pragma once

// Starting-guess constructors for the alternating solver:
//
//  * matrix_to_bmd      -- refold any factorization U*Vt of the unfolded
//                          video (columns = vectorized frames) into factors.
//  * slicewise_svd_init -- economy SVD per frontal slice; the middle factor
//                          is all-ones and sigma is grouped with the left
//                          factor (a choice, either grouping works).
//  * sssvd_background   -- rank-1 truncation per frontal slice.
//  * dmd_fit/dmd_to_bmd -- exact DMD on the frame sequence, converted to a
//                          real factor bundle (conjugate mode pairs become
//                          two real slots so the product reproduces the real
//                          part of the modal reconstruction).
//
// Frames are the lateral slices X(:,j,:); vectorization of a frame is
// column-major, matching the tensor layout.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <vector>

#include "bmd/bm_algebra.hpp"
#include "bmd/linalg.hpp"
#include "bmd/parallel.hpp"
#include "bmd/tensor.hpp"

namespace bmd {

// ---------------------------------------------------------------------------
// Unfolding helpers
// ---------------------------------------------------------------------------

// mn x p matrix whose column j is the column-major vectorization of frame j.
inline Matrix unfold_frames(const Tensor3& X) {
    Matrix M(X.m() * X.n(), X.p());
    for (std::size_t j = 0; j < X.p(); ++j)
        for (std::size_t k = 0; k < X.n(); ++k)
            for (std::size_t i = 0; i < X.m(); ++i)
                M(i + X.m() * k, j) = X(i, j, k);
    return M;
}

inline Tensor3 fold_frames(const Matrix& M, std::size_t m, std::size_t p,
                           std::size_t n) {
    if (M.rows() != static_cast<Eigen::Index>(m * n) ||
        M.cols() != static_cast<Eigen::Index>(p))
        throw dim_error("fold_frames: shape mismatch");
    Tensor3 X(m, p, n);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < m; ++i)
                X(i, j, k) = M(i + m * k, j);
    return X;
}

// ---------------------------------------------------------------------------
// Matrix-factorization refolding
// ---------------------------------------------------------------------------

inline BmdFactors matrix_to_bmd(const Matrix& U, const Matrix& Vt,
                                std::size_t m, std::size_t n) {
    if (U.rows() != static_cast<Eigen::Index>(m * n))
        throw dim_error("matrix_to_bmd: U row count is not m*n");
    if (Vt.rows() != U.cols())
        throw dim_error("matrix_to_bmd: U and Vt inner dims differ");
    const std::size_t l = static_cast<std::size_t>(U.cols());
    const std::size_t p = static_cast<std::size_t>(Vt.cols());
    if (l == 0 || p == 0) throw dim_error("matrix_to_bmd: empty factors");

    Tensor3 A(m, l, n), C(l, p, n);
    for (std::size_t t = 0; t < l; ++t)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < m; ++i)
                A(i, t, k) = U(i + m * k, t);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t t = 0; t < l; ++t) C(t, j, k) = Vt(t, j);
    return BmdFactors(std::move(A), Tensor3::ones(m, p, l), std::move(C));
}

// ---------------------------------------------------------------------------
// Slicewise SVD
// ---------------------------------------------------------------------------

inline BmdFactors slicewise_svd_init(const Tensor3& X, std::size_t l,
                                     unsigned threads = 1) {
    const std::size_t m = X.m(), p = X.p(), n = X.n();
    if (l < 1 || l > std::min(m, p))
        throw dim_error("slicewise_svd_init: rank out of range");

    Tensor3 A(m, l, n), C(l, p, n);
    parallel_for(n, threads, [&](std::size_t k0, std::size_t k1) {
        for (std::size_t k = k0; k < k1; ++k) {
            SvdResult f = svd(frontal_slice(X, k));
            // Slots beyond the numerical slice rank stay exactly zero in
            // both A and C; keeping V's trailing orthonormal directions
            // would only inject noise scaled by a zero singular value.
            const std::size_t have = std::min(l, numerical_rank(f.S, kMinNormCutoff));
            for (std::size_t t = 0; t < have; ++t) {
                for (std::size_t i = 0; i < m; ++i)
                    A(i, t, k) = f.U(i, t) * f.S(t);
                for (std::size_t j = 0; j < p; ++j) C(t, j, k) = f.V(j, t);
            }
        }
    });
    return BmdFactors(std::move(A), Tensor3::ones(m, p, l), std::move(C));
}

// Rank-1 truncation per frontal slice: the dominant scene.
inline Tensor3 sssvd_background(const Tensor3& X, unsigned threads = 1) {
    Tensor3 bg(X.m(), X.p(), X.n());
    parallel_for(X.n(), threads, [&](std::size_t k0, std::size_t k1) {
        for (std::size_t k = k0; k < k1; ++k) {
            SvdResult f = svd(frontal_slice(X, k));
            if (f.S.size() == 0 || f.S(0) == 0.0) continue;
            frontal_map(bg, k) = f.S(0) * f.U.col(0) * f.V.col(0).transpose();
        }
    });
    return bg;
}

// ---------------------------------------------------------------------------
// Dynamic-mode analysis
// ---------------------------------------------------------------------------

struct DmdModel {
    std::size_t rank = 0;                 // modes kept (after any reduction)
    ComplexVector lambda;                 // discrete-time eigenvalues
    ComplexMatrix phi;                    // modes, mn x rank
    ComplexVector amp;                    // amplitudes b with Phi*b ~= x1
    std::vector<std::size_t> background;  // modes with | |lambda|-1 | <= delta
    std::size_t m = 0, n = 0, p = 0;      // frame dims / count fitted on
    double delta = 1e-2;                  // background threshold used
};

inline DmdModel dmd_fit(const Tensor3& X, std::size_t l, double delta = 1e-2) {
    const std::size_t m = X.m(), p = X.p(), n = X.n();
    if (p < 2) throw dim_error("dmd_fit: need at least two frames");
    if (l < 1 || l > p - 1) throw dim_error("dmd_fit: rank out of range");

    Matrix F = unfold_frames(X);
    Matrix X1 = F.leftCols(p - 1);
    Matrix X2 = F.rightCols(p - 1);

    SvdResult f = svd(X1);
    if (f.S.size() == 0 || f.S(0) == 0.0)
        throw numerical_error("dmd_fit: zero snapshot matrix");
    // Shrink the rank if trailing singular values are numerically zero.
    std::size_t keep = std::min<std::size_t>(l, numerical_rank(f.S, kMinNormCutoff));
    if (keep == 0) keep = 1;

    Matrix U = f.U.leftCols(keep);
    Matrix V = f.V.leftCols(keep);
    Vector Sinv = f.S.head(keep).cwiseInverse();

    Matrix X2VS = X2 * V * Sinv.asDiagonal();
    Matrix Atil = U.transpose() * X2VS;

    EigResult eig = eig_small(Atil);

    DmdModel model;
    model.rank = keep;
    model.lambda = eig.values;
    model.phi = X2VS * eig.vectors;
    model.m = m;
    model.n = n;
    model.p = p;
    model.delta = delta;

    // Amplitudes from the first frame, complex least squares.
    ComplexVector x1 = F.col(0).cast<std::complex<double>>();
    Eigen::JacobiSVD<ComplexMatrix> dec(model.phi,
                                        Eigen::ComputeThinU | Eigen::ComputeThinV);
    dec.setThreshold(kMinNormCutoff);
    model.amp = dec.solve(x1);

    for (std::size_t t = 0; t < keep; ++t)
        if (std::abs(std::abs(model.lambda(t)) - 1.0) <= delta)
            model.background.push_back(t);
    return model;
}

// Real part of the modal reconstruction over `frames` time steps, optionally
// restricted to a subset of modes.
inline Tensor3 dmd_reconstruct(const DmdModel& model, std::size_t frames,
                               const std::vector<std::size_t>* subset = nullptr) {
    Tensor3 X(model.m, frames, model.n);
    std::vector<std::size_t> all;
    if (subset == nullptr) {
        all.resize(model.rank);
        std::iota(all.begin(), all.end(), std::size_t{0});
        subset = &all;
    }
    for (std::size_t t : *subset) {
        std::complex<double> pw(1.0, 0.0);
        ComplexVector mode = model.amp(t) * model.phi.col(t);
        for (std::size_t j = 0; j < frames; ++j) {
            for (std::size_t k = 0; k < model.n; ++k)
                for (std::size_t i = 0; i < model.m; ++i)
                    X(i, j, k) += (mode(i + model.m * k) * pw).real();
            pw *= model.lambda(t);
        }
    }
    return X;
}

// Elementwise modulus of the (complex) modal reconstruction; used when
// comparing against the modulus-subtraction foreground convention.
inline Tensor3 dmd_reconstruct_modulus(const DmdModel& model, std::size_t frames,
                                       const std::vector<std::size_t>* subset = nullptr) {
    std::vector<std::size_t> all;
    if (subset == nullptr) {
        all.resize(model.rank);
        std::iota(all.begin(), all.end(), std::size_t{0});
        subset = &all;
    }
    Tensor3 X(model.m, frames, model.n);
    ComplexMatrix acc(model.m * model.n, frames);
    acc.setZero();
    for (std::size_t t : *subset) {
        std::complex<double> pw(1.0, 0.0);
        ComplexVector mode = model.amp(t) * model.phi.col(t);
        for (std::size_t j = 0; j < frames; ++j) {
            acc.col(j) += mode * pw;
            pw *= model.lambda(t);
        }
    }
    for (std::size_t j = 0; j < frames; ++j)
        for (std::size_t k = 0; k < model.n; ++k)
            for (std::size_t i = 0; i < model.m; ++i)
                X(i, j, k) = std::abs(acc(i + model.m * k, j));
    return X;
}

namespace detail {

// Mode units for the real conversion: a real eigenvalue is one slot, a
// conjugate pair is two.  Units are ordered so the most background-like
// (|lambda| closest to 1) comes first; the first factor slice then carries
// the background term.
struct ModeUnit {
    std::size_t first;  // mode index
    bool paired;        // true when modes (first, first+1) are conjugates
    double key;         // | |lambda| - 1 |
};

inline std::vector<ModeUnit> group_mode_units(const DmdModel& model) {
    std::vector<ModeUnit> units;
    const double tol = 1e-8;
    for (std::size_t t = 0; t < model.rank; ++t) {
        const std::complex<double> lam = model.lambda(t);
        const double scale = 1.0 + std::abs(lam);
        if (std::abs(lam.imag()) <= tol * scale) {
            units.push_back({t, false, std::abs(std::abs(lam) - 1.0)});
        } else if (t + 1 < model.rank &&
                   std::abs(model.lambda(t + 1) - std::conj(lam)) <= tol * scale) {
            units.push_back({t, true, std::abs(std::abs(lam) - 1.0)});
            ++t;
        } else {
            // Unpaired complex mode cannot appear for real data; keep its
            // real part so the conversion still returns something usable.
            units.push_back({t, false, std::abs(std::abs(lam) - 1.0)});
        }
    }
    std::stable_sort(units.begin(), units.end(),
                     [](const ModeUnit& a, const ModeUnit& b) { return a.key < b.key; });
    return units;
}

}  // namespace detail

// Convert a fitted model into real factors over `frames` time steps:
// A(:,t,:) folds b_t * phi_t, B is all-ones and C carries eigenvalue powers
// lambda_t^[0..frames-1].  A conjugate pair (lam, conj(lam)) with symmetrized
// mode M contributes the two real slots
//     (2*Re M, Re lam^j)  and  (-2*Im M, Im lam^j),
// whose sum is exactly the real part of the pair's contribution, so
// bmp(factors) reproduces the real part of the modal reconstruction.
inline BmdFactors dmd_to_bmd(const DmdModel& model, std::size_t frames) {
    if (model.rank == 0 || model.phi.size() == 0)
        throw dim_error("dmd_to_bmd: model is not fitted");
    const std::size_t m = model.m, n = model.n, l = model.rank;

    Tensor3 A(m, l, n), C(l, frames, n);
    std::vector<detail::ModeUnit> units = detail::group_mode_units(model);

    std::size_t slot = 0;
    for (const auto& u : units) {
        if (!u.paired) {
            const double lam = model.lambda(u.first).real();
            ComplexVector mode = model.amp(u.first) * model.phi.col(u.first);
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < m; ++i)
                    A(i, slot, k) = mode(i + m * k).real();
            double pw = 1.0;
            for (std::size_t j = 0; j < frames; ++j) {
                for (std::size_t k = 0; k < n; ++k) C(slot, j, k) = pw;
                pw *= lam;
            }
            slot += 1;
        } else {
            // Symmetrize so the pair sum is exactly real.
            const std::complex<double> lam =
                0.5 * (model.lambda(u.first) + std::conj(model.lambda(u.first + 1)));
            ComplexVector mode =
                0.5 * (model.amp(u.first) * model.phi.col(u.first) +
                       (model.amp(u.first + 1) * model.phi.col(u.first + 1)).conjugate());
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < m; ++i) {
                    A(i, slot, k) = 2.0 * mode(i + m * k).real();
                    A(i, slot + 1, k) = -2.0 * mode(i + m * k).imag();
                }
            std::complex<double> pw(1.0, 0.0);
            for (std::size_t j = 0; j < frames; ++j) {
                for (std::size_t k = 0; k < n; ++k) {
                    C(slot, j, k) = pw.real();
                    C(slot + 1, j, k) = pw.imag();
                }
                pw *= lam;
            }
            slot += 2;
        }
    }
    return BmdFactors(std::move(A), Tensor3::ones(m, frames, l), std::move(C));
}

// Fit one model per time window and embed each into a shared bundle whose
// rank is the sum of the per-segment ranks.  A segment's slots carry zeros in
// B and C outside its own frame range, so the product concatenates the
// per-segment reconstructions along time.
inline BmdFactors dmd_segmented_init(const Tensor3& X, std::size_t l,
                                     std::size_t window, double delta = 1e-2) {
    const std::size_t m = X.m(), p = X.p(), n = X.n();
    if (window < 2) throw dim_error("dmd_segmented_init: window must be >= 2");

    // Consecutive windows; a trailing stub of one frame joins the previous
    // segment so every fit sees at least two frames.
    std::vector<std::pair<std::size_t, std::size_t>> segments;
    std::size_t start = 0;
    while (start < p) {
        std::size_t stop = std::min(p, start + window);
        if (p - stop == 1) stop = p;
        segments.push_back({start, stop});
        start = stop;
    }
    if (segments.size() == 1)
        return dmd_to_bmd(dmd_fit(X, std::min(l, segments[0].second - 1), delta), p);

    std::vector<BmdFactors> parts;
    std::size_t total_rank = 0;
    for (const auto& [s0, s1] : segments) {
        const std::size_t sp = s1 - s0;
        Tensor3 sub(m, sp, n);
        for (std::size_t j = 0; j < sp; ++j)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < m; ++i)
                    sub(i, j, k) = X(i, s0 + j, k);
        DmdModel model = dmd_fit(sub, std::min(l, sp - 1), delta);
        parts.push_back(dmd_to_bmd(model, sp));
        total_rank += parts.back().rank();
    }

    Tensor3 A(m, total_rank, n), B(m, p, total_rank), C(total_rank, p, n);
    std::size_t slot = 0;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const auto& [s0, s1] = segments[s];
        const BmdFactors& f = parts[s];
        for (std::size_t t = 0; t < f.rank(); ++t) {
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < m; ++i)
                    A(i, slot + t, k) = f.A(i, t, k);
            for (std::size_t j = s0; j < s1; ++j) {
                for (std::size_t i = 0; i < m; ++i)
                    B(i, j, slot + t) = f.B(i, j - s0, t);
                for (std::size_t k = 0; k < n; ++k)
                    C(slot + t, j, k) = f.C(t, j - s0, k);
            }
        }
        slot += f.rank();
    }
    return BmdFactors(std::move(A), std::move(B), std::move(C));
}

}  // namespace bmd
