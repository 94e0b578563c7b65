#pragma once

// Synthetic surveillance clips with exact low-rank ground truth.  A frame is
// the backdrop with each object's rectangle painted over it at a constant
// gray level; the matching factor triple carries the backdrop in its first
// term and one masked term per object:
//
//   frame_f = X - diag(b_f) X diag(c_f) + alpha * b_f c_f'
//
// where b_f / c_f indicate the rows / columns the object covers in frame f.
// Two objects that share their row span (or column span) in every frame and
// have the same intensity fold into a single masked term, so the bundle rank
// is 2 instead of 3.
//
// With integer-valued backdrops and intensities every identity here is exact
// in double precision (all intermediate values are small integers).

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "bmd/bm_algebra.hpp"
#include "bmd/errors.hpp"
#include "bmd/tensor.hpp"

namespace bmd {

struct ObjectSpec {
    double intensity = 255.0;  // constant gray level painted over the backdrop
    std::size_t r1 = 1;        // height in pixels
    std::size_t r2 = 1;        // width in pixels
    // Top-left (row, col) per frame; length must equal the frame count.
    std::vector<std::pair<std::size_t, std::size_t>> trajectory;
};

struct GenerativeVideo {
    Tensor3 video;       // rendered clip, m x p x n (rows x frames x cols)
    Tensor3 background;  // backdrop replicated across frames
    Tensor3 foreground;  // video - background, elementwise
    BmdFactors factors;  // exact factor triple for the additive model
    std::size_t bm_rank = 1;
    // Two rank-3 objects overlapped in some frame: the rendered clip keeps the
    // last-painted object there, so it no longer equals bmp(factors).
    bool occluded = false;
};

// ---------------------------------------------------------------------------
// Backdrops
// ---------------------------------------------------------------------------

inline Matrix constant_background(std::size_t m, std::size_t n,
                                  double value = 128.0) {
    if (m == 0 || n == 0) throw dim_error("background: dimensions must be positive");
    return Matrix::Constant(static_cast<Eigen::Index>(m),
                            static_cast<Eigen::Index>(n), value);
}

// Vertical ramp, 0 at the top row to 255 at the bottom, integer valued.
inline Matrix gradient_background(std::size_t m, std::size_t n) {
    if (m == 0 || n == 0) throw dim_error("background: dimensions must be positive");
    Matrix bg(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        const double v =
            m > 1 ? std::round(255.0 * static_cast<double>(i) /
                               static_cast<double>(m - 1))
                  : 0.0;
        for (std::size_t k = 0; k < n; ++k)
            bg(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
    }
    return bg;
}

// Bilinear value noise on a coarse grid, rounded to integers in [0,255].
// Bitwise reproducible for a given (m, n, seed).
inline Matrix value_noise_background(std::size_t m, std::size_t n,
                                     std::uint64_t seed) {
    if (m == 0 || n == 0) throw dim_error("background: dimensions must be positive");
    const std::size_t cell = 8;
    const std::size_t gm = m / cell + 2, gn = n / cell + 2;
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(0.0, 255.0);
    Matrix grid(gm, gn);
    for (std::size_t gi = 0; gi < gm; ++gi)
        for (std::size_t gj = 0; gj < gn; ++gj)
            grid(static_cast<Eigen::Index>(gi), static_cast<Eigen::Index>(gj)) =
                dist(gen);

    Matrix bg(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t gi = i / cell, gk = k / cell;
            const double fi = static_cast<double>(i % cell) / cell;
            const double fk = static_cast<double>(k % cell) / cell;
            const double top = (1 - fk) * grid(gi, gk) + fk * grid(gi, gk + 1);
            const double bot =
                (1 - fk) * grid(gi + 1, gk) + fk * grid(gi + 1, gk + 1);
            bg(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                std::round((1 - fi) * top + fi * bot);
        }
    return bg;
}

enum class BackgroundKind { constant, gradient, value_noise };

inline Matrix synthetic_background(BackgroundKind kind, std::size_t m,
                                   std::size_t n, std::uint64_t seed = 0) {
    switch (kind) {
        case BackgroundKind::constant: return constant_background(m, n);
        case BackgroundKind::gradient: return gradient_background(m, n);
        case BackgroundKind::value_noise: return value_noise_background(m, n, seed);
    }
    throw dim_error("synthetic_background: unknown kind");
}

// Straight-line trajectory: (i0 + f*di, j0 + f*dj) for f = 0..p-1.
inline std::vector<std::pair<std::size_t, std::size_t>> linear_path(
    std::size_t i0, std::size_t j0, std::ptrdiff_t di, std::ptrdiff_t dj,
    std::size_t p) {
    std::vector<std::pair<std::size_t, std::size_t>> path;
    path.reserve(p);
    for (std::size_t f = 0; f < p; ++f) {
        const std::ptrdiff_t i = static_cast<std::ptrdiff_t>(i0) +
                                 static_cast<std::ptrdiff_t>(f) * di;
        const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(j0) +
                                 static_cast<std::ptrdiff_t>(f) * dj;
        if (i < 0 || j < 0)
            throw dim_error("linear_path: trajectory leaves the frame");
        path.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
    return path;
}

// ---------------------------------------------------------------------------
// Clip synthesis
// ---------------------------------------------------------------------------

namespace detail {

struct FrameSpan {
    std::size_t i0, i1, j0, j1;  // half-open row and column ranges

    bool rows_equal(const FrameSpan& o) const {
        return i0 == o.i0 && i1 == o.i1;
    }
    bool cols_equal(const FrameSpan& o) const {
        return j0 == o.j0 && j1 == o.j1;
    }
    bool intersects(const FrameSpan& o) const {
        return i0 < o.i1 && o.i0 < i1 && j0 < o.j1 && o.j0 < j1;
    }
};

inline FrameSpan object_span(const ObjectSpec& o, std::size_t f) {
    const auto [i, j] = o.trajectory[f];
    return {i, i + o.r1, j, j + o.r2};
}

}  // namespace detail

inline GenerativeVideo synth_video(const Matrix& background,
                                   const std::vector<ObjectSpec>& objects,
                                   std::size_t p) {
    const std::size_t m = static_cast<std::size_t>(background.rows());
    const std::size_t n = static_cast<std::size_t>(background.cols());
    if (m == 0 || n == 0)
        throw dim_error("synth_video: background must be nonempty");
    if (p < 1) throw dim_error("synth_video: need at least one frame");
    if (objects.size() > 2)
        throw dim_error("synth_video: at most two objects are supported");
    for (const auto& o : objects) {
        if (o.r1 < 1 || o.r2 < 1)
            throw dim_error("synth_video: object size must be at least 1x1");
        if (o.trajectory.size() != p)
            throw dim_error("synth_video: trajectory length must equal the frame count");
        for (const auto& [i, j] : o.trajectory)
            if (i + o.r1 > m || j + o.r2 > n)
                throw dim_error("synth_video: trajectory leaves the frame");
    }

    GenerativeVideo out;
    out.background = Tensor3(m, p, n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t f = 0; f < p; ++f)
            for (std::size_t i = 0; i < m; ++i)
                out.background(i, f, k) = background(static_cast<Eigen::Index>(i),
                                                     static_cast<Eigen::Index>(k));

    // Render: paint objects in order, so a later object wins any overlap.
    out.video = out.background;
    for (const auto& o : objects)
        for (std::size_t f = 0; f < p; ++f) {
            const auto s = detail::object_span(o, f);
            for (std::size_t k = s.j0; k < s.j1; ++k)
                for (std::size_t i = s.i0; i < s.i1; ++i)
                    out.video(i, f, k) = o.intensity;
        }

    // Decide how many masked terms the pair needs.  Sharing a row span (or a
    // column span) in every frame keeps the union a product set, so one term
    // covers both objects -- provided they paint the same gray level.
    bool foldable = false;
    bool overlap = false;
    if (objects.size() == 2) {
        foldable = objects[0].intensity == objects[1].intensity;
        for (std::size_t f = 0; f < p; ++f) {
            const auto a = detail::object_span(objects[0], f);
            const auto b = detail::object_span(objects[1], f);
            if (!(a.rows_equal(b) || a.cols_equal(b))) foldable = false;
            if (a.intersects(b)) overlap = true;
        }
    }
    const std::size_t rank =
        objects.empty() ? 1 : (objects.size() == 1 || foldable ? 2 : 3);
    out.bm_rank = rank;
    out.occluded = overlap && rank == 3;

    // Factor triple: term 0 is the backdrop, each further term one mask.
    Tensor3 A(m, rank, n), B(m, p, rank), C(rank, p, n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < m; ++i)
            A(i, 0, k) = background(static_cast<Eigen::Index>(i),
                                    static_cast<Eigen::Index>(k));
    for (std::size_t f = 0; f < p; ++f) {
        for (std::size_t i = 0; i < m; ++i) B(i, f, 0) = 1.0;
        for (std::size_t k = 0; k < n; ++k) C(0, f, k) = 1.0;
    }

    struct Term {
        double alpha;
        std::vector<const ObjectSpec*> members;
    };
    std::vector<Term> terms;
    if (objects.size() == 1 || (objects.size() == 2 && foldable)) {
        Term t{objects[0].intensity, {}};
        for (const auto& o : objects) t.members.push_back(&o);
        terms.push_back(std::move(t));
    } else if (objects.size() == 2) {
        terms.push_back({objects[0].intensity, {&objects[0]}});
        terms.push_back({objects[1].intensity, {&objects[1]}});
    }

    for (std::size_t s = 0; s < terms.size(); ++s) {
        const std::size_t slot = 1 + s;
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < m; ++i)
                A(i, slot, k) = terms[s].alpha -
                                background(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(k));
        for (std::size_t f = 0; f < p; ++f)
            for (const ObjectSpec* o : terms[s].members) {
                const auto span = detail::object_span(*o, f);
                for (std::size_t i = span.i0; i < span.i1; ++i) B(i, f, slot) = 1.0;
                for (std::size_t k = span.j0; k < span.j1; ++k) C(slot, f, k) = 1.0;
            }
    }
    out.factors = BmdFactors(std::move(A), std::move(B), std::move(C));

    out.foreground = Tensor3(m, p, n);
    for (std::size_t s = 0; s < out.video.size(); ++s)
        out.foreground.data()[s] = out.video.data()[s] - out.background.data()[s];
    return out;
}

}  // namespace bmd
