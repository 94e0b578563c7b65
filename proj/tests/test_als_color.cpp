// Fourth-order ALS: channel-difference operator, stacked-channel block
// updates, coupling behaviour, and the q=1 reduction to the third-order path.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "bmd/als.hpp"
#include "bmd/als_color.hpp"
#include "bmd/bm_algebra.hpp"
#include "bmd/init.hpp"
#include "bmd/tensor.hpp"
#include "oracles.hpp"

using bmd::Bmd4Factors;
using bmd::BmdFactors;
using bmd::ChannelCoupling;
using bmd::Matrix;
using bmd::Regularization;
using bmd::SolveOptions;
using bmd::Tensor3;
using bmd::Tensor4;
using bmd::Vector;

namespace {

Bmd4Factors random_factors4(std::size_t m, std::size_t p, std::size_t n,
                            std::size_t q, std::size_t l, std::mt19937_64& gen) {
    return Bmd4Factors(oracle::random_tensor4(m, l, n, q, gen),
                       oracle::random_tensor4(m, p, l, q, gen),
                       oracle::random_tensor4(l, p, n, q, gen));
}

double max_abs4(const Tensor4& X) {
    double v = 0.0;
    for (std::size_t s = 0; s < X.size(); ++s)
        v = std::max(v, std::abs(X.data()[s]));
    return v;
}

bool bitwise_equal4(const Tensor4& X, const Tensor4& Y) {
    return X.same_dims(Y) &&
           std::memcmp(X.data(), Y.data(), X.size() * sizeof(double)) == 0;
}

double channel_spread(const Tensor4& F) {
    // Largest Frobenius distance between any two channel slices, relative to
    // the largest channel-slice norm.
    double worst = 0.0, scale = 0.0;
    for (std::size_t z = 0; z < F.q(); ++z) {
        scale = std::max(scale, bmd::frobenius_norm(bmd::channel_slice(F, z)));
        for (std::size_t w = z + 1; w < F.q(); ++w) {
            Tensor3 a = bmd::channel_slice(F, z), b = bmd::channel_slice(F, w);
            double acc = 0.0;
            for (std::size_t s = 0; s < a.size(); ++s) {
                const double d = a.data()[s] - b.data()[s];
                acc += d * d;
            }
            worst = std::max(worst, std::sqrt(acc));
        }
    }
    return scale > 0 ? worst / scale : worst;
}

}  // namespace

TEST_CASE("channel difference operator has the documented pattern", "[als_color]") {
    Matrix R = bmd::build_r(1, 3);
    REQUIRE(R.rows() == 2);
    REQUIRE(R.cols() == 3);
    Matrix expect(2, 3);
    expect << 1, -1, 0, 0, 1, -1;
    CHECK((R - expect).cwiseAbs().maxCoeff() == 0.0);

    // Vectors with identical per-channel blocks are annihilated.
    R = bmd::build_r(2, 4);
    REQUIRE(R.rows() == 6);
    REQUIRE(R.cols() == 8);
    Vector block(2);
    block << 0.3, -1.7;
    Vector rep(8);
    rep << block, block, block, block;
    CHECK((R * rep).cwiseAbs().maxCoeff() == 0.0);

    // Row sums vanish because every row pairs a +1 with a -1.
    CHECK(R.rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index r = 0; r < R.rows(); ++r)
        CHECK(R.row(r).cwiseAbs().sum() == 2.0);

    CHECK_THROWS_AS(bmd::build_r(0, 3), bmd::dim_error);
    CHECK_THROWS_AS(bmd::build_r(2, 1), bmd::dim_error);
    CHECK_THROWS_AS([] { ChannelCoupling c; c.weight = -1; c.validate(); }(),
                    bmd::dim_error);
}

TEST_CASE("color init stacks per-channel slicewise factorizations", "[als_color]") {
    std::mt19937_64 gen(8101);
    const std::size_t m = 5, p = 6, n = 4, l = 2;

    // One channel: exactly the third-order initializer.
    Tensor3 X3 = oracle::random_tensor3(m, p, n, gen);
    Tensor4 X1 = bmd::stack_channels({X3});
    Bmd4Factors g1 = bmd::als4_init(X1, l);
    BmdFactors f3 = bmd::slicewise_svd_init(X3, l);
    CHECK(bmd::max_abs_diff(bmd::channel_slice(g1.A, 0), f3.A) == 0.0);
    CHECK(bmd::max_abs_diff(bmd::channel_slice(g1.C, 0), f3.C) == 0.0);

    // Replicated channels get identical factor slices and an all-ones B.
    Tensor4 X3rep = bmd::stack_channels({X3, X3, X3});
    Bmd4Factors g = bmd::als4_init(X3rep, l);
    CHECK(channel_spread(g.A) == 0.0);
    CHECK(channel_spread(g.C) == 0.0);
    CHECK(max_abs4(g.B) == 1.0);
    double bmin = g.B.data()[0];
    for (std::size_t s = 0; s < g.B.size(); ++s)
        bmin = std::min(bmin, g.B.data()[s]);
    CHECK(bmin == 1.0);

    // Full-rank init reproduces every channel exactly.
    Bmd4Factors gf = bmd::als4_init(X3rep, std::min(m, p));
    CHECK(bmd::relative_error(bmd::bmp4(gf), X3rep) < 1e-10);
}

TEST_CASE("stacked-channel updates match direct penalized solves", "[als_color]") {
    std::mt19937_64 gen(8102);
    const std::size_t m = 3, p = 4, n = 5, q = 3, l = 2;
    Tensor4 T = oracle::random_tensor4(m, p, n, q, gen);
    Tensor4 A = oracle::random_tensor4(m, l, n, q, gen);
    Tensor4 B = oracle::random_tensor4(m, p, l, q, gen);
    Tensor4 C = oracle::random_tensor4(l, p, n, q, gen);

    ChannelCoupling coupling;
    coupling.weight = 0.8;
    const Matrix R = bmd::build_r(l, q);
    const Matrix P = coupling.weight * coupling.weight *
                     (R.transpose() * R);  // penalty normal matrix

    // B: fibers over (i,j), stacked rows per channel, columns (t,z).
    Tensor4 Bnew = bmd::update_b4(T, A, C, coupling);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            Matrix H = Matrix::Zero(n * q, l * q);
            Vector y(n * q);
            for (std::size_t z = 0; z < q; ++z)
                for (std::size_t k = 0; k < n; ++k) {
                    y(z * n + k) = T(i, j, k, z);
                    for (std::size_t t = 0; t < l; ++t)
                        H(z * n + k, z * l + t) = A(i, t, k, z) * C(t, j, k, z);
                }
            Matrix lhs = H.transpose() * H + P;
            Vector b = lhs.ldlt().solve(H.transpose() * y);
            for (std::size_t z = 0; z < q; ++z)
                for (std::size_t t = 0; t < l; ++t)
                    CHECK_THAT(Bnew(i, j, t, z),
                               Catch::Matchers::WithinAbs(b(z * l + t), 1e-9));
        }

    // C: fibers over (j,k), data fiber along i.
    Tensor4 Cnew = bmd::update_c4(T, A, B, coupling);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < n; ++k) {
            Matrix G = Matrix::Zero(m * q, l * q);
            Vector y(m * q);
            for (std::size_t z = 0; z < q; ++z)
                for (std::size_t i = 0; i < m; ++i) {
                    y(z * m + i) = T(i, j, k, z);
                    for (std::size_t t = 0; t < l; ++t)
                        G(z * m + i, z * l + t) = A(i, t, k, z) * B(i, j, t, z);
                }
            Matrix lhs = G.transpose() * G + P;
            Vector c = lhs.ldlt().solve(G.transpose() * y);
            for (std::size_t z = 0; z < q; ++z)
                for (std::size_t t = 0; t < l; ++t)
                    CHECK_THAT(Cnew(t, j, k, z),
                               Catch::Matchers::WithinAbs(c(z * l + t), 1e-9));
        }

    // A: fibers over (k,i), unpenalized minimum-norm solve.
    Tensor4 Anew = bmd::update_a4(T, B, C);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < m; ++i) {
            Matrix G = Matrix::Zero(p * q, l * q);
            Vector y(p * q);
            for (std::size_t z = 0; z < q; ++z)
                for (std::size_t j = 0; j < p; ++j) {
                    y(z * p + j) = T(i, j, k, z);
                    for (std::size_t t = 0; t < l; ++t)
                        G(z * p + j, z * l + t) = B(i, j, t, z) * C(t, j, k, z);
                }
            Vector a = oracle::pinv_solve(G, y);
            for (std::size_t z = 0; z < q; ++z)
                for (std::size_t t = 0; t < l; ++t)
                    CHECK_THAT(Anew(i, t, k, z),
                               Catch::Matchers::WithinAbs(a(z * l + t), 1e-9));
        }
}

TEST_CASE("exact color data is a one-sweep fixed point", "[als_color]") {
    std::mt19937_64 gen(8103);
    Bmd4Factors f0 = random_factors4(4, 5, 6, 2, 2, gen);
    Tensor4 T = bmd::bmp4(f0);

    SolveOptions opts;
    opts.reg = Regularization::none();
    ChannelCoupling off;
    off.enabled = false;
    auto [f, report] = bmd::bmd_als4(T, f0, opts, off);
    CHECK(report.sweeps_run == 1);
    CHECK(report.reason == bmd::StopReason::tolerance);
    CHECK(bmd::relative_error(bmd::bmp4(f), T) <= 1e-12);
}

TEST_CASE("replicated channels stay in lockstep under coupling", "[als_color]") {
    std::mt19937_64 gen(8104);
    Tensor3 X3 = oracle::random_tensor3(5, 6, 7, gen);
    Tensor4 X = bmd::stack_channels({X3, X3, X3});

    SolveOptions opts;
    opts.max_sweeps = 10;
    opts.rel_tol = 1e-12;
    ChannelCoupling coupling;  // enabled, weight 1
    auto [f, report] = bmd::bmd_als4(X, bmd::als4_init(X, 2), opts, coupling);
    (void)report;

    CHECK(channel_spread(f.B) < 1e-8);
    CHECK(channel_spread(f.C) < 1e-8);
    CHECK(channel_spread(f.A) < 1e-8);
}

TEST_CASE("strong coupling forces channel-constant B and C", "[als_color]") {
    std::mt19937_64 gen(8105);
    Tensor4 X = oracle::random_tensor4(4, 5, 6, 3, gen);

    SolveOptions opts;
    opts.max_sweeps = 3;
    opts.rel_tol = 1e-14;
    ChannelCoupling coupling;
    coupling.weight = 1e6;
    auto [f, report] = bmd::bmd_als4(X, bmd::als4_init(X, 2), opts, coupling);
    (void)report;

    CHECK(channel_spread(f.B) < 1e-4);
    CHECK(channel_spread(f.C) < 1e-4);
}

TEST_CASE("color objective matches an independently summed penalty", "[als_color]") {
    std::mt19937_64 gen(8106);
    const std::size_t m = 3, p = 4, n = 5, q = 3, l = 2;
    Bmd4Factors f = random_factors4(m, p, n, q, l, gen);
    Tensor4 T = oracle::random_tensor4(m, p, n, q, gen);
    ChannelCoupling coupling;
    coupling.weight = 1.3;

    Tensor4 X = oracle::reference_bmp4(f.A, f.B, f.C);
    double expected = 0.0;
    for (std::size_t s = 0; s < T.size(); ++s) {
        const double d = T.data()[s] - X.data()[s];
        expected += d * d;
    }
    // Difference penalty over B fibers: sum over (i,j,t) of the squared
    // consecutive-channel gaps, scaled by the weight.
    const double w2 = coupling.weight * coupling.weight;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t t = 0; t < l; ++t)
                for (std::size_t z = 0; z + 1 < q; ++z) {
                    const double d = f.B(i, j, t, z) - f.B(i, j, t, z + 1);
                    expected += w2 * d * d;
                }
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t t = 0; t < l; ++t)
                for (std::size_t z = 0; z + 1 < q; ++z) {
                    const double d = f.C(t, j, k, z) - f.C(t, j, k, z + 1);
                    expected += w2 * d * d;
                }

    CHECK_THAT(bmd::objective_psi4(T, f, coupling),
               Catch::Matchers::WithinRel(expected, 1e-12));

    // Optional ridge on A adds the half-weighted per-slice term.
    Regularization areg = Regularization::defaults(l);
    double a_pen = 0.0;
    const Vector lam = areg.resolved_lambda(l);
    for (std::size_t z = 0; z < q; ++z)
        for (std::size_t t = 0; t < l; ++t)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < m; ++i)
                    a_pen += lam(t) * lam(t) * f.A(i, t, k, z) * f.A(i, t, k, z);
    CHECK_THAT(bmd::objective_psi4(T, f, coupling, &areg),
               Catch::Matchers::WithinRel(expected + 0.5 * a_pen, 1e-12));
}

TEST_CASE("coupled sweeps never increase the color objective", "[als_color]") {
    std::mt19937_64 gen(8107);
    Tensor4 T = oracle::random_tensor4(6, 7, 5, 3, gen);
    const std::size_t l = 2;
    Bmd4Factors f = bmd::als4_init(T, l);
    ChannelCoupling coupling;  // weight 1

    double psi = bmd::objective_psi4(T, f, coupling);
    const double slack = 1e-10 * psi;
    for (int sweep = 0; sweep < 4; ++sweep) {
        f.B = bmd::update_b4(T, f.A, f.C, coupling);
        double next = bmd::objective_psi4(T, f, coupling);
        CHECK(next <= psi + slack);
        psi = next;

        f.C = bmd::update_c4(T, f.A, f.B, coupling);
        next = bmd::objective_psi4(T, f, coupling);
        CHECK(next <= psi + slack);
        psi = next;

        f.A = bmd::update_a4(T, f.B, f.C);
        next = bmd::objective_psi4(T, f, coupling);
        CHECK(next <= psi + slack);
        psi = next;
    }

    // The solver's own trace shows the same monotone profile.
    SolveOptions opts;
    opts.max_sweeps = 6;
    opts.rel_tol = 1e-12;
    auto [sol, report] = bmd::bmd_als4(T, bmd::als4_init(T, l), opts, coupling);
    REQUIRE(report.trace.size() >= 2);
    const double slack2 = 1e-10 * report.trace.front().psi;
    for (std::size_t s = 1; s < report.trace.size(); ++s)
        CHECK(report.trace[s].psi <= report.trace[s - 1].psi + slack2);
    (void)sol;
}

TEST_CASE("single-channel color solve reduces to the third-order solver", "[als_color]") {
    std::mt19937_64 gen(8108);
    Tensor3 X3 = oracle::random_tensor3(4, 5, 6, gen);
    Tensor4 X4 = bmd::stack_channels({X3});

    SolveOptions opts;
    opts.max_sweeps = 3;
    opts.rel_tol = 1e-14;
    opts.reg = Regularization::none();
    ChannelCoupling off;
    off.enabled = false;

    auto [f3, r3] = bmd::bmd_als(X3, bmd::slicewise_svd_init(X3, 2), opts);
    auto [f4, r4] = bmd::bmd_als4(X4, bmd::als4_init(X4, 2), opts, off);
    CHECK(r3.sweeps_run == r4.sweeps_run);
    CHECK(bmd::max_abs_diff(bmd::channel_slice(f4.A, 0), f3.A) == 0.0);
    CHECK(bmd::max_abs_diff(bmd::channel_slice(f4.B, 0), f3.B) == 0.0);
    CHECK(bmd::max_abs_diff(bmd::channel_slice(f4.C, 0), f3.C) == 0.0);
}

TEST_CASE("color separation splits the first term and reassembles", "[als_color]") {
    std::mt19937_64 gen(8109);
    Bmd4Factors f = random_factors4(4, 5, 6, 3, 3, gen);
    auto [bg, fg] = bmd::separate4(f);
    Tensor4 full = bmd::bmp4(f);

    double worst = 0.0;
    for (std::size_t s = 0; s < full.size(); ++s)
        worst = std::max(worst,
                         std::abs(bg.data()[s] + fg.data()[s] - full.data()[s]));
    CHECK(worst < 1e-13 * std::max(1.0, max_abs4(full)));

    // Background is the first term, channel by channel.
    for (std::size_t z = 0; z < 3; ++z) {
        Tensor3 bz = bmd::channel_slice(bg, z);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 5; ++j)
                for (std::size_t k = 0; k < 6; ++k)
                    CHECK_THAT(bz(i, j, k),
                               Catch::Matchers::WithinAbs(
                                   f.A(i, 0, k, z) * f.B(i, j, 0, z) *
                                       f.C(0, j, k, z),
                                   1e-13));
    }

    Bmd4Factors f1 = random_factors4(3, 4, 5, 2, 1, gen);
    auto [bg1, fg1] = bmd::separate4(f1);
    CHECK(max_abs4(fg1) == 0.0);
    CHECK(bitwise_equal4(bg1, bmd::bmp4(f1)));
    CHECK_THROWS_AS(bmd::factor_term4(f, 3), bmd::dim_error);
}

TEST_CASE("color updates are identical for any thread partition", "[als_color]") {
    std::mt19937_64 gen(8110);
    const std::size_t m = 5, p = 4, n = 6, q = 3, l = 2;
    Tensor4 T = oracle::random_tensor4(m, p, n, q, gen);
    Tensor4 A = oracle::random_tensor4(m, l, n, q, gen);
    Tensor4 B = oracle::random_tensor4(m, p, l, q, gen);
    Tensor4 C = oracle::random_tensor4(l, p, n, q, gen);
    ChannelCoupling coupling;

    CHECK(bitwise_equal4(bmd::update_b4(T, A, C, coupling, 1),
                         bmd::update_b4(T, A, C, coupling, 4)));
    CHECK(bitwise_equal4(bmd::update_c4(T, A, B, coupling, 1),
                         bmd::update_c4(T, A, B, coupling, 4)));
    CHECK(bitwise_equal4(bmd::update_a4(T, B, C, nullptr, 1),
                         bmd::update_a4(T, B, C, nullptr, 4)));
}

TEST_CASE("shared-motion color video fits at the planted rank", "[als_color]") {
    // Per-channel linear backdrops with one bright pixel walking the
    // diagonal; motion is shared across channels, intensity is not.  This is
    // representable exactly at rank 2 with channel-constant B and C, so the
    // coupled solver should reach a small residual.
    const std::size_t m = 12, n = 12, p = 8, q = 3, l = 2;
    const double base[q] = {60.0, 100.0, 140.0};
    const double alpha[q] = {200.0, 220.0, 240.0};
    Tensor4 X(m, p, n, q);
    for (std::size_t z = 0; z < q; ++z) {
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < p; ++j)
                for (std::size_t i = 0; i < m; ++i)
                    X(i, j, k, z) = base[z] + 3.0 * static_cast<double>(i) +
                                    2.0 * static_cast<double>(k);
        for (std::size_t j = 0; j < p; ++j) X(j, j, j, z) = alpha[z];
    }

    SolveOptions opts;
    opts.max_sweeps = 25;
    opts.rel_tol = 1e-7;
    ChannelCoupling coupling;
    auto [f, report] = bmd::bmd_als4(X, bmd::als4_init(X, l), opts, coupling);
    REQUIRE(!report.trace.empty());
    CHECK(report.trace.back().re < 0.05);
    (void)f;
}
