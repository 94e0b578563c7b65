#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "bmd/bm_algebra.hpp"
#include "oracles.hpp"

using bmd::BmdFactors;
using bmd::Bmd4Factors;
using bmd::Matrix;
using bmd::Tensor3;
using bmd::Tensor4;

namespace {

BmdFactors random_factors(std::mt19937_64& gen, std::size_t m, std::size_t p,
                          std::size_t n, std::size_t l) {
    return BmdFactors(oracle::random_tensor3(m, l, n, gen),
                      oracle::random_tensor3(m, p, l, gen),
                      oracle::random_tensor3(l, p, n, gen));
}

Bmd4Factors random_factors4(std::mt19937_64& gen, std::size_t m, std::size_t p,
                            std::size_t n, std::size_t l, std::size_t q) {
    return Bmd4Factors(oracle::random_tensor4(m, l, n, q, gen),
                       oracle::random_tensor4(m, p, l, q, gen),
                       oracle::random_tensor4(l, p, n, q, gen));
}

}  // namespace

TEST_CASE("product matches the entrywise reference", "[bm_algebra]") {
    std::mt19937_64 gen(201);
    std::uniform_int_distribution<std::size_t> dd(1, 8), dl(1, 4);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t m = dd(gen), p = dd(gen), n = dd(gen), l = dl(gen);
        BmdFactors f = random_factors(gen, m, p, n, l);
        Tensor3 X = bmd::bmp(f);
        Tensor3 R = oracle::reference_bmp(f.A, f.B, f.C);
        REQUIRE(bmd::max_abs_diff(X, R) <= 1e-13);
    }
}

TEST_CASE("product equals the sum of rank-1 outer products", "[bm_algebra]") {
    std::mt19937_64 gen(203);
    BmdFactors f = random_factors(gen, 5, 4, 6, 3);
    Tensor3 X = bmd::bmp(f);

    Tensor3 acc(5, 4, 6);
    for (std::size_t t = 0; t < 3; ++t) {
        // Slices A(:,t,:), B(:,:,t), C(t,:,:).
        Matrix a(5, 6), b(5, 4), c(4, 6);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t k = 0; k < 6; ++k) a(i, k) = f.A(i, t, k);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 4; ++j) b(i, j) = f.B(i, j, t);
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < 6; ++k) c(j, k) = f.C(t, j, k);
        Tensor3 term = bmd::bmp_outer(a, b, c);
        for (std::size_t s = 0; s < acc.size(); ++s)
            acc.data()[s] += term.data()[s];
    }
    REQUIRE(bmd::max_abs_diff(X, acc) <= 1e-13);
}

TEST_CASE("outer product with all-ones middle slice has rank-1 frontal slices",
          "[bm_algebra]") {
    std::mt19937_64 gen(205);
    Matrix a = oracle::random_matrix(4, 5, gen);
    Matrix c = oracle::random_matrix(3, 5, gen);
    Tensor3 X = bmd::bmp_outer(a, Matrix::Ones(4, 3), c);
    for (std::size_t k = 0; k < 5; ++k) {
        Matrix F = bmd::frontal_slice(X, k);
        Matrix expect = a.col(k) * c.col(k).transpose();
        REQUIRE((F - expect).norm() <= 1e-14 * std::max(1.0, expect.norm()));
    }
}

TEST_CASE("transpose identity", "[bm_algebra]") {
    std::mt19937_64 gen(207);
    std::uniform_int_distribution<std::size_t> dd(1, 7), dl(1, 4);
    for (int rep = 0; rep < 100; ++rep) {
        BmdFactors f = random_factors(gen, dd(gen), dd(gen), dd(gen), dl(gen));
        Tensor3 lhs = bmd::transpose_t(bmd::bmp(f));
        Tensor3 rhs = bmd::bmp(bmd::transpose_factors(f));
        REQUIRE(bmd::max_abs_diff(lhs, rhs) <= 1e-13);

        // Applying the rotation twice matches the double transpose.
        Tensor3 lhs2 = bmd::transpose_t2(bmd::bmp(f));
        Tensor3 rhs2 = bmd::bmp(bmd::transpose_factors(bmd::transpose_factors(f)));
        REQUIRE(bmd::max_abs_diff(lhs2, rhs2) <= 1e-13);
    }
}

TEST_CASE("order-4 product: reference, channel decoupling, transpose identity",
          "[bm_algebra]") {
    std::mt19937_64 gen(209);
    std::uniform_int_distribution<std::size_t> dd(1, 5), dl(1, 3), dq(1, 4);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t m = dd(gen), p = dd(gen), n = dd(gen), l = dl(gen),
                          q = dq(gen);
        Bmd4Factors f = random_factors4(gen, m, p, n, l, q);
        Tensor4 X = bmd::bmp4(f);
        REQUIRE(bmd::max_abs_diff(X, oracle::reference_bmp4(f.A, f.B, f.C)) <=
                1e-13);

        // Channels never mix: each channel equals the third-order product of
        // its own channel factors.
        for (std::size_t z = 0; z < q; ++z) {
            Tensor3 Xz = bmd::bmp(bmd::channel_slice(f.A, z),
                                  bmd::channel_slice(f.B, z),
                                  bmd::channel_slice(f.C, z));
            REQUIRE(bmd::max_abs_diff(bmd::channel_slice(X, z), Xz) <= 1e-14);
        }

        Tensor4 lhs = bmd::transpose_t(X);
        Tensor4 rhs = bmd::bmp4(bmd::transpose_factors(f));
        REQUIRE(bmd::max_abs_diff(lhs, rhs) <= 1e-13);
    }
}

TEST_CASE("diagonal rescaling leaves a rank-1 product unchanged", "[bm_algebra]") {
    std::mt19937_64 gen(211);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t m = 4, p = 5, n = 3;
        BmdFactors f = random_factors(gen, m, p, n, 1);
        // Diagonal weights bounded away from zero.
        bmd::Vector d1 = oracle::random_matrix(m, 1, gen, 0.5, 2.0).col(0);
        bmd::Vector d2 = oracle::random_matrix(p, 1, gen, 0.5, 2.0).col(0);

        BmdFactors g = f;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = 0; k < n; ++k) g.A(i, 0, k) *= d1(i);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < p; ++j) g.B(i, j, 0) /= d1(i) * d2(j);
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = 0; k < n; ++k) g.C(0, j, k) *= d2(j);

        REQUIRE(bmd::relative_error(bmd::bmp(f), bmd::bmp(g)) <= 1e-12);
    }
}

TEST_CASE("slicewise rank bound", "[bm_algebra]") {
    std::mt19937_64 gen(213);

    // Full random tensor: every orientation reaches its max possible rank.
    Tensor3 X = oracle::random_tensor3(4, 5, 6, gen);
    REQUIRE(bmd::bm_rank_upper_bound(X) == 4);

    // With an all-ones middle factor each frontal slice is a sum of l rank-1
    // outer products, so the bound cannot exceed l.  (For arbitrary middle
    // factors the slicewise bound is still an upper bound on the BM rank but
    // may sit well above the construction rank.)
    for (int rep = 0; rep < 10; ++rep) {
        std::uniform_int_distribution<std::size_t> dl(1, 3);
        const std::size_t l = dl(gen);
        BmdFactors f = random_factors(gen, 6, 7, 8, l);
        f.B = Tensor3::ones(6, 7, l);
        REQUIRE(bmd::bm_rank_upper_bound(bmd::bmp(f)) <= l);
    }
}

TEST_CASE("products reject nonconforming factors", "[bm_algebra]") {
    Tensor3 A(3, 2, 4), B(3, 5, 2), C(2, 5, 4);
    REQUIRE_NOTHROW(bmd::bmp(A, B, C));
    REQUIRE_THROWS_AS(bmd::bmp(A, B, Tensor3(2, 5, 3)), bmd::dim_error);
    REQUIRE_THROWS_AS(bmd::bmp(A, Tensor3(4, 5, 2), C), bmd::dim_error);
    REQUIRE_THROWS_AS(BmdFactors(A, B, Tensor3(3, 5, 4)), bmd::dim_error);
    REQUIRE_THROWS_AS(bmd::bmp_outer(Matrix::Ones(2, 3), Matrix::Ones(2, 2),
                                     Matrix::Ones(3, 3)),
                      bmd::dim_error);
}

TEST_CASE("product is bitwise stable across thread counts", "[bm_algebra]") {
    std::mt19937_64 gen(215);
    BmdFactors f = random_factors(gen, 6, 5, 7, 3);
    Tensor3 X1 = bmd::bmp(f, 1);
    Tensor3 X4 = bmd::bmp(f, 4);
    REQUIRE(bmd::max_abs_diff(X1, X4) == 0.0);
}
