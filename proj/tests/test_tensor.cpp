#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "bmd/tensor.hpp"
#include "oracles.hpp"

using bmd::Matrix;
using bmd::Tensor3;
using bmd::Vector;

// 2x2x2 tensor with entry (i,j,k) = i + 10j + 100k in 1-based math indexing.
static Tensor3 digit_tensor() {
    Tensor3 X(2, 2, 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k)
                X(i, j, k) = double((i + 1) + 10 * (j + 1) + 100 * (k + 1));
    return X;
}

TEST_CASE("storage layout is first-index-fastest", "[tensor]") {
    Tensor3 X = digit_tensor();
    // offset = i + m*j + m*p*k
    REQUIRE(X.data()[0] == 111.0);
    REQUIRE(X.data()[1] == 112.0);   // i advances first
    REQUIRE(X.data()[2] == 121.0);   // then j
    REQUIRE(X.data()[4] == 211.0);   // then k
    REQUIRE(X.data()[7] == 222.0);
}

TEST_CASE("slices of the digit tensor", "[tensor]") {
    Tensor3 X = digit_tensor();

    Matrix F = bmd::frontal_slice(X, 0);
    REQUIRE(F.rows() == 2);
    REQUIRE(F.cols() == 2);
    REQUIRE(F(0, 0) == 111.0);
    REQUIRE(F(0, 1) == 121.0);
    REQUIRE(F(1, 0) == 112.0);
    REQUIRE(F(1, 1) == 122.0);

    Matrix L = bmd::lateral_slice(X, 0);
    REQUIRE(L(0, 0) == 111.0);
    REQUIRE(L(0, 1) == 211.0);
    REQUIRE(L(1, 0) == 112.0);
    REQUIRE(L(1, 1) == 212.0);

    Matrix H = bmd::horizontal_slice(X, 0);
    REQUIRE(H(0, 0) == 111.0);
    REQUIRE(H(0, 1) == 211.0);
    REQUIRE(H(1, 0) == 121.0);
    REQUIRE(H(1, 1) == 221.0);

    Vector f = bmd::tube_fiber(X, 0, 0);
    REQUIRE(f(0) == 111.0);
    REQUIRE(f(1) == 211.0);
}

TEST_CASE("tvec stacks tube fibers in (i,j) lexicographic order", "[tensor]") {
    Tensor3 X = digit_tensor();
    Vector v = bmd::tvec(X);
    const double expected[8] = {111, 211, 121, 221, 112, 212, 122, 222};
    for (int s = 0; s < 8; ++s) REQUIRE(v(s) == expected[s]);
}

TEST_CASE("tvec/tfold round-trip is exact", "[tensor]") {
    std::mt19937_64 gen(42);
    for (int rep = 0; rep < 20; ++rep) {
        std::uniform_int_distribution<std::size_t> d(1, 7);
        const std::size_t m = d(gen), p = d(gen), n = d(gen);
        Tensor3 X = oracle::random_tensor3(m, p, n, gen);
        Tensor3 Y = bmd::tfold(bmd::tvec(X), m, p, n);
        REQUIRE(bmd::max_abs_diff(X, Y) == 0.0);
    }
}

TEST_CASE("transpose moves a single entry cyclically", "[tensor]") {
    // Nonzero at (1,2,3) in 1-based indexing must land at (2,3,1).
    Tensor3 X(3, 3, 3);
    X(0, 1, 2) = 5.0;
    Tensor3 Y = bmd::transpose_t(X);
    REQUIRE(Y(1, 2, 0) == 5.0);
    REQUIRE(bmd::frobenius_norm(Y) == 5.0);

    Tensor3 Z = bmd::transpose_t2(X);
    REQUIRE(Z(2, 0, 1) == 5.0);
}

TEST_CASE("transpose cycle and composition", "[tensor]") {
    std::mt19937_64 gen(7);
    for (int rep = 0; rep < 20; ++rep) {
        std::uniform_int_distribution<std::size_t> d(1, 6);
        Tensor3 X = oracle::random_tensor3(d(gen), d(gen), d(gen), gen);

        Tensor3 once = bmd::transpose_t(X);
        Tensor3 twice = bmd::transpose_t(once);
        Tensor3 thrice = bmd::transpose_t(twice);
        REQUIRE(bmd::max_abs_diff(thrice, X) == 0.0);
        REQUIRE(bmd::max_abs_diff(bmd::transpose_t2(X), twice) == 0.0);

        // The multiset of entries is unchanged, so the norm matches to
        // rounding (summation order differs).
        REQUIRE_THAT(bmd::frobenius_norm(once),
                     Catch::Matchers::WithinRel(bmd::frobenius_norm(X), 1e-13));
    }
}

TEST_CASE("slice extraction matches raw offset arithmetic", "[tensor]") {
    std::mt19937_64 gen(11);
    for (int rep = 0; rep < 50; ++rep) {
        std::uniform_int_distribution<std::size_t> d(1, 6);
        const std::size_t m = d(gen), p = d(gen), n = d(gen);
        Tensor3 X = oracle::random_tensor3(m, p, n, gen);
        const double* raw = X.data();

        for (std::size_t k = 0; k < n; ++k) {
            Matrix F = bmd::frontal_slice(X, k);
            for (std::size_t j = 0; j < p; ++j)
                for (std::size_t i = 0; i < m; ++i)
                    REQUIRE(F(i, j) == raw[i + m * j + m * p * k]);
        }
        for (std::size_t j = 0; j < p; ++j) {
            Matrix L = bmd::lateral_slice(X, j);
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < m; ++i)
                    REQUIRE(L(i, k) == raw[i + m * j + m * p * k]);
        }
        for (std::size_t i = 0; i < m; ++i) {
            Matrix H = bmd::horizontal_slice(X, i);
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t j = 0; j < p; ++j)
                    REQUIRE(H(j, k) == raw[i + m * j + m * p * k]);
        }
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < p; ++j) {
                Vector f = bmd::tube_fiber(X, i, j);
                for (std::size_t k = 0; k < n; ++k)
                    REQUIRE(f(k) == raw[i + m * j + m * p * k]);
            }
    }
}

TEST_CASE("coefficient block matches its definition", "[tensor]") {
    std::mt19937_64 gen(13);
    Tensor3 A = oracle::random_tensor3(4, 3, 5, gen);
    Tensor3 C = oracle::random_tensor3(3, 6, 5, gen);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 6; ++j) {
            Matrix H = bmd::build_h_block(A, C, i, j);
            REQUIRE(H.rows() == 5);
            REQUIRE(H.cols() == 3);
            for (std::size_t k = 0; k < 5; ++k)
                for (std::size_t t = 0; t < 3; ++t)
                    REQUIRE(H(k, t) == A(i, t, k) * C(t, j, k));
        }
}

TEST_CASE("order-4 channel handling", "[tensor]") {
    std::mt19937_64 gen(17);
    std::vector<Tensor3> chan;
    for (int z = 0; z < 3; ++z) chan.push_back(oracle::random_tensor3(3, 4, 5, gen));
    bmd::Tensor4 X = bmd::stack_channels(chan);
    REQUIRE(X.q() == 3);
    for (std::size_t z = 0; z < 3; ++z)
        REQUIRE(bmd::max_abs_diff(bmd::channel_slice(X, z), chan[z]) == 0.0);

    // Order-4 transposes rotate the first three modes per channel.
    bmd::Tensor4 Y = bmd::transpose_t(X);
    for (std::size_t z = 0; z < 3; ++z)
        REQUIRE(bmd::max_abs_diff(bmd::channel_slice(Y, z),
                                  bmd::transpose_t(chan[z])) == 0.0);
    bmd::Tensor4 Z = bmd::transpose_t2(X);
    for (std::size_t z = 0; z < 3; ++z)
        REQUIRE(bmd::max_abs_diff(bmd::channel_slice(Z, z),
                                  bmd::transpose_t2(chan[z])) == 0.0);
}

TEST_CASE("shape and domain errors", "[tensor]") {
    Tensor3 X(2, 3, 4);
    REQUIRE_THROWS_AS(Tensor3(0, 1, 1), bmd::dim_error);
    REQUIRE_THROWS_AS(bmd::frontal_slice(X, 4), bmd::dim_error);
    REQUIRE_THROWS_AS(bmd::lateral_slice(X, 3), bmd::dim_error);
    REQUIRE_THROWS_AS(bmd::horizontal_slice(X, 2), bmd::dim_error);
    REQUIRE_THROWS_AS(bmd::tube_fiber(X, 2, 0), bmd::dim_error);
    REQUIRE_THROWS_AS(bmd::tfold(Vector::Zero(5), 2, 3, 4), bmd::dim_error);
    REQUIRE_THROWS_AS(bmd::relative_error(Tensor3(2, 2, 2), Tensor3(2, 2, 3)),
                      bmd::dim_error);
    REQUIRE_THROWS_AS(bmd::relative_error(Tensor3(2, 2, 2), Tensor3(2, 2, 2)),
                      std::domain_error);
}
