#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "layerkit/tensor.hpp"

using namespace layerkit;

TEST_CASE("tensor_filled fills every element") {
    const Tensor t = tensor_filled({2, 3}, 0.0);
    CHECK(t.size() == 6);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == 0.0);

    const Tensor one = tensor_filled({1}, 1.0);
    CHECK(one.size() == 1);
    CHECK(one[0] == 1.0);

    const Tensor big = tensor_filled({4, 7, 7, 96}, 0.5);
    CHECK(big.size() == 18816);
    CHECK(big[18815] == 0.5);
}

TEST_CASE("zero extent raises shape error") {
    CHECK_THROWS_AS(tensor_filled({2, 0}, 1.0), ShapeError);
}

TEST_CASE("tensor_random is deterministic per seed") {
    Rng a(42), b(42);
    const Tensor ta = tensor_random({50}, a, 1.0);
    const Tensor tb = tensor_random({50}, b, 1.0);
    for (std::size_t i = 0; i < ta.size(); ++i) CHECK(ta[i] == tb[i]);  // bitwise
}

TEST_CASE("tensor_random regression: seed 1 empirical mean") {
    Rng rng(1);
    const Tensor t = tensor_random({100}, rng, 1.0);
    double mean = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) mean += t[i];
    mean /= 100.0;
    CHECK(std::abs(mean) < 0.2);
    // frozen from the first run; guards the generator mapping
    CHECK(mean == doctest::Approx(-0.044883131686989458).epsilon(1e-12));
}

TEST_CASE("tensor_random respects the scale bound") {
    Rng rng(7);
    const Tensor t = tensor_random({2, 2}, rng, 0.1);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(std::abs(t[i]) <= 0.1);
}

TEST_CASE("matmul basics") {
    const Tensor eye({2, 2}, {1, 0, 0, 1});
    const Tensor a({2, 2}, {1, 2, 3, 4});
    const Tensor b({2, 1}, {5, 6});
    CHECK(max_abs_diff(matmul(eye, a), a) == 0.0);

    const Tensor ab = matmul(a, b);
    CHECK(ab.at2(0, 0) == 17.0);
    CHECK(ab.at2(1, 0) == 39.0);

    CHECK_THROWS_AS(matmul(a, Tensor({3, 1}, {1, 2, 3})), ShapeError);
}

TEST_CASE("matmul transpose identity on random operands") {
    Rng rng(11);
    const Tensor a = tensor_random({4, 5}, rng, 1.0);
    const Tensor b = tensor_random({5, 3}, rng, 1.0);
    const Tensor lhs = transpose(matmul(a, b));
    const Tensor rhs = matmul(transpose(b), transpose(a));
    CHECK(max_abs_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("matmul associativity on random 4x4 chains") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Tensor a = tensor_random({4, 4}, rng, 1.0);
        const Tensor b = tensor_random({4, 4}, rng, 1.0);
        const Tensor c = tensor_random({4, 4}, rng, 1.0);
        CHECK(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) < 1e-10);
    }
}

TEST_CASE("reshape round-trips exactly") {
    Rng rng(3);
    const Tensor t = tensor_random({2, 3, 4}, rng, 1.0);
    const Tensor back = t.reshape({24}).reshape({2, 3, 4});
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == back[i]);
    CHECK_THROWS_AS(t.reshape({5, 5}), ShapeError);
}

TEST_CASE("operations keep values finite") {
    Rng rng(9);
    const Tensor a = tensor_random({8, 8}, rng, 10.0);
    CHECK(a.all_finite());
    CHECK(matmul(a, a).all_finite());
}
