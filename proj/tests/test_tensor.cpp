#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "latlab/rng.hpp"
#include "latlab/tensor.hpp"

using namespace latlab;

TEST_SUITE("numeric_core.tensor") {

TEST_CASE("shape and data invariants") {
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.rank() == 2);
    CHECK_THROWS_AS(Tensor({2, 0}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor(std::vector<int64_t>{}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("elementwise ops and shape mismatch errors") {
    Tensor a({2}, {1.0, 2.0});
    Tensor b({2}, {3.0, 5.0});
    CHECK(add(a, b)[1] == 7.0);
    CHECK(sub(b, a)[0] == 2.0);
    CHECK(mul(a, b)[1] == 10.0);
    CHECK(axpby(2.0, a, -1.0, b)[0] == -1.0);
    CHECK_THROWS_AS(add(a, Tensor({3})), std::invalid_argument);
    CHECK(clamp(Tensor({2}, {-3.0, 0.5}), -1.0, 1.0)[0] == -1.0);
}

TEST_CASE("matmul against a hand example") {
    // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
    Tensor a({2, 2}, {1, 2, 3, 4});
    Tensor b({2, 2}, {5, 6, 7, 8});
    const Tensor c = matmul(a, b);
    CHECK(c.at2(0, 0) == 19.0);
    CHECK(c.at2(0, 1) == 22.0);
    CHECK(c.at2(1, 0) == 43.0);
    CHECK(c.at2(1, 1) == 50.0);
    CHECK_THROWS_AS(matmul(a, Tensor({3, 2})), std::invalid_argument);
}

TEST_CASE("transpose flags agree with explicit transposition") {
    RngStream rng = make_rng(11, 0);
    const Tensor a = sample_standard_normal(rng, {5, 7});
    const Tensor b = sample_standard_normal(rng, {7, 4});
    const Tensor at = transpose2d(a);
    const Tensor bt = transpose2d(b);
    CHECK(max_abs_diff(matmul(a, b), matmul(at, b, true, false)) < 1e-12);
    CHECK(max_abs_diff(matmul(a, b), matmul(a, bt, false, true)) < 1e-12);
    CHECK(max_abs_diff(matmul(a, b), matmul(at, bt, true, true)) < 1e-12);
}

TEST_CASE("finite checks") {
    Tensor t({1}, {std::nan("")});
    CHECK_FALSE(t.all_finite());
    CHECK_THROWS_AS(require_finite(t, "probe"), std::runtime_error);
}

} // TEST_SUITE
