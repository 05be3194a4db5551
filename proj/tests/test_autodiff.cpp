#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "latlab/autodiff.hpp"
#include "latlab/rng.hpp"

using namespace latlab;

namespace {

void randomize(ParamStore& ps, uint64_t seed) {
    RngStream rng = make_rng(seed, 0);
    for (const auto& name : ps.names()) {
        Tensor& t = ps.value(name);
        for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.next_normal() * 0.5;
    }
}

} // namespace

TEST_SUITE("numeric_core.autodiff") {

TEST_CASE("quadratic loss: near-exact finite differences") {
    ParamStore ps;
    ps.create("w", {4});
    ps.create("v", {2, 3});
    randomize(ps, 1);
    const auto loss = [](ad::Tape& t) {
        ad::Var w = t.param("w");
        ad::Var v = t.param("v");
        ad::Var sq_w = t.mean_sq_error(w, Tensor::zeros({4}));
        ad::Var sq_v = t.mean_sq_error(v, Tensor::zeros({2, 3}));
        return t.add(sq_w, sq_v);
    };
    CHECK(ad::check_gradients(loss, ps, 1e-5) < 1e-9);
}

TEST_CASE("constant loss: zero gradients, zero error") {
    ParamStore ps;
    ps.create("w", {3});
    randomize(ps, 2);
    const auto loss = [](ad::Tape& t) { return t.constant(Tensor({1}, {4.2})); };
    CHECK(ad::check_gradients(loss, ps, 1e-5) == 0.0);
    ps.zero_grads();
    ad::Tape t(&ps);
    ad::Var l = loss(t);
    t.backward(l);
    for (int64_t i = 0; i < 3; ++i) CHECK(ps.grad("w")[i] == 0.0);
}

TEST_CASE("every training op passes the gradient check") {
    ParamStore ps;
    ps.create("a", {3, 4});
    ps.create("b", {4, 2});
    ps.create("row", {2});
    ps.create("c", {3, 2});
    ps.create("d", {3, 2});
    randomize(ps, 3);
    const Tensor target = Tensor::full({3, 2}, 0.3);

    SUBCASE("matmul + add_rowvec + silu") {
        const auto loss = [&](ad::Tape& t) {
            ad::Var h = t.silu(t.add_rowvec(t.matmul(t.param("a"), t.param("b")), t.param("row")));
            return t.mean_sq_error(h, target);
        };
        CHECK(ad::check_gradients(loss, ps, 1e-5) < 1e-4);
    }
    SUBCASE("mul + add + film") {
        const auto loss = [&](ad::Tape& t) {
            ad::Var c = t.param("c");
            ad::Var d = t.param("d");
            ad::Var m = t.mul(c, d);
            ad::Var f = t.film(m, c, d);
            return t.mean_sq_error(t.add(f, m), target);
        };
        CHECK(ad::check_gradients(loss, ps, 1e-5) < 1e-4);
    }
    SUBCASE("concat_cols") {
        const auto loss = [&](ad::Tape& t) {
            ad::Var cat = t.concat_cols(t.param("c"), t.param("d"));
            return t.mean_sq_error(cat, Tensor::full({3, 4}, 0.1));
        };
        CHECK(ad::check_gradients(loss, ps, 1e-5) < 1e-4);
    }
    SUBCASE("softmax cross entropy") {
        const auto loss = [&](ad::Tape& t) {
            ad::Var logits = t.matmul(t.param("a"), t.param("b"));
            return t.softmax_cross_entropy(logits, {0, 1, 1});
        };
        CHECK(ad::check_gradients(loss, ps, 1e-5) < 1e-4);
    }
    SUBCASE("sigmoid bce") {
        Tensor targets({3, 2}, {1, 0, 0, 1, 1, 1});
        const auto loss = [&](ad::Tape& t) {
            ad::Var logits = t.matmul(t.param("a"), t.param("b"));
            return t.sigmoid_bce(logits, targets);
        };
        CHECK(ad::check_gradients(loss, ps, 1e-5) < 1e-4);
    }
}

TEST_CASE("two-layer network matches finite differences") {
    ParamStore ps;
    ps.create("w1", {5, 8});
    ps.create("b1", {8});
    ps.create("w2", {8, 3});
    ps.create("b2", {3});
    randomize(ps, 4);
    RngStream rng = make_rng(5, 0);
    const Tensor x = sample_standard_normal(rng, {6, 5});
    const Tensor y = sample_standard_normal(rng, {6, 3});
    const auto loss = [&](ad::Tape& t) {
        ad::Var h = t.silu(t.add_rowvec(t.matmul(t.constant(x), t.param("w1")), t.param("b1")));
        ad::Var out = t.add_rowvec(t.matmul(h, t.param("w2")), t.param("b2"));
        return t.mean_sq_error(out, y);
    };
    CHECK(ad::check_gradients(loss, ps, 1e-5) < 1e-4);
}

TEST_CASE("non-finite loss is rejected") {
    ParamStore ps;
    ps.create("w", {2});
    randomize(ps, 6);
    const auto loss = [](ad::Tape& t) {
        return t.constant(Tensor({1}, {std::numeric_limits<double>::infinity()}));
    };
    CHECK_THROWS_AS(ad::check_gradients(loss, ps, 1e-5), std::runtime_error);
}

TEST_CASE("epsilon outside the contract is rejected") {
    ParamStore ps;
    ps.create("w", {1});
    const auto loss = [](ad::Tape& t) { return t.mean_sq_error(t.param("w"), Tensor::zeros({1})); };
    CHECK_THROWS_AS(ad::check_gradients(loss, ps, 1e-2), std::invalid_argument);
    CHECK_THROWS_AS(ad::check_gradients(loss, ps, 1e-8), std::invalid_argument);
}

} // TEST_SUITE
