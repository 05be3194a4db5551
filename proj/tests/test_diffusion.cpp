#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "latlab/diffusion.hpp"
#include "latlab/rng.hpp"

using namespace latlab;

namespace {

// Analytic-noise oracle: for a known x0, returns the epsilon consistent with
// the closed-form noising identity at every step.
DenoiserFn oracle_denoiser(const Tensor& x0, const NoiseSchedule& schedule) {
    return [&x0, &schedule](const Tensor& x_t, int t, const Embedding&) {
        const double a_t = schedule.alpha_bar[static_cast<size_t>(t)];
        return scale(sub(x_t, scale(x0, std::sqrt(a_t))), 1.0 / std::sqrt(1.0 - a_t));
    };
}

Embedding zero_embedding() { return Embedding{Tensor::zeros({16})}; }

} // namespace

TEST_SUITE("diffusion_core") {

TEST_CASE("schedule: hand product, endpoints, monotonicity") {
    const NoiseSchedule s = make_schedule(2, 0.1, 0.2);
    REQUIRE(s.alpha_bar.size() == 3);
    CHECK(s.alpha_bar[0] == 1.0);
    CHECK(s.alpha_bar[1] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(s.alpha_bar[2] == doctest::Approx(0.72).epsilon(1e-15));

    const NoiseSchedule def = make_schedule(50);
    CHECK(def.beta.front() == 0.001);
    CHECK(def.beta.back() == 0.2);
    for (int t = 1; t <= def.T; ++t) {
        CHECK(def.alpha_bar[static_cast<size_t>(t)] < def.alpha_bar[static_cast<size_t>(t - 1)]);
    }
    CHECK(def.alpha_bar.back() < 0.01);   // terminal signal is effectively gone

    CHECK_THROWS_AS(make_schedule(1), std::invalid_argument);
    CHECK_THROWS_AS(make_schedule(10, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(make_schedule(10, 0.2, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(make_schedule(10, 0.1, 1.0), std::invalid_argument);
}

TEST_CASE("gamma coefficients") {
    SUBCASE("degenerate equal-alpha step is the identity") {
        NoiseSchedule s;
        s.T = 2;
        s.alpha_bar = {0.6, 0.6, 0.6};
        s.beta = {0.0, 0.0};
        const auto [g0, g1] = gamma_coeffs(s, 2);
        CHECK(g0 == 1.0);
        CHECK(g1 == 0.0);
        RngStream rng = make_rng(1, 0);
        const Tensor x = sample_standard_normal(rng, {4});
        const Tensor eps = sample_standard_normal(rng, {4});
        CHECK(max_abs_diff(ddim_step(x, 2, eps, s), x) == 0.0);
    }
    SUBCASE("hand case alpha_prev=1, alpha_t=0.25") {
        NoiseSchedule s;
        s.T = 1;
        s.alpha_bar = {1.0, 0.25};
        s.beta = {0.75};
        const auto [g0, g1] = gamma_coeffs(s, 1);
        CHECK(g0 == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(g1 == doctest::Approx(-std::sqrt(3.0)).epsilon(1e-15));
        // x_t = 0.5 x0 + sqrt(0.75) eps must step back to x0 exactly.
        RngStream rng = make_rng(2, 0);
        const Tensor x0 = sample_standard_normal(rng, {8});
        const Tensor eps = sample_standard_normal(rng, {8});
        const Tensor x_t = axpby(0.5, x0, std::sqrt(0.75), eps);
        CHECK(max_abs_diff(ddim_step(x_t, 1, eps, s), x0) < 1e-12);
    }
    SUBCASE("gamma0 positive and radicand valid across a real schedule") {
        const NoiseSchedule s = make_schedule(50);
        for (int t = 1; t <= 50; ++t) {
            const auto [g0, g1] = gamma_coeffs(s, t);
            CHECK(g0 > 0.0);
            CHECK(std::isfinite(g1));
        }
        CHECK_THROWS_AS(gamma_coeffs(s, 0), std::invalid_argument);
        CHECK_THROWS_AS(gamma_coeffs(s, 51), std::invalid_argument);
    }
}

TEST_CASE("forward noising closed form") {
    const NoiseSchedule s = make_schedule(2, 0.1, 0.2);
    const Tensor x0 = Tensor::full({3, 3}, 1.0);
    const Tensor zero = Tensor::zeros({3, 3});
    const Tensor ones = Tensor::full({3, 3}, 1.0);

    const double a2 = s.alpha_bar[2];
    CHECK(max_abs_diff(forward_noise(x0, 2, zero, s), scale(x0, std::sqrt(a2))) == 0.0);
    CHECK(max_abs_diff(forward_noise(zero, 2, ones, s), Tensor::full({3, 3}, std::sqrt(1.0 - a2))) == 0.0);
    const Tensor both = forward_noise(x0, 2, ones, s);
    // alpha_bar[2] = 0.72, so every pixel is sqrt(0.72) + sqrt(0.28) = 1.3776783996...
    const double expected = std::sqrt(0.72) + std::sqrt(0.28);
    CHECK(expected == doctest::Approx(1.3776783996367752).epsilon(1e-15));
    for (int64_t i = 0; i < both.size(); ++i) CHECK(both[i] == doctest::Approx(expected).epsilon(1e-14));
    CHECK_THROWS_AS(forward_noise(x0, 2, Tensor::zeros({2, 2}), s), std::invalid_argument);
}

TEST_CASE("ddim step identities") {
    const NoiseSchedule s = make_schedule(10);
    RngStream rng = make_rng(3, 0);
    const Tensor x0 = sample_standard_normal(rng, {5, 5});
    for (int t = 1; t <= 10; ++t) {
        const Tensor eps = sample_standard_normal(rng, {5, 5});
        const Tensor x_t = forward_noise(x0, t, eps, s);
        // Step with the oracle epsilon lands on the closed form at t-1.
        const double a_prev = s.alpha_bar[static_cast<size_t>(t - 1)];
        const Tensor expected = axpby(std::sqrt(a_prev), x0, std::sqrt(1.0 - a_prev), eps);
        CHECK(max_abs_diff(ddim_step(x_t, t, eps, s), expected) < 1e-10);
    }
    const Tensor x = sample_standard_normal(rng, {5, 5});
    const auto [g0, g1] = gamma_coeffs(s, 4);
    CHECK(max_abs_diff(ddim_step(x, 4, Tensor::zeros({5, 5}), s), scale(x, g0)) == 0.0);
}

TEST_CASE("generate: oracle reconstruction over T=50") {
    const NoiseSchedule s = make_schedule(50);
    RngStream rng = make_rng(4, 0);
    const Tensor x0 = sample_standard_normal(rng, {32, 32});
    const Tensor x_T = forward_noise(x0, 50, sample_standard_normal(rng, {32, 32}), s);
    const std::vector<Embedding> sched(50, zero_embedding());
    const auto [rec, trace] = generate(x_T, sched, oracle_denoiser(x0, s), s);
    CHECK(max_abs_diff(rec, x0) < 1e-10);

    REQUIRE(trace.latents.size() == 51);
    REQUIRE(trace.steps.size() == 51);
    for (size_t i = 0; i < trace.steps.size(); ++i) {
        CHECK(trace.steps[i] == 50 - static_cast<int>(i));
    }
    CHECK(trace.embeddings.size() == 50);
}

TEST_CASE("generate: determinism and schedule-length validation") {
    const NoiseSchedule s = make_schedule(8);
    RngStream rng = make_rng(5, 0);
    const Tensor x0 = sample_standard_normal(rng, {4, 4});
    const Tensor x_T = sample_standard_normal(rng, {4, 4});
    const std::vector<Embedding> sched(8, zero_embedding());
    const auto [a, ta] = generate(x_T, sched, oracle_denoiser(x0, s), s);
    const auto [b, tb] = generate(x_T, sched, oracle_denoiser(x0, s), s);
    CHECK(max_abs_diff(a, b) == 0.0);
    CHECK_THROWS_AS(generate(x_T, std::vector<Embedding>(7, zero_embedding()), oracle_denoiser(x0, s), s),
                    std::invalid_argument);
}

} // TEST_SUITE
