#include "latlab/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace latlab {

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
    if (T < 2) throw std::invalid_argument("make_schedule: T must be >= 2");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        throw std::invalid_argument("make_schedule: need 0 < beta_start <= beta_end < 1");
    }
    NoiseSchedule s;
    s.T = T;
    s.beta_start = beta_start;
    s.beta_end = beta_end;
    s.beta.resize(static_cast<size_t>(T));
    s.alpha_bar.resize(static_cast<size_t>(T) + 1);
    s.alpha_bar[0] = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double frac = (T == 1) ? 0.0 : static_cast<double>(t - 1) / (T - 1);
        s.beta[static_cast<size_t>(t - 1)] = beta_start + (beta_end - beta_start) * frac;
        s.alpha_bar[static_cast<size_t>(t)] =
            s.alpha_bar[static_cast<size_t>(t - 1)] * (1.0 - s.beta[static_cast<size_t>(t - 1)]);
    }
    return s;
}

static void check_step(const NoiseSchedule& s, int t) {
    if (t < 1 || t > s.T) {
        throw std::invalid_argument("step t=" + std::to_string(t) + " outside [1, " + std::to_string(s.T) + "]");
    }
}

std::pair<double, double> gamma_coeffs(const NoiseSchedule& schedule, int t) {
    check_step(schedule, t);
    const double a_prev = schedule.alpha_bar[static_cast<size_t>(t - 1)];
    const double a_t = schedule.alpha_bar[static_cast<size_t>(t)];
    const double gamma0 = std::sqrt(a_prev / a_t);
    const double radicand = a_prev / a_t - a_prev;
    if (radicand < 0.0) throw std::runtime_error("gamma_coeffs: negative radicand");
    const double gamma1 = std::sqrt(1.0 - a_prev) - std::sqrt(radicand);
    return {gamma0, gamma1};
}

Tensor forward_noise(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& schedule) {
    check_step(schedule, t);
    if (!x0.same_shape(eps)) throw std::invalid_argument("forward_noise: shape mismatch");
    const double a_t = schedule.alpha_bar[static_cast<size_t>(t)];
    return axpby(std::sqrt(a_t), x0, std::sqrt(1.0 - a_t), eps);
}

Tensor ddim_step(const Tensor& x_t, int t, const Tensor& eps_hat, const NoiseSchedule& schedule) {
    if (!x_t.same_shape(eps_hat)) throw std::invalid_argument("ddim_step: shape mismatch");
    const auto [gamma0, gamma1] = gamma_coeffs(schedule, t);
    return axpby(gamma0, x_t, gamma1, eps_hat);
}

std::pair<Tensor, GenerationTrace> generate(const Tensor& x_T,
                                            const std::vector<Embedding>& embedding_schedule,
                                            const DenoiserFn& denoiser,
                                            const NoiseSchedule& schedule) {
    if (static_cast<int>(embedding_schedule.size()) != schedule.T) {
        throw std::invalid_argument("generate: embedding schedule has " +
                                    std::to_string(embedding_schedule.size()) + " entries, expected " +
                                    std::to_string(schedule.T));
    }
    GenerationTrace trace;
    trace.steps.reserve(static_cast<size_t>(schedule.T) + 1);
    trace.latents.reserve(static_cast<size_t>(schedule.T) + 1);
    trace.embeddings.reserve(static_cast<size_t>(schedule.T));

    Tensor x = x_T;
    trace.steps.push_back(schedule.T);
    trace.latents.push_back(x);
    for (int t = schedule.T; t >= 1; --t) {
        const Embedding& e = embedding_schedule[static_cast<size_t>(t - 1)];
        const Tensor eps_hat = denoiser(x, t, e);
        x = ddim_step(x, t, eps_hat, schedule);
        trace.steps.push_back(t - 1);
        trace.latents.push_back(x);
        trace.embeddings.push_back(e);
    }
    require_finite(x, "generate");
    return {x, std::move(trace)};
}

} // namespace latlab
