#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "latlab/prompting.hpp"
#include "latlab/tensor.hpp"

namespace latlab {

/// Cumulative-signal noise schedule: alpha_bar[0] = 1, alpha_bar[t] the
/// product of (1 - beta_s) for s <= t, strictly decreasing.
struct NoiseSchedule {
    int T = 0;
    double beta_start = 0.0, beta_end = 0.0;
    std::vector<double> beta;        // beta[t-1] belongs to step t
    std::vector<double> alpha_bar;   // indices 0..T
};

inline constexpr double kDefaultBetaStart = 0.001;
inline constexpr double kDefaultBetaEnd = 0.2;

NoiseSchedule make_schedule(int T, double beta_start = kDefaultBetaStart,
                            double beta_end = kDefaultBetaEnd);

/// The two deterministic step coefficients:
///   gamma0 = sqrt(alpha_bar[t-1] / alpha_bar[t])
///   gamma1 = sqrt(1 - alpha_bar[t-1]) - sqrt(alpha_bar[t-1]/alpha_bar[t] - alpha_bar[t-1])
std::pair<double, double> gamma_coeffs(const NoiseSchedule& schedule, int t);

/// Closed-form noising: sqrt(alpha_bar[t]) * x0 + sqrt(1 - alpha_bar[t]) * eps.
Tensor forward_noise(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& schedule);

/// x_{t-1} = gamma0 * x_t + gamma1 * eps_hat (variance-free step).
Tensor ddim_step(const Tensor& x_t, int t, const Tensor& eps_hat, const NoiseSchedule& schedule);

using DenoiserFn = std::function<Tensor(const Tensor& x_t, int t, const Embedding& e)>;

/// Full reverse pass bookkeeping: latents X_T..X_0 with their step indices,
/// plus the embedding consumed at each step.
struct GenerationTrace {
    std::vector<int> steps;          // T, T-1, ..., 0
    std::vector<Tensor> latents;     // same length as steps
    std::vector<Embedding> embeddings;   // length T, entry i used at step T-i
};

/// Runs the reverse pass from x_T with a per-step embedding assignment
/// (entry t-1 of the schedule is used at step t).
std::pair<Tensor, GenerationTrace> generate(const Tensor& x_T,
                                            const std::vector<Embedding>& embedding_schedule,
                                            const DenoiserFn& denoiser,
                                            const NoiseSchedule& schedule);

} // namespace latlab
