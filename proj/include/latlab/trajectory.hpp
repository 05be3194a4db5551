#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "latlab/models.hpp"

namespace latlab {

/// One neutral->style traversal request: which prompt pair, which swap
/// timesteps, and which noise seed fixes the shared start point x_T.
struct SwapPlan {
    AttributeSpec neutral_spec;
    AttributeSpec style_spec;
    std::vector<int> swap_set;   // strictly increasing, each in [0, T]
    uint64_t noise_seed = 0;

    void validate(int T) const;
};

inline std::vector<int> default_swap_set() { return {5, 10, 15, 20, 25, 30, 35, 40, 45}; }

struct TrajectoryPoint {
    int tau = 0;
    Tensor z0;               // fully denoised latent for this swap timestep
    uint64_t trace_digest = 0;   // hash over the point's intermediate latents
};

struct Trajectory {
    Tensor z_orig;               // neutral generation (tau = 0 semantics)
    uint64_t neutral_digest = 0;
    std::vector<TrajectoryPoint> points;   // ascending tau
    SwapPlan plan;
    int schedule_T = 0;
    double beta_start = 0.0, beta_end = 0.0;
    uint64_t model_hash = 0;
    uint64_t x_T_hash = 0;
};

/// Per-step embedding assignment for one swap timestep: the style embedding
/// e' governs steps t <= tau (the final tau steps of the reverse pass), the
/// neutral embedding e the rest.
std::vector<Embedding> embedding_schedule(const Embedding& e, const Embedding& e_prime, int tau, int T);

/// Draws x_T from the plan's noise seed, generates the neutral point and one
/// fully denoised latent per swap timestep, all from the same x_T.
Trajectory build_trajectory(const SwapPlan& plan, const DenoiserModel& denoiser,
                            const NoiseSchedule& schedule, const EmbeddingTable& table);

/// Archive layout: <dir>/manifest.json + <dir>/latents.bin. The blob carries
/// magic "LTRJ1", u32 record count, u32 per-record element count, then f32
/// little-endian records, neutral first and ascending tau after.
void save_archive(const Trajectory& traj, const std::string& dir);
Trajectory load_archive(const std::string& dir);

uint64_t tensor_digest(const Tensor& t, uint64_t h = 0xcbf29ce484222325ULL);

} // namespace latlab
