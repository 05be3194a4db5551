#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "latlab/config.hpp"
#include "latlab/interpolation.hpp"
#include "latlab/metrics.hpp"

namespace latlab {

/// Trajectories grouped by style attribute; index i of every attribute shares
/// noise seed (noise_base + i), so the per-index neutrals coincide and the
/// groups double as counterfactual fans.
struct TraversalBundle {
    std::vector<Attribute> attributes;
    std::map<Attribute, std::vector<Trajectory>> trajectories;
    int cfrt_tau = 25;
};

TraversalBundle build_traversal_bundle(const RunConfig& cfg, const DenoiserModel& denoiser,
                                       const NoiseSchedule& schedule, const EmbeddingTable& table);

/// Assembles Eq.-style counterfactual fans from the bundle: per index, the
/// shared neutral plus each attribute's z0 at the fixed swap timestep.
CounterfactualSet counterfactuals_from_bundle(const TraversalBundle& bundle, int tau);

/// Same construction from Bezier samples: each attribute's counterfactual is
/// the curve sample whose u matches the swap timestep's position along the
/// control ladder.
CounterfactualSet counterfactuals_from_curves(const TraversalBundle& bundle,
                                              const std::map<Attribute, std::vector<CurveSamples>>& curves,
                                              int tau);

/// Index of the curve-sample u closest to tau's fractional position along
/// [neutral, swap_set...].
size_t matching_curve_sample(const std::vector<int>& swap_set, int tau, size_t m);

struct AttributeEvaluation {
    double cfrt_score = 0.0;
    std::optional<double> cfrt_interp_score;
    double mean_spearman = 0.0;
    int spearman_defined = 0;
    double frac_near_less_far = 0.0;   // dist at first tau < dist at last tau
    std::vector<double> taus;
    std::vector<double> mean_distance;
    CosineMatrix mean_cosine;
    std::vector<PerceptualReport> per_trajectory;
};

struct EvaluationSummary {
    std::map<Attribute, AttributeEvaluation> per_attribute;
    int tau = 25;
};

EvaluationSummary evaluate_bundle(const TraversalBundle& bundle, const ClassifierModel& classifier,
                                  const std::map<Attribute, std::vector<CurveSamples>>* curves = nullptr);

std::string summary_json(const EvaluationSummary& summary);

} // namespace latlab
