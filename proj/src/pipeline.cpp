#include "latlab/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "latlab/errors.hpp"

namespace latlab {

using nlohmann::json;

TraversalBundle build_traversal_bundle(const RunConfig& cfg, const DenoiserModel& denoiser,
                                       const NoiseSchedule& schedule, const EmbeddingTable& table) {
    TraversalBundle bundle;
    bundle.attributes = cfg.traversal.attributes;
    bundle.cfrt_tau = cfg.traversal.cfrt_tau;
    for (Attribute a : bundle.attributes) {
        std::vector<Trajectory> list;
        list.reserve(static_cast<size_t>(cfg.traversal.n_trajectories));
        for (int i = 0; i < cfg.traversal.n_trajectories; ++i) {
            SwapPlan plan;
            plan.style_spec.add(a);
            plan.swap_set = cfg.traversal.swap_set;
            plan.noise_seed = cfg.seeds.noise_base + static_cast<uint64_t>(i);
            list.push_back(build_trajectory(plan, denoiser, schedule, table));
        }
        bundle.trajectories.emplace(a, std::move(list));
    }
    return bundle;
}

static const Tensor* point_at_tau(const Trajectory& traj, int tau) {
    for (const auto& p : traj.points) {
        if (p.tau == tau) return &p.z0;
    }
    return nullptr;
}

CounterfactualSet counterfactuals_from_bundle(const TraversalBundle& bundle, int tau) {
    CounterfactualSet set;
    set.attributes = bundle.attributes;
    set.tau = tau;
    if (bundle.attributes.empty()) throw std::invalid_argument("counterfactuals: no attributes");
    const auto& first_list = bundle.trajectories.at(bundle.attributes.front());
    for (size_t i = 0; i < first_list.size(); ++i) {
        CounterfactualSet::Item item;
        item.neutral = first_list[i].z_orig;
        for (Attribute a : bundle.attributes) {
            const Trajectory& traj = bundle.trajectories.at(a).at(i);
            if (tensor_digest(traj.z_orig) != tensor_digest(item.neutral)) {
                throw ValidationError("counterfactuals: trajectory " + std::to_string(i) + " for '" +
                                      attribute_name(a) + "' has a different neutral start point");
            }
            const Tensor* z = point_at_tau(traj, tau);
            if (!z) {
                throw std::invalid_argument("counterfactuals: sample " + std::to_string(i) +
                                            " is missing the counterfactual for '" + attribute_name(a) +
                                            "' at tau=" + std::to_string(tau));
            }
            item.has_counterfactual[static_cast<size_t>(a)] = true;
            item.counterfactual[static_cast<size_t>(a)] = *z;
        }
        set.items.push_back(std::move(item));
    }
    return set;
}

size_t matching_curve_sample(const std::vector<int>& swap_set, int tau, size_t m) {
    const auto it = std::find(swap_set.begin(), swap_set.end(), tau);
    if (it == swap_set.end()) {
        throw std::invalid_argument("matching_curve_sample: tau=" + std::to_string(tau) +
                                    " not in swap_set");
    }
    // Position along [neutral, swap_set...]: index/(N-1), mapped to the
    // nearest u on the m-point grid.
    const size_t idx = static_cast<size_t>(it - swap_set.begin()) + 1;
    const double pos = static_cast<double>(idx) / static_cast<double>(swap_set.size());
    return static_cast<size_t>(std::llround(pos * static_cast<double>(m - 1)));
}

CounterfactualSet counterfactuals_from_curves(const TraversalBundle& bundle,
                                              const std::map<Attribute, std::vector<CurveSamples>>& curves,
                                              int tau) {
    CounterfactualSet set;
    set.attributes = bundle.attributes;
    set.tau = tau;
    const auto& first_list = bundle.trajectories.at(bundle.attributes.front());
    for (size_t i = 0; i < first_list.size(); ++i) {
        CounterfactualSet::Item item;
        item.neutral = first_list[i].z_orig;
        for (Attribute a : bundle.attributes) {
            const auto& attr_curves = curves.at(a);
            if (i >= attr_curves.size()) {
                throw std::invalid_argument("counterfactuals: sample " + std::to_string(i) +
                                            " is missing the interpolated curve for '" + attribute_name(a) +
                                            "'");
            }
            const CurveSamples& cs = attr_curves[i];
            const size_t k = matching_curve_sample(bundle.trajectories.at(a).at(i).plan.swap_set, tau,
                                                   cs.latents.size());
            item.has_counterfactual[static_cast<size_t>(a)] = true;
            item.counterfactual[static_cast<size_t>(a)] = cs.latents.at(k);
        }
        set.items.push_back(std::move(item));
    }
    return set;
}

static CosineMatrix mean_cosine(const std::vector<CosineMatrix>& mats) {
    CosineMatrix out;
    if (mats.empty()) return out;
    out.grid = mats.front().grid;
    for (size_t i = 0; i < 9; ++i) {
        for (size_t j = 0; j < 9; ++j) {
            double sum = 0.0;
            bool all_defined = true;
            for (const auto& m : mats) {
                all_defined &= m.defined[i][j];
                sum += m.value[i][j];
            }
            out.defined[i][j] = all_defined;
            if (all_defined) out.value[i][j] = sum / static_cast<double>(mats.size());
        }
    }
    return out;
}

EvaluationSummary evaluate_bundle(const TraversalBundle& bundle, const ClassifierModel& classifier,
                                  const std::map<Attribute, std::vector<CurveSamples>>* curves) {
    EvaluationSummary summary;
    summary.tau = bundle.cfrt_tau;

    const CounterfactualSet cf = counterfactuals_from_bundle(bundle, bundle.cfrt_tau);
    std::optional<CounterfactualSet> cf_interp;
    if (curves) cf_interp = counterfactuals_from_curves(bundle, *curves, bundle.cfrt_tau);

    for (Attribute a : bundle.attributes) {
        AttributeEvaluation eval;
        eval.cfrt_score = cfrt(cf, classifier, a).score;
        if (cf_interp) eval.cfrt_interp_score = cfrt(*cf_interp, classifier, a).score;

        const auto& trajs = bundle.trajectories.at(a);
        std::vector<CosineMatrix> mats;
        double rho_sum = 0.0;
        int near_less_far = 0;
        for (const auto& traj : trajs) {
            PerceptualReport rep = evaluate_trajectory(traj, classifier, a);
            if (rep.rho_defined) {
                rho_sum += rep.spearman_rho;
                ++eval.spearman_defined;
            }
            if (rep.distance.front() < rep.distance.back()) ++near_less_far;
            if (eval.taus.empty()) eval.taus = rep.position;
            if (eval.mean_distance.empty()) eval.mean_distance.assign(rep.distance.size(), 0.0);
            for (size_t i = 0; i < rep.distance.size(); ++i) eval.mean_distance[i] += rep.distance[i];
            mats.push_back(cosine_matrix(traj));
            eval.per_trajectory.push_back(std::move(rep));
        }
        for (double& d : eval.mean_distance) d /= static_cast<double>(trajs.size());
        eval.mean_spearman = eval.spearman_defined ? rho_sum / eval.spearman_defined : 0.0;
        eval.frac_near_less_far = static_cast<double>(near_less_far) / static_cast<double>(trajs.size());
        eval.mean_cosine = mean_cosine(mats);
        summary.per_attribute.emplace(a, std::move(eval));
    }
    return summary;
}

std::string summary_json(const EvaluationSummary& summary) {
    json j;
    j["cfrt_tau"] = summary.tau;
    json per;
    for (const auto& [a, eval] : summary.per_attribute) {
        json e;
        e["cfrt"] = eval.cfrt_score;
        if (eval.cfrt_interp_score) e["cfrt_interpolated"] = *eval.cfrt_interp_score;
        e["mean_spearman_rho"] = eval.mean_spearman;
        e["spearman_defined_count"] = eval.spearman_defined;
        e["frac_near_less_far"] = eval.frac_near_less_far;
        e["taus"] = eval.taus;
        e["mean_feature_perceptual_distance"] = eval.mean_distance;
        per[attribute_name(a)] = std::move(e);
    }
    j["attributes"] = std::move(per);
    return j.dump(2) + "\n";
}

} // namespace latlab
