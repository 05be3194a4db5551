#pragma once

#include <array>
#include <vector>

#include "latlab/interpolation.hpp"
#include "latlab/models.hpp"
#include "latlab/trajectory.hpp"

namespace latlab {

/// Start samples with their per-attribute counterfactuals, all generated at
/// one fixed swap timestep.
struct CounterfactualSet {
    struct Item {
        Tensor neutral;
        int content_class = 0;                         // intended quadrant
        std::array<bool, kAttributeCount> neutral_attrs{};
        std::array<bool, kAttributeCount> has_counterfactual{};
        std::array<Tensor, kAttributeCount> counterfactual;
    };
    std::vector<Item> items;
    std::vector<Attribute> attributes;   // the attribute universe
    int tau = 25;
};

struct CfrtSample {
    double delta_target = 0.0;   // |f_A(x) - f_A(x'_A)|
    double max_other = 0.0;      // max_{j != A} |f_A(x) - f_A(x'_j)| (0 when empty)
    bool margin_ok = false;      // conjunct (a)
    bool content_ok = false;     // conjunct (b)
    bool others_ok = false;      // conjunct (c)
    bool indicator = false;
};

struct CfrtReport {
    Attribute attribute = Attribute::Effusion;
    double score = 0.0;
    double flip_threshold = 0.5;
    int tau = 0;
    std::vector<CfrtSample> breakdown;
};

CfrtReport cfrt(const CounterfactualSet& cf_set, const ClassifierModel& classifier, Attribute target,
                double flip_threshold = 0.5);

/// The same indicator on already-computed classifier outputs; cfrt() above
/// classifies and delegates here.
struct CfrtPredictions {
    struct Item {
        Classification neutral;
        std::array<bool, kAttributeCount> has_counterfactual{};
        std::array<Classification, kAttributeCount> counterfactual;
    };
    std::vector<Item> items;
    std::vector<Attribute> attributes;
    int tau = 0;
};

CfrtReport cfrt_from_predictions(const CfrtPredictions& preds, Attribute target,
                                 double flip_threshold = 0.5);

/// 9x9 cosine matrix over the fixed grid tau = 5..45 step 5; entries whose
/// direction norm falls under 1e-12 are flagged undefined.
struct CosineMatrix {
    std::array<int, 9> grid{};
    std::array<std::array<double, 9>, 9> value{};
    std::array<std::array<bool, 9>, 9> defined{};
};

CosineMatrix cosine_matrix(const Trajectory& traj);

/// Mean over the classifier's two feature layers of the L2 distance between
/// unit-normalized activations (the LPIPS stand-in; reported everywhere as
/// feature_perceptual_distance).
double perceptual_distance(const Tensor& a, const Tensor& b, const ClassifierModel& classifier);

struct PcaResult {
    Tensor coords;                           // [N, k]
    std::vector<double> explained_variance;  // descending
    Tensor directions;                       // [k, d], unit rows (zero rows past the rank)
};

PcaResult pca_project(const std::vector<Tensor>& latents, int k = 2);

struct PerceptualReport {
    Attribute style = Attribute::Effusion;
    std::vector<double> position;     // tau values (trajectory) or u values (curve)
    std::vector<double> distance;     // feature_perceptual_distance to z_orig
    std::vector<double> style_prob;
    double spearman_rho = 0.0;
    bool rho_defined = false;
};

PerceptualReport evaluate_trajectory(const Trajectory& traj, const ClassifierModel& classifier,
                                     Attribute style);
PerceptualReport evaluate_curve_samples(const Trajectory& traj, const CurveSamples& samples,
                                        const ClassifierModel& classifier, Attribute style);

/// Spearman rank correlation with average ranks on ties; `defined` is false
/// when either input has zero rank variance.
double spearman_rank_correlation(const std::vector<double>& a, const std::vector<double>& b,
                                 bool& defined);

} // namespace latlab
