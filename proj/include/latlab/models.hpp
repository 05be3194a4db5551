#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "latlab/autodiff.hpp"
#include "latlab/diffusion.hpp"
#include "latlab/phantom.hpp"
#include "latlab/prompting.hpp"

namespace latlab {

struct TrainConfig {
    int64_t steps = 3000;
    int batch = 32;
    double lr = 1e-3;
    uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;

    void validate() const;
};

struct TrainReport {
    std::vector<double> loss_curve;               // one entry per step (or the initial loss for steps == 0)
    std::map<std::string, double> metrics;        // held-out metrics per head / final losses
};

/// Conditional noise predictor: flattened image through a scale-shift
/// conditioned MLP. Widths are overridable; the defaults are the baseline.
struct DenoiserConfig {
    int hidden1 = 512;
    int hidden2 = 512;
    int time_dim = 32;
    int emb_proj = 32;
};

struct DenoiserModel {
    DenoiserConfig arch;
    NoiseSchedule schedule;
    ParamStore params;
    uint64_t train_seed = 0;
};

DenoiserModel make_denoiser(const DenoiserConfig& arch, const NoiseSchedule& schedule, uint64_t init_seed);

Tensor predict_noise(const DenoiserModel& model, const Tensor& x_t, int t, const Embedding& e);
/// Batched form: x is [n, 1024], one timestep and embedding per row. Row i of
/// the result is bitwise identical to the single-sample prediction for row i.
Tensor predict_noise_batch(const DenoiserModel& model, const Tensor& x, const std::vector<int>& steps,
                           const std::vector<Embedding>& embs);

std::pair<DenoiserModel, TrainReport> train_denoiser(const Dataset& dataset, const EmbeddingTable& table,
                                                     const NoiseSchedule& schedule, const TrainConfig& cfg,
                                                     const DenoiserConfig& arch = {});

/// Multi-head classifier: 4-way content-quadrant softmax plus one sigmoid
/// head per attribute. The two hidden layers double as the perceptual
/// feature extractor.
struct ClassifierConfig {
    int hidden1 = 128;
    int hidden2 = 64;
};

struct ClassifierModel {
    ClassifierConfig arch;
    ParamStore params;
    uint64_t train_seed = 0;
    std::array<std::string, 2> feature_layers = {"h1", "h2"};
};

struct Classification {
    std::array<double, 4> content_probs;
    std::array<double, kAttributeCount> attr_probs;
};

struct FeatureVector {
    Tensor v;
    bool zero = false;   // true when the raw activation was all-zero (returned unnormalized)
};

ClassifierModel make_classifier(const ClassifierConfig& arch, uint64_t init_seed);

Classification classify(const ClassifierModel& model, const Tensor& image);
std::vector<FeatureVector> features(const ClassifierModel& model, const Tensor& image);

std::pair<ClassifierModel, TrainReport> train_classifier(const Dataset& dataset, const TrainConfig& cfg,
                                                         const ClassifierConfig& arch = {},
                                                         const Dataset* heldout = nullptr);

/// Head metrics on a labelled dataset: accuracy_<head> and f1_<head> for each
/// attribute plus the content head (macro F1).
std::map<std::string, double> evaluate_classifier(const ClassifierModel& model, const Dataset& ds);

// Tape-level forwards, shared by training, inference and gradient checks.
namespace detail {
ad::Var denoiser_predict(ad::Tape& tape, const DenoiserConfig& arch, int T, const Tensor& x,
                         const std::vector<int>& steps, const Tensor& embs);
struct ClassifierVars {
    ad::Var h1, h2, content_logits, attr_logits;
};
ClassifierVars classifier_forward(ad::Tape& tape, const ClassifierConfig& arch, const Tensor& x);
Tensor time_features(const std::vector<int>& steps, int T, int dim);
} // namespace detail

// Checkpoint file: magic "MDL1", u32 little-endian JSON header length, JSON
// header, then raw little-endian f32 parameter data.
void save_denoiser(const DenoiserModel& model, const std::string& path);
DenoiserModel load_denoiser(const std::string& path);
void save_classifier(const ClassifierModel& model, const std::string& path);
ClassifierModel load_classifier(const std::string& path);

/// Hash of the parameter tensors as they would appear in a checkpoint's f32
/// data section; used for trajectory provenance.
uint64_t params_f32_hash(const ParamStore& params);

} // namespace latlab
