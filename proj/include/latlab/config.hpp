#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "latlab/metrics.hpp"
#include "latlab/models.hpp"

namespace latlab {

/// One JSON document drives a whole run. Unknown keys are rejected and every
/// seed must be explicit; nothing falls back to wall-clock state.
struct RunConfig {
    struct Seeds {
        uint64_t dataset = 0;
        uint64_t table = 0;
        uint64_t denoiser = 0;
        uint64_t classifier = 0;
        uint64_t noise_base = 0;
    } seeds;

    struct DatasetCfg {
        int64_t train_n = 8000;
        int64_t val_n = 1000;
        int64_t test_n = 1000;
        std::map<Attribute, double> attr_probs = {{Attribute::Effusion, 0.35},
                                                  {Attribute::Device, 0.35},
                                                  {Attribute::Marker, 0.35},
                                                  {Attribute::Grid, 0.35}};
    } dataset;

    struct ScheduleCfg {
        int T = 50;
        double beta_start = kDefaultBetaStart;
        double beta_end = kDefaultBetaEnd;
    } schedule;

    TrainConfig denoiser_train;     // defaults: 3000 steps, batch 32, lr 1e-3
    TrainConfig classifier_train;
    DenoiserConfig denoiser_arch;
    ClassifierConfig classifier_arch;

    struct TraversalCfg {
        std::vector<int> swap_set = default_swap_set();
        int n_trajectories = 100;
        int cfrt_tau = 25;
        std::vector<Attribute> attributes = {Attribute::Effusion, Attribute::Device, Attribute::Marker,
                                             Attribute::Grid};
    } traversal;

    struct InterpolationCfg {
        int n_ctrl = 7;
        int m = 50;
    } interpolation;

    std::string output_dir = "runs/out";
};

/// Parses and validates; throws ValidationError on unknown keys, missing
/// seeds, or out-of-range values.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Hash of the canonical re-serialization, so formatting differences do not
/// change the hash.
uint64_t run_config_hash(const RunConfig& cfg);
std::string run_config_canonical_json(const RunConfig& cfg);

struct RunManifest {
    std::string tool_version;
    std::string config_hash;
    std::map<std::string, std::string> input_hashes;
    std::map<std::string, std::string> output_hashes;
    std::map<std::string, double> timings_ms;
};

void write_run_manifest(const RunManifest& m, const std::string& path);

inline constexpr const char* kToolVersion = "0.1.0";

} // namespace latlab
