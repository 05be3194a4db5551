#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "latlab/config.hpp"
#include "latlab/errors.hpp"
#include "latlab/io_util.hpp"
#include "latlab/pipeline.hpp"
#include "latlab/report.hpp"
#include "latlab/rng.hpp"

namespace fs = std::filesystem;
using namespace latlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
};

RunConfig require_config(const std::string& path) {
    if (!fs::exists(path)) {
        throw CLI::ValidationError("--config", "config file not found: " + path);
    }
    return load_run_config(path);
}

RunManifest new_manifest(const RunConfig& cfg, const std::string& config_path) {
    RunManifest m;
    m.tool_version = kToolVersion;
    m.config_hash = hash_hex(run_config_hash(cfg));
    m.input_hashes["config"] = hash_hex(file_hash(config_path));
    return m;
}

Dataset make_split(const RunConfig& cfg, const std::string& split) {
    const int64_t n = split == "train" ? cfg.dataset.train_n
                    : split == "val"   ? cfg.dataset.val_n
                                       : cfg.dataset.test_n;
    return sample_dataset(n, cfg.seeds.dataset, cfg.dataset.attr_probs, split);
}

uint64_t dir_tree_hash(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& f : files) {
        const std::string rel = fs::relative(f, dir).string();
        h = fnv1a64(rel.data(), rel.size(), h);
        const uint64_t fh = file_hash(f);
        h = fnv1a64(&fh, sizeof(fh), h);
    }
    return h;
}

std::string archive_dir_name(Attribute a, int index) {
    return "traj_" + attribute_name(a) + "_" + std::to_string(index);
}
std::string interp_dir_name(Attribute a, int index) {
    return "interp_" + attribute_name(a) + "_" + std::to_string(index);
}

int cmd_synth(const std::string& config_path, const std::string& out_dir) {
    Timer timer;
    const RunConfig cfg = require_config(config_path);
    RunManifest manifest = new_manifest(cfg, config_path);
    for (const char* split : {"train", "val", "test"}) {
        const Dataset ds = make_split(cfg, split);
        const std::string dir = (fs::path(out_dir) / split).string();
        export_dataset(ds, dir);
        manifest.output_hashes[std::string("dataset_") + split] = hash_hex(dir_tree_hash(dir));
        std::cerr << "synth: wrote " << ds.items.size() << " phantoms to " << dir << "\n";
    }
    manifest.timings_ms["total"] = timer.ms();
    write_run_manifest(manifest, (fs::path(out_dir) / "run_manifest.json").string());
    return kExitOk;
}

int cmd_train_denoiser(const std::string& config_path, const std::string& out_path) {
    Timer timer;
    const RunConfig cfg = require_config(config_path);
    RunManifest manifest = new_manifest(cfg, config_path);
    const Dataset train = make_split(cfg, "train");
    const EmbeddingTable table = make_table(cfg.seeds.table);
    const NoiseSchedule schedule = make_schedule(cfg.schedule.T, cfg.schedule.beta_start, cfg.schedule.beta_end);
    auto [model, report] = train_denoiser(train, table, schedule, cfg.denoiser_train, cfg.denoiser_arch);
    std::cerr << "train-denoiser: initial loss " << report.metrics["initial_smoothed_loss"]
              << ", final loss " << report.metrics["final_smoothed_loss"] << "\n";
    fs::create_directories(fs::path(out_path).parent_path().empty() ? "." : fs::path(out_path).parent_path().string());
    save_denoiser(model, out_path);
    manifest.output_hashes["denoiser"] = hash_hex(file_hash(out_path));
    manifest.timings_ms["total"] = timer.ms();
    write_run_manifest(manifest, out_path + ".manifest.json");
    return kExitOk;
}

int cmd_train_classifier(const std::string& config_path, const std::string& out_path) {
    Timer timer;
    const RunConfig cfg = require_config(config_path);
    RunManifest manifest = new_manifest(cfg, config_path);
    const Dataset train = make_split(cfg, "train");
    const Dataset val = make_split(cfg, "val");
    auto [model, report] = train_classifier(train, cfg.classifier_train, cfg.classifier_arch, &val);
    for (const auto& [k, v] : report.metrics) std::cerr << "train-classifier: " << k << " = " << v << "\n";
    fs::create_directories(fs::path(out_path).parent_path().empty() ? "." : fs::path(out_path).parent_path().string());
    save_classifier(model, out_path);
    manifest.output_hashes["classifier"] = hash_hex(file_hash(out_path));
    manifest.timings_ms["total"] = timer.ms();
    write_run_manifest(manifest, out_path + ".manifest.json");
    return kExitOk;
}

int cmd_generate(const std::string& config_path, const std::string& denoiser_path,
                 const std::string& prompt, uint64_t seed, const std::string& out_path) {
    Timer timer;
    const RunConfig cfg = require_config(config_path);
    RunManifest manifest = new_manifest(cfg, config_path);
    manifest.input_hashes["denoiser"] = hash_hex(file_hash(denoiser_path));

    AttributeSpec spec;
    try {
        spec = parse_prompt(prompt);
    } catch (const PromptParseError& e) {
        throw CLI::ValidationError("--prompt", e.what());
    }
    const DenoiserModel model = load_denoiser(denoiser_path);
    const EmbeddingTable table = make_table(cfg.seeds.table);
    const Embedding e = embed(spec, table);
    RngStream noise = make_rng(seed, 0);
    const Tensor x_T = sample_standard_normal(noise, {kImageSize, kImageSize});
    const std::vector<Embedding> sched(static_cast<size_t>(model.schedule.T), e);
    const DenoiserFn fn = [&](const Tensor& x, int t, const Embedding& et) {
        return predict_noise(model, x, t, et);
    };
    const auto [x0, trace] = generate(x_T, sched, fn, model.schedule);
    write_pgm(x0, out_path);
    std::cerr << "generate: '" << prompt << "' seed " << seed << " -> " << out_path << "\n";
    manifest.output_hashes["image"] = hash_hex(file_hash(out_path));
    manifest.timings_ms["total"] = timer.ms();
    write_run_manifest(manifest, out_path + ".manifest.json");
    return kExitOk;
}

int cmd_traverse(const std::string& config_path, const std::string& denoiser_path,
                 const std::string& out_dir) {
    Timer timer;
    const RunConfig cfg = require_config(config_path);
    RunManifest manifest = new_manifest(cfg, config_path);
    manifest.input_hashes["denoiser"] = hash_hex(file_hash(denoiser_path));
    const DenoiserModel model = load_denoiser(denoiser_path);
    const NoiseSchedule schedule = make_schedule(cfg.schedule.T, cfg.schedule.beta_start, cfg.schedule.beta_end);
    if (model.schedule.T != schedule.T) {
        throw ValidationError("traverse: checkpoint schedule T=" + std::to_string(model.schedule.T) +
                              " does not match config T=" + std::to_string(schedule.T));
    }
    const EmbeddingTable table = make_table(cfg.seeds.table);
    const TraversalBundle bundle = build_traversal_bundle(cfg, model, schedule, table);
    for (Attribute a : bundle.attributes) {
        const auto& list = bundle.trajectories.at(a);
        for (size_t i = 0; i < list.size(); ++i) {
            save_archive(list[i], (fs::path(out_dir) / archive_dir_name(a, static_cast<int>(i))).string());
        }
        std::cerr << "traverse: " << list.size() << " trajectories for '" << attribute_name(a) << "'\n";
    }
    manifest.output_hashes["trajectories"] = hash_hex(dir_tree_hash(out_dir));
    manifest.timings_ms["total"] = timer.ms();
    write_run_manifest(manifest, (fs::path(out_dir) / "run_manifest.json").string());
    return kExitOk;
}

TraversalBundle load_bundle(const RunConfig& cfg, const std::string& traj_dir) {
    TraversalBundle bundle;
    bundle.attributes = cfg.traversal.attributes;
    bundle.cfrt_tau = cfg.traversal.cfrt_tau;
    for (Attribute a : bundle.attributes) {
        std::vector<Trajectory> list;
        for (int i = 0; i < cfg.traversal.n_trajectories; ++i) {
            const std::string dir = (fs::path(traj_dir) / archive_dir_name(a, i)).string();
            if (!fs::exists(dir)) {
                throw ValidationError("evaluate: missing trajectory archive " + dir);
            }
            list.push_back(load_archive(dir));
        }
        bundle.trajectories.emplace(a, std::move(list));
    }
    return bundle;
}

int cmd_interpolate(const std::string& config_path, const std::string& traj_dir,
                    const std::string& out_dir) {
    Timer timer;
    const RunConfig cfg = require_config(config_path);
    RunManifest manifest = new_manifest(cfg, config_path);
    manifest.input_hashes["trajectories"] = hash_hex(dir_tree_hash(traj_dir));
    const TraversalBundle bundle = load_bundle(cfg, traj_dir);
    for (Attribute a : bundle.attributes) {
        const auto& list = bundle.trajectories.at(a);
        for (size_t i = 0; i < list.size(); ++i) {
            const Trajectory& traj = list[i];
            const int total = 1 + static_cast<int>(traj.points.size());
            const auto idx = control_indices(total, cfg.interpolation.n_ctrl);
            const CurveSamples samples = interpolate_trajectory(traj, cfg.interpolation.n_ctrl,
                                                                cfg.interpolation.m);
            save_curve_archive(traj, samples, idx,
                               (fs::path(out_dir) / interp_dir_name(a, static_cast<int>(i))).string());
        }
        std::cerr << "interpolate: " << list.size() << " curves for '" << attribute_name(a) << "'\n";
    }
    manifest.output_hashes["interpolated"] = hash_hex(dir_tree_hash(out_dir));
    manifest.timings_ms["total"] = timer.ms();
    write_run_manifest(manifest, (fs::path(out_dir) / "run_manifest.json").string());
    return kExitOk;
}

int cmd_evaluate(const std::string& config_path, const std::string& classifier_path,
                 const std::string& traj_dir, const std::string& interp_dir,
                 const std::string& out_dir) {
    Timer timer;
    const RunConfig cfg = require_config(config_path);
    RunManifest manifest = new_manifest(cfg, config_path);
    manifest.input_hashes["classifier"] = hash_hex(file_hash(classifier_path));
    manifest.input_hashes["trajectories"] = hash_hex(dir_tree_hash(traj_dir));

    const ClassifierModel classifier = load_classifier(classifier_path);
    const TraversalBundle bundle = load_bundle(cfg, traj_dir);

    std::map<Attribute, std::vector<CurveSamples>> curves;
    const bool with_interp = !interp_dir.empty();
    if (with_interp) {
        manifest.input_hashes["interpolated"] = hash_hex(dir_tree_hash(interp_dir));
        for (Attribute a : bundle.attributes) {
            std::vector<CurveSamples> list;
            for (int i = 0; i < cfg.traversal.n_trajectories; ++i) {
                const std::string dir = (fs::path(interp_dir) / interp_dir_name(a, i)).string();
                if (!fs::exists(dir)) throw ValidationError("evaluate: missing interpolated archive " + dir);
                list.push_back(load_curve_archive(dir).samples);
            }
            curves.emplace(a, std::move(list));
        }
    }

    const EvaluationSummary summary = evaluate_bundle(bundle, classifier, with_interp ? &curves : nullptr);

    fs::create_directories(out_dir);
    const CounterfactualSet cf = counterfactuals_from_bundle(bundle, bundle.cfrt_tau);
    for (Attribute a : bundle.attributes) {
        const CfrtReport rep = cfrt(cf, classifier, a);
        write_file_atomic((fs::path(out_dir) / ("cfrt_" + attribute_name(a) + ".json")).string(),
                          cfrt_report_json(rep));
        write_file_atomic((fs::path(out_dir) / ("cfrt_" + attribute_name(a) + ".csv")).string(),
                          cfrt_report_csv(rep));
        const AttributeEvaluation& eval = summary.per_attribute.at(a);
        write_file_atomic((fs::path(out_dir) / ("cosine_" + attribute_name(a) + ".csv")).string(),
                          cosine_matrix_csv(eval.mean_cosine));
        write_file_atomic((fs::path(out_dir) / ("perceptual_" + attribute_name(a) + ".csv")).string(),
                          perceptual_reports_csv(eval.per_trajectory));
        std::cerr << "evaluate: " << attribute_name(a) << " cfrt=" << eval.cfrt_score
                  << " mean_rho=" << eval.mean_spearman << "\n";
    }
    write_file_atomic((fs::path(out_dir) / "summary.json").string(), summary_json(summary));
    manifest.output_hashes["reports"] = hash_hex(dir_tree_hash(out_dir));
    manifest.timings_ms["total"] = timer.ms();
    write_run_manifest(manifest, (fs::path(out_dir) / "run_manifest.json").string());
    return kExitOk;
}

int cmd_report(const std::string& reports_dir, const std::string& traj_dir, const std::string& out_dir) {
    Timer timer;
    if (!fs::exists(reports_dir)) throw ValidationError("report: reports directory not found: " + reports_dir);
    const std::string summary_path = (fs::path(reports_dir) / "summary.json").string();
    if (!fs::exists(summary_path)) throw ValidationError("report: missing " + summary_path);
    nlohmann::json summary;
    try {
        const auto bytes = read_file_bytes(summary_path);
        summary = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("report: summary.json parse error: " + std::string(e.what()));
    }
    if (!summary.contains("attributes") || summary["attributes"].empty()) {
        throw ValidationError("report: summary.json lists no attributes");
    }

    fs::create_directories(out_dir);
    RunManifest manifest;
    manifest.tool_version = kToolVersion;
    manifest.config_hash = "";
    manifest.input_hashes["reports"] = hash_hex(dir_tree_hash(reports_dir));

    for (const auto& [name, eval] : summary["attributes"].items()) {
        // Cosine heatmap from the per-attribute CSV.
        const std::string cosine_path = (fs::path(reports_dir) / ("cosine_" + name + ".csv")).string();
        if (fs::exists(cosine_path)) {
            const auto bytes = read_file_bytes(cosine_path);
            const auto rows = parse_csv(std::string(bytes.begin(), bytes.end()));
            CosineMatrix m;
            for (int k = 0; k < 9; ++k) m.grid[static_cast<size_t>(k)] = 5 * (k + 1);
            for (size_t i = 0; i < 9 && i + 1 < rows.size(); ++i) {
                for (size_t j = 0; j < 9 && j + 1 < rows[i + 1].size(); ++j) {
                    const std::string& cell = rows[i + 1][j + 1];
                    if (cell == "nan") {
                        m.defined[i][j] = false;
                    } else {
                        m.defined[i][j] = true;
                        m.value[i][j] = std::stod(cell);
                    }
                }
            }
            write_file_atomic((fs::path(out_dir) / ("cosine_" + name + ".svg")).string(),
                              cosine_heatmap_svg(m, "cosine similarity: " + name));
        }
        const auto taus = eval.at("taus").get<std::vector<double>>();
        const auto dist = eval.at("mean_feature_perceptual_distance").get<std::vector<double>>();
        write_file_atomic((fs::path(out_dir) / ("distance_" + name + ".svg")).string(),
                          distance_curve_svg(taus, dist, "feature perceptual distance vs tau: " + name));
    }

    if (!traj_dir.empty()) {
        // PCA scatter over the first few trajectory fans.
        std::vector<ScatterSeries> series;
        std::vector<Tensor> latents;
        std::vector<std::pair<size_t, size_t>> ranges;
        for (const auto& [name, _] : summary["attributes"].items()) {
            for (int i = 0; i < 3; ++i) {
                const std::string dir = (fs::path(traj_dir) / ("traj_" + name + "_" + std::to_string(i))).string();
                if (!fs::exists(dir)) continue;
                const Trajectory traj = load_archive(dir);
                const size_t start = latents.size();
                latents.push_back(traj.z_orig);
                for (const auto& p : traj.points) latents.push_back(p.z0);
                ranges.emplace_back(start, latents.size() - start);
                series.push_back(ScatterSeries{name + " #" + std::to_string(i), {}});
            }
        }
        if (latents.size() >= 3) {
            const PcaResult pca = pca_project(latents, 2);
            for (size_t s = 0; s < series.size(); ++s) {
                for (size_t k = 0; k < ranges[s].second; ++k) {
                    const int64_t row = static_cast<int64_t>(ranges[s].first + k);
                    series[s].points.emplace_back(pca.coords.at2(row, 0), pca.coords.at2(row, 1));
                }
            }
            write_file_atomic((fs::path(out_dir) / "pca_scatter.svg").string(),
                              pca_scatter_svg(series, "trajectory latents, PCA projection"));
        }
    }

    manifest.output_hashes["plots"] = hash_hex(dir_tree_hash(out_dir));
    manifest.timings_ms["total"] = timer.ms();
    write_run_manifest(manifest, (fs::path(out_dir) / "run_manifest.json").string());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"latlab: latent-trajectory disentanglement laboratory on synthetic phantoms"};
    app.require_subcommand(1);

    std::string config_path, out_path, denoiser_path, classifier_path, traj_dir, interp_dir, reports_dir,
        prompt;
    uint64_t gen_seed = 0;

    auto* synth = app.add_subcommand("synth", "Render the phantom dataset splits to PGM + JSON index");
    synth->add_option("--config", config_path, "run config JSON")->required();
    synth->add_option("--out", out_path, "output directory")->required();

    auto* train_d = app.add_subcommand("train-denoiser", "Train the conditional denoiser");
    train_d->add_option("--config", config_path, "run config JSON")->required();
    train_d->add_option("--out", out_path, "checkpoint path (MDL1)")->required();

    auto* train_c = app.add_subcommand("train-classifier", "Train the attribute/content classifier");
    train_c->add_option("--config", config_path, "run config JSON")->required();
    train_c->add_option("--out", out_path, "checkpoint path (MDL1)")->required();

    auto* gen = app.add_subcommand("generate", "Generate one image from a prompt");
    gen->add_option("--config", config_path, "run config JSON")->required();
    gen->add_option("--denoiser", denoiser_path, "denoiser checkpoint")->required();
    gen->add_option("--prompt", prompt, "e.g. \"phantom with device\"")->required();
    gen->add_option("--seed", gen_seed, "noise seed")->required();
    gen->add_option("--out", out_path, "output PGM path")->required();

    auto* trav = app.add_subcommand("traverse", "Build embedding-swap trajectory archives");
    trav->add_option("--config", config_path, "run config JSON")->required();
    trav->add_option("--denoiser", denoiser_path, "denoiser checkpoint")->required();
    trav->add_option("--out", out_path, "output directory")->required();

    auto* interp = app.add_subcommand("interpolate", "Bezier-interpolate trajectory archives");
    interp->add_option("--config", config_path, "run config JSON")->required();
    interp->add_option("--trajectories", traj_dir, "trajectory archive directory")->required();
    interp->add_option("--out", out_path, "output directory")->required();

    auto* eval = app.add_subcommand("evaluate", "Compute CFRT / cosine / perceptual reports");
    eval->add_option("--config", config_path, "run config JSON")->required();
    eval->add_option("--classifier", classifier_path, "classifier checkpoint")->required();
    eval->add_option("--trajectories", traj_dir, "trajectory archive directory")->required();
    eval->add_option("--interpolated", interp_dir, "interpolated archive directory");
    eval->add_option("--out", out_path, "reports directory")->required();

    auto* rep = app.add_subcommand("report", "Render SVG plots from reports");
    rep->add_option("--reports", reports_dir, "reports directory")->required();
    rep->add_option("--trajectories", traj_dir, "trajectory archives (for the PCA scatter)");
    rep->add_option("--out", out_path, "plots directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);   // help text on stdout, exit 0
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*synth) return cmd_synth(config_path, out_path);
        if (*train_d) return cmd_train_denoiser(config_path, out_path);
        if (*train_c) return cmd_train_classifier(config_path, out_path);
        if (*gen) return cmd_generate(config_path, denoiser_path, prompt, gen_seed, out_path);
        if (*trav) return cmd_traverse(config_path, denoiser_path, out_path);
        if (*interp) return cmd_interpolate(config_path, traj_dir, out_path);
        if (*eval) return cmd_evaluate(config_path, classifier_path, traj_dir, interp_dir, out_path);
        if (*rep) return cmd_report(reports_dir, traj_dir, out_path);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
