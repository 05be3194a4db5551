#include "latlab/trajectory.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "latlab/errors.hpp"
#include "latlab/io_util.hpp"
#include "latlab/rng.hpp"

namespace latlab {

using nlohmann::json;

void SwapPlan::validate(int T) const {
    if (swap_set.empty()) throw std::invalid_argument("SwapPlan: empty swap_set");
    for (size_t i = 0; i < swap_set.size(); ++i) {
        if (swap_set[i] < 0 || swap_set[i] > T) {
            throw std::invalid_argument("SwapPlan: tau=" + std::to_string(swap_set[i]) + " outside [0, " +
                                        std::to_string(T) + "]");
        }
        if (i > 0 && swap_set[i] <= swap_set[i - 1]) {
            throw std::invalid_argument("SwapPlan: swap_set must be strictly increasing");
        }
    }
}

uint64_t tensor_digest(const Tensor& t, uint64_t h) {
    return fnv1a64(t.data(), static_cast<size_t>(t.size()) * sizeof(double), h);
}

std::vector<Embedding> embedding_schedule(const Embedding& e, const Embedding& e_prime, int tau, int T) {
    if (tau < 0 || tau > T) {
        throw std::invalid_argument("embedding_schedule: tau=" + std::to_string(tau) + " outside [0, " +
                                    std::to_string(T) + "]");
    }
    std::vector<Embedding> sched;
    sched.reserve(static_cast<size_t>(T));
    for (int t = 1; t <= T; ++t) sched.push_back(t <= tau ? e_prime : e);
    return sched;
}

Trajectory build_trajectory(const SwapPlan& plan, const DenoiserModel& denoiser,
                            const NoiseSchedule& schedule, const EmbeddingTable& table) {
    plan.validate(schedule.T);
    if (denoiser.schedule.T != schedule.T) {
        throw std::invalid_argument("build_trajectory: denoiser trained for T=" +
                                    std::to_string(denoiser.schedule.T) + ", schedule has T=" +
                                    std::to_string(schedule.T));
    }
    const Embedding e = embed(plan.neutral_spec, table);
    const Embedding e_prime = embed(plan.style_spec, table);

    RngStream noise = make_rng(plan.noise_seed, 0);
    const Tensor x_T = sample_standard_normal(noise, {kImageSize, kImageSize});
    const Tensor x_T_flat = x_T.reshaped({1, kImagePixels});

    // All rows share x_T and the timestep ladder; only the embedding per row
    // differs, so the whole fan of swap variants runs as one batched pass.
    const int rows = 1 + static_cast<int>(plan.swap_set.size());
    Tensor x({rows, kImagePixels});
    for (int r = 0; r < rows; ++r)
        for (int64_t j = 0; j < kImagePixels; ++j) x.at2(r, j) = x_T_flat[j];

    std::vector<uint64_t> digests(static_cast<size_t>(rows), 0xcbf29ce484222325ULL);
    const auto digest_rows = [&]() {
        for (int r = 0; r < rows; ++r) {
            digests[static_cast<size_t>(r)] = fnv1a64(x.data() + static_cast<int64_t>(r) * kImagePixels,
                                                      kImagePixels * sizeof(double),
                                                      digests[static_cast<size_t>(r)]);
        }
    };
    digest_rows();

    std::vector<int> steps(static_cast<size_t>(rows));
    std::vector<Embedding> embs(static_cast<size_t>(rows));
    for (int t = schedule.T; t >= 1; --t) {
        for (int r = 0; r < rows; ++r) {
            steps[static_cast<size_t>(r)] = t;
            const int tau = (r == 0) ? 0 : plan.swap_set[static_cast<size_t>(r - 1)];
            embs[static_cast<size_t>(r)] = (t <= tau) ? e_prime : e;
        }
        const Tensor eps_hat = predict_noise_batch(denoiser, x, steps, embs);
        const auto [gamma0, gamma1] = gamma_coeffs(schedule, t);
        x = axpby(gamma0, x, gamma1, eps_hat);
        digest_rows();
    }
    require_finite(x, "build_trajectory");

    Trajectory traj;
    traj.plan = plan;
    traj.schedule_T = schedule.T;
    traj.beta_start = schedule.beta_start;
    traj.beta_end = schedule.beta_end;
    traj.model_hash = params_f32_hash(denoiser.params);
    traj.x_T_hash = tensor_digest(x_T);
    traj.z_orig = Tensor({kImageSize, kImageSize});
    for (int64_t j = 0; j < kImagePixels; ++j) traj.z_orig[j] = x.at2(0, j);
    traj.neutral_digest = digests[0];
    for (size_t i = 0; i < plan.swap_set.size(); ++i) {
        TrajectoryPoint p;
        p.tau = plan.swap_set[i];
        p.z0 = Tensor({kImageSize, kImageSize});
        for (int64_t j = 0; j < kImagePixels; ++j) p.z0[j] = x.at2(static_cast<int64_t>(i) + 1, j);
        p.trace_digest = digests[i + 1];
        traj.points.push_back(std::move(p));
    }
    return traj;
}

static constexpr char kBlobMagic[5] = {'L', 'T', 'R', 'J', '1'};

void save_archive(const Trajectory& traj, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    const uint32_t record_count = 1 + static_cast<uint32_t>(traj.points.size());
    const uint32_t elem_count = static_cast<uint32_t>(traj.z_orig.size());

    std::ofstream blob(fs::path(dir) / "latents.bin", std::ios::binary);
    if (!blob) throw std::runtime_error("save_archive: cannot write latents.bin in " + dir);
    blob.write(kBlobMagic, 5);
    blob.write(reinterpret_cast<const char*>(&record_count), 4);
    blob.write(reinterpret_cast<const char*>(&elem_count), 4);
    const auto write_record = [&](const Tensor& z) {
        for (int64_t i = 0; i < z.size(); ++i) {
            const float f = static_cast<float>(z[i]);
            blob.write(reinterpret_cast<const char*>(&f), 4);
        }
    };
    write_record(traj.z_orig);
    for (const auto& p : traj.points) write_record(p.z0);
    blob.close();

    json manifest;
    manifest["format_version"] = 1;
    manifest["kind"] = "trajectory";
    manifest["schedule"] = {{"T", traj.schedule_T}, {"beta_start", traj.beta_start}, {"beta_end", traj.beta_end}};
    manifest["neutral_prompt"] = format_prompt(traj.plan.neutral_spec);
    manifest["style_prompt"] = format_prompt(traj.plan.style_spec);
    manifest["swap_set"] = traj.plan.swap_set;
    manifest["noise_seed"] = traj.plan.noise_seed;
    manifest["model_hash"] = hash_hex(traj.model_hash);
    manifest["x_T_hash"] = hash_hex(traj.x_T_hash);
    manifest["latent_shape"] = {kImageSize, kImageSize};
    manifest["record_count"] = record_count;
    json digests = json::array();
    digests.push_back(hash_hex(traj.neutral_digest));
    for (const auto& p : traj.points) digests.push_back(hash_hex(p.trace_digest));
    manifest["trace_digests"] = std::move(digests);
    write_file_atomic((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

static uint64_t parse_hex(const std::string& s, const std::string& field) {
    try {
        return std::stoull(s, nullptr, 16);
    } catch (const std::exception&) {
        throw ValidationError("manifest field '" + field + "': bad hash '" + s + "'");
    }
}

Trajectory load_archive(const std::string& dir) {
    namespace fs = std::filesystem;
    const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
    json manifest;
    try {
        manifest = json::parse(read_file_bytes(manifest_path));
    } catch (const json::exception& e) {
        throw ValidationError("manifest " + manifest_path + ": parse error: " + e.what());
    }
    if (manifest.value("format_version", -1) != 1) {
        throw ValidationError("manifest " + manifest_path + ": unsupported format_version");
    }
    if (manifest.value("kind", "") != "trajectory") {
        throw ValidationError("manifest " + manifest_path + ": kind '" + manifest.value("kind", "") +
                              "', expected 'trajectory'");
    }

    Trajectory traj;
    try {
        const json& sch = manifest.at("schedule");
        traj.schedule_T = sch.at("T").get<int>();
        traj.beta_start = sch.at("beta_start").get<double>();
        traj.beta_end = sch.at("beta_end").get<double>();
        traj.plan.neutral_spec = parse_prompt(manifest.at("neutral_prompt").get<std::string>());
        traj.plan.style_spec = parse_prompt(manifest.at("style_prompt").get<std::string>());
        traj.plan.swap_set = manifest.at("swap_set").get<std::vector<int>>();
        traj.plan.noise_seed = manifest.at("noise_seed").get<uint64_t>();
        traj.model_hash = parse_hex(manifest.at("model_hash").get<std::string>(), "model_hash");
        traj.x_T_hash = parse_hex(manifest.at("x_T_hash").get<std::string>(), "x_T_hash");
    } catch (const json::exception& e) {
        throw ValidationError("manifest " + manifest_path + ": " + e.what());
    }

    const uint32_t manifest_records = manifest.at("record_count").get<uint32_t>();
    if (manifest_records != traj.plan.swap_set.size() + 1) {
        throw ValidationError("manifest " + manifest_path + ": record_count " +
                              std::to_string(manifest_records) + " != swap_set length + 1 (" +
                              std::to_string(traj.plan.swap_set.size() + 1) + ")");
    }

    const std::string blob_path = (fs::path(dir) / "latents.bin").string();
    const std::vector<uint8_t> blob = read_file_bytes(blob_path);
    if (blob.size() < 13 || std::memcmp(blob.data(), kBlobMagic, 5) != 0) {
        throw ValidationError("blob " + blob_path + ": bad magic (expected LTRJ1)");
    }
    uint32_t record_count = 0, elem_count = 0;
    std::memcpy(&record_count, blob.data() + 5, 4);
    std::memcpy(&elem_count, blob.data() + 9, 4);
    if (record_count != manifest_records) {
        throw ValidationError("blob " + blob_path + ": record count " + std::to_string(record_count) +
                              " != manifest record_count " + std::to_string(manifest_records));
    }
    if (elem_count != kImagePixels) {
        throw ValidationError("blob " + blob_path + ": element count " + std::to_string(elem_count) +
                              " != expected " + std::to_string(kImagePixels));
    }
    const size_t expected_bytes = 13 + static_cast<size_t>(record_count) * elem_count * 4;
    if (blob.size() != expected_bytes) {
        throw ValidationError("blob " + blob_path + ": size " + std::to_string(blob.size()) +
                              " bytes, expected " + std::to_string(expected_bytes) +
                              " for the declared record count");
    }

    const auto read_record = [&](uint32_t r) {
        Tensor z({kImageSize, kImageSize});
        const uint8_t* p = blob.data() + 13 + static_cast<size_t>(r) * elem_count * 4;
        for (uint32_t i = 0; i < elem_count; ++i) {
            float f = 0.0f;
            std::memcpy(&f, p + static_cast<size_t>(i) * 4, 4);
            z[i] = static_cast<double>(f);
        }
        return z;
    };
    traj.z_orig = read_record(0);

    const auto digests = manifest.at("trace_digests").get<std::vector<std::string>>();
    if (digests.size() != record_count) {
        throw ValidationError("manifest " + manifest_path + ": trace_digests length " +
                              std::to_string(digests.size()) + " != record_count");
    }
    traj.neutral_digest = parse_hex(digests[0], "trace_digests[0]");
    for (size_t i = 0; i < traj.plan.swap_set.size(); ++i) {
        TrajectoryPoint p;
        p.tau = traj.plan.swap_set[i];
        p.z0 = read_record(static_cast<uint32_t>(i) + 1);
        p.trace_digest = parse_hex(digests[i + 1], "trace_digests[" + std::to_string(i + 1) + "]");
        traj.points.push_back(std::move(p));
    }
    return traj;
}

} // namespace latlab
