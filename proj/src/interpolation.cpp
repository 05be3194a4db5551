#include "latlab/interpolation.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "latlab/errors.hpp"
#include "latlab/io_util.hpp"

namespace latlab {

using nlohmann::json;

double bernstein_weight(int n, int i, double u) {
    if (n < 1) throw std::invalid_argument("bernstein_weight: degree must be >= 1");
    if (i < 0 || i > n) throw std::invalid_argument("bernstein_weight: index outside [0, n]");
    if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("bernstein_weight: u outside [0, 1]");
    double binom = 1.0;
    for (int j = 1; j <= i; ++j) binom *= static_cast<double>(n - i + j) / static_cast<double>(j);
    return binom * std::pow(1.0 - u, n - i) * std::pow(u, i);
}

Tensor bezier_point(const BezierCurve& curve, double u) {
    const int n = curve.degree();
    if (n < 1) throw std::invalid_argument("bezier_point: need at least 2 control points");
    for (const auto& p : curve.control_points) {
        if (!p.same_shape(curve.control_points.front())) {
            throw std::invalid_argument("bezier_point: control point shapes differ");
        }
    }
    if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("bezier_point: u outside [0, 1]");
    Tensor out = Tensor::zeros(curve.control_points.front().shape());
    for (int i = 0; i <= n; ++i) {
        const double w = bernstein_weight(n, i, u);
        if (w == 0.0) continue;
        const Tensor& p = curve.control_points[static_cast<size_t>(i)];
        for (int64_t j = 0; j < out.size(); ++j) out[j] += w * p[j];
    }
    return out;
}

CurveSamples sample_curve(const BezierCurve& curve, int m) {
    if (m < 2) throw std::invalid_argument("sample_curve: m must be >= 2");
    CurveSamples s;
    s.u.reserve(static_cast<size_t>(m));
    s.latents.reserve(static_cast<size_t>(m));
    for (int k = 0; k < m; ++k) {
        const double u = static_cast<double>(k) / static_cast<double>(m - 1);
        s.u.push_back(u);
        s.latents.push_back(bezier_point(curve, u));
    }
    return s;
}

std::vector<int> control_indices(int total_points, int n_ctrl) {
    if (n_ctrl < 2) throw std::invalid_argument("control_indices: need at least 2 control points");
    if (total_points < n_ctrl) {
        throw std::invalid_argument("control_indices: trajectory has " + std::to_string(total_points) +
                                    " points, need >= " + std::to_string(n_ctrl));
    }
    std::vector<int> idx(static_cast<size_t>(n_ctrl));
    for (int j = 0; j < n_ctrl; ++j) {
        idx[static_cast<size_t>(j)] = static_cast<int>(
            std::llround(static_cast<double>(j) * (total_points - 1) / static_cast<double>(n_ctrl - 1)));
    }
    return idx;
}

BezierCurve trajectory_curve(const Trajectory& traj, int n_ctrl) {
    const int total = 1 + static_cast<int>(traj.points.size());
    const auto idx = control_indices(total, n_ctrl);
    BezierCurve curve;
    for (int i : idx) {
        curve.control_points.push_back(i == 0 ? traj.z_orig
                                              : traj.points[static_cast<size_t>(i - 1)].z0);
    }
    return curve;
}

CurveSamples interpolate_trajectory(const Trajectory& traj, int n_ctrl, int m) {
    return sample_curve(trajectory_curve(traj, n_ctrl), m);
}

static constexpr char kBlobMagic[5] = {'L', 'T', 'R', 'J', '1'};

void save_curve_archive(const Trajectory& source, const CurveSamples& samples,
                        const std::vector<int>& ctrl_indices, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    const uint32_t record_count = static_cast<uint32_t>(samples.latents.size());
    const uint32_t elem_count = static_cast<uint32_t>(samples.latents.front().size());
    std::ofstream blob(fs::path(dir) / "latents.bin", std::ios::binary);
    if (!blob) throw std::runtime_error("save_curve_archive: cannot write latents.bin in " + dir);
    blob.write(kBlobMagic, 5);
    blob.write(reinterpret_cast<const char*>(&record_count), 4);
    blob.write(reinterpret_cast<const char*>(&elem_count), 4);
    for (const auto& z : samples.latents) {
        for (int64_t i = 0; i < z.size(); ++i) {
            const float f = static_cast<float>(z[i]);
            blob.write(reinterpret_cast<const char*>(&f), 4);
        }
    }
    blob.close();

    json manifest;
    manifest["format_version"] = 1;
    manifest["kind"] = "interpolated";
    manifest["interpolated"] = true;
    manifest["schedule"] = {{"T", source.schedule_T},
                            {"beta_start", source.beta_start},
                            {"beta_end", source.beta_end}};
    manifest["neutral_prompt"] = format_prompt(source.plan.neutral_spec);
    manifest["style_prompt"] = format_prompt(source.plan.style_spec);
    manifest["swap_set"] = source.plan.swap_set;
    manifest["noise_seed"] = source.plan.noise_seed;
    manifest["model_hash"] = hash_hex(source.model_hash);
    manifest["x_T_hash"] = hash_hex(source.x_T_hash);
    manifest["latent_shape"] = {kImageSize, kImageSize};
    manifest["record_count"] = record_count;
    manifest["control_indices"] = ctrl_indices;
    manifest["m"] = record_count;
    manifest["u_values"] = samples.u;
    write_file_atomic((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

InterpolatedArchive load_curve_archive(const std::string& dir) {
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
    if (manifest.value("kind", "") != "interpolated" || manifest.value("interpolated", false) != true) {
        throw ValidationError("manifest " + manifest_path + ": expected an interpolated archive");
    }

    InterpolatedArchive out;
    try {
        const json& sch = manifest.at("schedule");
        out.source.schedule_T = sch.at("T").get<int>();
        out.source.beta_start = sch.at("beta_start").get<double>();
        out.source.beta_end = sch.at("beta_end").get<double>();
        out.source.plan.neutral_spec = parse_prompt(manifest.at("neutral_prompt").get<std::string>());
        out.source.plan.style_spec = parse_prompt(manifest.at("style_prompt").get<std::string>());
        out.source.plan.swap_set = manifest.at("swap_set").get<std::vector<int>>();
        out.source.plan.noise_seed = manifest.at("noise_seed").get<uint64_t>();
        out.source.model_hash = std::stoull(manifest.at("model_hash").get<std::string>(), nullptr, 16);
        out.source.x_T_hash = std::stoull(manifest.at("x_T_hash").get<std::string>(), nullptr, 16);
        out.control_indices = manifest.at("control_indices").get<std::vector<int>>();
        out.samples.u = manifest.at("u_values").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ValidationError("manifest " + manifest_path + ": " + e.what());
    }

    const uint32_t manifest_records = manifest.at("record_count").get<uint32_t>();
    if (manifest_records != out.samples.u.size()) {
        throw ValidationError("manifest " + manifest_path + ": record_count != u_values length");
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
    if (blob.size() != 13 + static_cast<size_t>(record_count) * elem_count * 4) {
        throw ValidationError("blob " + blob_path + ": truncated or oversized data section");
    }
    for (uint32_t r = 0; r < record_count; ++r) {
        Tensor z({kImageSize, kImageSize});
        const uint8_t* p = blob.data() + 13 + static_cast<size_t>(r) * elem_count * 4;
        for (uint32_t i = 0; i < elem_count; ++i) {
            float f = 0.0f;
            std::memcpy(&f, p + static_cast<size_t>(i) * 4, 4);
            z[i] = static_cast<double>(f);
        }
        out.samples.latents.push_back(std::move(z));
    }
    out.source.z_orig = out.samples.latents.front();
    return out;
}

} // namespace latlab
