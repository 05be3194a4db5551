#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "latlab/errors.hpp"
#include "latlab/io_util.hpp"
#include "latlab/models.hpp"

namespace latlab {

using nlohmann::json;

static constexpr char kMagic[4] = {'M', 'D', 'L', '1'};

static std::vector<float> params_f32(const ParamStore& ps) {
    std::vector<float> data;
    for (const auto& name : ps.names()) {
        const Tensor& t = ps.value(name);
        for (int64_t i = 0; i < t.size(); ++i) data.push_back(static_cast<float>(t[i]));
    }
    return data;
}

uint64_t params_f32_hash(const ParamStore& params) {
    const std::vector<float> data = params_f32(params);
    return fnv1a64(data.data(), data.size() * sizeof(float));
}

static json tensor_index(const ParamStore& ps) {
    json tensors = json::array();
    int64_t offset = 0;
    for (const auto& name : ps.names()) {
        const Tensor& t = ps.value(name);
        tensors.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
        offset += t.size();
    }
    return tensors;
}

static void write_checkpoint(const json& header, const ParamStore& ps, const std::string& path) {
    const std::string header_str = header.dump();
    const std::vector<float> data = params_f32(ps);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    out.write(kMagic, 4);
    const uint32_t hlen = static_cast<uint32_t>(header_str.size());
    out.write(reinterpret_cast<const char*>(&hlen), 4);
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!out) throw std::runtime_error("write failed on checkpoint " + path);
}

static json read_checkpoint(const std::string& path, const std::string& expected_kind,
                            std::vector<float>& data_out) {
    const std::vector<uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw ValidationError("checkpoint " + path + ": bad magic (expected MDL1)");
    }
    uint32_t hlen = 0;
    std::memcpy(&hlen, bytes.data() + 4, 4);
    if (bytes.size() < 8 + static_cast<size_t>(hlen)) {
        throw ValidationError("checkpoint " + path + ": header length exceeds file size");
    }
    json header;
    try {
        header = json::parse(bytes.begin() + 8, bytes.begin() + 8 + hlen);
    } catch (const json::exception& e) {
        throw ValidationError("checkpoint " + path + ": header parse error: " + e.what());
    }
    if (header.value("format_version", -1) != 1) {
        throw ValidationError("checkpoint " + path + ": unsupported format_version");
    }
    if (header.value("kind", "") != expected_kind) {
        throw ValidationError("checkpoint " + path + ": kind '" + header.value("kind", "") +
                              "', expected '" + expected_kind + "'");
    }
    const size_t data_bytes = bytes.size() - 8 - hlen;
    if (data_bytes % sizeof(float) != 0) {
        throw ValidationError("checkpoint " + path + ": data section not a multiple of 4 bytes");
    }
    data_out.resize(data_bytes / sizeof(float));
    std::memcpy(data_out.data(), bytes.data() + 8 + hlen, data_bytes);
    return header;
}

static void load_params(const json& header, const std::vector<float>& data, ParamStore& ps,
                        const std::string& path) {
    if (!header.contains("tensors") || !header["tensors"].is_array()) {
        throw ValidationError("checkpoint " + path + ": missing tensors index");
    }
    int64_t expected = 0;
    for (const auto& tj : header["tensors"]) {
        const std::string name = tj.at("name").get<std::string>();
        const std::vector<int64_t> shape = tj.at("shape").get<std::vector<int64_t>>();
        const int64_t offset = tj.at("offset").get<int64_t>();
        if (offset != expected) {
            throw ValidationError("checkpoint " + path + ": tensor '" + name + "' offset mismatch");
        }
        Tensor& t = ps.create(name, shape);
        if (offset + t.size() > static_cast<int64_t>(data.size())) {
            throw ValidationError("checkpoint " + path + ": tensor '" + name + "' exceeds data section");
        }
        for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(data[static_cast<size_t>(offset + i)]);
        expected += t.size();
    }
    if (expected != static_cast<int64_t>(data.size())) {
        throw ValidationError("checkpoint " + path + ": data section has " + std::to_string(data.size()) +
                              " floats, index covers " + std::to_string(expected));
    }
}

void save_denoiser(const DenoiserModel& model, const std::string& path) {
    json header;
    header["format_version"] = 1;
    header["kind"] = "denoiser";
    header["arch"] = {{"hidden1", model.arch.hidden1},
                      {"hidden2", model.arch.hidden2},
                      {"time_dim", model.arch.time_dim},
                      {"emb_proj", model.arch.emb_proj}};
    header["schedule"] = {{"T", model.schedule.T},
                          {"beta_start", model.schedule.beta_start},
                          {"beta_end", model.schedule.beta_end}};
    header["train_seed"] = model.train_seed;
    header["tensors"] = tensor_index(model.params);
    write_checkpoint(header, model.params, path);
}

DenoiserModel load_denoiser(const std::string& path) {
    std::vector<float> data;
    const json header = read_checkpoint(path, "denoiser", data);
    DenoiserModel m;
    try {
        const json& arch = header.at("arch");
        m.arch.hidden1 = arch.at("hidden1").get<int>();
        m.arch.hidden2 = arch.at("hidden2").get<int>();
        m.arch.time_dim = arch.at("time_dim").get<int>();
        m.arch.emb_proj = arch.at("emb_proj").get<int>();
        const json& sch = header.at("schedule");
        m.schedule = make_schedule(sch.at("T").get<int>(), sch.at("beta_start").get<double>(),
                                   sch.at("beta_end").get<double>());
        m.train_seed = header.value("train_seed", 0ULL);
    } catch (const json::exception& e) {
        throw ValidationError("checkpoint " + path + ": " + e.what());
    }
    load_params(header, data, m.params, path);
    return m;
}

void save_classifier(const ClassifierModel& model, const std::string& path) {
    json header;
    header["format_version"] = 1;
    header["kind"] = "classifier";
    header["arch"] = {{"hidden1", model.arch.hidden1}, {"hidden2", model.arch.hidden2}};
    header["feature_layers"] = model.feature_layers;
    header["train_seed"] = model.train_seed;
    header["tensors"] = tensor_index(model.params);
    write_checkpoint(header, model.params, path);
}

ClassifierModel load_classifier(const std::string& path) {
    std::vector<float> data;
    const json header = read_checkpoint(path, "classifier", data);
    ClassifierModel m;
    try {
        const json& arch = header.at("arch");
        m.arch.hidden1 = arch.at("hidden1").get<int>();
        m.arch.hidden2 = arch.at("hidden2").get<int>();
        m.train_seed = header.value("train_seed", 0ULL);
    } catch (const json::exception& e) {
        throw ValidationError("checkpoint " + path + ": " + e.what());
    }
    load_params(header, data, m.params, path);
    return m;
}

} // namespace latlab
