#include "latlab/config.hpp"

#include <set>

#include <json.hpp>

#include "latlab/errors.hpp"
#include "latlab/io_util.hpp"

namespace latlab {

using nlohmann::json;

static void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (!known.count(key)) {
            throw ValidationError("config: unknown key '" + where + key + "'");
        }
    }
}

static void parse_train(const json& j, const std::string& where, TrainConfig& out) {
    reject_unknown(j, {"steps", "batch", "lr", "beta1", "beta2"}, where);
    out.steps = j.value("steps", out.steps);
    out.batch = j.value("batch", out.batch);
    out.lr = j.value("lr", out.lr);
    out.beta1 = j.value("beta1", out.beta1);
    out.beta2 = j.value("beta2", out.beta2);
    try {
        out.validate();
    } catch (const std::exception& e) {
        throw ValidationError("config: " + where + ": " + e.what());
    }
}

static Attribute parse_attr(const json& j, const std::string& where) {
    Attribute a;
    if (!j.is_string() || !attribute_from_name(j.get<std::string>(), a)) {
        throw ValidationError("config: " + where + ": unknown attribute " + j.dump());
    }
    return a;
}

RunConfig parse_run_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: parse error: ") + e.what());
    }
    reject_unknown(root,
                   {"seeds", "dataset", "schedule", "denoiser_train", "classifier_train", "denoiser_arch",
                    "classifier_arch", "traversal", "interpolation", "output_dir"},
                   "");
    RunConfig cfg;

    if (!root.contains("seeds")) throw ValidationError("config: missing required 'seeds' object");
    {
        const json& s = root["seeds"];
        reject_unknown(s, {"dataset", "table", "denoiser", "classifier", "noise_base"}, "seeds.");
        for (const char* key : {"dataset", "table", "denoiser", "classifier", "noise_base"}) {
            if (!s.contains(key))
                throw ValidationError(std::string("config: missing required seed 'seeds.") + key + "'");
        }
        cfg.seeds.dataset = s["dataset"].get<uint64_t>();
        cfg.seeds.table = s["table"].get<uint64_t>();
        cfg.seeds.denoiser = s["denoiser"].get<uint64_t>();
        cfg.seeds.classifier = s["classifier"].get<uint64_t>();
        cfg.seeds.noise_base = s["noise_base"].get<uint64_t>();
    }

    if (root.contains("dataset")) {
        const json& d = root["dataset"];
        reject_unknown(d, {"train_n", "val_n", "test_n", "attr_probs"}, "dataset.");
        cfg.dataset.train_n = d.value("train_n", cfg.dataset.train_n);
        cfg.dataset.val_n = d.value("val_n", cfg.dataset.val_n);
        cfg.dataset.test_n = d.value("test_n", cfg.dataset.test_n);
        if (cfg.dataset.train_n < 1 || cfg.dataset.val_n < 1 || cfg.dataset.test_n < 1) {
            throw ValidationError("config: dataset split sizes must be >= 1");
        }
        if (d.contains("attr_probs")) {
            cfg.dataset.attr_probs.clear();
            for (const auto& [key, v] : d["attr_probs"].items()) {
                Attribute a;
                if (!attribute_from_name(key, a))
                    throw ValidationError("config: dataset.attr_probs: unknown attribute '" + key + "'");
                const double p = v.get<double>();
                if (!(p >= 0.0 && p <= 1.0))
                    throw ValidationError("config: dataset.attr_probs." + key + " outside [0,1]");
                cfg.dataset.attr_probs[a] = p;
            }
        }
    }

    if (root.contains("schedule")) {
        const json& s = root["schedule"];
        reject_unknown(s, {"T", "beta_start", "beta_end"}, "schedule.");
        cfg.schedule.T = s.value("T", cfg.schedule.T);
        cfg.schedule.beta_start = s.value("beta_start", cfg.schedule.beta_start);
        cfg.schedule.beta_end = s.value("beta_end", cfg.schedule.beta_end);
        try {
            make_schedule(cfg.schedule.T, cfg.schedule.beta_start, cfg.schedule.beta_end);
        } catch (const std::exception& e) {
            throw ValidationError(std::string("config: schedule: ") + e.what());
        }
    }

    if (root.contains("denoiser_train")) parse_train(root["denoiser_train"], "denoiser_train.", cfg.denoiser_train);
    if (root.contains("classifier_train"))
        parse_train(root["classifier_train"], "classifier_train.", cfg.classifier_train);
    cfg.denoiser_train.seed = cfg.seeds.denoiser;
    cfg.classifier_train.seed = cfg.seeds.classifier;

    if (root.contains("denoiser_arch")) {
        const json& a = root["denoiser_arch"];
        reject_unknown(a, {"hidden1", "hidden2", "time_dim", "emb_proj"}, "denoiser_arch.");
        cfg.denoiser_arch.hidden1 = a.value("hidden1", cfg.denoiser_arch.hidden1);
        cfg.denoiser_arch.hidden2 = a.value("hidden2", cfg.denoiser_arch.hidden2);
        cfg.denoiser_arch.time_dim = a.value("time_dim", cfg.denoiser_arch.time_dim);
        cfg.denoiser_arch.emb_proj = a.value("emb_proj", cfg.denoiser_arch.emb_proj);
    }
    if (root.contains("classifier_arch")) {
        const json& a = root["classifier_arch"];
        reject_unknown(a, {"hidden1", "hidden2"}, "classifier_arch.");
        cfg.classifier_arch.hidden1 = a.value("hidden1", cfg.classifier_arch.hidden1);
        cfg.classifier_arch.hidden2 = a.value("hidden2", cfg.classifier_arch.hidden2);
    }

    if (root.contains("traversal")) {
        const json& t = root["traversal"];
        reject_unknown(t, {"swap_set", "n_trajectories", "cfrt_tau", "attributes"}, "traversal.");
        if (t.contains("swap_set")) cfg.traversal.swap_set = t["swap_set"].get<std::vector<int>>();
        cfg.traversal.n_trajectories = t.value("n_trajectories", cfg.traversal.n_trajectories);
        cfg.traversal.cfrt_tau = t.value("cfrt_tau", cfg.traversal.cfrt_tau);
        if (t.contains("attributes")) {
            cfg.traversal.attributes.clear();
            for (const auto& aj : t["attributes"])
                cfg.traversal.attributes.push_back(parse_attr(aj, "traversal.attributes"));
        }
        if (cfg.traversal.n_trajectories < 1)
            throw ValidationError("config: traversal.n_trajectories must be >= 1");
        SwapPlan probe;
        probe.swap_set = cfg.traversal.swap_set;
        try {
            probe.validate(cfg.schedule.T);
        } catch (const std::exception& e) {
            throw ValidationError(std::string("config: traversal.swap_set: ") + e.what());
        }
        bool found = false;
        for (int tau : cfg.traversal.swap_set) found |= tau == cfg.traversal.cfrt_tau;
        if (!found) throw ValidationError("config: traversal.cfrt_tau must be a member of swap_set");
    }

    if (root.contains("interpolation")) {
        const json& i = root["interpolation"];
        reject_unknown(i, {"n_ctrl", "m"}, "interpolation.");
        cfg.interpolation.n_ctrl = i.value("n_ctrl", cfg.interpolation.n_ctrl);
        cfg.interpolation.m = i.value("m", cfg.interpolation.m);
        if (cfg.interpolation.n_ctrl < 2) throw ValidationError("config: interpolation.n_ctrl must be >= 2");
        if (cfg.interpolation.m < 2) throw ValidationError("config: interpolation.m must be >= 2");
    }

    cfg.output_dir = root.value("output_dir", cfg.output_dir);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    return parse_run_config(std::string(bytes.begin(), bytes.end()));
}

std::string run_config_canonical_json(const RunConfig& cfg) {
    json j;
    j["seeds"] = {{"dataset", cfg.seeds.dataset},
                  {"table", cfg.seeds.table},
                  {"denoiser", cfg.seeds.denoiser},
                  {"classifier", cfg.seeds.classifier},
                  {"noise_base", cfg.seeds.noise_base}};
    json probs;
    for (const auto& [a, p] : cfg.dataset.attr_probs) probs[attribute_name(a)] = p;
    j["dataset"] = {{"train_n", cfg.dataset.train_n},
                    {"val_n", cfg.dataset.val_n},
                    {"test_n", cfg.dataset.test_n},
                    {"attr_probs", probs}};
    j["schedule"] = {{"T", cfg.schedule.T},
                     {"beta_start", cfg.schedule.beta_start},
                     {"beta_end", cfg.schedule.beta_end}};
    const auto train_json = [](const TrainConfig& t) {
        return json{{"steps", t.steps}, {"batch", t.batch}, {"lr", t.lr}, {"beta1", t.beta1},
                    {"beta2", t.beta2}};
    };
    j["denoiser_train"] = train_json(cfg.denoiser_train);
    j["classifier_train"] = train_json(cfg.classifier_train);
    j["denoiser_arch"] = {{"hidden1", cfg.denoiser_arch.hidden1},
                          {"hidden2", cfg.denoiser_arch.hidden2},
                          {"time_dim", cfg.denoiser_arch.time_dim},
                          {"emb_proj", cfg.denoiser_arch.emb_proj}};
    j["classifier_arch"] = {{"hidden1", cfg.classifier_arch.hidden1},
                            {"hidden2", cfg.classifier_arch.hidden2}};
    json attrs = json::array();
    for (Attribute a : cfg.traversal.attributes) attrs.push_back(attribute_name(a));
    j["traversal"] = {{"swap_set", cfg.traversal.swap_set},
                      {"n_trajectories", cfg.traversal.n_trajectories},
                      {"cfrt_tau", cfg.traversal.cfrt_tau},
                      {"attributes", attrs}};
    j["interpolation"] = {{"n_ctrl", cfg.interpolation.n_ctrl}, {"m", cfg.interpolation.m}};
    j["output_dir"] = cfg.output_dir;
    return j.dump();
}

uint64_t run_config_hash(const RunConfig& cfg) {
    const std::string canon = run_config_canonical_json(cfg);
    return fnv1a64(canon.data(), canon.size());
}

void write_run_manifest(const RunManifest& m, const std::string& path) {
    json j;
    j["tool_version"] = m.tool_version;
    j["config_hash"] = m.config_hash;
    j["inputs"] = m.input_hashes;
    j["outputs"] = m.output_hashes;
    j["timings_ms"] = m.timings_ms;
    write_file_atomic(path, j.dump(2) + "\n");
}

} // namespace latlab
