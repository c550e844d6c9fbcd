#include "chord/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

namespace chord {

namespace fs = std::filesystem;

Json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    try {
        Json j = Json::parse(in);
        if (!j.is_object()) throw ConfigError("config " + path + " must be a JSON object");
        return j;
    } catch (const Json::parse_error& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
}

void apply_override(Json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    Json value;
    try {
        value = Json::parse(text);
    } catch (const Json::parse_error&) {
        value = text;
    }
    Json* node = &config;
    size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override key '" + key + "' has an empty segment");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = Json::object();
        node = &(*node)[part];
        start = dot + 1;
    }
}

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

}  // namespace

Schedule schedule_from_json(const Json& j, const std::string& base_dir) {
    if (!j.is_object()) throw ConfigError("schedule section must be an object");
    const ScheduleKind kind = parse_schedule_kind(get_or<std::string>(j, "kind", "linear_interp"));
    Schedule s;
    switch (kind) {
        case ScheduleKind::vp_const_beta:
            s = Schedule::vp_const_beta(get_or<double>(j, "beta0", 1.0));
            break;
        case ScheduleKind::vp_generic: {
            if (j.contains("beta_csv")) {
                fs::path p = get_or<std::string>(j, "beta_csv", "");
                if (p.is_relative()) p = fs::path(base_dir) / p;
                s = Schedule::vp_generic(load_beta_csv(p.string()));
            } else if (j.contains("beta_t") && j.contains("beta")) {
                s = Schedule::vp_generic(BetaTable(j.at("beta_t").get<std::vector<double>>(),
                                                   j.at("beta").get<std::vector<double>>()));
            } else {
                throw ConfigError("vp_generic needs beta_csv or beta_t/beta arrays");
            }
            break;
        }
        case ScheduleKind::linear_interp:
            s = Schedule::linear_interp();
            break;
    }
    s.alpha_floor = get_or<double>(j, "alpha_floor", s.alpha_floor);
    s.fd_step = get_or<double>(j, "fd_step", s.fd_step);
    s.orientation = parse_orientation(get_or<std::string>(j, "orientation", "data_at_zero"));
    s.validate();
    return s;
}

GaussianMixture mixture_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("mixture section must be an object");
    GaussianMixture m;
    try {
        m.weights = j.at("weights").get<std::vector<double>>();
        m.scales = j.at("scales").get<std::vector<double>>();
        for (const auto& mu : j.at("means")) {
            const auto v = mu.get<std::vector<double>>();
            m.means.push_back(Eigen::Map<const Vec>(v.data(), long(v.size())));
        }
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("mixture: ") + e.what());
    }
    m.validate();
    return m;
}

BackboneModel backbone_from_json(const Json& j, const std::string& base_dir) {
    if (j.is_string()) return load_preset(j.get<std::string>());
    if (!j.is_object()) throw ConfigError("backbone section must be an object or preset name");
    BackboneModel model;
    if (j.contains("preset")) {
        model = load_preset(j.at("preset").get<std::string>());
        if (j.contains("output_kind")) model.output_kind = parse_param_kind(j.at("output_kind").get<std::string>());
        if (j.contains("schedule")) model.schedule = schedule_from_json(j.at("schedule"), base_dir);
        if (j.contains("source")) model.source = mixture_from_json(j.at("source"));
        if (j.contains("target")) model.target = mixture_from_json(j.at("target"));
        model.validate();
        return model;
    }
    if (!j.contains("source") || !j.contains("target")) throw ConfigError("inline backbone needs source and target");
    model.schedule = schedule_from_json(j.value("schedule", Json::object()), base_dir);
    model.source = mixture_from_json(j.at("source"));
    model.target = mixture_from_json(j.at("target"));
    model.output_kind = parse_param_kind(get_or<std::string>(j, "output_kind", "velocity"));
    model.validate();
    return model;
}

ChordParams chord_params_from_json(const Json& j) {
    ChordParams p;
    if (j.is_null()) return p;
    if (!j.is_object()) throw ConfigError("chord section must be an object");
    p.t = get_or<double>(j, "t", p.t);
    p.delta = get_or<double>(j, "delta", p.delta);
    p.lambda = get_or<double>(j, "lambda", p.lambda);
    p.t_c = get_or<double>(j, "t_c", p.t_c);
    p.n = get_or<int>(j, "n", p.n);
    p.use_prox = get_or<bool>(j, "use_prox", p.use_prox);
    p.decouple_times = get_or<bool>(j, "decouple_times", p.decouple_times);
    p.prox_shares_noise = get_or<bool>(j, "prox_shares_noise", p.prox_shares_noise);
    p.validate();
    return p;
}

std::string preset_dir() {
    if (const char* env = std::getenv("CHORD_PRESET_DIR"); env && *env) return env;
    return std::string(CHORD_DATA_DIR) + "/presets";
}

std::vector<std::string> preset_names() { return {"two_blob_1d", "two_blob_2d", "ring_3blob", "stiff_2d"}; }

BackboneModel load_preset(const std::string& name) {
    const fs::path path = fs::path(preset_dir()) / (name + ".json");
    if (!fs::exists(path)) throw ConfigError("unknown preset '" + name + "' (looked in " + preset_dir() + ")");
    Json j = load_config(path.string());
    j.erase("name");
    j.erase("description");
    return backbone_from_json(j, path.parent_path().string());
}

}  // namespace chord
