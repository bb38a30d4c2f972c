#pragma once

#include <array>
#include <cerrno>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swde/errors.hpp"
#include "swde/trainer.hpp"

// Training configuration file: one `key = value` per line, `#` starts a
// comment, keys are the TrainConfig field names listed in config_fields().
// List-valued keys take comma-separated integers, e.g. `conv_widths = 3,3,3`.

namespace swde {

namespace detail {

inline std::string trim(std::string s) {
    const char* ws = " \t\r\n";
    s.erase(0, s.find_first_not_of(ws));
    s.erase(s.find_last_not_of(ws) + 1);
    return s;
}

inline double parse_double(const std::string& field, const std::string& v) {
    const std::string s = trim(v);
    char* end = nullptr;
    errno = 0;
    const double d = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
        throw ConfigError(field, "expected a number, got '" + v + "'");
    }
    return d;
}

inline std::uint64_t parse_uint(const std::string& field, const std::string& v) {
    const std::string s = trim(v);
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError(field, "expected a non-negative integer, got '" + v + "'");
    }
    errno = 0;
    char* end = nullptr;
    const unsigned long long n = std::strtoull(s.c_str(), &end, 10);
    if (errno == ERANGE) throw ConfigError(field, "integer out of range: '" + v + "'");
    return n;
}

inline std::array<std::size_t, 3> parse_triple(const std::string& field, std::string v) {
    v = trim(v);
    if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
    std::array<std::size_t, 3> out{};
    std::stringstream ss(v);
    std::string item;
    std::size_t n = 0;
    while (std::getline(ss, item, ',')) {
        if (n == 3) throw ConfigError(field, "expected exactly 3 comma-separated integers");
        out[n++] = parse_uint(field, item);
    }
    if (n != 3) throw ConfigError(field, "expected exactly 3 comma-separated integers");
    return out;
}

}  // namespace detail

struct ConfigField {
    const char* name;
    std::function<void(TrainConfig&, const std::string&)> set;
    std::function<nlohmann::json(const TrainConfig&)> get;
};

inline const std::vector<ConfigField>& config_fields() {
    using detail::parse_double;
    using detail::parse_uint;
#define SWDE_UINT_FIELD(key, member)                                                            \
    ConfigField {                                                                               \
        key, [](TrainConfig& c, const std::string& v) { c.member = parse_uint(key, v); },       \
            [](const TrainConfig& c) { return nlohmann::json(c.member); }                       \
    }
#define SWDE_REAL_FIELD(key, member)                                                            \
    ConfigField {                                                                               \
        key, [](TrainConfig& c, const std::string& v) { c.member = parse_double(key, v); },     \
            [](const TrainConfig& c) { return nlohmann::json(c.member); }                       \
    }
    static const std::vector<ConfigField> fields = {
        SWDE_UINT_FIELD("batch_size", batch_size),
        SWDE_UINT_FIELD("epochs", epochs),
        SWDE_UINT_FIELD("seed", seed),
        SWDE_REAL_FIELD("adadelta_rho", adadelta_rho),
        SWDE_REAL_FIELD("adadelta_eps", adadelta_eps),
        SWDE_REAL_FIELD("clip_norm", clip_norm),
        SWDE_UINT_FIELD("k_ceiling", k_ceiling),
        SWDE_UINT_FIELD("char_min_count", char_min_count),
        SWDE_UINT_FIELD("token_min_count", token_min_count),
        SWDE_UINT_FIELD("l_char", dims.max_chars),
        SWDE_UINT_FIELD("d_char", dims.d_char),
        ConfigField{"conv_widths",
                    [](TrainConfig& c, const std::string& v) { c.dims.conv_widths = detail::parse_triple("conv_widths", v); },
                    [](const TrainConfig& c) { return nlohmann::json(c.dims.conv_widths); }},
        ConfigField{"conv_channels",
                    [](TrainConfig& c, const std::string& v) { c.dims.conv_channels = detail::parse_triple("conv_channels", v); },
                    [](const TrainConfig& c) { return nlohmann::json(c.dims.conv_channels); }},
        SWDE_UINT_FIELD("d_h", dims.d_h),
        SWDE_UINT_FIELD("d_a", dims.d_a),
        SWDE_UINT_FIELD("d_t", dims.d_t),
        SWDE_UINT_FIELD("d1", dims.d1),
        SWDE_UINT_FIELD("d2", dims.d2),
        SWDE_UINT_FIELD("doc2vec_epochs", doc2vec.epochs),
        SWDE_UINT_FIELD("doc2vec_negatives", doc2vec.negatives),
        SWDE_REAL_FIELD("doc2vec_alpha", doc2vec.alpha),
        SWDE_REAL_FIELD("doc2vec_min_alpha", doc2vec.min_alpha),
        SWDE_UINT_FIELD("infer_steps", infer_steps),
    };
#undef SWDE_UINT_FIELD
#undef SWDE_REAL_FIELD
    return fields;
}

inline void set_config_value(TrainConfig& config, const std::string& key, const std::string& value) {
    for (const auto& f : config_fields()) {
        if (key == f.name) {
            f.set(config, value);
            return;
        }
    }
    throw ConfigError(key, "unknown configuration key");
}

/// Applies `key = value` lines to `base` and validates the result.
inline TrainConfig parse_config(std::istream& in, TrainConfig base = {}) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno), "expected key = value");
        }
        set_config_value(base, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    base.validate();
    return base;
}

inline TrainConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path.string());
    return parse_config(in);
}

inline nlohmann::json config_to_json(const TrainConfig& c) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& f : config_fields()) j[f.name] = f.get(c);
    return j;
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    for (const auto& f : config_fields()) {
        auto it = j.find(f.name);
        if (it == j.end()) continue;
        f.set(c, it->is_string() ? it->get<std::string>() : it->dump());
    }
    return c;
}

}  // namespace swde
