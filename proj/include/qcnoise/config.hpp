// Copyright 2026 The qcnoise Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// JSON experiment configs and `key=value` overrides.
//
// Keys (all optional, defaults from ExperimentConfig):
//   experiment      ensemble | sweep | contour | trace | bounds-audit
//   task            "scs_to_scs" | "scs_to_non_scs" | "easy" | "hard" | "both" | list
//   delta, u_int    hopping rate; interaction (number or "scaled" for 2 delta / j)
//   j               number or list, multiples of 1/2
//   t_final, n_steps, stride, L, seed, threads
//   noise.gamma_z, noise.c_z        number or list
//   noise.target_delta_p            > 0 calibrates c_z at the first j
//   hard_field, easy_field          generator, seed, n_modes, u_max, n_candidates,
//                                   horizon_steps, apply_steps, design_j, value, path
//   output, c_order, purity_floor, noise_floor, contour_level

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qcnoise/experiments.hpp"

namespace qcnoise {

using Json = nlohmann::json;

namespace detail {

inline std::string join_key(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

inline void reject_unknown(const Json& obj, const std::string& prefix, const std::set<std::string>& known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!known.count(it.key())) throw ConfigError(join_key(prefix, it.key()), "unknown key");
    }
}

inline double get_number(const Json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError(key, "expected a number, got " + std::string(v.type_name()));
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(key, "must be finite");
    return d;
}

inline int get_int(const Json& v, const std::string& key) {
    if (!v.is_number_integer()) throw ConfigError(key, "expected an integer, got " + v.dump());
    const auto i = v.get<std::int64_t>();
    if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max()) throw ConfigError(key, "out of range");
    return static_cast<int>(i);
}

inline std::uint64_t get_u64(const Json& v, const std::string& key) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError(key, "expected a nonnegative integer, got " + v.dump());
}

inline std::string get_string(const Json& v, const std::string& key) {
    if (!v.is_string()) throw ConfigError(key, "expected a string, got " + std::string(v.type_name()));
    return v.get<std::string>();
}

inline std::vector<double> get_number_list(const Json& v, const std::string& key) {
    std::vector<double> out;
    if (v.is_array()) {
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], key + "[" + std::to_string(i) + "]"));
    } else {
        out.push_back(get_number(v, key));
    }
    if (out.empty()) throw ConfigError(key, "list must be nonempty");
    return out;
}

inline int spin_to_two_j(double j, const std::string& key) {
    const double tj = 2.0 * j;
    if (std::abs(tj - std::round(tj)) > 1e-12) throw ConfigError(key, "j must be a multiple of 1/2");
    return static_cast<int>(std::lround(tj));
}

inline FieldSpec parse_field(const Json& obj, const std::string& key, FieldSpec f) {
    if (!obj.is_object()) throw ConfigError(key, "expected an object");
    reject_unknown(obj, key,
                   {"generator", "seed", "n_modes", "u_max", "n_candidates", "horizon_steps", "apply_steps", "design_j",
                    "value", "path"});
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        const std::string k = key + "." + it.key();
        const Json& v = it.value();
        if (it.key() == "generator") f.generator = get_string(v, k);
        else if (it.key() == "seed") f.seed = get_u64(v, k);
        else if (it.key() == "n_modes") f.n_modes = get_int(v, k);
        else if (it.key() == "u_max") f.u_max = get_number(v, k);
        else if (it.key() == "n_candidates") f.n_candidates = get_int(v, k);
        else if (it.key() == "horizon_steps") f.horizon_steps = get_int(v, k);
        else if (it.key() == "apply_steps") f.apply_steps = get_int(v, k);
        else if (it.key() == "design_j") f.design_j = get_number(v, k);
        else if (it.key() == "value") f.value = get_number(v, k);
        else if (it.key() == "path") f.path = get_string(v, k);
    }
    return f;
}

inline Json field_to_json(const FieldSpec& f) {
    return Json{{"generator", f.generator}, {"seed", f.seed},         {"n_modes", f.n_modes},
                {"u_max", f.u_max},         {"n_candidates", f.n_candidates}, {"horizon_steps", f.horizon_steps},
                {"apply_steps", f.apply_steps}, {"design_j", f.design_j}, {"value", f.value},
                {"path", f.path}};
}

}  // namespace detail

/// Converts a parsed JSON document into a validated config.
inline ExperimentConfig config_from_json(const Json& doc) {
    using namespace detail;
    if (!doc.is_object()) throw ConfigError("", "config root must be a JSON object");
    reject_unknown(doc, "",
                   {"experiment", "task", "delta", "u_int", "j", "t_final", "n_steps", "stride", "L", "seed", "noise",
                    "hard_field", "easy_field", "output", "c_order", "purity_floor", "noise_floor", "contour_level",
                    "threads"});
    ExperimentConfig cfg;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string& k = it.key();
        const Json& v = it.value();
        if (k == "experiment") {
            cfg.experiment = get_string(v, k);
        } else if (k == "task") {
            std::vector<std::string> names;
            if (v.is_array()) {
                for (std::size_t i = 0; i < v.size(); ++i) names.push_back(get_string(v[i], "task[" + std::to_string(i) + "]"));
            } else {
                names.push_back(get_string(v, k));
            }
            cfg.tasks.clear();
            for (const auto& n : names) {
                if (n == "both") {
                    cfg.tasks.push_back(TaskKind::scs_to_scs);
                    cfg.tasks.push_back(TaskKind::scs_to_non_scs);
                    continue;
                }
                const auto t = parse_task(n);
                if (!t) throw ConfigError("task", "unknown task '" + n + "' (expected scs_to_scs, scs_to_non_scs or both)");
                cfg.tasks.push_back(*t);
            }
        } else if (k == "delta") {
            cfg.delta = get_number(v, k);
        } else if (k == "u_int") {
            if (v.is_string()) {
                if (v.get<std::string>() != "scaled") throw ConfigError(k, "expected a number or \"scaled\"");
                cfg.u_int.reset();
            } else {
                cfg.u_int = get_number(v, k);
            }
        } else if (k == "j") {
            cfg.two_j.clear();
            for (double j : get_number_list(v, k)) cfg.two_j.push_back(spin_to_two_j(j, k));
        } else if (k == "t_final") {
            cfg.t_final = get_number(v, k);
        } else if (k == "n_steps") {
            cfg.n_steps = get_int(v, k);
        } else if (k == "stride") {
            cfg.stride = get_int(v, k);
        } else if (k == "L") {
            cfg.realizations = get_int(v, k);
        } else if (k == "seed") {
            cfg.seed = get_u64(v, k);
        } else if (k == "noise") {
            if (!v.is_object()) throw ConfigError(k, "expected an object");
            reject_unknown(v, "noise", {"gamma_z", "c_z", "target_delta_p"});
            if (v.contains("gamma_z")) cfg.gamma_z = get_number_list(v["gamma_z"], "noise.gamma_z");
            if (v.contains("c_z")) cfg.c_z = get_number_list(v["c_z"], "noise.c_z");
            if (v.contains("target_delta_p")) cfg.target_delta_p = get_number(v["target_delta_p"], "noise.target_delta_p");
        } else if (k == "hard_field") {
            cfg.hard_field = parse_field(v, k, cfg.hard_field);
        } else if (k == "easy_field") {
            cfg.easy_field = parse_field(v, k, cfg.easy_field);
        } else if (k == "output") {
            cfg.output = get_string(v, k);
        } else if (k == "c_order") {
            cfg.c_order = get_number(v, k);
        } else if (k == "purity_floor") {
            cfg.purity_floor = get_number(v, k);
        } else if (k == "noise_floor") {
            cfg.noise_floor = get_number(v, k);
        } else if (k == "contour_level") {
            cfg.contour_level = get_number(v, k);
        } else if (k == "threads") {
            cfg.threads = get_int(v, k);
        }
    }
    cfg.validate();
    return cfg;
}

/// Full config as JSON, with every default made explicit.
inline Json config_to_json(const ExperimentConfig& cfg) {
    Json tasks = Json::array();
    for (TaskKind t : cfg.tasks) tasks.push_back(task_name(t));
    Json js = Json::array();
    for (int tj : cfg.two_j) js.push_back(0.5 * tj);
    return Json{{"experiment", cfg.experiment},
                {"task", tasks},
                {"delta", cfg.delta},
                {"u_int", cfg.u_int ? Json(*cfg.u_int) : Json("scaled")},
                {"j", js},
                {"t_final", cfg.t_final},
                {"n_steps", cfg.n_steps},
                {"stride", cfg.stride},
                {"L", cfg.realizations},
                {"seed", cfg.seed},
                {"noise", {{"gamma_z", cfg.gamma_z}, {"c_z", cfg.c_z}, {"target_delta_p", cfg.target_delta_p}}},
                {"hard_field", detail::field_to_json(cfg.hard_field)},
                {"easy_field", detail::field_to_json(cfg.easy_field)},
                {"output", cfg.output},
                {"c_order", cfg.c_order},
                {"purity_floor", cfg.purity_floor},
                {"noise_floor", cfg.noise_floor},
                {"contour_level", cfg.contour_level},
                {"threads", cfg.threads}};
}

/// Applies `a.b.c=value`. The value is parsed as JSON when possible and
/// taken as a plain string otherwise.
inline void apply_override(Json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("", "override '" + assignment + "' is not of the form key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    Json value = Json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    Json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError(key, "empty path component in override");
        if (!node->is_object()) throw ConfigError(key, "cannot descend into a non-object value");
        if (dot == std::string::npos) {
            (*node)[part] = std::move(value);
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = Json::object();
        start = dot + 1;
    }
}

inline Json load_config_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("", "cannot open config file '" + path + "'");
    Json doc = Json::parse(is, nullptr, false, /*ignore_comments=*/true);
    if (doc.is_discarded()) throw ConfigError("", "config file '" + path + "' is not valid JSON");
    return doc;
}

}  // namespace qcnoise
