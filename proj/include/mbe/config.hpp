#pragma once

// Run configuration: one JSON document per run.  Every object is checked
// against its list of known keys and every model invariant is re-validated
// at load time.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mbe/experiments.hpp"
#include "mbe/model.hpp"

namespace mbe {

inline constexpr int kConfigSchemaVersion = 1;

/// Malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimulateOptions {
    RhsKind kind = RhsKind::Full;
    Complex M0{0.0, 0.0};  ///< lab M, or Me for envelope kinds
    Vec3 S0{0.0, 0.0, 1.0};
    PureState C0{Complex{1.0, 0.0}, Complex{0.0, 0.0}};
    double t0 = 0.0;
    double t1 = 100.0;
    double dt = 0.1;
};

struct EquilibriaOptions {
    std::size_t samples = 65;
};

struct RunConfig {
    ModelParams model;
    Pumping pumping{Complex{1.0, 0.0}, {}};
    std::uint64_t seed = 1;
    double tol = 1e-10;
    SimulateOptions simulate;
    EquilibriaOptions equilibria;
    std::string experiment;  ///< empty when no experiment section is present
    nlohmann::json experiment_options = nlohmann::json::object();
};

namespace detail {

using JsonIn = nlohmann::json;

inline void require_keys(const JsonIn& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& item : obj.items())
        if (!allowed.count(item.key())) throw ConfigError(where + ": unknown key \"" + item.key() + "\"");
}

inline double get_number(const JsonIn& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    return v.get<double>();
}

inline Complex get_complex(const JsonIn& v, const std::string& where) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (!v.is_array() || v.size() != 2) throw ConfigError(where + ": expected [re, im]");
    return {get_number(v[0], where), get_number(v[1], where)};
}

inline Vec3 get_vec3(const JsonIn& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3) throw ConfigError(where + ": expected 3 numbers");
    return {get_number(v[0], where), get_number(v[1], where), get_number(v[2], where)};
}

inline std::vector<double> get_list(const JsonIn& v, const std::string& where) {
    if (!v.is_array() || v.empty()) throw ConfigError(where + ": expected a non-empty list of numbers");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(get_number(x, where));
    return out;
}

inline std::size_t get_count(const JsonIn& v, const std::string& where) {
    if (!v.is_number_integer() || v.get<long long>() <= 0) throw ConfigError(where + ": expected a positive integer");
    return v.get<std::size_t>();
}

template <class T>
void set_if(const JsonIn& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    const std::string w = where + "." + key;
    const auto& v = obj.at(key);
    if constexpr (std::is_same_v<T, double>)
        out = get_number(v, w);
    else if constexpr (std::is_same_v<T, Complex>)
        out = get_complex(v, w);
    else if constexpr (std::is_same_v<T, Vec3>)
        out = get_vec3(v, w);
    else if constexpr (std::is_same_v<T, std::vector<double>>)
        out = get_list(v, w);
    else if constexpr (std::is_same_v<T, std::size_t>)
        out = get_count(v, w);
    else if constexpr (std::is_same_v<T, int>)
        out = static_cast<int>(get_count(v, w));
    else if constexpr (std::is_same_v<T, std::optional<double>>)
        out = get_number(v, w);
    else
        static_assert(sizeof(T) == 0, "unsupported config field type");
}

inline RhsKind parse_kind(const JsonIn& v) {
    if (!v.is_string()) throw ConfigError("simulate.kind: expected a string");
    const auto s = v.get<std::string>();
    if (s == "full") return RhsKind::Full;
    if (s == "pure") return RhsKind::PureState;
    if (s == "interaction") return RhsKind::Interaction;
    if (s == "averaged") return RhsKind::Averaged;
    throw ConfigError("simulate.kind: expected full, pure, interaction or averaged, got \"" + s + "\"");
}

inline std::set<std::string> experiment_keys(const std::string& name) {
    if (name == "adiabatic") return {"name", "r", "p_values", "branch", "parameter", "points_per_period"};
    if (name == "stable")
        return {"name", "r_values", "p", "d", "s", "samples", "points_per_period", "attraction_r", "attraction_p",
                "time_samples"};
    if (name == "avg-vs-int") return {"name", "r", "p_values", "Me", "Se", "horizon_factor", "time_samples"};
    if (name == "kbm") return {"name", "r", "p_values", "box_lo", "box_hi", "grid", "points_per_period"};
    if (name == "apriori")
        return {"name", "r", "p", "amplitudes", "S0", "horizon_factor", "drift_limit", "points_per_period"};
    if (name == "pure-vs-mixed") return {"name", "r", "p", "C1", "C2", "M0", "horizon", "sample_dt"};
    throw ConfigError("experiment.name: unknown experiment \"" + name +
                      "\" (expected adiabatic, stable, avg-vs-int, kbm, apriori or pure-vs-mixed)");
}

}  // namespace detail

/// Parses and validates a configuration document.  Throws ConfigError for
/// structural problems and Error(InvalidParameter) for violated invariants.
inline RunConfig parse_config(const nlohmann::json& doc) {
    using namespace detail;
    require_keys(doc, "config",
                 {"schema_version", "model", "pumping", "seed", "tol", "simulate", "equilibria", "experiment"});
    if (!doc.contains("schema_version")) throw ConfigError("config: missing \"schema_version\"");
    if (!doc["schema_version"].is_number_integer() || doc["schema_version"].get<int>() != kConfigSchemaVersion)
        throw ConfigError("config: unsupported schema_version (expected " + std::to_string(kConfigSchemaVersion) +
                          ")");
    RunConfig cfg;
    if (doc.contains("model")) {
        const auto& m = doc["model"];
        require_keys(m, "model", {"omega1", "omega2", "Omega", "p", "gamma", "c", "hbar"});
        set_if(m, "omega1", cfg.model.omega1, "model");
        set_if(m, "omega2", cfg.model.omega2, "model");
        set_if(m, "Omega", cfg.model.Omega, "model");
        set_if(m, "p", cfg.model.p, "model");
        set_if(m, "gamma", cfg.model.gamma, "model");
        set_if(m, "c", cfg.model.c, "model");
        set_if(m, "hbar", cfg.model.hbar, "model");
    }
    if (doc.contains("pumping")) {
        const auto& p = doc["pumping"];
        require_keys(p, "pumping", {"Ae", "modes"});
        set_if(p, "Ae", cfg.pumping.Ae, "pumping");
        if (p.contains("modes")) {
            if (!p["modes"].is_array()) throw ConfigError("pumping.modes: expected a list");
            for (std::size_t k = 0; k < p["modes"].size(); ++k) {
                const auto& mode = p["modes"][k];
                const std::string w = "pumping.modes[" + std::to_string(k) + "]";
                require_keys(mode, w, {"amplitude", "frequency"});
                if (!mode.contains("amplitude") || !mode.contains("frequency"))
                    throw ConfigError(w + ": needs amplitude and frequency");
                cfg.pumping.modes.push_back(
                    {get_complex(mode["amplitude"], w + ".amplitude"), get_number(mode["frequency"], w + ".frequency")});
            }
        }
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) throw ConfigError("seed: expected an unsigned integer");
        cfg.seed = doc["seed"].get<std::uint64_t>();
    }
    set_if(doc, "tol", cfg.tol, "config");
    if (!(cfg.tol > 0.0 && cfg.tol < 1.0)) throw ConfigError("tol: expected 0 < tol < 1");

    if (doc.contains("simulate")) {
        const auto& s = doc["simulate"];
        require_keys(s, "simulate", {"kind", "M", "S", "C1", "C2", "t0", "t1", "dt"});
        if (s.contains("kind")) cfg.simulate.kind = parse_kind(s["kind"]);
        set_if(s, "M", cfg.simulate.M0, "simulate");
        set_if(s, "S", cfg.simulate.S0, "simulate");
        set_if(s, "C1", cfg.simulate.C0.C1, "simulate");
        set_if(s, "C2", cfg.simulate.C0.C2, "simulate");
        set_if(s, "t0", cfg.simulate.t0, "simulate");
        set_if(s, "t1", cfg.simulate.t1, "simulate");
        set_if(s, "dt", cfg.simulate.dt, "simulate");
        const auto& o = cfg.simulate;
        if (!(o.t1 > o.t0)) throw ConfigError("simulate: t1 > t0 violated");
        if (!(o.dt > 0.0)) throw ConfigError("simulate: dt > 0 violated");
        if (o.kind == RhsKind::PureState) {
            if (s.contains("S")) throw ConfigError("simulate: pure kind takes C1 and C2, not S");
            o.C0.validate(1e-12);
        } else {
            if (s.contains("C1") || s.contains("C2")) throw ConfigError("simulate: C1 and C2 need kind \"pure\"");
            if (norm(o.S0) > 1.0 + kTolBall) throw ConfigError("simulate.S: |S| <= 1 violated");
        }
    }
    if (doc.contains("equilibria")) {
        const auto& e = doc["equilibria"];
        require_keys(e, "equilibria", {"samples"});
        set_if(e, "samples", cfg.equilibria.samples, "equilibria");
        if (cfg.equilibria.samples < 2) throw ConfigError("equilibria.samples: expected at least 2");
    }
    if (doc.contains("experiment")) {
        const auto& e = doc["experiment"];
        if (!e.is_object() || !e.contains("name") || !e["name"].is_string())
            throw ConfigError("experiment: needs a string \"name\"");
        cfg.experiment = e["name"].get<std::string>();
        require_keys(e, "experiment", experiment_keys(cfg.experiment));
        cfg.experiment_options = e;
    }
    cfg.model.validate();
    cfg.pumping.validate(cfg.model.Omega);
    return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

/// Stable identity of a configuration: hash of the key-sorted compact dump.
inline std::string config_hash(const nlohmann::json& doc) { return hex64(fnv1a64(doc.dump())); }

// Campaign configs built from the experiment section.  Model frequencies,
// pumping, tol and seed come from the top level.

inline AdiabaticConfig adiabatic_config(const RunConfig& rc) {
    AdiabaticConfig c;
    c.base = rc.model;
    c.pumping = rc.pumping;
    c.tol = rc.tol;
    const auto& e = rc.experiment_options;
    detail::set_if(e, "r", c.r, "experiment");
    detail::set_if(e, "p_values", c.p_values, "experiment");
    detail::set_if(e, "parameter", c.parameter, "experiment");
    detail::set_if(e, "points_per_period", c.points_per_period, "experiment");
    if (e.contains("branch")) {
        const auto b = e["branch"].is_string() ? e["branch"].get<std::string>() : "";
        if (b == "Z1")
            c.branch = Branch::Z1;
        else if (b == "Z2")
            c.branch = Branch::Z2;
        else
            throw ConfigError("experiment.branch: expected \"Z1\" or \"Z2\"");
    }
    return c;
}

inline StableConfig stable_config(const RunConfig& rc) {
    StableConfig c;
    c.base = rc.model;
    c.pumping = rc.pumping;
    c.tol = rc.tol;
    c.seed = rc.seed;
    const auto& e = rc.experiment_options;
    detail::set_if(e, "r_values", c.r_values, "experiment");
    detail::set_if(e, "p", c.p, "experiment");
    detail::set_if(e, "d", c.d, "experiment");
    detail::set_if(e, "s", c.s, "experiment");
    detail::set_if(e, "samples", c.samples, "experiment");
    detail::set_if(e, "points_per_period", c.points_per_period, "experiment");
    return c;
}

/// Attraction under the averaged flow from the same tube as the stable run.
inline AttractionConfig attraction_config(const RunConfig& rc) {
    AttractionConfig c;
    c.base = rc.model;
    c.pumping = rc.pumping;
    c.tol = rc.tol;
    c.seed = rc.seed;
    const auto& e = rc.experiment_options;
    detail::set_if(e, "d", c.d, "experiment");
    detail::set_if(e, "s", c.s, "experiment");
    detail::set_if(e, "samples", c.samples, "experiment");
    detail::set_if(e, "attraction_r", c.r, "experiment");
    detail::set_if(e, "attraction_p", c.p, "experiment");
    detail::set_if(e, "time_samples", c.time_samples, "experiment");
    return c;
}

inline AvgVsIntConfig avg_vs_int_config(const RunConfig& rc) {
    AvgVsIntConfig c;
    c.base = rc.model;
    c.pumping = rc.pumping;
    c.tol = rc.tol;
    const auto& e = rc.experiment_options;
    detail::set_if(e, "r", c.r, "experiment");
    detail::set_if(e, "p_values", c.p_values, "experiment");
    detail::set_if(e, "Me", c.initial.Me, "experiment");
    detail::set_if(e, "Se", c.initial.Se, "experiment");
    detail::set_if(e, "horizon_factor", c.horizon_factor, "experiment");
    detail::set_if(e, "time_samples", c.time_samples, "experiment");
    return c;
}

inline KbmConfig kbm_config(const RunConfig& rc) {
    KbmConfig c;
    c.base = rc.model;
    c.pumping = rc.pumping;
    const auto& e = rc.experiment_options;
    detail::set_if(e, "r", c.r, "experiment");
    detail::set_if(e, "p_values", c.p_values, "experiment");
    detail::set_if(e, "grid", c.grid, "experiment");
    detail::set_if(e, "points_per_period", c.points_per_period, "experiment");
    for (const char* key : {"box_lo", "box_hi"}) {
        if (!e.contains(key)) continue;
        const auto v = detail::get_list(e[key], std::string("experiment.") + key);
        if (v.size() != 5) throw ConfigError(std::string("experiment.") + key + ": expected 5 numbers");
        auto& box = std::string(key) == "box_lo" ? c.box_lo : c.box_hi;
        std::copy(v.begin(), v.end(), box.begin());
    }
    return c;
}

inline AprioriConfig apriori_config(const RunConfig& rc) {
    AprioriConfig c;
    c.base = rc.model;
    c.pumping = rc.pumping;
    c.tol = std::min(rc.tol, c.tol);
    const auto& e = rc.experiment_options;
    detail::set_if(e, "r", c.r, "experiment");
    detail::set_if(e, "p", c.p, "experiment");
    detail::set_if(e, "amplitudes", c.amplitudes, "experiment");
    detail::set_if(e, "S0", c.S0, "experiment");
    detail::set_if(e, "horizon_factor", c.horizon_factor, "experiment");
    detail::set_if(e, "drift_limit", c.drift_limit, "experiment");
    detail::set_if(e, "points_per_period", c.points_per_period, "experiment");
    return c;
}

inline PureMixedConfig pure_mixed_config(const RunConfig& rc) {
    PureMixedConfig c;
    c.base = rc.model;
    c.pumping = rc.pumping;
    c.tol = rc.tol;
    const auto& e = rc.experiment_options;
    detail::set_if(e, "r", c.r, "experiment");
    detail::set_if(e, "p", c.p, "experiment");
    detail::set_if(e, "C1", c.C0.C1, "experiment");
    detail::set_if(e, "C2", c.C0.C2, "experiment");
    detail::set_if(e, "M0", c.M0, "experiment");
    detail::set_if(e, "horizon", c.horizon, "experiment");
    detail::set_if(e, "sample_dt", c.sample_dt, "experiment");
    c.C0.validate(1e-12);
    return c;
}

}  // namespace mbe
