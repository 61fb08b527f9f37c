#pragma once

// JSON encodings of parameters, campaign configs and reports.  Documents
// carry a "content_hash" over their canonical dump, so any rerun with the
// same inputs is byte-identical and can be re-verified.

#include <string>
#include <vector>

#include "json.hpp"

#include "mbe/equilibria.hpp"
#include "mbe/experiments.hpp"
#include "mbe/io.hpp"
#include "mbe/model.hpp"

namespace mbe {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

inline Json complex_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json to_json(const ModelParams& m) {
    return Json{{"omega1", m.omega1}, {"omega2", m.omega2}, {"Omega", m.Omega}, {"p", m.p},
                {"gamma", m.gamma},   {"c", m.c},           {"hbar", m.hbar}};
}

inline Json to_json(const Pumping& P) {
    Json modes = Json::array();
    for (const auto& mode : P.modes)
        modes.push_back(Json{{"amplitude", complex_json(mode.amplitude)}, {"frequency", mode.frequency}});
    return Json{{"Ae", complex_json(P.Ae)}, {"modes", modes}};
}

inline Json to_json(const EnvelopeState& s) {
    return Json{{"Me", complex_json(s.Me)}, {"Se", Json::array({s.Se[0], s.Se[1], s.Se[2]})}};
}

template <std::size_t N>
Json vec_json(const Vec<N>& v) {
    Json out = Json::array();
    for (double x : v) out.push_back(x);
    return out;
}

inline Json to_json(const ScalingReport& r) {
    return Json{{"p_values", r.p_values},         {"errors", r.errors},
                {"field_errors", r.field_errors}, {"bloch_errors", r.bloch_errors},
                {"ratios", r.ratios},             {"slope", r.slope},
                {"ratios_ok", r.ratios_ok},       {"slope_ok", r.slope_ok},
                {"pass", r.pass}};
}

inline Json to_json(const StableReport& r) {
    Json cases = Json::array();
    for (const auto& c : r.cases)
        cases.push_back(Json{{"r", c.r},
                             {"p", c.p},
                             {"d", c.d},
                             {"s", c.s},
                             {"max_field_deviation", c.max_field_deviation},
                             {"max_distance", c.max_distance},
                             {"max_limit_deviation", c.max_limit_deviation},
                             {"constant", c.constant},
                             {"limit_ok", c.limit_ok}});
    return Json{{"cases", cases},
                {"constant_spread", r.constant_spread},
                {"constant_stable", r.constant_stable},
                {"limits_ok", r.limits_ok},
                {"pass", r.pass}};
}

inline Json to_json(const AttractionReport& r) {
    Json cases = Json::array();
    for (const auto& c : r.cases)
        cases.push_back(Json{{"d", c.d},
                             {"s", c.s},
                             {"samples", c.samples},
                             {"max_distance", c.max_distance},
                             {"constant", c.constant},
                             {"max_limit_deviation", c.max_limit_deviation},
                             {"max_normal_rate", c.max_normal_rate},
                             {"checked_points", c.checked_points},
                             {"monotone_violations", c.monotone_violations}});
    return Json{{"cases", cases},
                {"constant_ratio", r.constant_ratio},
                {"constant_stable", r.constant_stable},
                {"monotone", r.monotone},
                {"pass", r.pass}};
}

inline Json to_json(const AvgVsIntReport& r) {
    return Json{{"p_values", r.p_values},
                {"max_difference", r.max_difference},
                {"ratios", r.ratios},
                {"pass", r.pass}};
}

inline Json to_json(const NonResonantReport& r) {
    return Json{{"max_relative_deviation", r.max_relative_deviation},
                {"max_bloch_drift", r.max_bloch_drift},
                {"pass", r.pass}};
}

inline Json to_json(const KbmReport& r) {
    return Json{{"p_values", r.p_values},         {"delta", r.delta},
                {"delta_over_p", r.delta_over_p}, {"variation", r.variation},
                {"mean_mismatch", r.mean_mismatch}, {"pass", r.pass}};
}

inline Json to_json(const BoundRun& r) {
    return Json{{"initial_energy", r.initial_energy}, {"sup_energy", r.sup_energy},
                {"final_energy", r.final_energy},     {"drift", r.drift},
                {"max_trace_error", r.max_trace_error}};
}

inline Json to_json(const BoundReport& r) {
    Json base = Json::array(), doubled = Json::array();
    for (const auto& x : r.base) base.push_back(to_json(x));
    for (const auto& x : r.doubled) doubled.push_back(to_json(x));
    return Json{{"horizon", r.horizon}, {"fitted_constant", r.fitted_constant},
                {"base", base},         {"doubled", doubled},
                {"max_drift", r.max_drift}, {"bounded", r.bounded},
                {"drift_ok", r.drift_ok},   {"trace_ok", r.trace_ok},
                {"pass", r.pass}};
}

inline Json to_json(const PureMixedReport& r) {
    return Json{{"max_frobenius", r.max_frobenius},
                {"max_current_difference", r.max_current_difference},
                {"pass", r.pass}};
}

inline std::string content_hash(const Json& doc) {
    Json copy = doc;
    copy.erase("content_hash");
    return hex64(fnv1a64(copy.dump()));
}

/// Appends "content_hash" computed over everything else.
inline void seal(Json& doc) {
    doc.erase("content_hash");
    doc["content_hash"] = content_hash(doc);
}

inline bool verify_sealed(const Json& doc) {
    return doc.contains("content_hash") && doc["content_hash"].is_string() &&
           doc["content_hash"].get<std::string>() == content_hash(doc);
}

}  // namespace mbe
