#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "solab/dsl/eval.hpp"
#include "solab/dsl/parser.hpp"
#include "solab/error.hpp"

namespace solab::dsl {

struct ParamAxis {
    std::string name;
    double min = 0.0;
    double max = 1.0;
    bool periodic = false;
};

struct ChartDefinition {
    int dim = 0;
    int codim_total = 0;  // ambient dimension n + m
    std::vector<ParamAxis> params;
    std::vector<std::string> sources;
    std::vector<Expr> coords;

    std::vector<std::string> names() const {
        std::vector<std::string> v;
        for (const auto& p : params) v.push_back(p.name);
        return v;
    }
};

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw input_error("InvalidChart", where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw input_error("InvalidChart", "unknown field '" + it.key() + "' in " + where);
    for (const auto& k : allowed)
        if (!j.contains(k)) throw input_error("InvalidChart", "missing field '" + k + "' in " + where);
}

inline bool valid_identifier(const std::string& s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

}  // namespace detail

// Builds and validates a chart from already-separated pieces.
inline ChartDefinition make_chart(int dim, int codim_total, std::vector<ParamAxis> params,
                                  std::vector<std::string> sources) {
    ChartDefinition c;
    c.dim = dim;
    c.codim_total = codim_total;
    if (dim < 1) throw input_error("InvalidChart", "dim must be >= 1");
    if (dim > kMaxJetDim) throw input_error("InvalidChart", "dim above " + std::to_string(kMaxJetDim) + " is not supported");
    if (codim_total < dim + 1) throw input_error("InvalidChart", "codim_total must be at least dim + 1");
    if (static_cast<int>(params.size()) != dim) throw input_error("InvalidChart", "params must list exactly dim axes");
    if (static_cast<int>(sources.size()) != codim_total)
        throw input_error("InvalidChart", "coords must list exactly codim_total expressions");
    std::set<std::string> seen;
    for (const auto& p : params) {
        if (!detail::valid_identifier(p.name)) throw input_error("InvalidChart", "bad parameter name '" + p.name + "'");
        if (is_reserved_name(p.name)) throw input_error("InvalidChart", "parameter name '" + p.name + "' is reserved");
        if (!seen.insert(p.name).second) throw input_error("InvalidChart", "duplicate parameter '" + p.name + "'");
        if (!(std::isfinite(p.min) && std::isfinite(p.max) && p.min < p.max))
            throw input_error("InvalidChart", "axis '" + p.name + "' needs finite min < max");
    }
    c.params = std::move(params);
    c.sources = std::move(sources);
    const auto names = c.names();
    for (std::size_t i = 0; i < c.sources.size(); ++i) {
        try {
            c.coords.push_back(parse(c.sources[i], names));
        } catch (const Error& e) {
            throw Error(e.code(), e.kind(), "coords[" + std::to_string(i) + "]: " + e.what(), e.position());
        }
    }
    return c;
}

inline ChartDefinition chart_from_json(const nlohmann::json& j) {
    detail::require_keys(j, {"dim", "codim_total", "params", "coords"}, "chart");
    if (!j["dim"].is_number_integer() || !j["codim_total"].is_number_integer())
        throw input_error("InvalidChart", "dim and codim_total must be integers");
    if (!j["params"].is_array() || !j["coords"].is_array())
        throw input_error("InvalidChart", "params and coords must be arrays");
    std::vector<ParamAxis> params;
    for (const auto& p : j["params"]) {
        detail::require_keys(p, {"name", "min", "max", "periodic"}, "params entry");
        if (!p["name"].is_string() || !p["min"].is_number() || !p["max"].is_number() || !p["periodic"].is_boolean())
            throw input_error("InvalidChart", "params entry has a field of the wrong type");
        params.push_back({p["name"].get<std::string>(), p["min"].get<double>(), p["max"].get<double>(),
                          p["periodic"].get<bool>()});
    }
    std::vector<std::string> sources;
    for (const auto& s : j["coords"]) {
        if (!s.is_string()) throw input_error("InvalidChart", "coords entries must be strings");
        sources.push_back(s.get<std::string>());
    }
    return make_chart(j["dim"].get<int>(), j["codim_total"].get<int>(), std::move(params), std::move(sources));
}

inline ChartDefinition load_chart(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("ChartNotFound", "cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw input_error("InvalidChart", std::string("malformed JSON: ") + e.what());
    }
    return chart_from_json(j);
}

inline nlohmann::json chart_to_json(const ChartDefinition& c) {
    nlohmann::json j;
    j["dim"] = c.dim;
    j["codim_total"] = c.codim_total;
    j["params"] = nlohmann::json::array();
    for (const auto& p : c.params)
        j["params"].push_back({{"name", p.name}, {"min", p.min}, {"max", p.max}, {"periodic", p.periodic}});
    j["coords"] = c.sources;
    return j;
}

}  // namespace solab::dsl
