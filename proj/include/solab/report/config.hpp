#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "solab/dsl/chart.hpp"
#include "solab/geometry/catalog.hpp"
#include "solab/geometry/sampling.hpp"
#include "solab/report/json_writer.hpp"
#include "solab/soliton/soliton.hpp"

namespace solab::report {

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c = {"catalog",  "check-soliton", "flow-residual", "weighted-volume",
                                               "psi",      "parabolicity-integral", "capacity", "exit-time",
                                               "isoperimetric", "separation", "report"};
    return c;
}

// Everything a run needs; a config file mirrors the long flag names.
struct RunConfig {
    std::string command;
    std::string catalog;
    std::string chart;
    std::optional<int> n, k, l;
    std::optional<double> rho, inner, radius, delta;
    std::optional<double> lambda, c;
    bool infer_lambda = false, infer_c = false;
    std::string kind;  // "", "mcf", "imcf"
    std::optional<double> R, h, tol;
    int samples = kDefaultSamples;
    std::uint64_t seed = kDefaultSeed;
    std::string format = "json";
    std::string out;
    bool dry_run = false;
    bool full = false;
    std::vector<double> radii, times;
    std::vector<std::string> checks;  // restricts the plan, kept in plan order
};

namespace detail {

inline double number_or_infer(const Json& v, const std::string& key, bool& infer) {
    if (v.is_string()) {
        if (v.get<std::string>() == "infer") {
            infer = true;
            return 0.0;
        }
        throw input_error("InvalidConfig", "'" + key + "' must be a number or \"infer\"");
    }
    if (!v.is_number()) throw input_error("InvalidConfig", "'" + key + "' must be a number");
    return v.get<double>();
}

inline double number(const Json& v, const std::string& key) {
    if (!v.is_number()) throw input_error("InvalidConfig", "'" + key + "' must be a number");
    return v.get<double>();
}

inline int integer(const Json& v, const std::string& key) {
    if (!v.is_number_integer()) throw input_error("InvalidConfig", "'" + key + "' must be an integer");
    return v.get<int>();
}

inline std::string text(const Json& v, const std::string& key) {
    if (!v.is_string()) throw input_error("InvalidConfig", "'" + key + "' must be a string");
    return v.get<std::string>();
}

inline bool flag(const Json& v, const std::string& key) {
    if (!v.is_boolean()) throw input_error("InvalidConfig", "'" + key + "' must be true or false");
    return v.get<bool>();
}

inline std::vector<double> numbers(const Json& v, const std::string& key) {
    if (!v.is_array()) throw input_error("InvalidConfig", "'" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) out.push_back(number(x, key));
    return out;
}

}  // namespace detail

// Unknown keys are rejected so typos cannot silently fall back to defaults.
inline void apply_json(RunConfig& cfg, const Json& j) {
    if (!j.is_object()) throw input_error("InvalidConfig", "config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        const Json& v = it.value();
        using namespace detail;
        if (k == "command") cfg.command = text(v, k);
        else if (k == "catalog") cfg.catalog = text(v, k);
        else if (k == "chart") cfg.chart = text(v, k);
        else if (k == "n") cfg.n = integer(v, k);
        else if (k == "k") cfg.k = integer(v, k);
        else if (k == "l") cfg.l = integer(v, k);
        else if (k == "rho") cfg.rho = number(v, k);
        else if (k == "inner") cfg.inner = number(v, k);
        else if (k == "radius") cfg.radius = number(v, k);
        else if (k == "delta") cfg.delta = number(v, k);
        else if (k == "lambda") cfg.lambda = number_or_infer(v, k, cfg.infer_lambda);
        else if (k == "c") cfg.c = number_or_infer(v, k, cfg.infer_c);
        else if (k == "kind") cfg.kind = text(v, k);
        else if (k == "R") cfg.R = number(v, k);
        else if (k == "h") cfg.h = number(v, k);
        else if (k == "tol") cfg.tol = number(v, k);
        else if (k == "samples") cfg.samples = integer(v, k);
        else if (k == "seed") {
            if (!v.is_number_unsigned() && !v.is_number_integer()) throw input_error("InvalidConfig", "'seed' must be an integer");
            cfg.seed = v.get<std::uint64_t>();
        } else if (k == "format") cfg.format = text(v, k);
        else if (k == "out") cfg.out = text(v, k);
        else if (k == "dry_run") cfg.dry_run = flag(v, k);
        else if (k == "full") cfg.full = flag(v, k);
        else if (k == "radii") cfg.radii = numbers(v, k);
        else if (k == "times") cfg.times = numbers(v, k);
        else if (k == "checks") {
            if (!v.is_array()) throw input_error("InvalidConfig", "'checks' must be an array of names");
            for (const auto& x : v) cfg.checks.push_back(text(x, k));
        }
        else throw input_error("UnknownConfigKey", "unknown config key '" + k + "'");
    }
    if (cfg.infer_lambda) cfg.lambda.reset();
    if (cfg.infer_c) cfg.c.reset();
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("ConfigNotFound", "cannot open '" + path + "'");
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw input_error("InvalidConfig", std::string("malformed JSON: ") + e.what());
    }
    RunConfig cfg;
    apply_json(cfg, j);
    return cfg;
}

inline void validate(const RunConfig& cfg) {
    const auto& cmds = commands();
    if (std::find(cmds.begin(), cmds.end(), cfg.command) == cmds.end())
        throw input_error("UnknownCommand", "unknown command '" + cfg.command + "'");
    if (cfg.command != "catalog") {
        if (cfg.catalog.empty() == cfg.chart.empty())
            throw input_error("InvalidConfig", "give exactly one of --catalog or --chart");
    }
    if (!cfg.chart.empty() && !std::ifstream(cfg.chart))
        throw input_error("ChartNotFound", "cannot open '" + cfg.chart + "'");
    if (!cfg.kind.empty() && cfg.kind != "mcf" && cfg.kind != "imcf")
        throw input_error("InvalidConfig", "--kind must be mcf or imcf");
    if (cfg.format != "json" && cfg.format != "csv") throw input_error("InvalidConfig", "--format must be json or csv");
    if (cfg.samples < 1) throw input_error("InvalidConfig", "--samples must be positive");
    for (std::size_t i = 0; i < cfg.radii.size(); ++i) {
        if (!(cfg.radii[i] > 0)) throw input_error("InvalidConfig", "radii must be positive");
        if (i && !(cfg.radii[i] > cfg.radii[i - 1])) throw input_error("InvalidConfig", "radii must be strictly increasing");
    }
    for (std::size_t i = 0; i < cfg.times.size(); ++i) {
        if (!(cfg.times[i] >= 0)) throw input_error("InvalidConfig", "times must be nonnegative");
        if (i && !(cfg.times[i] > cfg.times[i - 1])) throw input_error("InvalidConfig", "times must be strictly increasing");
    }
    if (cfg.h && !(*cfg.h > 0)) throw input_error("InvalidConfig", "--h must be positive");
    if (cfg.tol && !(*cfg.tol > 0)) throw input_error("InvalidConfig", "--tol must be positive");
    if (cfg.R && !(*cfg.R > 0)) throw input_error("InvalidConfig", "--R must be positive");
}

inline Json to_json(const RunConfig& cfg) {
    Json j = Json::object();
    j["command"] = cfg.command;
    if (!cfg.catalog.empty()) j["catalog"] = cfg.catalog;
    if (!cfg.chart.empty()) j["chart"] = cfg.chart;
    if (cfg.n) j["n"] = *cfg.n;
    if (cfg.k) j["k"] = *cfg.k;
    if (cfg.l) j["l"] = *cfg.l;
    if (cfg.rho) j["rho"] = *cfg.rho;
    if (cfg.inner) j["inner"] = *cfg.inner;
    if (cfg.radius) j["radius"] = *cfg.radius;
    if (cfg.delta) j["delta"] = *cfg.delta;
    if (cfg.lambda) j["lambda"] = *cfg.lambda;
    else if (cfg.infer_lambda) j["lambda"] = "infer";
    if (cfg.c) j["c"] = *cfg.c;
    else if (cfg.infer_c) j["c"] = "infer";
    if (!cfg.kind.empty()) j["kind"] = cfg.kind;
    if (cfg.R) j["R"] = *cfg.R;
    if (cfg.h) j["h"] = *cfg.h;
    if (cfg.tol) j["tol"] = *cfg.tol;
    j["samples"] = cfg.samples;
    j["seed"] = cfg.seed;
    j["format"] = cfg.format;
    if (!cfg.radii.empty()) j["radii"] = cfg.radii;
    if (!cfg.times.empty()) j["times"] = cfg.times;
    if (!cfg.checks.empty()) j["checks"] = cfg.checks;
    j["full"] = cfg.full;
    return j;
}

// ---------------------------------------------------------------------------
// The immersion under test.

struct Subject {
    std::optional<CatalogEntry> entry;
    Immersion imm;
    std::string name;
    // --rho names the cylinder radius on generalized cylinders and the inner
    // capacity radius elsewhere; --inner always means the latter.
    std::optional<double> inner;
};

inline Subject resolve_subject(const RunConfig& cfg) {
    Subject s;
    if (!cfg.chart.empty()) {
        s.imm = Immersion(dsl::load_chart(cfg.chart), cfg.chart);
        s.name = cfg.chart;
        s.inner = cfg.inner ? cfg.inner : cfg.rho;
        if (cfg.inner && cfg.rho) throw input_error("InvalidConfig", "--rho and --inner both name the inner radius here");
        return s;
    }
    const std::string name = canonical_catalog_name(cfg.catalog);
    CatalogParams p;
    bool rho_used = false;
    auto put = [&](const char* key, const auto& v) {
        if (v) p[key] = static_cast<double>(*v);
    };
    if (name == "sphere") {
        put("n", cfg.n);
        put("radius", cfg.radius);
    } else if (name == "plane") {
        put("n", cfg.n);
    } else if (name == "generalized_cylinder") {
        put("n", cfg.n);
        put("k", cfg.k);
        put("rho", cfg.rho);
        rho_used = true;
    } else if (name == "clifford_torus") {
        put("k", cfg.k);
        put("l", cfg.l);
        put("lambda", cfg.lambda);
    } else if (name == "veronese_surface") {
        put("lambda", cfg.lambda);
    } else if (name == "castro_lerma") {
        put("delta", cfg.delta);
        put("lambda", cfg.lambda);
    }
    s.entry = catalog(name, p);
    s.imm = s.entry->immersion;
    s.name = s.entry->name;
    if (!rho_used && cfg.inner && cfg.rho)
        throw input_error("InvalidConfig", "--rho and --inner both name the inner radius here");
    s.inner = cfg.inner ? cfg.inner : (rho_used ? std::nullopt : cfg.rho);
    return s;
}

inline Json subject_json(const Subject& s) {
    Json j = Json::object();
    j["name"] = s.name;
    j["dim"] = s.imm.dim();
    j["ambient"] = s.imm.ambient();
    if (s.entry) {
        Json p = Json::object();
        for (const auto& [k, v] : s.entry->params) p[k] = v;
        j["params"] = p;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Soliton constants: given, known from the catalog, or fitted.

struct ResolvedSpec {
    SolitonSpec spec;
    std::string source;  // given, known, inferred
    double fit_residual = 0.0;
};

inline std::vector<FlowKind> requested_kinds(const RunConfig& cfg, const Subject& s) {
    if (cfg.kind == "mcf") return {FlowKind::MCF};
    if (cfg.kind == "imcf") return {FlowKind::IMCF};
    std::vector<FlowKind> k{FlowKind::MCF};
    if (cfg.c || cfg.infer_c || (s.entry && s.entry->known.C)) k.push_back(FlowKind::IMCF);
    return k;
}

inline ResolvedSpec resolve_spec(const RunConfig& cfg, const Subject& s, FlowKind kind) {
    ResolvedSpec r;
    const std::optional<double> given = kind == FlowKind::MCF ? cfg.lambda : cfg.c;
    const bool infer = kind == FlowKind::MCF ? cfg.infer_lambda : cfg.infer_c;
    std::optional<double> known;
    if (s.entry) known = kind == FlowKind::MCF ? s.entry->known.lambda : s.entry->known.C;
    double value = 0.0;
    if (given) {
        value = *given;
        r.source = "given";
    } else if (known && !infer) {
        value = *known;
        r.source = "known";
    } else {
        auto fit = infer_constant(s.imm, kind, sample_parameters(s.imm, cfg.samples, cfg.seed));
        value = fit.constant;
        r.fit_residual = fit.fit_residual;
        r.source = "inferred";
    }
    value += 0.0;  // no negative zero in reports
    r.spec = kind == FlowKind::MCF ? SolitonSpec::mcf(value) : SolitonSpec::imcf(value);
    return r;
}

}  // namespace solab::report
