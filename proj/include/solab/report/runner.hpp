#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "solab/inequality/suite.hpp"
#include "solab/pde/io.hpp"
#include "solab/pde/lab.hpp"
#include "solab/quadrature/extrinsic.hpp"
#include "solab/report/config.hpp"
#include "solab/report/json_writer.hpp"

namespace solab::report {

inline constexpr int kSchemaVersion = 1;
// Kronrod panels for the capacity bound. Each node costs one boundary
// quadrature; two panels already agree with eight to 1e-10 relative.
inline constexpr int kBoundPanels = 2;

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Json>> rows;
};

struct Artifact {
    std::string file;
    std::string content;
};

struct CheckResult {
    std::string name;
    std::string verdict;  // PASS, FAIL, SKIPPED, DIAGNOSTIC, ERROR
    bool mandatory = true;
    Json data = Json::object();
    std::vector<Table> tables;
    std::vector<Artifact> artifacts;
    double wall_seconds = 0.0;
};

struct RunOutput {
    Json report;
    std::vector<CheckResult> checks;
    int exit_code = 0;
};

// ---------------------------------------------------------------------------

namespace detail {

inline const char* kind_name(ErrorKind k) {
    return k == ErrorKind::Input ? "input" : (k == ErrorKind::Check ? "check" : "numerical");
}

inline Json error_json(const Error& e) {
    return Json{{"code", e.code()}, {"kind", kind_name(e.kind())}, {"detail", e.what()}};
}

inline Json quad_json(const quad::QuadratureResult& q) {
    Json j = Json::object();
    j["value"] = q.value;
    j["error"] = q.error;
    j["tail"] = q.tail;
    j["cells"] = q.cells;
    j["converged"] = q.converged;
    return j;
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline std::string file_stem(std::string s) {
    for (char& c : s)
        if (c == ':' || c == '/') c = '-';
    return s;
}

inline std::string csv_cell(const Json& v) {
    if (v.is_null()) return "";
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    }
    return dump17(v, 0);
}

inline std::string table_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_cell(row[i]);
        out += '\n';
    }
    return out;
}

inline Json table_json(const Table& t) {
    Json rows = Json::array();
    for (const auto& r : t.rows) rows.push_back(Json(r));
    return Json{{"columns", t.columns}, {"rows", rows}};
}

inline std::string verdict_of(const std::vector<ineq::InequalityMargin>& rows) {
    bool any = false;
    for (const auto& r : rows) {
        if (r.verdict == "FAIL") return "FAIL";
        any = any || r.verdict == "PASS";
    }
    return any ? "PASS" : "SKIPPED";
}

inline Table margin_table(const std::vector<ineq::InequalityMargin>& rows) {
    Table t{"margins", {"name", "paper_ref", "R", "lhs", "rhs", "margin", "tol", "verdict", "note"}, {}};
    for (const auto& r : rows)
        t.rows.push_back({r.name, r.paper_ref, optional_json(r.radius), r.lhs, r.rhs, r.margin, r.tol, r.verdict, r.note});
    return t;
}

template <class Values>
std::string field_csv(const pde::Mesh& mesh, const Immersion& imm, const Values& v) {
    std::ostringstream os;
    pde::write_field_csv(os, mesh, imm, v);
    return os.str();
}

inline std::string off_text(const pde::Mesh& mesh, const Immersion& imm) {
    std::ostringstream os;
    pde::write_off(os, mesh, imm);
    return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Per-run state: the subject plus soliton constants resolved once.

class Context {
public:
    explicit Context(const RunConfig& c) : cfg(c) {
        if (cfg.command != "catalog") subject = resolve_subject(cfg);
    }

    const RunConfig& cfg;
    Subject subject;

    const Immersion& imm() const { return subject.imm; }
    int n() const { return subject.imm.dim(); }

    // Throws the stored check or numerical error when the constant cannot be found.
    const ResolvedSpec& spec(FlowKind k) {
        auto& slot = specs_[k];
        if (!slot.done) {
            slot.done = true;
            try {
                slot.value = resolve_spec(cfg, subject, k);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::Input) throw;
                slot.error = e;
            }
        }
        if (slot.error) throw *slot.error;
        return *slot.value;
    }

    std::optional<double> constant(FlowKind k) {
        try {
            return spec(k).spec.constant;
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Input) throw;
            return std::nullopt;
        }
    }

    const SampleSet& samples() {
        if (!samples_) samples_ = sample_parameters(imm(), cfg.samples, cfg.seed);
        return *samples_;
    }

    double R() {
        if (cfg.R) return *cfg.R;
        auto l = constant(FlowKind::MCF);
        return l && *l > 0 ? std::sqrt(2.0 * n() / *l) : 3.0;
    }

    double inner(double R) { return subject.inner.value_or(R / std::sqrt(2.0)); }

    pde::PdeOptions pde_options() const {
        pde::PdeOptions o;
        if (cfg.h) o.h = *cfg.h;
        return o;
    }

    ineq::SuiteOptions suite_options() const {
        ineq::SuiteOptions o;
        o.tol = cfg.tol;
        o.samples = cfg.samples;
        o.seed = cfg.seed;
        return o;
    }

    // Empty when the soliton equation holds on the samples, else why not.
    std::string soliton_failure(FlowKind k) {
        auto it = residual_.find(k);
        if (it != residual_.end()) return it->second;
        std::string why;
        try {
            const auto& rs = spec(k);
            auto rep = soliton_residual(imm(), rs.spec, samples(), cfg.tol.value_or(kSolitonTol));
            if (!rep.pass)
                why = std::string(to_string(k)) + " residual " + dsl::format_number(rep.sup) + " exceeds " +
                      dsl::format_number(rep.tol);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Input) throw;
            why = e.what();
        }
        return residual_[k] = why;
    }

    // Constant extrinsic radius: every D_R is empty or everything.
    bool radius_constant() {
        if (!imm().compact()) return false;
        double lo = INFINITY, hi = 0.0;
        for (const auto& p : samples()) {
            const double r = imm().radius(p.data());
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        return hi - lo <= 1e-9 * std::max(1.0, hi);
    }

private:
    struct Slot {
        bool done = false;
        std::optional<ResolvedSpec> value;
        std::optional<Error> error;
    };
    std::map<FlowKind, Slot> specs_;
    std::map<FlowKind, std::string> residual_;
    std::optional<SampleSet> samples_;
};

inline Json spec_json(const ResolvedSpec& r) {
    Json j = Json::object();
    j["kind"] = to_string(r.spec.kind);
    j[r.spec.kind == FlowKind::MCF ? "lambda" : "C"] = r.spec.constant;
    j["source"] = r.source;
    if (r.source == "inferred") j["fit_residual"] = r.fit_residual;
    return j;
}

// ---------------------------------------------------------------------------
// Checks. Each returns its own verdict; errors are mapped by the caller.

namespace checks {

inline CheckResult catalog_listing() {
    CheckResult out;
    Table t{"catalog", {"name", "n", "ambient", "lambda", "C", "A2_over_lambda", "note"}, {}};
    Json entries = Json::array();
    for (const auto& name : catalog_names()) {
        CatalogEntry e = catalog(name);
        const auto& k = e.known;
        std::optional<double> ratio;
        if (k.A2 && k.lambda && *k.lambda != 0) ratio = *k.A2 / *k.lambda;
        t.rows.push_back({e.name, e.immersion.dim(), e.immersion.ambient(), detail::optional_json(k.lambda),
                          detail::optional_json(k.C), detail::optional_json(ratio), k.note});
        Json p = Json::object();
        for (const auto& [key, v] : e.params) p[key] = v;
        entries.push_back(Json{{"name", e.name},
                               {"params", p},
                               {"n", e.immersion.dim()},
                               {"ambient", e.immersion.ambient()},
                               {"lambda", detail::optional_json(k.lambda)},
                               {"C", detail::optional_json(k.C)},
                               {"A2_over_lambda", detail::optional_json(ratio)},
                               {"note", k.note}});
    }
    out.verdict = "PASS";
    out.data["entries"] = entries;
    out.tables.push_back(std::move(t));
    return out;
}

inline CheckResult soliton_residual_check(Context& ctx, FlowKind kind) {
    const ResolvedSpec& rs = ctx.spec(kind);
    auto rep = soliton_residual(ctx.imm(), rs.spec, ctx.samples(), ctx.cfg.tol.value_or(kSolitonTol));
    CheckResult out;
    out.verdict = rep.pass ? "PASS" : "FAIL";
    out.data["spec"] = spec_json(rs);
    out.data["sup"] = rep.sup;
    out.data["mean"] = rep.mean;
    out.data["samples"] = rep.samples;
    out.data["sample_set"] = rep.sample_set;
    out.data["tol"] = rep.tol;
    Table t{"residuals", {"sample"}, {}};
    for (const auto& a : ctx.imm().axes()) t.columns.push_back(a.name);
    t.columns.push_back("residual");
    const auto& S = ctx.samples();
    for (std::size_t i = 0; i < S.size(); ++i) {
        std::vector<Json> row{i};
        for (double x : S[i]) row.push_back(x);
        row.push_back(rep.residuals[i]);
        t.rows.push_back(std::move(row));
    }
    out.tables.push_back(std::move(t));
    return out;
}

inline std::vector<double> flow_times(const RunConfig& cfg, const SolitonSpec& spec) {
    if (!cfg.times.empty()) return cfg.times;
    std::vector<double> t{0.0, 0.25, 0.5, 0.75, 1.0};
    if (spec.kind == FlowKind::MCF && spec.constant > 0)
        for (double& x : t) x *= 0.6 / (2.0 * spec.constant);
    return t;
}

inline CheckResult flow_residual_check(Context& ctx, FlowKind kind) {
    const ResolvedSpec& rs = ctx.spec(kind);
    const auto times = flow_times(ctx.cfg, rs.spec);
    auto rep = homothety_flow_residual(ctx.imm(), rs.spec, times, ctx.samples(), ctx.cfg.tol.value_or(kSolitonTol));
    CheckResult out;
    out.verdict = rep.residual.pass ? "PASS" : "FAIL";
    out.data["spec"] = spec_json(rs);
    out.data["sup"] = rep.residual.sup;
    out.data["mean"] = rep.residual.mean;
    out.data["sample_set"] = rep.residual.sample_set;
    out.data["tol"] = rep.residual.tol;
    Table t{"flow", {"t", "factor", "sup_residual", "scaling_law_gap", "max_tangential_speed"}, {}};
    for (const auto& r : rep.rows) t.rows.push_back({r.t, r.factor, r.sup_residual, r.scaling_law_gap, r.max_tangential_speed});
    out.tables.push_back(std::move(t));
    return out;
}

inline CheckResult wmp_check(Context& ctx, FlowKind kind) {
    const ResolvedSpec& rs = ctx.spec(kind);
    const double eps = 0.1;
    auto w = wmp_probe(ctx.imm(), rs.spec, eps, ctx.samples());
    CheckResult out;
    out.mandatory = false;
    out.verdict = "DIAGNOSTIC";
    out.data["spec"] = spec_json(rs);
    out.data["eps"] = w.eps;
    out.data["k"] = w.k;
    out.data["sup_u"] = w.sup_u;
    out.data["near_sup_u"] = w.near_sup_u;
    out.data["lap_u"] = {w.lap_u_min, w.lap_u_max};
    out.data["sup_v"] = w.sup_v;
    out.data["near_sup_v"] = w.near_sup_v;
    out.data["lap_v"] = {w.lap_v_min, w.lap_v_max};
    out.data["threshold"] = w.threshold;
    if (w.lambda_xperp2_min) out.data["lambda_xperp2"] = {*w.lambda_xperp2_min, *w.lambda_xperp2_max};
    if (w.inv_C) out.data["inv_C"] = *w.inv_C;
    out.data["reading"] = w.verdict;
    return out;
}

inline double shrinker_lambda(Context& ctx, const char* what) {
    const double l = ctx.spec(FlowKind::MCF).spec.constant;
    if (!(l > 0)) throw input_error("InvalidParams", std::string(what) + " needs a shrinker (lambda > 0)");
    return l;
}

inline CheckResult weighted_volume_check(Context& ctx) {
    const double lambda = shrinker_lambda(ctx, "the weighted-volume identity");
    auto w = quad::weighted_identity_check(ctx.imm(), lambda);
    const double tol = ctx.cfg.tol.value_or(1e-3);
    const double ratio = w.gaussian.value / w.second.value;
    const double expected = lambda / ctx.n();
    const double ratio_gap = std::fabs(ratio - expected) / expected;
    CheckResult out;
    out.verdict = w.margin <= tol && ratio_gap <= tol ? "PASS" : "FAIL";
    out.data["lambda"] = lambda;
    out.data["gaussian"] = detail::quad_json(w.gaussian);
    out.data["second_moment"] = detail::quad_json(w.second);
    out.data["margin"] = w.margin;
    out.data["quadrature_tol"] = w.tol;
    out.data["tol"] = tol;
    out.data["ratio"] = ratio;
    out.data["expected_ratio"] = expected;
    out.data["ratio_gap"] = ratio_gap;
    return out;
}

inline CheckResult flux_identity_check(Context& ctx) {
    const double lambda = ctx.spec(FlowKind::MCF).spec.constant;
    const double R = ctx.R();
    auto f = quad::flux_identity_check(ctx.imm(), lambda, R);
    const double tol = ctx.cfg.tol.value_or(1e-3);
    const bool lemma = lambda != 0.0;
    CheckResult out;
    out.verdict = f.margin <= tol && (!lemma || f.lemma_margin <= tol) ? "PASS" : "FAIL";
    out.data["lambda"] = lambda;
    out.data["R"] = R;
    out.data["lhs"] = f.lhs;
    out.data["rhs"] = f.rhs;
    out.data["margin"] = f.margin;
    out.data["quadrature_tol"] = f.tol;
    if (lemma) {
        out.data["normalized_lhs"] = f.lemma_lhs;
        out.data["normalized_rhs"] = f.lemma_rhs;
        out.data["normalized_margin"] = f.lemma_margin;
        out.data["normalized_quadrature_tol"] = f.lemma_tol;
    }
    out.data["tol"] = tol;
    out.data["volume"] = f.volume;
    out.data["boundary_area"] = f.boundary_area;
    out.data["boundary_flux"] = f.boundary_flux;
    out.data["h2_integral"] = f.h2_integral;
    return out;
}

inline std::vector<double> psi_radii(const RunConfig& cfg) {
    if (!cfg.radii.empty()) return cfg.radii;
    return {1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
}

inline CheckResult psi_check(Context& ctx) {
    const double lambda = shrinker_lambda(ctx, "Psi");
    const auto radii = psi_radii(ctx.cfg);
    auto c = ctx.subject.entry ? quad::psi(*ctx.subject.entry, lambda, radii) : quad::psi(ctx.imm(), lambda, radii);
    const double tol = ctx.cfg.tol.value_or(5e-3);
    Table t{"psi", {"R", "psi", "scaled", "error", "tail", "closed_form", "rel_gap"}, {}};
    bool close = true, monotone = true;
    double worst = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        Json cf = nullptr, gap = nullptr;
        if (!c.closed_form.empty()) {
            const double g = std::fabs(c.values[i] - c.closed_form[i]) / c.closed_form[i];
            worst = std::max(worst, g);
            close = close && g <= tol;
            cf = c.closed_form[i];
            gap = g;
        }
        // Psi is a tail integral, so it cannot grow; allow the quadrature error.
        if (i > 0) {
            const double slack = (c.errors[i] + c.tails[i]) * std::exp(-0.5 * lambda * radii[i] * radii[i]) +
                                 (c.errors[i - 1] + c.tails[i - 1]) * std::exp(-0.5 * lambda * radii[i - 1] * radii[i - 1]);
            monotone = monotone && c.values[i] <= c.values[i - 1] + slack + 1e-14 * c.values[i - 1];
        }
        t.rows.push_back({radii[i], c.values[i], c.scaled[i], c.errors[i], c.tails[i], cf, gap});
    }
    CheckResult out;
    out.verdict = close && monotone ? "PASS" : "FAIL";
    out.data["lambda"] = lambda;
    out.data["nonincreasing"] = monotone;
    out.data["majorant_c"] = c.majorant_c;
    if (!c.closed_form.empty()) {
        out.data["closed_form_max_rel_gap"] = worst;
        out.data["tol"] = tol;
    }
    out.tables.push_back(std::move(t));
    return out;
}

inline CheckResult parabolicity_check(Context& ctx) {
    const double lambda = shrinker_lambda(ctx, "the parabolicity integral");
    auto p = quad::parabolicity_integral(ctx.imm(), lambda);
    CheckResult out;
    out.mandatory = false;
    out.verdict = "DIAGNOSTIC";
    out.data["lambda"] = lambda;
    out.data["value"] = p.value;
    out.data["quadrature_error"] = p.error;
    out.data["R0"] = p.R0;
    out.data["R_max"] = p.R_max;
    out.data["log_slope"] = p.log_slope;
    out.data["trend"] = quad::trend_name(p.trend);
    out.data["label"] = p.label;
    Table t{"trend", {"t", "integrand"}, {}};
    for (std::size_t i = 0; i < p.trend_radii.size(); ++i) t.rows.push_back({p.trend_radii[i], p.trend_integrand[i]});
    out.tables.push_back(std::move(t));
    return out;
}

inline CheckResult capacity_check(Context& ctx) {
    const double R = ctx.R();
    const double rho = ctx.inner(R);
    const auto opt = ctx.pde_options();
    std::vector<double> radii = ctx.cfg.radii.empty() ? std::vector<double>{R} : ctx.cfg.radii;
    Table t{"capacity",
            {"R", "cap", "coarse_cap", "tolerance", "bound", "bound_error", "recovered_flux", "vertices", "iterations"},
            {}};
    CheckResult out;
    bool below = true, monotone = true;
    double prev = 0.0, prev_tol = 0.0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > rho)) throw input_error("InvalidParams", "capacity needs R > rho = " + dsl::format_number(rho));
        auto c = pde::capacity(ctx.imm(), rho, radii[i], opt);
        auto b = pde::capacity_upper_bound(ctx.imm(), rho, radii[i], kBoundPanels);
        below = below && c.value <= b.value + c.tolerance + b.error;
        if (i > 0) monotone = monotone && c.value <= prev + prev_tol + c.tolerance;
        prev = c.value;
        prev_tol = c.tolerance;
        t.rows.push_back({radii[i], c.value, c.coarse_value, c.tolerance, b.value, b.error, c.recovered_flux, c.vertices,
                          c.iterations});
        if (i == 0) {
            out.data["capacity"] = c.value;
            out.data["tolerance"] = c.tolerance;
            out.data["bound"] = b.value;
            out.data["energy_identity_gap"] = std::fabs(c.recovered_flux - c.value) / c.value;
            if (!ctx.cfg.out.empty()) {
                out.artifacts.push_back({"capacity_mesh.off", detail::off_text(c.mesh, ctx.imm())});
                out.artifacts.push_back({"capacity_field.csv", detail::field_csv(c.mesh, ctx.imm(), c.solution.values)});
            }
        }
    }
    out.verdict = below && monotone ? "PASS" : "FAIL";
    out.data["rho"] = rho;
    out.data["h"] = opt.h;
    out.data["below_bound"] = below;
    out.data["nonincreasing_in_R"] = monotone;
    out.tables.push_back(std::move(t));
    return out;
}

inline CheckResult capacity_ladder_check(Context& ctx) {
    const double R = ctx.R();
    const double rho = ctx.inner(R);
    auto l = pde::capacity_ladder(ctx.imm(), rho, R, 3, ctx.pde_options());
    CheckResult out;
    out.mandatory = false;
    out.verdict = "DIAGNOSTIC";
    out.data["rho"] = rho;
    out.data["label"] = l.label;
    out.data["fitted_limit"] = detail::optional_json(l.fitted_limit);
    Table t{"ladder", {"R", "cap", "tolerance", "drop"}, {}};
    for (std::size_t i = 0; i < l.radii.size(); ++i) {
        Json drop = i ? Json(1.0 - l.caps[i] / l.caps[i - 1]) : Json(nullptr);
        t.rows.push_back({l.radii[i], l.caps[i], l.tolerances[i], drop});
    }
    out.tables.push_back(std::move(t));
    return out;
}

inline CheckResult exit_time_check(Context& ctx) {
    const double R = ctx.R();
    auto f = pde::solve_exit_time(ctx.imm(), R, ctx.pde_options());
    CheckResult out;
    Table t{"comparison",
            {"kind", "constant", "mode", "min_margin", "max_margin", "tol", "expected_ratio", "mean_ratio",
             "max_rel_deviation", "ratio_vertices", "pass"},
            {}};
    bool pass = true, any = false;
    for (FlowKind k : requested_kinds(ctx.cfg, ctx.subject)) {
        const SolitonSpec spec = ctx.spec(k).spec;
        if (k == FlowKind::IMCF && std::fabs(spec.constant * f.n - 1.0) < 1e-12) {
            out.data["notes"].push_back("imcf: C n = 1 has no proportionality constant");
            continue;
        }
        auto c = pde::exit_time_comparison(f, spec, ctx.cfg.tol.value_or(-1.0));
        pass = pass && c.pass;
        any = true;
        t.rows.push_back({to_string(k), spec.constant, c.mode, c.min_margin, c.max_margin, c.tol, c.expected_ratio,
                          c.mean_ratio, c.max_rel_deviation, c.ratio_vertices, c.pass});
    }
    double max_E = 0.0;
    for (int v = 0; v < f.E.size(); ++v) max_E = std::max(max_E, f.E[v]);
    out.verdict = !any ? "SKIPPED" : (pass ? "PASS" : "FAIL");
    out.data["R"] = R;
    out.data["h"] = f.mesh.h;
    out.data["vertices"] = f.mesh.vertex_count();
    out.data["iterations"] = f.solution.iterations;
    out.data["max_E"] = max_E;
    out.tables.push_back(std::move(t));
    if (!ctx.cfg.out.empty()) {
        out.artifacts.push_back({"exit-time_mesh.off", detail::off_text(f.mesh, ctx.imm())});
        out.artifacts.push_back({"exit-time_field.csv", detail::field_csv(f.mesh, ctx.imm(), f.E)});
    }
    return out;
}

inline CheckResult soliton_from_exit_check(Context& ctx) {
    std::vector<double> radii = ctx.cfg.radii.empty() ? std::vector<double>{ctx.R()} : ctx.cfg.radii;
    auto s = pde::soliton_from_exit_time(ctx.imm(), radii, ctx.pde_options(), ctx.cfg.tol.value_or(0.05));
    CheckResult out;
    out.verdict = s.verdict == "INCONSISTENT" ? "FAIL" : "PASS";
    out.data["alpha"] = s.alpha;
    out.data["deviation"] = s.deviation;
    out.data["tol"] = s.tol;
    out.data["C_forward"] = detail::optional_json(s.C_forward);
    out.data["C_printed"] = detail::optional_json(s.C_printed);
    out.data["forward_residual"] = s.forward_residual;
    out.data["printed_residual"] = s.printed_residual;
    out.data["classification"] = s.verdict;
    Table t{"medians", {"R", "median_ratio"}, {}};
    for (std::size_t i = 0; i < s.radii.size(); ++i) t.rows.push_back({s.radii[i], s.medians[i]});
    out.tables.push_back(std::move(t));
    return out;
}

inline std::vector<double> iso_radii(const RunConfig& cfg) {
    if (!cfg.radii.empty()) return cfg.radii;
    return {1.5, 2.0, 3.0};
}

inline CheckResult margins_result(const std::vector<ineq::InequalityMargin>& rows, Json head) {
    CheckResult out;
    out.verdict = detail::verdict_of(rows);
    out.data = std::move(head);
    Json list = Json::array();
    for (const auto& r : rows) {
        Json e = Json::object();
        e["name"] = r.name;
        e["paper_ref"] = r.paper_ref;
        e["R"] = detail::optional_json(r.radius);
        e["lhs"] = r.lhs;
        e["rhs"] = r.rhs;
        e["margin"] = r.margin;
        e["tol"] = r.tol;
        e["verdict"] = r.verdict;
        if (!r.note.empty()) e["note"] = r.note;
        list.push_back(e);
    }
    out.data["entries"] = list;
    if (out.verdict == "SKIPPED" && !rows.empty()) out.data["reason"] = rows.front().note;
    out.tables.push_back(detail::margin_table(rows));
    return out;
}

inline CheckResult isoperimetric_mcf_check(Context& ctx) {
    const double lambda = ctx.spec(FlowKind::MCF).spec.constant;
    auto rows = ineq::isoperimetric_mcf(ctx.imm(), lambda, iso_radii(ctx.cfg), ctx.suite_options());
    return margins_result(rows, Json{{"lambda", lambda}});
}

inline CheckResult isoperimetric_imcf_check(Context& ctx) {
    const double C = ctx.spec(FlowKind::IMCF).spec.constant;
    auto rows = ineq::isoperimetric_imcf(ctx.imm(), C, iso_radii(ctx.cfg), ctx.suite_options());
    return margins_result(rows, Json{{"C", C}});
}

inline CheckResult volume_growth_check(Context& ctx) {
    const double C = ctx.spec(FlowKind::IMCF).spec.constant;
    const auto grid = ctx.cfg.radii.empty() ? ineq::default_growth_grid() : ctx.cfg.radii;
    auto m = ineq::volume_growth_monotonicity(ctx.imm(), C, grid, ctx.suite_options());
    CheckResult out;
    out.verdict = m.verdict;
    out.data["C"] = C;
    out.data["exponent"] = m.exponent;
    out.data["worst_step"] = m.worst_step;
    out.data["tol"] = m.tol;
    Table t{"growth", {"t", "f", "error"}, {}};
    for (std::size_t i = 0; i < m.radii.size(); ++i) t.rows.push_back({m.radii[i], m.values[i], m.errors[i]});
    out.tables.push_back(std::move(t));
    return out;
}

inline CheckResult separation_check(Context& ctx) {
    const double lambda = ctx.spec(FlowKind::MCF).spec.constant;
    auto s = ineq::separation_check(ctx.imm(), lambda, ctx.suite_options());
    CheckResult out;
    out.verdict = s.verdict;
    out.data["lambda"] = lambda;
    out.data["critical_radius"] = s.critical_radius;
    out.data["classification"] = s.classification;
    out.data["below"] = s.below;
    out.data["on"] = s.on;
    out.data["above"] = s.above;
    out.data["samples"] = s.samples;
    out.data["radial_walks"] = s.probes;
    out.data["min_r"] = s.min_r;
    out.data["max_r"] = s.max_r;
    out.data["max_radius_gap"] = s.max_radius_gap;
    out.data["max_xh_defect"] = s.max_xh_defect;
    out.data["tol"] = s.tol;
    out.data["note"] = s.note;
    return out;
}

inline CheckResult second_form_check(Context& ctx) {
    const double lambda = ctx.spec(FlowKind::MCF).spec.constant;
    auto s = ineq::second_form_threshold(ctx.imm(), lambda, ctx.suite_options());
    CheckResult out;
    out.verdict = s.verdict;
    out.data["lambda"] = lambda;
    out.data["spherical"] = s.spherical;
    out.data["min_A2_over_lambda"] = s.min_ratio;
    out.data["max_A2_over_lambda"] = s.max_ratio;
    out.data["rescaled_A2"] = s.rescaled_A2;
    out.data["identity_defect"] = s.identity_defect;
    out.data["tol"] = s.tol;
    Json marks = Json::object();
    for (const auto& [name, v] : s.landmarks) marks[name] = v;
    out.data["landmarks"] = marks;
    if (!s.note.empty()) out.data["note"] = s.note;
    return out;
}

inline CheckResult rimoldi_check(Context& ctx) {
    const double lambda = ctx.spec(FlowKind::MCF).spec.constant;
    auto s = ineq::rimoldi_criterion(ctx.imm(), lambda, std::nullopt, ctx.suite_options());
    CheckResult out;
    out.verdict = s.verdict;
    out.data["lambda"] = lambda;
    out.data["R_cut"] = s.R_cut;
    out.data["far_samples"] = s.far_samples;
    out.data["inf_H"] = s.inf_H;
    out.data["sup_H"] = s.sup_H;
    out.data["threshold"] = s.threshold;
    out.data["hypothesis"] = s.hypothesis;
    out.data["max_laplacian_gap"] = s.max_laplacian_gap;
    out.data["negative_laplacian"] = s.negative_laplacian;
    out.data["H_vanishes_far"] = s.H_vanishes_far;
    if (!s.note.empty()) out.data["note"] = s.note;
    return out;
}

}  // namespace checks

// ---------------------------------------------------------------------------
// Plans: the ordered checks for a command, each with an applicability note.

struct PlannedCheck {
    std::string name;
    bool mandatory = true;
    std::string skip;  // nonempty: not applicable, with the reason
    std::function<CheckResult(Context&)> run;
    // In a full report, checks that presume the soliton equation are skipped
    // once its residual fails rather than piling up follow-on failures.
    std::optional<FlowKind> presumes;
};

namespace detail {

inline std::string need_shrinker(Context& ctx) {
    auto l = ctx.constant(FlowKind::MCF);
    if (l && !(*l > 0)) return "needs a shrinker (lambda > 0), have lambda = " + dsl::format_number(*l);
    return "";
}

inline std::string need_expander_window(Context& ctx) {
    auto c = ctx.constant(FlowKind::IMCF);
    if (c && *c >= 0 && *c * ctx.n() <= 1.0)
        return "needs C < 0 or C > 1/n, have C = " + dsl::format_number(*c);
    return "";
}

inline std::string need_pde(Context& ctx) {
    if (ctx.n() > 2) return "PDE solves are implemented for n <= 2";
    if (ctx.radius_constant()) return "r is constant on this immersion, so every extrinsic ball is empty or everything";
    return "";
}

inline bool has_kind(Context& ctx, FlowKind k) {
    auto kinds = requested_kinds(ctx.cfg, ctx.subject);
    return std::find(kinds.begin(), kinds.end(), k) != kinds.end();
}

}  // namespace detail

inline std::vector<PlannedCheck> plan(Context& ctx) {
    using namespace checks;
    const auto& cfg = ctx.cfg;
    const std::string& cmd = cfg.command;
    std::vector<PlannedCheck> p;
    auto add = [&](std::string name, std::function<CheckResult(Context&)> f, std::string skip = "", bool mandatory = true,
                   std::optional<FlowKind> presumes = std::nullopt) {
        p.push_back({std::move(name), mandatory, std::move(skip), std::move(f), presumes});
    };
    constexpr auto M = FlowKind::MCF;
    constexpr auto I = FlowKind::IMCF;
    if (cmd == "catalog") {
        add("catalog", [](Context&) { return catalog_listing(); });
        return p;
    }
    const bool report = cmd == "report";
    const auto kinds = requested_kinds(cfg, ctx.subject);
    const bool mcf = detail::has_kind(ctx, FlowKind::MCF), imcf = detail::has_kind(ctx, FlowKind::IMCF);

    if (cmd == "check-soliton" || report)
        for (FlowKind k : kinds)
            add(std::string("soliton-residual-") + to_string(k), [k](Context& c) { return soliton_residual_check(c, k); });
    if (cmd == "flow-residual" || report)
        for (FlowKind k : kinds)
            add(std::string("flow-residual-") + to_string(k), [k](Context& c) { return flow_residual_check(c, k); });
    if (report)
        for (FlowKind k : kinds)
            add(std::string("wmp-probe-") + to_string(k), [k](Context& c) { return wmp_check(c, k); }, "", false, k);
    if ((cmd == "weighted-volume" || report) && mcf) {
        add("weighted-volume", weighted_volume_check, detail::need_shrinker(ctx), true, M);
        add("flux-identity", flux_identity_check, "", true, M);
    }
    if ((cmd == "psi" || report) && mcf) {
        std::string skip = detail::need_shrinker(ctx);
        if (skip.empty() && report && ctx.imm().compact()) skip = "Psi is a tail integral; this immersion is compact";
        add("psi", psi_check, skip, true, M);
    }
    if ((cmd == "parabolicity-integral" || report) && mcf) {
        std::string skip = detail::need_shrinker(ctx);
        if (skip.empty() && report && ctx.imm().compact()) skip = "compact immersions are parabolic";
        add("parabolicity-integral", parabolicity_check, skip, false, M);
    }
    if (cmd == "isoperimetric" || report) {
        if (mcf) add("isoperimetric-mcf", isoperimetric_mcf_check, detail::need_shrinker(ctx), true, M);
        if (imcf) {
            add("isoperimetric-imcf", isoperimetric_imcf_check, detail::need_expander_window(ctx), true, I);
            add("volume-growth", volume_growth_check, detail::need_expander_window(ctx), true, I);
        }
    }
    if ((cmd == "separation" || report) && mcf) {
        add("separation", checks::separation_check, detail::need_shrinker(ctx), true, M);
        add("second-form", second_form_check, detail::need_shrinker(ctx), true, M);
        auto l = ctx.constant(FlowKind::MCF);
        add("rimoldi", rimoldi_check, l && *l == 0.0 ? "needs lambda != 0" : "", true, M);
    }
    const bool pde = cmd == "capacity" || cmd == "exit-time" || (report && cfg.full);
    const std::string pde_skip = pde && report ? detail::need_pde(ctx) : "";
    if (cmd == "capacity" || (report && cfg.full)) {
        add("capacity", capacity_check, pde_skip);
        if (cmd == "capacity" && cfg.full) add("capacity-ladder", capacity_ladder_check, "", false);
    }
    if (cmd == "exit-time" || (report && cfg.full)) {
        add("exit-time", exit_time_check, pde_skip);
        if (imcf && (cfg.full || !cfg.radii.empty()))
            add("soliton-from-exit-time", soliton_from_exit_check, pde_skip);
    }
    if (!cfg.checks.empty()) {
        for (const auto& want : cfg.checks)
            if (std::none_of(p.begin(), p.end(), [&](const PlannedCheck& c) { return c.name == want; }))
                throw input_error("UnknownCheck", "'" + want + "' is not part of the " + cmd + " plan");
        std::erase_if(p, [&](const PlannedCheck& c) {
            return std::find(cfg.checks.begin(), cfg.checks.end(), c.name) == cfg.checks.end();
        });
    }
    return p;
}

// ---------------------------------------------------------------------------

inline CheckResult execute_check(Context& ctx, const PlannedCheck& pc) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    std::string skip = pc.skip;
    if (skip.empty() && pc.presumes && ctx.cfg.command == "report")
        if (auto why = ctx.soliton_failure(*pc.presumes); !why.empty()) skip = "not a soliton: " + why;
    if (!skip.empty()) {
        r.verdict = "SKIPPED";
        r.data["reason"] = skip;
    } else {
        try {
            r = pc.run(ctx);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Input) throw;
            r = CheckResult{};
            r.verdict = e.kind() == ErrorKind::Numerical ? "ERROR" : "FAIL";
            r.data["error"] = detail::error_json(e);
        }
    }
    r.name = pc.name;
    r.mandatory = pc.mandatory;
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline Json check_json(const CheckResult& r) {
    Json j = Json::object();
    j["name"] = r.name;
    j["verdict"] = r.verdict;
    j["mandatory"] = r.mandatory;
    j["data"] = r.data;
    if (!r.tables.empty()) {
        Json t = Json::object();
        for (const auto& tab : r.tables) t[tab.name] = detail::table_json(tab);
        j["tables"] = t;
    }
    if (!r.artifacts.empty()) {
        Json a = Json::array();
        for (const auto& x : r.artifacts) a.push_back(x.file);
        j["artifacts"] = a;
    }
    j["wall_seconds"] = r.wall_seconds;
    return j;
}

inline Json header(const Context& ctx) {
    Json j = Json::object();
    j["schema"] = kSchemaVersion;
    j["tool"] = "solab";
    j["command"] = ctx.cfg.command;
    j["config"] = to_json(ctx.cfg);
    if (ctx.cfg.command != "catalog") j["subject"] = subject_json(ctx.subject);
    return j;
}

inline Json resolved_specs(Context& ctx) {
    Json specs = Json::object();
    if (ctx.cfg.command == "catalog") return specs;
    for (FlowKind k : requested_kinds(ctx.cfg, ctx.subject)) {
        try {
            specs[to_string(k)] = spec_json(ctx.spec(k));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Input) throw;
            specs[to_string(k)] = Json{{"unresolved", detail::error_json(e)}};
        }
    }
    return specs;
}

// Exit code: 3 if any check hit a numerical failure, else 1 if a mandatory
// check failed, else 0.
inline RunOutput run(const RunConfig& cfg) {
    validate(cfg);
    Context ctx(cfg);
    RunOutput out;
    auto p = plan(ctx);
    out.report = header(ctx);
    out.report["specs"] = resolved_specs(ctx);
    Json checks = Json::array();
    bool failed = false, errored = false;
    int counts[4] = {0, 0, 0, 0};
    for (const auto& pc : p) {
        CheckResult r = execute_check(ctx, pc);
        errored = errored || r.verdict == "ERROR";
        failed = failed || (r.mandatory && r.verdict == "FAIL");
        counts[r.verdict == "PASS" ? 0 : r.verdict == "FAIL" ? 1 : r.verdict == "SKIPPED" ? 2 : 3]++;
        checks.push_back(check_json(r));
        out.checks.push_back(std::move(r));
    }
    out.exit_code = errored ? 3 : (failed ? 1 : 0);
    out.report["checks"] = checks;
    out.report["summary"] = Json{{"pass", counts[0]}, {"fail", counts[1]}, {"skipped", counts[2]}, {"other", counts[3]}};
    out.report["verdict"] = errored ? "ERROR" : (failed ? "FAIL" : "PASS");
    out.report["exit_code"] = out.exit_code;
    return out;
}

inline Json dry_run_plan(const RunConfig& cfg) {
    validate(cfg);
    Context ctx(cfg);
    auto p = plan(ctx);
    Json j = header(ctx);
    j["specs"] = resolved_specs(ctx);
    j["dry_run"] = true;
    Json steps = Json::array();
    for (const auto& pc : p) {
        Json s{{"name", pc.name}, {"mandatory", pc.mandatory}};
        if (!pc.skip.empty()) s["skip"] = pc.skip;
        steps.push_back(s);
    }
    j["plan"] = steps;
    if (!cfg.out.empty()) j["out"] = cfg.out;
    return j;
}

inline std::string render_csv(const RunOutput& r) {
    std::string s = "# checks\nname,verdict\n";
    for (const auto& c : r.checks) s += c.name + "," + c.verdict + "\n";
    for (const auto& c : r.checks)
        for (const auto& t : c.tables) s += "# " + c.name + "/" + t.name + "\n" + detail::table_csv(t);
    return s;
}

inline void write_outputs(const RunOutput& r, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw input_error("OutputDirectory", "cannot create '" + dir + "': " + ec.message());
    auto put = [&](const std::string& name, const std::string& text) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary);
        if (!f) throw input_error("OutputDirectory", "cannot write '" + name + "' in '" + dir + "'");
        f << text;
    };
    put("report.json", dump17(r.report) + "\n");
    for (const auto& c : r.checks) {
        for (const auto& t : c.tables) put(detail::file_stem(c.name) + "_" + t.name + ".csv", detail::table_csv(t));
        for (const auto& a : c.artifacts) put(a.file, a.content);
    }
}

// Whole command: prints to `out`, diagnostics to `err`, returns the exit code.
inline int execute(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        if (cfg.dry_run) {
            Json plan = dry_run_plan(cfg);
            if (cfg.format == "csv") {
                out << "name,mandatory,skip\n";
                for (const auto& s : plan["plan"])
                    out << s["name"].get<std::string>() << ',' << (s["mandatory"].get<bool>() ? "true" : "false") << ','
                        << detail::csv_cell(s.value("skip", Json(""))) << '\n';
            } else {
                out << dump17(plan) << '\n';
            }
            return 0;
        }
        RunOutput r = run(cfg);
        if (!cfg.out.empty()) write_outputs(r, cfg.out);
        if (cfg.format == "csv") out << render_csv(r);
        else out << dump17(r.report) << '\n';
        for (const auto& c : r.checks)
            if (c.data.contains("error")) err << c.name << ": " << c.data["error"]["detail"].get<std::string>() << '\n';
        return r.exit_code;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.kind() == ErrorKind::Input ? 2 : (e.kind() == ErrorKind::Check ? 1 : 3);
    }
}

}  // namespace solab::report
