// solab: numerical checks for soliton immersions.
//
//   solab <command> [--catalog NAME | --chart FILE] [params] [options]
//
// A JSON config (--config) takes the long flag names as keys; flags given on
// the command line win over the file.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "solab/report/runner.hpp"

namespace {

using solab::report::RunConfig;

struct Flags {
    std::string config, catalog, chart, kind, format, out, lambda, c, seed, checks;
    int n = 0, k = 0, l = 0, samples = 0;
    double rho = 0, inner = 0, radius = 0, delta = 0, R = 0, h = 0, tol = 0;
    bool dry_run = false, full = false;
    std::vector<double> radii, times;
};

struct Bound {
    CLI::App* app = nullptr;
    std::map<std::string, CLI::Option*> opt;
    bool given(const std::string& name) const { return opt.at(name)->count() > 0; }
};

Bound add_options(CLI::App* app, Flags& f) {
    Bound b{app, {}};
    // -h would clash with the mesh size flag.
    app->set_help_flag("--help", "print this help and exit");
    auto& o = b.opt;
    o["config"] = app->add_option("--config", f.config, "JSON config file; flags override its values");
    o["catalog"] = app->add_option("--catalog", f.catalog, "built-in immersion (see `solab catalog`)");
    o["chart"] = app->add_option("--chart", f.chart, "chart JSON file");
    o["n"] = app->add_option("--n", f.n, "dimension");
    o["k"] = app->add_option("--k", f.k, "sphere factor dimension");
    o["l"] = app->add_option("--l", f.l, "second sphere factor dimension");
    o["rho"] = app->add_option("--rho", f.rho, "cylinder radius, or the inner radius for capacity");
    o["inner"] = app->add_option("--inner", f.inner, "inner radius for capacity");
    o["radius"] = app->add_option("--radius", f.radius, "sphere radius");
    o["delta"] = app->add_option("--delta", f.delta, "castro_lerma parameter");
    o["lambda"] = app->add_option("--lambda", f.lambda, "MCF constant or `infer`");
    o["c"] = app->add_option("--c", f.c, "IMCF constant or `infer`");
    o["kind"] = app->add_option("--kind", f.kind, "mcf or imcf");
    o["R"] = app->add_option("--R", f.R, "extrinsic radius");
    o["h"] = app->add_option("--h", f.h, "mesh size");
    o["tol"] = app->add_option("--tol", f.tol, "override the check tolerance");
    o["samples"] = app->add_option("--samples", f.samples, "sample budget");
    o["seed"] = app->add_option("--seed", f.seed, "sampling seed (decimal or 0x hex)");
    o["format"] = app->add_option("--format", f.format, "json or csv");
    o["out"] = app->add_option("--out", f.out, "directory for report.json, CSVs and meshes");
    o["dry_run"] = app->add_flag("--dry-run", f.dry_run, "print the resolved plan and exit");
    o["full"] = app->add_flag("--full", f.full, "include the slower PDE checks");
    o["radii"] = app->add_option("--radii", f.radii, "radius grid, comma separated")->delimiter(',');
    o["times"] = app->add_option("--times", f.times, "flow times, comma separated")->delimiter(',');
    o["checks"] = app->add_option("--checks", f.checks, "run only these checks, comma separated");
    return b;
}

double number_or_infer(const std::string& s, const char* flag, bool& infer) {
    if (s == "infer") {
        infer = true;
        return 0.0;
    }
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw solab::input_error("InvalidConfig", std::string("--") + flag + " must be a number or `infer`");
}

// Flags may sit before or after the subcommand name.
struct Given {
    const Bound& top;
    const Bound& sub;
    bool given(const std::string& name) const { return top.given(name) || (&top != &sub && sub.given(name)); }
};

RunConfig build(const std::string& command, const Given& b, const Flags& f) {
    RunConfig cfg;
    if (b.given("config")) cfg = solab::report::load_config(f.config);
    if (!command.empty()) cfg.command = command;
    if (b.given("catalog")) cfg.catalog = f.catalog, cfg.chart.clear();
    if (b.given("chart")) cfg.chart = f.chart, cfg.catalog.clear();
    if (b.given("catalog") && b.given("chart"))
        throw solab::input_error("InvalidConfig", "give exactly one of --catalog or --chart");
    if (b.given("n")) cfg.n = f.n;
    if (b.given("k")) cfg.k = f.k;
    if (b.given("l")) cfg.l = f.l;
    if (b.given("rho")) cfg.rho = f.rho;
    if (b.given("inner")) cfg.inner = f.inner;
    if (b.given("radius")) cfg.radius = f.radius;
    if (b.given("delta")) cfg.delta = f.delta;
    if (b.given("lambda")) {
        cfg.infer_lambda = false;
        double v = number_or_infer(f.lambda, "lambda", cfg.infer_lambda);
        if (cfg.infer_lambda) cfg.lambda.reset();
        else cfg.lambda = v;
    }
    if (b.given("c")) {
        cfg.infer_c = false;
        double v = number_or_infer(f.c, "c", cfg.infer_c);
        if (cfg.infer_c) cfg.c.reset();
        else cfg.c = v;
    }
    if (b.given("kind")) cfg.kind = f.kind;
    if (b.given("R")) cfg.R = f.R;
    if (b.given("h")) cfg.h = f.h;
    if (b.given("tol")) cfg.tol = f.tol;
    if (b.given("samples")) cfg.samples = f.samples;
    if (b.given("seed")) {
        try {
            std::size_t used = 0;
            cfg.seed = std::stoull(f.seed, &used, 0);
            if (used != f.seed.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw solab::input_error("InvalidConfig", "--seed must be an unsigned integer");
        }
    }
    if (b.given("format")) cfg.format = f.format;
    if (b.given("out")) cfg.out = f.out;
    if (f.dry_run) cfg.dry_run = true;
    if (f.full) cfg.full = true;
    if (b.given("radii")) cfg.radii = f.radii;
    if (b.given("times")) cfg.times = f.times;
    if (b.given("checks")) {
        cfg.checks.clear();
        std::string item;
        for (char ch : f.checks + ",") {
            if (ch == ',') {
                if (!item.empty()) cfg.checks.push_back(item);
                item.clear();
            } else {
                item += ch;
            }
        }
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"solab: numerical checks for MCF and IMCF soliton immersions"};
    app.require_subcommand(0, 1);
    Flags flags;
    const std::vector<std::pair<std::string, std::string>> subs = {
        {"catalog", "list the built-in immersions with their known constants"},
        {"check-soliton", "sup of the soliton residual over Sobol samples"},
        {"flow-residual", "homothetic flow residual at several times"},
        {"weighted-volume", "Gaussian weighted volume and flux identities"},
        {"psi", "weighted tail integral Psi(R)"},
        {"parabolicity-integral", "diagnostic parabolicity integral and trend"},
        {"capacity", "FEM capacity of D_rho in D_R with its upper bound"},
        {"exit-time", "FEM mean exit time compared with (R^2 - r^2)/(2n)"},
        {"isoperimetric", "isoperimetric comparisons and volume growth"},
        {"separation", "separation, second form thresholds and the far-H criterion"},
        {"report", "every applicable check; --full adds the PDE checks"},
    };
    std::vector<Bound> bound;
    bound.push_back(add_options(&app, flags));
    for (const auto& [name, help] : subs) bound.push_back(add_options(app.add_subcommand(name, help), flags));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    const Bound* active = &bound.front();
    std::string command;
    for (std::size_t i = 1; i < bound.size(); ++i)
        if (bound[i].app->parsed()) {
            active = &bound[i];
            command = subs[i - 1].first;
        }
    RunConfig cfg;
    try {
        cfg = build(command, Given{bound.front(), *active}, flags);
    } catch (const solab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    if (cfg.command.empty()) {
        std::cerr << "error: no command given\n\n" << app.help();
        return 2;
    }
    try {
        return solab::report::execute(cfg, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
