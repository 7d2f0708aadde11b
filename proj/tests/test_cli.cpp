#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "solab/report/runner.hpp"

using namespace solab;
using namespace solab::report;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out, err;
    Json json() const { return Json::parse(out); }
};

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("solab_cli_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CliRun cli(const std::string& args) {
    const fs::path err = scratch("stderr.txt");
    const std::string cmd = std::string(SOLAB_CLI_PATH) + " " + args + " 2>" + err.string();
    CliRun r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    fs::remove(err);
    return r;
}

std::string sample(const std::string& name) { return std::string(SOLAB_SAMPLES_DIR) + "/" + name; }

Json check(const Json& report, const std::string& name) {
    for (const auto& c : report["checks"])
        if (c["name"] == name) return c;
    throw std::runtime_error("no check " + name);
}

}  // namespace

TEST(Cli, CheckSolitonOnTheCylinder) {
    CliRun r = cli("check-soliton --catalog cylinder --n 2 --k 1 --rho 1 --kind mcf --lambda 1");
    ASSERT_EQ(r.code, 0) << r.err;
    Json j = r.json();
    EXPECT_EQ(j["schema"], 1);
    EXPECT_EQ(j["verdict"], "PASS");
    const Json c = check(j, "soliton-residual-mcf");
    EXPECT_LT(c["data"]["sup"].get<double>(), 1e-8);
    EXPECT_EQ(c["data"]["spec"]["source"], "given");
}

TEST(Cli, PlaneIsNotAnImcfSoliton) {
    CliRun r = cli("check-soliton --chart " + sample("plane.json") + " --kind imcf --c 0.5");
    EXPECT_EQ(r.code, 1);
    const Json c = check(r.json(), "soliton-residual-imcf");
    EXPECT_EQ(c["verdict"], "FAIL");
    EXPECT_EQ(c["data"]["error"]["code"], "VanishingMeanCurvature");
    EXPECT_NE(r.err.find("VanishingMeanCurvature"), std::string::npos);
}

TEST(Cli, CatalogListsSixEntries) {
    CliRun r = cli("catalog");
    ASSERT_EQ(r.code, 0) << r.err;
    const Json c = check(r.json(), "catalog");
    const Json& entries = c["data"]["entries"];
    ASSERT_EQ(entries.size(), 6u);
    std::map<std::string, Json> by;
    for (const auto& e : entries) by[e["name"]] = e;
    EXPECT_DOUBLE_EQ(by["sphere"]["A2_over_lambda"].get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(by["clifford_torus"]["A2_over_lambda"].get<double>(), 2.0);
    EXPECT_NEAR(by["veronese_surface"]["A2_over_lambda"].get<double>(), 5.0 / 3.0, 1e-15);
    EXPECT_DOUBLE_EQ(by["generalized_cylinder"]["lambda"].get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(by["generalized_cylinder"]["C"].get<double>(), 1.0);
    const auto cols = c["tables"]["catalog"]["columns"];
    EXPECT_NE(std::find(cols.begin(), cols.end(), "A2_over_lambda"), cols.end());
}

TEST(Cli, CapacityOfThePlaneAnnulus) {
    CliRun r = cli("capacity --catalog plane --n 2 --rho 1 --R 2.71828");
    ASSERT_EQ(r.code, 0) << r.err;
    const Json c = check(r.json(), "capacity");
    const double cap = c["data"]["capacity"];
    EXPECT_NEAR(cap, 2 * std::numbers::pi, 0.02 * 2 * std::numbers::pi);
    EXPECT_EQ(c["data"]["rho"], 1);
    EXPECT_TRUE(c["data"]["below_bound"].get<bool>());
}

TEST(Cli, ExitTimeRatioOnTheCylinder) {
    CliRun r = cli("exit-time --catalog cylinder --n 2 --k 1 --rho 1 --R 2 --kind imcf --c 1");
    ASSERT_EQ(r.code, 0) << r.err;
    const Json rows = check(r.json(), "exit-time")["tables"]["comparison"]["rows"];
    ASSERT_EQ(rows.size(), 1u);
    // kind, constant, mode, ..., expected_ratio (6), mean_ratio (7), max_rel_deviation (8)
    EXPECT_EQ(rows[0][2], "ratio");
    EXPECT_NEAR(rows[0][7].get<double>(), 2.0, 0.04);
    EXPECT_LE(rows[0][8].get<double>(), 0.02);
}

TEST(Cli, UnknownFlagIsAUsageError) {
    CliRun r = cli("check-soliton --catalog cylinder --bogus 3");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, NoCommandIsAUsageError) {
    CliRun r = cli("");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitTwo) {
    const fs::path dir = scratch("cfg");
    fs::create_directories(dir);
    std::ofstream(dir / "typo.json") << R"({"catalog": "cylinder", "lamda": 1})";
    CliRun typo = cli("check-soliton --config " + (dir / "typo.json").string());
    EXPECT_EQ(typo.code, 2);
    EXPECT_NE(typo.err.find("UnknownConfigKey"), std::string::npos);
    EXPECT_EQ(cli("psi --catalog cylinder --radii 2,1.5").code, 2);
    EXPECT_EQ(cli("check-soliton --catalog nosuch").code, 2);
    EXPECT_EQ(cli("check-soliton --chart " + (dir / "missing.json").string()).code, 2);
    EXPECT_EQ(cli("check-soliton --catalog cylinder --kind both").code, 2);
    EXPECT_EQ(cli("check-soliton --catalog cylinder --lambda fast").code, 2);
    EXPECT_EQ(cli("capacity --catalog plane --rho 1 --inner 1").code, 2);
    fs::remove_all(dir);
}

TEST(Cli, FlagsOverrideTheConfigFile) {
    const fs::path dir = scratch("override");
    fs::create_directories(dir);
    std::ofstream(dir / "c.json") << R"({"catalog": "cylinder", "n": 2, "k": 1, "kind": "mcf", "lambda": 1, "tol": 1e-9})";
    CliRun r = cli("check-soliton --config " + (dir / "c.json").string() + " --tol 1e-12 --samples 64");
    ASSERT_EQ(r.code, 0) << r.err;
    Json j = r.json();
    EXPECT_EQ(j["config"]["tol"], 1e-12);
    EXPECT_EQ(j["config"]["lambda"], 1);
    EXPECT_EQ(check(j, "soliton-residual-mcf")["data"]["samples"], 64);
    fs::remove_all(dir);
}

TEST(Cli, DryRunPrintsThePlanAndLeavesOutAlone) {
    const fs::path out = scratch("dry");
    CliRun r = cli("report --catalog sphere --n 2 --radius 2 --full --dry-run --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_FALSE(fs::exists(out));
    Json j = r.json();
    EXPECT_TRUE(j["dry_run"].get<bool>());
    bool skipped_capacity = false;
    for (const auto& s : j["plan"])
        if (s["name"] == "capacity") skipped_capacity = s.contains("skip");
    EXPECT_TRUE(skipped_capacity);
    EXPECT_FALSE(j.contains("checks"));
}

TEST(Cli, OutDirectoryHoldsReportTablesAndMeshes) {
    const fs::path out = scratch("out");
    CliRun r = cli("capacity --catalog plane --n 2 --rho 1 --R 2 --h 0.1 --out " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(out / "report.json"), r.out);
    EXPECT_TRUE(fs::exists(out / "capacity_capacity.csv"));
    EXPECT_EQ(slurp(out / "capacity_mesh.off").rfind("OFF\n", 0), 0u);
    EXPECT_EQ(slurp(out / "capacity_field.csv").rfind("vertex,u1,u2,r,value\n", 0), 0u);
    fs::remove_all(out);
}

TEST(Cli, CsvFormat) {
    CliRun r = cli("flow-residual --catalog sphere --n 2 --kind mcf --format csv");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("# checks\nname,verdict\nflow-residual-mcf,PASS\n", 0), 0u);
    EXPECT_NE(r.out.find("# flow-residual-mcf/flow\nt,factor,sup_residual"), std::string::npos);
}

TEST(Cli, NumericalFailureExitsThree) {
    // Psi vanishes beyond the sphere, so the parabolicity integrand blows up.
    CliRun r = cli("parabolicity-integral --catalog sphere --n 2");
    EXPECT_EQ(r.code, 3);
    const Json c = check(r.json(), "parabolicity-integral");
    EXPECT_EQ(c["verdict"], "ERROR");
    EXPECT_EQ(c["data"]["error"]["code"], "PsiUnderflow");
    EXPECT_EQ(r.json()["verdict"], "ERROR");
}

TEST(Cli, FullReportOnTheSphere) {
    CliRun r = cli("report --catalog sphere --n 2 --radius 2 --full");
    ASSERT_EQ(r.code, 0) << r.err;
    Json j = r.json();
    EXPECT_EQ(j["verdict"], "PASS");
    int passed = 0;
    for (const auto& c : j["checks"]) {
        EXPECT_NE(c["verdict"], "FAIL") << c["name"];
        EXPECT_NE(c["verdict"], "ERROR") << c["name"];
        passed += c["verdict"] == "PASS";
    }
    EXPECT_GE(passed, 8);
    EXPECT_NEAR(check(j, "second-form")["data"]["max_A2_over_lambda"].get<double>(), 1.0, 1e-6);
}

TEST(Cli, InferredConstantOnTheShiftedPlane) {
    CliRun r = cli("check-soliton --chart " + sample("shifted_plane.json") + " --lambda infer");
    ASSERT_EQ(r.code, 0) << r.err;
    Json j = r.json();
    EXPECT_EQ(j["specs"]["mcf"]["source"], "inferred");
    EXPECT_EQ(dump17(j["specs"]["mcf"]["lambda"], 0), "0");
}

TEST(Cli, ReportSkipsFollowOnsForANonSoliton) {
    CliRun r = cli("report --chart " + sample("paraboloid.json"));
    EXPECT_EQ(r.code, 1);
    Json j = r.json();
    EXPECT_EQ(check(j, "soliton-residual-mcf")["verdict"], "FAIL");
    EXPECT_EQ(check(j, "psi")["verdict"], "SKIPPED");
    EXPECT_NE(check(j, "psi")["data"]["reason"].get<std::string>().find("not a soliton"), std::string::npos);
}

TEST(Cli, ChecksFilterKeepsPlanOrder) {
    CliRun r = cli("report --catalog cylinder --checks psi,soliton-residual-mcf");
    ASSERT_EQ(r.code, 0) << r.err;
    Json j = r.json();
    ASSERT_EQ(j["checks"].size(), 2u);
    EXPECT_EQ(j["checks"][0]["name"], "soliton-residual-mcf");
    EXPECT_EQ(j["checks"][1]["name"], "psi");
    EXPECT_EQ(cli("report --catalog cylinder --checks nonsense").code, 2);
}

TEST(Runner, SameConfigSameBytes) {
    RunConfig cfg;
    cfg.command = "report";
    cfg.catalog = "cylinder";
    cfg.n = 2;
    cfg.k = 1;
    RunOutput a = run(cfg), b = run(cfg);
    EXPECT_EQ(dump17(strip_timing(a.report)), dump17(strip_timing(b.report)));
    cfg.seed = 7;
    RunOutput c = run(cfg);
    EXPECT_NE(dump17(strip_timing(a.report)), dump17(strip_timing(c.report)));
    EXPECT_EQ(c.exit_code, 0);
}

TEST(Runner, SeventeenDigits) {
    Json j = {{"x", 0.1}, {"bad", std::nan("")}};
    EXPECT_EQ(dump17(j, 0), R"({"x":0.10000000000000001,"bad":null})");
    EXPECT_EQ(Json::parse(dump17(Json(1.0 / 3.0))).get<double>(), 1.0 / 3.0);
}

TEST(Runner, TimingIsTheOnlyStrippedKey) {
    Json j = {{"a", 1}, {"wall_seconds", 2.0}, {"checks", {{{"wall_seconds", 1.0}, {"b", 2}}}}};
    EXPECT_EQ(strip_timing(j).dump(), R"({"a":1,"checks":[{"b":2}]})");
}

TEST(Runner, RhoNamesTheInnerRadiusOffCylinders) {
    RunConfig cfg;
    cfg.command = "capacity";
    cfg.catalog = "plane";
    cfg.rho = 1.0;
    Subject s = resolve_subject(cfg);
    ASSERT_TRUE(s.inner);
    EXPECT_EQ(*s.inner, 1.0);
    cfg.catalog = "cylinder";
    cfg.rho = 2.0;
    Subject c = resolve_subject(cfg);
    EXPECT_FALSE(c.inner);
    EXPECT_EQ(c.entry->params.at("rho"), 2.0);
}

TEST(Runner, ExitCodePrecedence) {
    // A numerical error outranks a failed check.
    RunConfig cfg;
    cfg.command = "report";
    cfg.catalog = "sphere";
    cfg.kind = "imcf";
    cfg.c = 0.7;  // wrong constant: residual fails
    RunOutput r = run(cfg);
    EXPECT_EQ(r.exit_code, 1);
    std::ostringstream out, err;
    cfg.command = "parabolicity-integral";
    cfg.kind = "mcf";
    cfg.c.reset();
    EXPECT_EQ(execute(cfg, out, err), 3);
}
