#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "evp/cli.hpp"
#include "evp/io.hpp"

using namespace evp;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("evplab_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json binomial_walk_config(const fs::path& dir) {
    return json{{"command", "simulate-walk"},
                {"seed", 17},
                {"output_dir", dir.string()},
                {"env", {{"constant_p", 0.5}}},
                {"alpha", {{"float", {0.3}}}},
                {"z", {0.0}},
                {"n", 4},
                {"m", 20000}};
}

} // namespace

TEST_CASE("invalid configs exit with code 2 and produce nothing") {
    fs::path dir = fresh_dir("invalid");
    json cfg = binomial_walk_config(dir);
    cfg["n"] = -4;
    CHECK(cli::run_document(cfg, 0, false) == 2);
    CHECK(!fs::exists(dir / "manifest.json"));
    CHECK(!fs::exists(dir / "pmf.csv"));

    json unknown = {{"command", "frobnicate"}};
    CHECK(cli::run_document(unknown, 0, false) == 2);

    json missing = {{"command", "simulate-walk"}};
    CHECK(cli::run_document(missing, 0, false) == 2);
}

TEST_CASE("simulate-walk writes the exact law and the histogram") {
    fs::path dir = fresh_dir("walk");
    CHECK(cli::run_document(binomial_walk_config(dir), 0, false) == 0);

    std::string pmf = slurp(dir / "pmf.csv");
    CHECK(pmf.find("n,offset_or_stat,value,stderr") == 0);
    CHECK(pmf.find("4,0,0.375,0") != std::string::npos);

    json manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("status") == "ok");
    CHECK(manifest.at("command") == "simulate-walk");
    CHECK(manifest.at("outputs").size() == 2);
    CHECK(manifest.at("config_hash").get<std::string>().size() == 16);
}

TEST_CASE("manifest re-runs reproduce byte-identical outputs") {
    fs::path dir = fresh_dir("rerun");
    REQUIRE(cli::run_document(binomial_walk_config(dir), 0, false) == 0);
    std::string pmf1 = slurp(dir / "pmf.csv");
    std::string hist1 = slurp(dir / "histogram.csv");

    json manifest = json::parse(slurp(dir / "manifest.json"));
    REQUIRE(cli::run_document(manifest, 0, false) == 0);
    CHECK(slurp(dir / "pmf.csv") == pmf1);
    CHECK(slurp(dir / "histogram.csv") == hist1);
}

TEST_CASE("seed override changes the histogram but not the exact law") {
    fs::path dir1 = fresh_dir("seed1");
    fs::path dir2 = fresh_dir("seed2");
    json cfg1 = binomial_walk_config(dir1);
    json cfg2 = binomial_walk_config(dir2);
    REQUIRE(cli::run_document(cfg1, 0, false) == 0);
    REQUIRE(cli::run_document(cfg2, 99, true) == 0);
    CHECK(slurp(dir1 / "pmf.csv") == slurp(dir2 / "pmf.csv"));
    CHECK(slurp(dir1 / "histogram.csv") != slurp(dir2 / "histogram.csv"));
    json manifest2 = json::parse(slurp(dir2 / "manifest.json"));
    CHECK(manifest2.at("config").at("seed") == 99);
}

TEST_CASE("ratio-limit command emits lhs/rhs rows") {
    fs::path dir = fresh_dir("ratio");
    json cfg = {{"command", "ratio-limit"},
                {"output_dir", dir.string()},
                {"env", {{"trigpoly", {{"d", 1}, {"terms", {{{"k", {1}}, {"cos", 0.0}, {"sin", 0.3}}}}}}}},
                {"alpha", {{"golden", true}}},
                {"z", {0.1}},
                {"a", 1},
                {"b", 0},
                {"n_list", {50, 200}}};
    REQUIRE(cli::run_document(cfg, 0, false) == 0);
    std::string csv = slurp(dir / "ratio_limit.csv");
    CHECK(csv.find("50,lhs,") != std::string::npos);
    CHECK(csv.find("200,rhs,") != std::string::npos);
    CHECK(csv.find("200,absdiff,") != std::string::npos);
}

TEST_CASE("describe performs no computation and mentions the plan") {
    json cfg = binomial_walk_config("unused_dir");
    std::string plan = cli::describe_document(cfg);
    CHECK(plan.find("command: simulate-walk") != std::string::npos);
    CHECK(plan.find("DP cells") != std::string::npos);
    CHECK(!fs::exists("unused_dir"));

    json mixing = {{"command", "mixing"},
                   {"env", {{"constant_p", 0.5}}},
                   {"alpha", {{"golden", true}}},
                   {"measure", {{"uniform", 16}}},
                   {"phi", {{"one", true}}},
                   {"psi", {{"one", true}}},
                   {"n_list", {10, 5000}}};
    std::string plan2 = cli::describe_document(mixing);
    CHECK(plan2.find("Monte Carlo") != std::string::npos); // n > exact limit flagged

    json build = {{"command", "build-counterexample"},
                  {"schedule", {{"delta1", 0.05}, {"ratio", 0.4}, {"count", 3}}},
                  {"stages", 1}};
    std::string plan3 = cli::describe_document(build);
    CHECK(plan3.find("delta schedule: 0.05 0.02 0.008") != std::string::npos);
    CHECK(plan3.find("r_cap=1048576") != std::string::npos);

    json ratio = {{"command", "ratio-limit"},
                  {"env", {{"constant_p", 0.5}}},
                  {"alpha", {{"golden", true}}},
                  {"z", {0.1}},
                  {"a", 1},
                  {"b", 0},
                  {"n_list", {100}}};
    std::string plan4 = cli::describe_document(ratio);
    CHECK(plan4.find("invariant weights") != std::string::npos);

    json bad = {{"command", "nope"}};
    CHECK_THROWS_AS(cli::describe_document(bad), ConfigError);
}

TEST_CASE("operation failures exit 1 with a structured manifest error") {
    fs::path dir = fresh_dir("operr");
    json cfg = {{"command", "ratio-limit"},
                {"output_dir", dir.string()},
                {"env", {{"trigpoly", {{"d", 1}, {"terms", json::array({json{{"k", {1}}, {"cos", 0.0}, {"sin", 0.3}}})}}}}},
                {"alpha", {{"golden", true}}},
                {"z", {0.1}},
                {"a", 1},
                {"b", 0},
                {"n_list", {10}}};
    // make the environment asymmetric so the precondition fails
    cfg["env"]["trigpoly"]["terms"].push_back(json{{"k", {0}}, {"cos", 0.3}, {"sin", 0.0}});
    CHECK(cli::run_document(cfg, 0, false) == 1);
    json manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("status") == "error");
    CHECK(manifest.at("error").at("message").get<std::string>().find("symmetric") !=
          std::string::npos);
}

TEST_CASE("csv floats carry 17 significant digits") {
    CHECK(format_double(0.375) == "0.375");
    CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
    CHECK(format_double(2.0) == "2");
}

TEST_CASE("remaining commands run end to end") {
    json sin_env = {{"trigpoly",
                     {{"d", 1},
                      {"terms", json::array({json{{"k", {1}}, {"cos", 0.0}, {"sin", 0.3}}})}}}};

    SUBCASE("birkhoff-ratio on a uniform grid") {
        fs::path dir = fresh_dir("scan");
        json cfg = {{"command", "birkhoff-ratio"}, {"output_dir", dir.string()},
                    {"env", sin_env},             {"alpha", {{"golden", true}}},
                    {"phi", {{"trigpoly", {{"d", 1}, {"terms", json::array({json{{"k", {1}}, {"cos", 1.0}, {"sin", 0.0}}})}}}}},
                    {"n", 256},                   {"points", {{"uniform1d", 32}}}};
        REQUIRE(cli::run_document(cfg, 0, false) == 0);
        std::string scan = slurp(dir / "scan.csv");
        CHECK(scan.find("256,spread,") != std::string::npos);
        CHECK(slurp(dir / "scan_points.csv").find("i,x1,ratio") == 0);
    }

    SUBCASE("stage bundle scan, verify-stage, atoms, stationary, mixing") {
        fs::path bdir = fresh_dir("bundle");
        json build = {{"command", "build-counterexample"},
                      {"output_dir", bdir.string()},
                      {"schedule", {{"delta1", 0.05}, {"ratio", 0.4}, {"count", 4}}},
                      {"stages", 1},
                      {"work_budget", 400000000}};
        REQUIRE(cli::run_document(build, 0, false) == 0);
        fs::path bundle = bdir / "bundle.json";

        fs::path vdir = fresh_dir("verify");
        json verify = {{"command", "verify-stage"},
                       {"output_dir", vdir.string()},
                       {"bundle", bundle.string()},
                       {"stage", 1}};
        REQUIRE(cli::run_document(verify, 0, false) == 0);
        json rep = json::parse(slurp(vdir / "verify.json"));
        CHECK(rep.at("pass_goal").get<bool>());

        fs::path sdir = fresh_dir("scan_stage");
        json scan = {{"command", "birkhoff-ratio"},
                     {"output_dir", sdir.string()},
                     {"phi", {{"ramp", json::object()}}},
                     {"n", 256},
                     {"points", {{"stage_strips", {{"bundle", bundle.string()}, {"stage", 1}, {"per_circle", 64}}}}}};
        REQUIRE(cli::run_document(scan, 0, false) == 0);
        CHECK(slurp(sdir / "scan.csv").find("spread") != std::string::npos);

        fs::path adir = fresh_dir("atoms");
        json atoms = {{"command", "atoms"},     {"output_dir", adir.string()},
                      {"env", sin_env},         {"alpha", {{"golden", true}}},
                      {"z0", {0.1}},            {"N", 200},
                      {"emit_every", 50}};
        REQUIRE(cli::run_document(atoms, 0, false) == 0);
        CHECK(slurp(adir / "atoms.csv").find("200,log_partial_sum,") != std::string::npos);

        fs::path stdir = fresh_dir("stationary");
        json stationary = {{"command", "stationary-estimate"},
                           {"output_dir", stdir.string()},
                           {"env", sin_env},
                           {"alpha", {{"golden", true}}},
                           {"z0", {0.1}},
                           {"burnin", 500},
                           {"length", 5000},
                           {"cutoff", 3},
                           {"compact", {{"radius", 0.001}, {"cap", 512}}}};
        REQUIRE(cli::run_document(stationary, 0, false) == 0);
        json fp = json::parse(slurp(stdir / "fingerprint.json"));
        CHECK(fp.at("cutoff") == 3);
        json meas = json::parse(slurp(stdir / "measure.json"));
        CHECK(meas.at("atoms").size() <= 512);

        fs::path mdir = fresh_dir("mixing");
        json mixing = {{"command", "mixing"},
                       {"output_dir", mdir.string()},
                       {"env", sin_env},
                       {"alpha", {{"golden", true}}},
                       {"measure", {{"file", (stdir / "measure.json").string()}}},
                       {"phi", {{"trigpoly", {{"d", 1}, {"terms", json::array({json{{"k", {1}}, {"cos", 1.0}, {"sin", 0.0}}})}}}}},
                       {"psi", {{"trigpoly", {{"d", 1}, {"terms", json::array({json{{"k", {1}}, {"cos", 1.0}, {"sin", 0.0}}})}}}}},
                       {"n_list", {0, 64}}};
        REQUIRE(cli::run_document(mixing, 0, false) == 0);
        std::string mcsv = slurp(mdir / "mixing.csv");
        CHECK(mcsv.find("0,corr,") != std::string::npos);
        CHECK(mcsv.find("64,corr,") != std::string::npos);
    }
}

TEST_CASE("the installed binary handles run and describe") {
    fs::path dir = fresh_dir("binary");
    json cfg = binomial_walk_config(dir);
    atomic_write(dir / "config.json", cfg.dump(2));
    std::string cli_path = EVPLAB_CLI_PATH;
    std::string cmd = cli_path + " describe " + (dir / "config.json").string() + " > " +
                      (dir / "plan.txt").string();
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(slurp(dir / "plan.txt").find("command: simulate-walk") != std::string::npos);
    std::string run_cmd = cli_path + " run " + (dir / "config.json").string() +
                          " --seed 5 > /dev/null";
    REQUIRE(std::system(run_cmd.c_str()) == 0);
    CHECK(fs::exists(dir / "pmf.csv"));
    json manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("config").at("seed") == 5);
}
