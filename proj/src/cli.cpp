#include "evp/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "evp/analysis.hpp"
#include "evp/counterexample.hpp"
#include "evp/io.hpp"
#include "evp/operators.hpp"
#include "evp/walk.hpp"

namespace evp::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// --------------------------------------------------------------------------
// Schema helpers

[[noreturn]] void bad(const std::string& msg) { throw ConfigError(msg); }

const json& need(const json& j, const std::string& key) {
    if (!j.contains(key)) bad("missing required key '" + key + "'");
    return j.at(key);
}

long long need_int(const json& j, const std::string& key, long long lo, long long hi) {
    const json& v = need(j, key);
    if (!v.is_number_integer()) bad("'" + key + "' must be an integer");
    long long x = v.get<long long>();
    if (x < lo || x > hi)
        bad("'" + key + "' out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
}

long long opt_int(const json& j, const std::string& key, long long dflt, long long lo,
                  long long hi) {
    if (!j.contains(key)) return dflt;
    return need_int(j, key, lo, hi);
}

double need_num(const json& j, const std::string& key) {
    const json& v = need(j, key);
    if (!v.is_number()) bad("'" + key + "' must be a number");
    return v.get<double>();
}

double opt_num(const json& j, const std::string& key, double dflt) {
    return j.contains(key) ? need_num(j, key) : dflt;
}

std::string need_str(const json& j, const std::string& key) {
    const json& v = need(j, key);
    if (!v.is_string()) bad("'" + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<long long> need_int_list(const json& j, const std::string& key) {
    const json& v = need(j, key);
    if (!v.is_array() || v.empty()) bad("'" + key + "' must be a nonempty array");
    std::vector<long long> out;
    for (const auto& e : v) {
        if (!e.is_number_integer()) bad("'" + key + "' must hold integers");
        out.push_back(e.get<long long>());
    }
    return out;
}

// --------------------------------------------------------------------------
// Spec resolution

TrigPoly parse_trigpoly(const json& j) {
    try {
        return TrigPoly::from_json(j);
    } catch (const std::exception& e) {
        bad(std::string("bad trigpoly: ") + e.what());
    }
}

StageBundle load_bundle(const std::string& path) {
    std::ifstream in(path);
    if (!in) bad("cannot open stage bundle: " + path);
    json j;
    in >> j;
    return StageBundle::from_json(j);
}

struct EnvSpec {
    EnvProfile env;
    std::optional<RotationVector> alpha_from_stage;
};

EnvSpec resolve_env(const json& cfg) {
    const json& e = need(cfg, "env");
    if (e.contains("constant_p")) {
        double p = e.at("constant_p").get<double>();
        if (!(p > 0.0 && p < 1.0)) bad("constant_p must lie in (0,1)");
        int d = static_cast<int>(opt_int(e, "d", 1, 1, 8));
        TrigPoly f(d);
        f.set_mean(std::log(p / (1.0 - p)));
        return {xi_map(std::move(f)), std::nullopt};
    }
    if (e.contains("trigpoly")) return {xi_map(parse_trigpoly(e.at("trigpoly"))), std::nullopt};
    if (e.contains("stage_bundle")) {
        StageBundle b = load_bundle(e.at("stage_bundle").get<std::string>());
        std::size_t k = static_cast<std::size_t>(
            opt_int(e, "stage", static_cast<long long>(b.stages.size()) - 1, 0,
                    static_cast<long long>(b.stages.size()) - 1));
        return {xi_map(b.stages[k].f), b.stages[k].alpha};
    }
    bad("env must specify one of constant_p | trigpoly | stage_bundle");
}

RotationVector resolve_alpha(const json& cfg, const EnvSpec& es, int dim) {
    if (!cfg.contains("alpha")) {
        if (es.alpha_from_stage) return *es.alpha_from_stage;
        bad("missing 'alpha'");
    }
    const json& a = cfg.at("alpha");
    if (a.contains("golden")) {
        std::vector<double> v(static_cast<std::size_t>(dim), (std::sqrt(5.0) - 1.0) / 2.0);
        return RotationVector::from_floats(std::move(v));
    }
    if (a.contains("float")) {
        auto v = a.at("float").get<std::vector<double>>();
        if (static_cast<int>(v.size()) != dim) bad("alpha dimension mismatch");
        return RotationVector::from_floats(std::move(v));
    }
    if (a.contains("exact")) {
        auto v = a.at("exact").get<std::vector<std::string>>();
        if (static_cast<int>(v.size()) != dim) bad("alpha dimension mismatch");
        return RotationVector::from_strings(v);
    }
    bad("alpha must specify one of golden | float | exact");
}

TorusPoint resolve_point(const json& cfg, const std::string& key, int dim) {
    auto v = need(cfg, key).get<std::vector<double>>();
    if (static_cast<int>(v.size()) != dim) bad("'" + key + "' dimension mismatch");
    return TorusPoint(std::move(v));
}

TestFunction resolve_phi(const json& cfg, const std::string& key) {
    const json& p = need(cfg, key);
    if (p.contains("one") && p.at("one").get<bool>()) return TestFunction::one();
    if (p.contains("trigpoly")) return TestFunction(parse_trigpoly(p.at("trigpoly")));
    if (p.contains("ramp")) {
        RampX1 r;
        const json& rj = p.at("ramp");
        r.zero_hi = opt_num(rj, "zero_hi", r.zero_hi);
        r.one_lo = opt_num(rj, "one_lo", r.one_lo);
        r.one_hi = opt_num(rj, "one_hi", r.one_hi);
        return TestFunction(r);
    }
    bad("'" + key + "' must specify one of one | trigpoly | ramp");
}

ParticleMeasure resolve_measure(const json& cfg, const std::string& key, const EnvProfile& env,
                                const RotationVector& alpha, std::uint64_t seed) {
    const json& m = need(cfg, key);
    if (m.contains("uniform")) {
        return ParticleMeasure::uniform_grid(env.dim(),
                                             static_cast<std::size_t>(m.at("uniform").get<long long>()));
    }
    if (m.contains("dirac")) {
        auto v = m.at("dirac").get<std::vector<double>>();
        return ParticleMeasure::dirac(TorusPoint(std::move(v)));
    }
    if (m.contains("file")) {
        std::ifstream in(m.at("file").get<std::string>());
        if (!in) bad("cannot open measure file");
        json j;
        in >> j;
        return ParticleMeasure::from_json(j);
    }
    if (m.contains("stationary")) {
        const json& s = m.at("stationary");
        TorusPoint z0 = resolve_point(s, "z0", env.dim());
        long long burnin = opt_int(s, "burnin", 10000, 0, 1LL << 40);
        long long length = need_int(s, "length", 1, 1LL << 40);
        RngSpec rng{seed, static_cast<std::uint64_t>(opt_int(s, "stream", 0, 0, 1LL << 40))};
        ParticleMeasure mu = stationary_estimate(env, alpha, z0, burnin, length, rng);
        if (s.contains("compact")) {
            const json& c = s.at("compact");
            mu.compact(need_num(c, "radius"), static_cast<std::size_t>(need_int(c, "cap", 1, 1LL << 30)));
        }
        return mu;
    }
    bad("'" + key + "' must specify one of uniform | dirac | file | stationary");
}

// --------------------------------------------------------------------------
// Run context

struct RunContext {
    fs::path out_dir;
    std::vector<std::string> outputs;

    void save_csv(const std::string& name, const CsvWriter& csv) {
        csv.save(out_dir / name);
        outputs.push_back(name);
    }
    void save_json(const std::string& name, const json& j) {
        atomic_write(out_dir / name, j.dump(2) + "\n");
        outputs.push_back(name);
    }
};

// --------------------------------------------------------------------------
// Commands

void cmd_simulate_walk(const json& cfg, std::uint64_t seed, RunContext& ctx) {
    EnvSpec es = resolve_env(cfg);
    RotationVector alpha = resolve_alpha(cfg, es, es.env.dim());
    TorusPoint z = resolve_point(cfg, "z", es.env.dim());
    long long n = need_int(cfg, "n", 0, 200000);
    long long m = need_int(cfg, "m", 1, 1LL << 40);

    WalkPMF pmf = walk_pmf_exact(es.env, alpha, z, n);
    CsvWriter exact({"n", "offset_or_stat", "value", "stderr"});
    for (long long k = -n; k <= n; ++k)
        exact.row_of(n, k, pmf.prob(k), 0.0);
    ctx.save_csv("pmf.csv", exact);

    EndpointHistogram hist =
        walk_sample(es.env, alpha, z, n, m, RngSpec{seed, 0});
    CsvWriter mc({"n", "offset_or_stat", "value", "stderr"});
    for (long long k = -n; k <= n; ++k) {
        double f = hist.freq(k);
        mc.row_of(n, k, f, std::sqrt(std::max(0.0, f * (1.0 - f) / static_cast<double>(m))));
    }
    ctx.save_csv("histogram.csv", mc);
}

void cmd_ratio_limit(const json& cfg, std::uint64_t, RunContext& ctx) {
    EnvSpec es = resolve_env(cfg);
    RotationVector alpha = resolve_alpha(cfg, es, es.env.dim());
    TorusPoint z = resolve_point(cfg, "z", es.env.dim());
    long long a = need_int(cfg, "a", -100000, 100000);
    long long b = need_int(cfg, "b", -100000, 100000);
    auto n_list = need_int_list(cfg, "n_list");

    auto rows = ratio_limit_report(es.env, alpha, z, a, b, n_list);
    CsvWriter csv({"n", "offset_or_stat", "value", "stderr"});
    for (const auto& r : rows) {
        csv.row_of(r.n, "lhs", r.lhs, 0.0);
        csv.row_of(r.n, "rhs", r.rhs, 0.0);
        csv.row_of(r.n, "absdiff", std::abs(r.lhs - r.rhs), 0.0);
    }
    ctx.save_csv("ratio_limit.csv", csv);
}

void cmd_birkhoff_ratio(const json& cfg, std::uint64_t, RunContext& ctx) {
    long long n = need_int(cfg, "n", 1, 1LL << 40);
    TestFunction phi = resolve_phi(cfg, "phi");

    TrigPoly f(1);
    RotationVector alpha = RotationVector::from_floats({0.0});
    std::vector<TorusPoint> points;

    const json& pts = need(cfg, "points");
    if (pts.contains("stage_strips")) {
        const json& ss = pts.at("stage_strips");
        StageBundle b = load_bundle(need_str(ss, "bundle"));
        std::size_t k = static_cast<std::size_t>(
            need_int(ss, "stage", 1, static_cast<long long>(b.stages.size()) - 1));
        long long per = opt_int(ss, "per_circle", 512, 1, 1 << 24);
        const Stage& st = b.stages[k];
        f = st.f;
        alpha = st.alpha;
        for (long long i = 0; i < per; ++i) {
            Rational t(i, per);
            points.push_back(st.strip_plus.circle.point(t));
            points.push_back(st.strip_minus.circle.point(t));
        }
    } else {
        EnvSpec es = resolve_env(cfg);
        f = es.env.logratio();
        alpha = resolve_alpha(cfg, es, f.dim());
        if (pts.contains("uniform1d")) {
            long long g = pts.at("uniform1d").get<long long>();
            for (long long i = 0; i < g; ++i)
                points.push_back(TorusPoint({static_cast<double>(i) / static_cast<double>(g)}));
        } else if (pts.contains("uniform2d")) {
            long long g = pts.at("uniform2d").get<long long>();
            for (long long i = 0; i < g; ++i)
                for (long long j = 0; j < g; ++j)
                    points.push_back(TorusPoint({static_cast<double>(i) / static_cast<double>(g),
                                                 static_cast<double>(j) / static_cast<double>(g)}));
        } else {
            bad("points must specify uniform1d | uniform2d | stage_strips");
        }
    }

    UniformityScan scan = ratio_uniformity_scan(f, alpha, phi, points, n);
    CsvWriter pcsv(f.dim() == 1 ? std::vector<std::string>{"i", "x1", "ratio"}
                                : std::vector<std::string>{"i", "x1", "x2", "ratio"});
    for (std::size_t i = 0; i < points.size(); ++i) {
        double ratio = weighted_birkhoff(f, alpha, phi, points[i], n).ratio;
        if (f.dim() == 1)
            pcsv.row_of(static_cast<long long>(i), points[i][0], ratio);
        else
            pcsv.row_of(static_cast<long long>(i), points[i][0], points[i][1], ratio);
    }
    ctx.save_csv("scan_points.csv", pcsv);

    CsvWriter csv({"n", "offset_or_stat", "value", "stderr"});
    csv.row_of(n, "min", scan.min_ratio, 0.0);
    csv.row_of(n, "max", scan.max_ratio, 0.0);
    csv.row_of(n, "spread", scan.spread(), 0.0);
    ctx.save_csv("scan.csv", csv);
}

std::vector<double> resolve_schedule(const json& cfg) {
    const json& s = need(cfg, "schedule");
    if (s.is_array()) return s.get<std::vector<double>>();
    double d1 = need_num(s, "delta1");
    double ratio = need_num(s, "ratio");
    long long count = need_int(s, "count", 1, 64);
    std::vector<double> out;
    double d = d1;
    for (long long i = 0; i < count; ++i) {
        out.push_back(d);
        d *= ratio;
    }
    return out;
}

void cmd_build_counterexample(const json& cfg, std::uint64_t, RunContext& ctx) {
    std::vector<double> schedule = resolve_schedule(cfg);
    long long stages = need_int(cfg, "stages", 1, 16);
    std::string mode = cfg.contains("c_mode") ? need_str(cfg, "c_mode") : "relaxed";
    if (mode != "strict" && mode != "relaxed") bad("c_mode must be strict or relaxed");
    AdvanceOptions opts;
    opts.c_mode = mode == "strict" ? CMode::strict : CMode::relaxed;
    opts.r_cap = opt_int(cfg, "r_cap", kDefaultRCap, 2, 1LL << 40);
    opts.grid = opt_int(cfg, "grid", 0, 0, 1 << 26);
    opts.work_budget = opt_int(cfg, "work_budget", kDefaultWorkBudget, 1, 1LL << 50);
    bool allow_exhaustion = cfg.contains("allow_exhaustion") && cfg.at("allow_exhaustion").get<bool>();
    std::vector<double> c_values;
    if (cfg.contains("c_values")) c_values = cfg.at("c_values").get<std::vector<double>>();

    if (static_cast<std::size_t>(stages) > schedule.size())
        bad("schedule shorter than the requested stage count");

    StageBundle bundle = init_stage0(schedule);
    CsvWriter report({"stage", "offset_or_stat", "value", "stderr"});
    json attempts = json::array();
    for (long long k = 1; k <= stages; ++k) {
        AdvanceOptions o = opts;
        if (opts.c_mode == CMode::relaxed && static_cast<std::size_t>(k) <= c_values.size() + 1 &&
            k >= 2 && !c_values.empty())
            o.c_value = c_values[static_cast<std::size_t>(k - 2)];
        AdvanceResult res = advance_stage(bundle, schedule[static_cast<std::size_t>(k - 1)], o);
        attempts.push_back({{"stage", k}, {"diagnostics", res.diag.to_json()}});
        if (!res.stage) {
            ctx.save_json("attempt_stage_" + std::to_string(k) + ".json", res.diag.to_json());
            if (!allow_exhaustion)
                throw SearchExhausted("stage " + std::to_string(k) + " search exhausted: " +
                                      res.diag.reason);
            break;
        }
        const Stage& st = *res.stage;
        ctx.save_json("stage_" + std::to_string(k) + ".json", st.to_json());
        report.row_of(k, "r", static_cast<double>(st.r), 0.0);
        report.row_of(k, "q", to_double(st.q), 0.0);
        report.row_of(k, "strip_width", st.strip_plus.width, 0.0);
        report.row_of(k, "min_plus", st.report.min_plus, 0.0);
        report.row_of(k, "max_minus", st.report.max_minus, 0.0);
        report.row_of(k, "separation", st.report.separation, 0.0);
        report.row_of(k, "threshold_plus", st.report.threshold_plus, 0.0);
        report.row_of(k, "threshold_minus", st.report.threshold_minus, 0.0);
    }
    ctx.save_json("bundle.json", bundle.to_json());
    ctx.save_json("attempts.json", attempts);
    ctx.save_csv("report.csv", report);

    LimitAngle la = limit_angle(bundle);
    json angle = json::array();
    for (const Rational& r : la.alpha.exact()) angle.push_back(rational_str(r));
    ctx.save_json("limit_angle.json", json{{"alpha", angle}, {"tail_bound", la.tail_bound}});
}

void cmd_verify_stage(const json& cfg, std::uint64_t, RunContext& ctx) {
    StageBundle bundle = load_bundle(need_str(cfg, "bundle"));
    std::size_t k = static_cast<std::size_t>(
        need_int(cfg, "stage", 0, static_cast<long long>(bundle.stages.size()) - 1));
    long long grid = opt_int(cfg, "grid", 0, 0, 1 << 26);
    RatioReport rep = verify_stage(bundle, k, grid);
    ctx.save_json("verify.json", rep.to_json());
    CsvWriter csv({"stage", "offset_or_stat", "value", "stderr"});
    csv.row_of(static_cast<long long>(k), "min_plus", rep.min_plus, 0.0);
    csv.row_of(static_cast<long long>(k), "max_minus", rep.max_minus, 0.0);
    csv.row_of(static_cast<long long>(k), "separation", rep.separation, 0.0);
    ctx.save_csv("verify.csv", csv);
}

void cmd_stationary_estimate(const json& cfg, std::uint64_t seed, RunContext& ctx) {
    EnvSpec es = resolve_env(cfg);
    RotationVector alpha = resolve_alpha(cfg, es, es.env.dim());
    TorusPoint z0 = resolve_point(cfg, "z0", es.env.dim());
    long long burnin = opt_int(cfg, "burnin", 10000, 0, 1LL << 40);
    long long length = need_int(cfg, "length", 1, 1LL << 40);
    int cutoff = static_cast<int>(opt_int(cfg, "cutoff", 5, 1, 16));

    ParticleMeasure mu =
        stationary_estimate(es.env, alpha, z0, burnin, length, RngSpec{seed, 0});
    if (cfg.contains("compact")) {
        const json& c = cfg.at("compact");
        mu.compact(need_num(c, "radius"),
                   static_cast<std::size_t>(need_int(c, "cap", 1, 1LL << 30)));
    }
    ctx.save_json("measure.json", mu.to_json());
    ctx.save_json("fingerprint.json", FourierFingerprint::of_measure(mu, cutoff).to_json());
}

void cmd_mixing(const json& cfg, std::uint64_t seed, RunContext& ctx) {
    EnvSpec es = resolve_env(cfg);
    RotationVector alpha = resolve_alpha(cfg, es, es.env.dim());
    ParticleMeasure mu = resolve_measure(cfg, "measure", es.env, alpha, seed);
    TestFunction phi = resolve_phi(cfg, "phi");
    TestFunction psi = resolve_phi(cfg, "psi");
    auto n_list = need_int_list(cfg, "n_list");
    long long mc_samples = opt_int(cfg, "mc_samples", 4096, 1, 1LL << 30);

    CorrelationSeries series =
        mixing_correlation(es.env, alpha, mu, phi, psi, n_list, RngSpec{seed, 1}, mc_samples);
    CsvWriter csv({"n", "offset_or_stat", "value", "stderr"});
    for (const auto& row : series) csv.row_of(row.n, "corr", row.value, row.stderr_);
    ctx.save_csv("mixing.csv", csv);
}

void cmd_atoms(const json& cfg, std::uint64_t, RunContext& ctx) {
    EnvSpec es = resolve_env(cfg);
    RotationVector alpha = resolve_alpha(cfg, es, es.env.dim());
    TorusPoint z0 = resolve_point(cfg, "z0", es.env.dim());
    long long N = need_int(cfg, "N", 1, 1LL << 30);
    long long every = opt_int(cfg, "emit_every", 1, 1, 1LL << 30);

    auto rows = atom_partial_sums(es.env.logratio(), alpha, z0, N);
    CsvWriter csv({"n", "offset_or_stat", "value", "stderr"});
    for (const auto& r : rows)
        if (r.n % every == 0 || r.n == N) csv.row_of(r.n, "log_partial_sum", r.log_sum, 0.0);
    ctx.save_csv("atoms.csv", csv);
}

void cmd_record_frequency(const json& cfg, std::uint64_t seed, RunContext& ctx) {
    EnvSpec es = resolve_env(cfg);
    RotationVector alpha = resolve_alpha(cfg, es, es.env.dim());
    ParticleMeasure mu = resolve_measure(cfg, "measure", es.env, alpha, seed);
    long long n = need_int(cfg, "n", 1, 1LL << 30);
    long long m = need_int(cfg, "m", 1, 1LL << 40);

    RecordFrequency rf = record_frequency_estimate(es.env, alpha, mu, n, m, RngSpec{seed, 0});
    CsvWriter csv({"n", "offset_or_stat", "value", "stderr"});
    csv.row_of(n, "record_freq", rf.estimate, rf.stderr_);
    ctx.save_csv("record.csv", csv);
}

// --------------------------------------------------------------------------

const std::vector<std::string> kCommands = {
    "simulate-walk",   "ratio-limit",        "birkhoff-ratio",
    "build-counterexample", "verify-stage",  "stationary-estimate",
    "mixing",          "atoms",              "record-frequency"};

json resolve_config(const json& doc, std::uint64_t seed_override, bool has_seed_override) {
    json cfg = doc;
    if (doc.contains("config_hash") && doc.contains("config")) cfg = doc.at("config");
    if (!cfg.is_object()) bad("config must be a JSON object");
    std::string cmd = need_str(cfg, "command");
    if (std::find(kCommands.begin(), kCommands.end(), cmd) == kCommands.end())
        bad("unknown command '" + cmd + "'");
    if (!cfg.contains("seed")) cfg["seed"] = 0;
    if (has_seed_override) cfg["seed"] = seed_override;
    if (!cfg.at("seed").is_number_integer()) bad("'seed' must be an integer");
    return cfg;
}

void dispatch(const std::string& cmd, const json& cfg, std::uint64_t seed, RunContext& ctx) {
    if (cmd == "simulate-walk") return cmd_simulate_walk(cfg, seed, ctx);
    if (cmd == "ratio-limit") return cmd_ratio_limit(cfg, seed, ctx);
    if (cmd == "birkhoff-ratio") return cmd_birkhoff_ratio(cfg, seed, ctx);
    if (cmd == "build-counterexample") return cmd_build_counterexample(cfg, seed, ctx);
    if (cmd == "verify-stage") return cmd_verify_stage(cfg, seed, ctx);
    if (cmd == "stationary-estimate") return cmd_stationary_estimate(cfg, seed, ctx);
    if (cmd == "mixing") return cmd_mixing(cfg, seed, ctx);
    if (cmd == "atoms") return cmd_atoms(cfg, seed, ctx);
    if (cmd == "record-frequency") return cmd_record_frequency(cfg, seed, ctx);
    bad("unknown command");
}

} // namespace

int run_document(const nlohmann::json& doc, std::uint64_t seed_override, bool has_seed_override,
                 std::string* error_out) {
    json cfg;
    std::string cmd;
    try {
        cfg = resolve_config(doc, seed_override, has_seed_override);
        cmd = cfg.at("command").get<std::string>();
    } catch (const ConfigError& e) {
        if (error_out) *error_out = e.what();
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    RunContext ctx;
    ctx.out_dir = cfg.contains("output_dir") ? fs::path(cfg.at("output_dir").get<std::string>())
                                             : fs::path(".");
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);

    json manifest;
    manifest["command"] = cmd;
    manifest["config"] = cfg;
    manifest["config_hash"] = fnv1a64_hex(cfg.dump());
    manifest["version"] = kVersion;
    manifest["workers"] = 1;

    std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
    try {
        dispatch(cmd, cfg, seed, ctx);
    } catch (const ConfigError& e) {
        if (error_out) *error_out = e.what();
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        if (error_out) *error_out = e.what();
        manifest["status"] = "error";
        manifest["error"] = {{"type", "operation"}, {"message", e.what()}};
        manifest["outputs"] = ctx.outputs;
        atomic_write(ctx.out_dir / "manifest.json", manifest.dump(2) + "\n");
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    manifest["status"] = "ok";
    manifest["outputs"] = ctx.outputs;
    atomic_write(ctx.out_dir / "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

std::string describe_document(const nlohmann::json& doc) {
    json cfg = resolve_config(doc, 0, false);
    std::string cmd = cfg.at("command").get<std::string>();
    std::ostringstream out;
    out << "command: " << cmd << "\n";
    out << "resolved config:\n" << cfg.dump(2) << "\n";
    if (cmd == "simulate-walk") {
        long long n = need_int(cfg, "n", 0, 200000);
        long long m = need_int(cfg, "m", 1, 1LL << 40);
        out << "cost: ~" << (2 * n + 1) * n << " DP cells, " << n * m << " Bernoulli draws\n";
        out << "pmf.csv: exact n-step law by dynamic programming (offset -> probability)\n";
        out << "histogram.csv: Monte Carlo endpoint frequencies with binomial standard errors\n";
    } else if (cmd == "ratio-limit") {
        auto n_list = need_int_list(cfg, "n_list");
        long long n_max = *std::max_element(n_list.begin(), n_list.end());
        out << "cost: ~" << (4 * n_max + 1) * 2 * n_max << " DP cells\n";
        out << "lhs: even-site ratio of the exact 2n-step law\n";
        out << "rhs: ratio of reversible invariant weights (the predicted limit)\n";
    } else if (cmd == "birkhoff-ratio") {
        out << "scan.csv: extrema and spread of the weighted ergodic ratio over the grid\n";
        out << "scan_points.csv: the per-point ratios\n";
    } else if (cmd == "build-counterexample") {
        std::vector<double> schedule = resolve_schedule(cfg);
        out << "delta schedule:";
        for (double d : schedule) out << " " << d;
        out << "\nbudgets: r_cap=" << opt_int(cfg, "r_cap", kDefaultRCap, 2, 1LL << 40)
            << " work_budget=" << opt_int(cfg, "work_budget", kDefaultWorkBudget, 1, 1LL << 50)
            << "\n";
        out << "stage_<k>.json: the constructed stage (exact rationals as strings)\n";
        out << "report.csv: per-stage ratio extrema against thresholds\n";
    } else if (cmd == "mixing") {
        auto n_list = need_int_list(cfg, "n_list");
        long long n_max = *std::max_element(n_list.begin(), n_list.end());
        out << "mixing.csv: correlation of U^n phi with psi under mu, minus the product of means\n";
        if (n_max > kMixingExactLimit)
            out << "note: n > " << kMixingExactLimit
                << " falls back to Monte Carlo with reported standard errors\n";
        else
            out << "all requested n use the exact per-atom dynamic program\n";
    } else if (cmd == "stationary-estimate") {
        out << "measure.json: occupation measure of the chain after burn-in\n";
        out << "fingerprint.json: its characters up to the cutoff\n";
    } else if (cmd == "atoms") {
        out << "atoms.csv: log partial sums of the atom criterion over symmetric windows\n";
    } else if (cmd == "record-frequency") {
        out << "record.csv: estimated probability that the walk sets a record at time n\n";
    } else if (cmd == "verify-stage") {
        out << "verify.json / verify.csv: ratio extrema of the stage against its thresholds\n";
    }
    return out.str();
}

int main_entry(int argc, char** argv) {
    CLI::App app{"evp: numerical laboratory for random walks in quasi-periodic environments"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_override = 0;
    bool has_seed = false;

    CLI::App* run = app.add_subcommand("run", "execute an experiment configuration");
    run->add_option("config", config_path, "path to config or manifest JSON")->required();
    CLI::Option* seed_opt = run->add_option("--seed", seed_override, "override the config seed");

    CLI::App* describe = app.add_subcommand("describe", "print the plan without computing");
    describe->add_option("config", config_path, "path to config JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    has_seed = seed_opt->count() > 0;

    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "cannot open config: " << config_path << "\n";
        return 2;
    }
    json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        std::cerr << "config parse error: " << e.what() << "\n";
        return 2;
    }

    if (describe->parsed()) {
        try {
            std::cout << describe_document(doc);
            return 0;
        } catch (const ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        }
    }
    return run_document(doc, seed_override, has_seed);
}

} // namespace evp::cli
