#include "evp/counterexample.hpp"

#include <algorithm>
#include <cmath>

#include "evp/birkhoff.hpp"
#include "evp/closed_forms.hpp"

namespace evp {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

/// Flat view of a 1-d polynomial for tight loops (no map walk, no allocs).
struct Compiled1 {
    double mean = 0.0;
    std::vector<double> k, ca, sa;

    static Compiled1 of(const TrigPoly& f) {
        if (f.dim() != 1) throw DimensionMismatch("Compiled1: need a 1-d polynomial");
        Compiled1 c;
        c.mean = f.mean();
        for (const auto& [kv, amp] : f.terms()) {
            c.k.push_back(static_cast<double>(kv[0]));
            c.ca.push_back(amp.first);
            c.sa.push_back(amp.second);
        }
        return c;
    }
    double eval(double t) const {
        double s = mean;
        for (std::size_t i = 0; i < k.size(); ++i) {
            double th = kTwoPi * k[i] * t;
            s += ca[i] * std::cos(th) + sa[i] * std::sin(th);
        }
        return s;
    }
};

struct Compiled2 {
    double mean = 0.0;
    std::vector<double> k1, k2, ca, sa;

    static Compiled2 of(const TrigPoly& f) {
        if (f.dim() != 2) throw DimensionMismatch("Compiled2: need a 2-d polynomial");
        Compiled2 c;
        c.mean = f.mean();
        for (const auto& [kv, amp] : f.terms()) {
            c.k1.push_back(static_cast<double>(kv[0]));
            c.k2.push_back(static_cast<double>(kv[1]));
            c.ca.push_back(amp.first);
            c.sa.push_back(amp.second);
        }
        return c;
    }
    double eval(double x1, double x2) const {
        double s = mean;
        for (std::size_t i = 0; i < k1.size(); ++i) {
            double th = kTwoPi * (k1[i] * x1 + k2[i] * x2);
            s += ca[i] * std::cos(th) + sa[i] * std::sin(th);
        }
        return s;
    }
};

std::int64_t to_i64_checked(const BigInt& v, const char* what) {
    if (v < 0 || v > BigInt(std::int64_t(1) << 62))
        throw Error(std::string(what) + ": value out of the 64-bit range");
    return v.convert_to<std::int64_t>();
}

/// Exact unit-interval walker: value = num/den, den < 2^62; advance adds a
/// fixed rational step mod 1 in integer arithmetic (no drift).
struct LatticeWalker {
    std::int64_t num = 0, den = 1, step = 0;

    static LatticeWalker make(const Rational& base, const Rational& stride) {
        Rational b = frac(base), s = frac(stride);
        BigInt bd = boost::multiprecision::denominator(b);
        BigInt sd = boost::multiprecision::denominator(s);
        BigInt d = boost::multiprecision::lcm(bd, sd);
        LatticeWalker w;
        w.den = to_i64_checked(d, "lattice denominator");
        w.num = to_i64_checked(boost::multiprecision::numerator(b) * (d / bd), "lattice base");
        w.step = to_i64_checked(boost::multiprecision::numerator(s) * (d / sd), "lattice step");
        return w;
    }
    void advance() {
        num += step;
        if (num >= den) num -= den;
    }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

} // namespace

// ---------------------------------------------------------------------------
// Geometry

TorusPoint Circle::point(const Rational& t) const {
    Rational tt = frac(t);
    return TorusPoint({to_double(frac(Rational(slope) * tt + offset)), to_double(tt)});
}

TorusPoint Circle::point_shifted(const Rational& t, double u) const {
    TorusPoint z = point(t);
    return TorusPoint({fracd(z[0] + u), z[1]});
}

bool Strip::contains(const TorusPoint& z) const {
    if (z.dim() != 2) throw DimensionMismatch("Strip::contains: need a T^2 point");
    double line = fracd(to_double(circle.slope) * z[1] + to_double(circle.offset));
    return circ_dist(z[0], line) < width;
}

nlohmann::json Strip::to_json() const {
    return {{"slope", circle.slope.str()},
            {"offset", rational_str(circle.offset)},
            {"width", width}};
}

Strip Strip::from_json(const nlohmann::json& j) {
    Strip s;
    s.circle.slope = BigInt(j.at("slope").get<std::string>());
    s.circle.offset = parse_rational(j.at("offset").get<std::string>());
    s.width = j.at("width").get<double>();
    return s;
}

ArcSet ArcSet::from_arcs(std::vector<std::pair<double, double>> raw) {
    std::vector<std::pair<double, double>> flat;
    for (auto [lo, hi] : raw) {
        if (hi - lo >= 1.0) return full();
        lo = fracd(lo);
        hi = fracd(hi);
        if (lo == hi) continue; // empty (length-0) arc
        if (lo < hi) {
            flat.emplace_back(lo, hi);
        } else {
            flat.emplace_back(lo, 1.0);
            flat.emplace_back(0.0, hi);
        }
    }
    std::sort(flat.begin(), flat.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& a : flat) {
        if (!merged.empty() && a.first <= merged.back().second)
            merged.back().second = std::max(merged.back().second, a.second);
        else
            merged.push_back(a);
    }
    if (merged.size() == 1 && merged[0].first == 0.0 && merged[0].second >= 1.0) return full();
    return ArcSet(std::move(merged));
}

ArcSet ArcSet::full() { return ArcSet({{0.0, 1.0}}, true); }

bool ArcSet::contains(double t) const {
    if (full_) return true;
    if (arcs_.empty()) return false;
    double x = fracd(t);
    auto it = std::upper_bound(arcs_.begin(), arcs_.end(), std::make_pair(x, 2.0));
    if (it == arcs_.begin()) return false;
    --it;
    return x >= it->first && x < it->second;
}

ArcSet ArcSet::complement() const {
    if (full_) return ArcSet({});
    if (arcs_.empty()) return full();
    std::vector<std::pair<double, double>> out;
    double prev = 0.0;
    for (const auto& a : arcs_) {
        if (a.first > prev) out.emplace_back(prev, a.first);
        prev = a.second;
    }
    if (prev < 1.0) out.emplace_back(prev, 1.0);
    return ArcSet(std::move(out));
}

double ArcSet::total_length() const {
    if (full_) return 1.0;
    double s = 0.0;
    for (const auto& a : arcs_) s += a.second - a.first;
    return s;
}

ArcSet ArcSet::strip_on_circle(const Strip& strip, const Circle& circle) {
    BigInt da = circle.slope - strip.circle.slope;
    Rational doff = circle.offset - strip.circle.offset;
    if (da == 0) {
        double d = circ_dist(to_double(frac(doff)), 0.0);
        return d < strip.width ? full() : ArcSet::from_arcs({});
    }
    BigInt mag = da < 0 ? -da : da;
    std::int64_t m = to_i64_checked(mag, "strip/circle slope difference");
    double hw = strip.width / static_cast<double>(m);
    std::vector<std::pair<double, double>> arcs;
    arcs.reserve(static_cast<std::size_t>(m));
    for (std::int64_t j = 0; j < m; ++j) {
        double center = to_double(frac((Rational(j) - doff) / Rational(da)));
        arcs.emplace_back(center - hw, center + hw);
    }
    return from_arcs(std::move(arcs));
}

// ---------------------------------------------------------------------------
// Reports and stages

nlohmann::json RatioReport::to_json() const {
    return {{"grid", grid},
            {"min_plus", min_plus},
            {"max_minus", max_minus},
            {"argmin_plus_t", argmin_plus_t},
            {"argmax_minus_t", argmax_minus_t},
            {"separation", separation},
            {"threshold_plus", threshold_plus},
            {"threshold_minus", threshold_minus},
            {"pass_plus", pass_plus},
            {"pass_minus", pass_minus},
            {"pass_goal", pass_goal}};
}

RatioReport RatioReport::from_json(const nlohmann::json& j) {
    RatioReport r;
    r.grid = j.at("grid").get<long long>();
    r.min_plus = j.at("min_plus").get<double>();
    r.max_minus = j.at("max_minus").get<double>();
    r.argmin_plus_t = j.at("argmin_plus_t").get<double>();
    r.argmax_minus_t = j.at("argmax_minus_t").get<double>();
    r.separation = j.at("separation").get<double>();
    r.threshold_plus = j.at("threshold_plus").get<double>();
    r.threshold_minus = j.at("threshold_minus").get<double>();
    r.pass_plus = j.at("pass_plus").get<bool>();
    r.pass_minus = j.at("pass_minus").get<bool>();
    r.pass_goal = j.at("pass_goal").get<bool>();
    return r;
}

long long Stage::q_ll() const { return to_i64_checked(q, "q_n"); }

nlohmann::json Stage::to_json() const {
    nlohmann::json alpha_j = nlohmann::json::array();
    for (const Rational& r_ : alpha.exact()) alpha_j.push_back(rational_str(r_));
    return {{"n", n},
            {"q", q.str()},
            {"a", a.str()},
            {"r", r},
            {"c", c},
            {"delta", delta},
            {"f", f.to_json()},
            {"alpha", alpha_j},
            {"strip_plus", strip_plus.to_json()},
            {"strip_minus", strip_minus.to_json()},
            {"report", report.to_json()},
            {"achieved_plus", achieved_plus},
            {"achieved_minus", achieved_minus},
            {"revalidated", revalidated}};
}

Stage Stage::from_json(const nlohmann::json& j) {
    Stage s;
    s.n = j.at("n").get<int>();
    s.q = BigInt(j.at("q").get<std::string>());
    s.a = BigInt(j.at("a").get<std::string>());
    s.r = j.at("r").get<long long>();
    s.c = j.at("c").get<double>();
    s.delta = j.at("delta").get<double>();
    s.f = TrigPoly::from_json(j.at("f"));
    std::vector<std::string> alpha_s = j.at("alpha").get<std::vector<std::string>>();
    s.alpha = RotationVector::from_strings(alpha_s);
    s.strip_plus = Strip::from_json(j.at("strip_plus"));
    s.strip_minus = Strip::from_json(j.at("strip_minus"));
    s.report = RatioReport::from_json(j.at("report"));
    s.achieved_plus = j.at("achieved_plus").get<double>();
    s.achieved_minus = j.at("achieved_minus").get<double>();
    s.revalidated = j.at("revalidated").get<bool>();
    return s;
}

double StageBundle::threshold_plus(int n) const {
    double p = 1.0;
    for (std::size_t k = 1; k < stages.size() && static_cast<int>(k) <= n; ++k)
        p *= 1.0 - stages[k].delta;
    return p;
}

double StageBundle::threshold_minus(int n) const {
    double s = 0.0;
    for (std::size_t k = 1; k < stages.size() && static_cast<int>(k) <= n; ++k)
        s += stages[k].delta;
    return s;
}

nlohmann::json StageBundle::to_json() const {
    nlohmann::json st = nlohmann::json::array();
    for (const Stage& s : stages) st.push_back(s.to_json());
    return {{"stages", st},
            {"schedule", schedule},
            {"phi",
             {{"zero_hi", phi.zero_hi},
              {"one_lo", phi.one_lo},
              {"one_hi", phi.one_hi},
              {"zero_lo", phi.zero_lo}}},
            {"warnings", warnings}};
}

StageBundle StageBundle::from_json(const nlohmann::json& j) {
    StageBundle b;
    for (const auto& s : j.at("stages")) b.stages.push_back(Stage::from_json(s));
    b.schedule = j.at("schedule").get<std::vector<double>>();
    b.phi.zero_hi = j.at("phi").at("zero_hi").get<double>();
    b.phi.one_lo = j.at("phi").at("one_lo").get<double>();
    b.phi.one_hi = j.at("phi").at("one_hi").get<double>();
    b.phi.zero_lo = j.at("phi").at("zero_lo").get<double>();
    b.warnings = j.at("warnings").get<std::vector<std::string>>();
    return b;
}

nlohmann::json AdvanceDiagnostics::to_json() const {
    return {{"found", found},       {"reason", reason},
            {"best_r", best_r},     {"best_plus", best_plus},
            {"best_minus", best_minus}, {"work_used", work_used},
            {"warnings", warnings}};
}

// ---------------------------------------------------------------------------
// Stage 0

StageBundle init_stage0(const std::vector<double>& delta_schedule) {
    if (delta_schedule.empty()) throw Error("init_stage0: empty delta schedule");
    double sum = 0.0, prod = 1.0;
    for (double d : delta_schedule) {
        if (d <= 0.0 || d >= 1.0) throw Error("init_stage0: deltas must lie in (0,1)");
        sum += d;
        prod *= 1.0 - d;
    }
    if (!(sum < 0.1)) throw Error("init_stage0: schedule violates sum(delta) < 0.1");
    if (!(prod > 0.9)) throw Error("init_stage0: schedule violates prod(1-delta) > 0.9");

    StageBundle bundle;
    bundle.schedule = delta_schedule;

    Stage s0;
    s0.n = 0;
    s0.q = 1;
    s0.a = 2; // slope prepared for the first circles
    s0.r = 0;
    s0.c = 1.0; // amplitude of the seed oscillation below
    s0.delta = 0.0;
    s0.f = TrigPoly::sine(2, {0, 2}, -1.0); // -sin(4 pi x2)
    s0.alpha = RotationVector::from_rationals({Rational(0), Rational(0)});
    s0.strip_plus = Strip{Circle{BigInt(0), Rational(1, 2)}, 0.1};
    s0.strip_minus = Strip{Circle{BigInt(0), Rational(0)}, 0.1};
    s0.report.grid = 0;
    s0.report.min_plus = 1.0;
    s0.report.max_minus = 0.0;
    s0.report.separation = 1.0;
    s0.report.threshold_plus = 1.0;
    s0.report.threshold_minus = 0.0;
    s0.report.pass_plus = true;
    s0.report.pass_minus = true;
    s0.report.pass_goal = true;
    s0.achieved_plus = 1.0;
    s0.achieved_minus = 1.0;
    bundle.stages.push_back(std::move(s0));
    return bundle;
}

// ---------------------------------------------------------------------------
// Coefficient algebra

TrigPoly restrict_to_circle(const TrigPoly& f, const Circle& circle) {
    if (f.dim() != 2) throw DimensionMismatch("restrict_to_circle: need f on T^2");
    TrigPoly out(1);
    out.set_mean(f.mean());
    for (const auto& [kv, amp] : f.terms()) {
        BigInt mb = circle.slope * kv[0] + kv[1];
        std::int64_t m = 0;
        bool neg = mb < 0;
        m = to_i64_checked(neg ? -mb : mb, "restricted frequency");
        // phase shift 2 pi k1 * offset; exact signs for half-integer offsets
        Rational ph = frac(Rational(kv[0]) * circle.offset);
        double cph, sph;
        if (ph == 0) {
            cph = 1.0;
            sph = 0.0;
        } else if (ph == Rational(1, 2)) {
            cph = -1.0;
            sph = 0.0;
        } else {
            double phd = kTwoPi * to_double(ph);
            cph = std::cos(phd);
            sph = std::sin(phd);
        }
        double a2 = amp.first * cph + amp.second * sph;
        double b2 = amp.second * cph - amp.first * sph;
        if (neg) b2 = -b2; // cos even, sin odd under m -> -m
        if (m > static_cast<std::int64_t>(std::numeric_limits<int>::max()))
            throw Error("restrict_to_circle: frequency exceeds int range");
        out.add_term({static_cast<int>(m)}, a2, b2);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Masked block ratio

MinRatioResult auxiliary_min_ratio(const TrigPoly& f2, long long p, long long q, long long r,
                                   const ArcSet& B, long long grid, double t0) {
    if (q < 1 || r < 1 || grid < 1) throw Error("auxiliary_min_ratio: q, r, grid must be >= 1");
    for (long long j = 0; j < q; ++j) {
        if (!B.contains(t0 + static_cast<double>(j) / static_cast<double>(q)))
            throw Error("auxiliary_min_ratio: B misses a required point t0 + j/q");
    }
    Compiled1 f = Compiled1::of(f2);
    // alpha = p/q + 1/(qr) = (p r + 1) / (q r); positions live on the lattice
    // with denominator grid * q * r.
    BigInt D_big = BigInt(grid) * q * r;
    std::int64_t D = to_i64_checked(D_big, "auxiliary lattice");
    // step = (p r + 1) * grid mod D
    std::int64_t step = to_i64_checked((BigInt(p) * r * grid + grid) % D_big, "auxiliary step");
    std::int64_t qr = q * r;

    MinRatioResult best;
    best.min_ratio = 2.0;
    for (long long i = 0; i < grid; ++i) {
        std::int64_t pos = static_cast<std::int64_t>(i) * qr % D;
        double S = 0.0;
        LogSumAcc den, num;
        bool masked = false;
        for (long long s = 0; s < qr; ++s) {
            double t = static_cast<double>(pos) / static_cast<double>(D);
            if (s % q == 0) masked = B.contains(t);
            den.add(S);
            if (masked) num.add(S);
            S += f.eval(t);
            pos += step;
            if (pos >= D) pos -= D;
        }
        double ratio = num.empty() ? 0.0 : std::exp(num.value() - den.value());
        ratio = std::clamp(ratio, 0.0, 1.0);
        if (ratio < best.min_ratio) {
            best.min_ratio = ratio;
            best.argmin_t = static_cast<double>(i) / static_cast<double>(grid);
        }
    }
    return best;
}

SearchResult search_r(const TrigPoly& f1, long long p, long long q, double c, double t0,
                      const ArcSet& B, double delta, long long r_cap, long long grid,
                      long long work_budget) {
    if (!(delta > 0.0 && delta < 1.0)) throw Error("search_r: delta must lie in (0,1)");
    if (!(c > 0.0)) throw Error("search_r: c must be positive");
    if (std::abs(f1.mean()) > 1e-12) throw Error("search_r: f1 must have zero mean");
    if (f1.degree() >= q && f1.term_count() > 0)
        throw Error("search_r: f1 must have no frequency >= q");

    TrigPoly f2 = f1;
    double ph = kTwoPi * static_cast<double>(q) * t0;
    f2.add_term({static_cast<int>(q)}, c * std::sin(ph), -c * std::cos(ph));

    SearchResult res;
    res.best_value = -1.0;
    for (long long r = 2; r <= r_cap; r *= 2) {
        long long g = grid > 0 ? grid : std::max<long long>(4096, 8 * q * r);
        long long work = g * q * r;
        if (res.work_used + work > work_budget) {
            res.reason = "work_budget";
            return res;
        }
        MinRatioResult m = auxiliary_min_ratio(f2, p, q, r, B, g, t0);
        res.work_used += work;
        if (m.min_ratio > res.best_value) {
            res.best_value = m.min_ratio;
            res.best_r = r;
        }
        if (m.min_ratio > 1.0 - delta) {
            res.found = true;
            res.r = r;
            res.achieved = m.min_ratio;
            res.reason = "found";
            return res;
        }
    }
    res.reason = "r_cap";
    return res;
}

// ---------------------------------------------------------------------------
// Strip verification

namespace {

struct StripScan {
    double min_ratio = 2.0;
    double argmin_t = 0.0;
    double max_ratio = -1.0;
    double argmax_t = 0.0;
};

/// Unit-interval walker that accepts either an exact rational stride (no
/// drift) or a float stride (positions recomputed from the step index).
struct StepWalker {
    bool exact = true;
    LatticeWalker lw;
    double base = 0.0, stride = 0.0;
    long long j = 0;

    static StepWalker make(const Rational& b, const RotationVector& alpha, int coord) {
        StepWalker w;
        if (alpha.has_exact()) {
            w.lw = LatticeWalker::make(b, alpha.exact()[static_cast<std::size_t>(coord)]);
        } else {
            w.exact = false;
            w.base = to_double(frac(b));
            w.stride = alpha.floats()[static_cast<std::size_t>(coord)];
        }
        return w;
    }
    double value() const {
        return exact ? lw.value() : fracd(base + static_cast<double>(j) * stride);
    }
    void advance() {
        if (exact)
            lw.advance();
        else
            ++j;
    }
};

/// Extrema of the weighted ratio S^w_q(phi)/S^w_q(1) over strip samples:
/// circle parameters t = i/grid crossed with transverse offsets u.
StripScan scan_strip(const TrigPoly& f, const RotationVector& alpha, const TestFunction& phi,
                     const Strip& strip, long long q_steps, long long grid,
                     const std::vector<double>& offsets) {
    Compiled2 cf = Compiled2::of(f);
    const RampX1* ramp = phi.ramp();
    Rational slope(strip.circle.slope);
    StripScan out;
    for (long long i = 0; i < grid; ++i) {
        Rational t(i, grid);
        StepWalker w2 = StepWalker::make(t, alpha, 1);
        StepWalker w1 = StepWalker::make(slope * t + strip.circle.offset, alpha, 0);
        // One pass per transverse offset; the positions are shared.
        for (double u : offsets) {
            StepWalker a1 = w1, a2 = w2;
            LogWeightedMeanAcc acc;
            double S = 0.0;
            for (long long s = 0; s < q_steps; ++s) {
                double x1 = fracd(a1.value() + u);
                double x2 = a2.value();
                double ph = ramp ? (*ramp)(x1) : phi.eval(TorusPoint({x1, x2}));
                acc.add(S, ph);
                S += cf.eval(x1, x2);
                a1.advance();
                a2.advance();
            }
            double ratio = acc.mean();
            double tval = static_cast<double>(i) / static_cast<double>(grid);
            if (ratio < out.min_ratio) {
                out.min_ratio = ratio;
                out.argmin_t = tval;
            }
            if (ratio > out.max_ratio) {
                out.max_ratio = ratio;
                out.argmax_t = tval;
            }
        }
    }
    return out;
}

std::vector<double> transverse_offsets(double width) {
    return {0.0, 0.5 * width, -0.5 * width, 0.9375 * width, -0.9375 * width};
}

long long default_verify_grid(const BigInt& q_stage) {
    BigInt g = 8 * q_stage;
    if (g < 4096) g = 4096;
    return to_i64_checked(g, "verification grid");
}

RatioReport make_report(const StripScan& plus, const StripScan& minus, long long grid,
                        double thr_plus, double thr_minus, bool stage0) {
    RatioReport rep;
    rep.grid = grid;
    rep.min_plus = plus.min_ratio;
    rep.argmin_plus_t = plus.argmin_t;
    rep.max_minus = minus.max_ratio;
    rep.argmax_minus_t = minus.argmax_t;
    rep.separation = rep.min_plus - rep.max_minus;
    rep.threshold_plus = thr_plus;
    rep.threshold_minus = thr_minus;
    if (stage0) {
        rep.pass_plus = rep.min_plus >= thr_plus;
        rep.pass_minus = rep.max_minus <= thr_minus;
    } else {
        rep.pass_plus = rep.min_plus > thr_plus;
        rep.pass_minus = rep.max_minus < thr_minus;
    }
    rep.pass_goal = rep.separation > 0.5;
    return rep;
}

} // namespace

RatioReport verify_stage(const StageBundle& bundle, std::size_t idx, long long grid,
                         const TrigPoly* f_override, const RotationVector* alpha_override) {
    if (idx >= bundle.stages.size()) throw Error("verify_stage: no such stage");
    const Stage& st = bundle.stages[idx];
    const TrigPoly& f = f_override ? *f_override : st.f;
    const RotationVector& al = alpha_override ? *alpha_override : st.alpha;
    long long g = grid > 0 ? grid : default_verify_grid(st.q);
    TestFunction phi = bundle.phi_fn();
    auto offs_p = transverse_offsets(st.strip_plus.width);
    auto offs_m = transverse_offsets(st.strip_minus.width);
    StripScan plus = scan_strip(f, al, phi, st.strip_plus, st.q_ll(), g, offs_p);
    StripScan minus = scan_strip(f, al, phi, st.strip_minus, st.q_ll(), g, offs_m);
    return make_report(plus, minus, g, bundle.threshold_plus(st.n), bundle.threshold_minus(st.n),
                       st.n == 0);
}

// ---------------------------------------------------------------------------
// Induction step

AdvanceResult advance_stage(StageBundle& bundle, double delta_next, const AdvanceOptions& opts) {
    if (bundle.stages.empty()) throw Error("advance_stage: bundle has no stages");
    const Stage last = bundle.stages.back(); // copy: the bundle may be appended to
    const int n = last.n;
    if (!last.report.pass_plus || !last.report.pass_minus)
        throw Error("advance_stage: the current stage is not verified");
    if (!(delta_next > 0.0 && delta_next < 1.0))
        throw Error("advance_stage: delta must lie in (0,1)");

    AdvanceResult result;
    AdvanceDiagnostics& diag = result.diag;

    const long long q_n = last.q_ll();

    // a_{n+1} = a_1 + q_1 + ... + q_n
    BigInt a_next = bundle.stages[0].a;
    for (std::size_t k = 1; k < bundle.stages.size(); ++k) a_next += bundle.stages[k].q;

    // Exact circle-invariance identity of the new circles under alpha_n.
    if (n >= 1) {
        Rational sum_inv(0), sum_aq(0);
        for (std::size_t k = 1; k < bundle.stages.size(); ++k) {
            sum_inv += Rational(1, bundle.stages[k].q);
            sum_aq += Rational(bundle.stages[k].a, bundle.stages[k].q);
        }
        if (frac(Rational(a_next) * sum_inv) != frac(sum_aq))
            throw Error("advance_stage: circle invariance identity failed (arithmetic bug)");
    }

    // New polynomial f_{n+1}. The seed stage already carries its oscillation.
    double c_next;
    TrigPoly f_next = last.f;
    if (n == 0) {
        c_next = last.c;
    } else {
        if (opts.c_mode == CMode::strict) {
            c_next = 0.5 * std::exp(-static_cast<double>(q_n));
            if (c_next == 0.0)
                diag.warnings.push_back("strict c underflowed to zero at q_n = " +
                                        std::to_string(q_n));
        } else {
            c_next = opts.c_value > 0.0 ? opts.c_value : std::pow(0.5, n + 1);
        }
        double fbound = last.f.sup_norm_bound();
        if (c_next < 1e-16 * fbound)
            diag.warnings.push_back(
                "precision: c_{n+1} = " + std::to_string(c_next) + " is below 1e-16 * " +
                std::to_string(fbound) + "; the added oscillation is invisible in doubles");
        if (q_n > std::numeric_limits<int>::max())
            throw Error("advance_stage: q_n exceeds the int frequency range");
        f_next = last.f.plus_scaled(TrigPoly::sine(2, {0, static_cast<int>(q_n)}, 1.0), -c_next);
    }

    Circle circ_plus{a_next, Rational(1, 2)};
    Circle circ_minus{a_next, Rational(0)};
    TrigPoly f_on_plus = restrict_to_circle(f_next, circ_plus);
    TrigPoly f_on_minus = restrict_to_circle(f_next, circ_minus);
    ArcSet B_plus = ArcSet::strip_on_circle(last.strip_plus, circ_plus);
    ArcSet B_minus = ArcSet::strip_on_circle(last.strip_minus, circ_minus);

    // Base circle rotation p/q_n carried by the previous angle.
    Rational sum_inv(0);
    for (std::size_t k = 1; k < bundle.stages.size(); ++k)
        sum_inv += Rational(1, bundle.stages[k].q);
    Rational base = frac(sum_inv); // = p / q_n (q_k | q_n)
    std::int64_t p = to_i64_checked(
        boost::multiprecision::numerator(base) *
            (BigInt(q_n) / boost::multiprecision::denominator(base)),
        "base rotation numerator");

    diag.best_plus = -1.0;
    diag.best_minus = -1.0;
    int retries = 0;
    double best_joint = -1.0;

    for (long long r = 2;; r *= 2) {
        if (r > opts.r_cap) {
            diag.reason = "r_cap";
            return result;
        }
        long long g = opts.grid > 0 ? opts.grid : std::max<long long>(4096, 8 * q_n * r);
        long long work = 2 * g * q_n * r;
        if (diag.work_used + work > opts.work_budget) {
            diag.reason = "work_budget";
            return result;
        }
        MinRatioResult vp = auxiliary_min_ratio(f_on_plus, p, q_n, r, B_plus, g);
        MinRatioResult vm = auxiliary_min_ratio(f_on_minus, p, q_n, r, B_minus, g);
        diag.work_used += work;
        double joint = std::min(vp.min_ratio, vm.min_ratio);
        if (joint > best_joint) {
            best_joint = joint;
            diag.best_r = r;
            diag.best_plus = vp.min_ratio;
            diag.best_minus = vm.min_ratio;
        }
        if (joint <= 1.0 - delta_next) continue;

        // Masked bounds hold; assemble the candidate stage.
        BigInt q_next = BigInt(q_n) * r;
        std::vector<Rational> alpha_parts = {Rational(0), Rational(0)};
        for (std::size_t k = 1; k < bundle.stages.size(); ++k) {
            alpha_parts[0] += Rational(bundle.stages[k].a, bundle.stages[k].q);
            alpha_parts[1] += Rational(1, bundle.stages[k].q);
        }
        alpha_parts[0] += Rational(a_next, q_next);
        alpha_parts[1] += Rational(1, q_next);
        RotationVector alpha_next =
            RotationVector::from_rationals({frac(alpha_parts[0]), frac(alpha_parts[1])});

        Stage st;
        st.n = n + 1;
        st.q = q_next;
        st.a = a_next;
        st.r = r;
        st.c = c_next;
        st.delta = delta_next;
        st.f = f_next;
        st.alpha = alpha_next;
        st.achieved_plus = vp.min_ratio;
        st.achieved_minus = vm.min_ratio;

        // Thresholds for the new stage.
        double thr_plus = bundle.threshold_plus(n) * (1.0 - delta_next);
        double thr_minus = bundle.threshold_minus(n) + delta_next;

        long long verify_grid = opts.grid > 0 ? opts.grid : default_verify_grid(q_next);
        TestFunction phi = bundle.phi_fn();
        long long q_steps = to_i64_checked(q_next, "q_{n+1}");

        double w = 1.0 / (8.0 * to_double(a_next));
        bool widths_ok = false;
        StripScan plus_scan, minus_scan;
        while (true) {
            Strip sp{circ_plus, w}, sm{circ_minus, w};
            plus_scan = scan_strip(f_next, alpha_next, phi, sp, q_steps, verify_grid,
                                   transverse_offsets(w));
            minus_scan = scan_strip(f_next, alpha_next, phi, sm, q_steps, verify_grid,
                                    transverse_offsets(w));
            if (plus_scan.min_ratio > thr_plus && minus_scan.max_ratio < thr_minus) {
                widths_ok = true;
                break;
            }
            // If the circle itself fails, narrowing the strip cannot help;
            // hand the candidate back to the r-doubling loop.
            StripScan plus_c = scan_strip(f_next, alpha_next, phi, sp, q_steps, verify_grid, {0.0});
            StripScan minus_c =
                scan_strip(f_next, alpha_next, phi, sm, q_steps, verify_grid, {0.0});
            if (!(plus_c.min_ratio > thr_plus && minus_c.max_ratio < thr_minus)) break;
            w *= 0.5;
            if (w < 1e-9) throw Error("advance_stage: strip width underflow");
        }

        if (widths_ok) {
            st.strip_plus = Strip{circ_plus, w};
            st.strip_minus = Strip{circ_minus, w};
            st.report = make_report(plus_scan, minus_scan, verify_grid, thr_plus, thr_minus, false);

            // Previous stages must survive the angle update.
            bool previous_ok = true;
            for (std::size_t m = 1; m < bundle.stages.size() && previous_ok; ++m) {
                RatioReport rm = verify_stage(bundle, m, 0, &f_next, &alpha_next);
                previous_ok = rm.pass_plus && rm.pass_minus;
            }
            if (previous_ok) {
                diag.found = true;
                diag.reason = "found";
                diag.best_r = r;
                diag.best_plus = vp.min_ratio;
                diag.best_minus = vm.min_ratio;
                for (Stage& old : bundle.stages) old.revalidated = true;
                result.stage = st;
                bundle.stages.push_back(std::move(st));
                for (const std::string& wmsg : diag.warnings) bundle.warnings.push_back(wmsg);
                return result;
            }
        }
        if (++retries > opts.max_retries) {
            diag.reason = "retries";
            return result;
        }
    }
}

LimitAngle limit_angle(const StageBundle& bundle) {
    if (bundle.stages.empty()) throw Error("limit_angle: no stages");
    const Stage& last = bundle.stages.back();
    LimitAngle out;
    out.alpha = last.n == 0 ? RotationVector::from_rationals({Rational(0), Rational(0)})
                            : last.alpha;
    // Tail of sum (a_j + 1)/q_j over unbuilt stages, extrapolating the
    // observed blow-up of r (at least squaring, floored at 2). The factor-2
    // floor alone would not converge; the squaring trend is what the achieved
    // stages exhibit.
    double q = to_double(last.q);
    double a = to_double(bundle.stages[0].a);
    for (std::size_t k = 1; k < bundle.stages.size(); ++k) a += to_double(bundle.stages[k].q);
    double r_prev = std::max<double>(2.0, last.n >= 1 ? static_cast<double>(last.r) : 2.0);
    double tail = 0.0;
    for (int j = 0; j < 64; ++j) {
        double r_next = std::max(2.0, r_prev * r_prev);
        double q_next = q * r_next;
        tail += (a + 1.0) / q_next;
        a += q_next;
        q = q_next;
        r_prev = r_next;
        if (!std::isfinite(q) || q > 1e300) break;
    }
    out.tail_bound = tail;
    return out;
}

} // namespace evp
