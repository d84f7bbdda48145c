#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evp/operators.hpp"
#include "evp/rational.hpp"
#include "evp/test_function.hpp"

namespace evp {

/// Circle on T^2 in parametric form t -> (a t + offset, t). Slope 0 encodes a
/// vertical circle x1 = offset (used by the stage-0 bands).
struct Circle {
    BigInt slope;
    Rational offset;

    TorusPoint point(const Rational& t) const;
    /// Same point with the first coordinate shifted by u (transverse probe).
    TorusPoint point_shifted(const Rational& t, double u) const;
};

/// Strip of half-width w around a circle in the first coordinate:
/// membership is circ_dist(x1, a x2 + offset) < w.
struct Strip {
    Circle circle;
    double width = 0.0;

    bool contains(const TorusPoint& z) const;

    nlohmann::json to_json() const;
    static Strip from_json(const nlohmann::json& j);
};

/// Union of half-open arcs [lo, hi) on the circle, kept sorted and disjoint.
class ArcSet {
public:
    static ArcSet from_arcs(std::vector<std::pair<double, double>> raw);
    static ArcSet full();
    static ArcSet empty_set() { return ArcSet({}); }

    /// Trace of a strip on a circle, in the circle's parametrization.
    static ArcSet strip_on_circle(const Strip& strip, const Circle& circle);

    bool contains(double t) const;
    ArcSet complement() const;
    double total_length() const;
    bool is_full() const { return full_; }
    const std::vector<std::pair<double, double>>& arcs() const { return arcs_; }

private:
    explicit ArcSet(std::vector<std::pair<double, double>> arcs, bool full = false)
        : arcs_(std::move(arcs)), full_(full) {}
    std::vector<std::pair<double, double>> arcs_;
    bool full_ = false;
};

/// Grid extrema of the weighted ergodic ratio over the two strips, with the
/// stage thresholds and pass flags. Separation above 0.5 is the headline
/// non-uniqueness witness.
struct RatioReport {
    long long grid = 0;
    double min_plus = 1.0;
    double max_minus = 0.0;
    double argmin_plus_t = 0.0;
    double argmax_minus_t = 0.0;
    double separation = 1.0;
    double threshold_plus = 1.0;  // prod(1 - delta_k), k <= n
    double threshold_minus = 0.0; // sum delta_k, k <= n
    bool pass_plus = false;
    bool pass_minus = false;
    bool pass_goal = false; // separation > 0.5

    nlohmann::json to_json() const;
    static RatioReport from_json(const nlohmann::json& j);
};

/// One level of the inductive construction.
struct Stage {
    int n = 0;
    BigInt q;  // q_n (q_0 = 1)
    BigInt a;  // slope a_n of the stage circles; at stage 0 this is a_1 = 2
    long long r = 0;
    double c = 0.0;     // amplitude of the sine added to reach f_n
    double delta = 0.0; // delta_n
    TrigPoly f{2};      // f_n on T^2 (at stage 0: the seed polynomial)
    RotationVector alpha;
    Strip strip_plus, strip_minus;
    RatioReport report;

    // search diagnostics
    double achieved_plus = 0.0;
    double achieved_minus = 0.0;
    bool revalidated = true;

    long long q_ll() const;

    nlohmann::json to_json() const;
    static Stage from_json(const nlohmann::json& j);
};

struct StageBundle {
    std::vector<Stage> stages;
    std::vector<double> schedule; // delta_1, delta_2, ...
    RampX1 phi;
    std::vector<std::string> warnings;

    TestFunction phi_fn() const { return TestFunction(phi); }
    double threshold_plus(int n) const;  // prod_{k<=n} (1-delta_k)
    double threshold_minus(int n) const; // sum_{k<=n} delta_k

    nlohmann::json to_json() const;
    static StageBundle from_json(const nlohmann::json& j);
};

/// Builds stage 0: q_0 = 1, alpha_0 = (0,0), prepared slope a_1 = 2, the seed
/// polynomial -sin(4 pi x2), the bands [-1/10,1/10] x T and [4/10,6/10] x T,
/// and the 0/1 ramp. The schedule must satisfy sum(delta) < 0.1 and
/// prod(1-delta) > 0.9.
StageBundle init_stage0(const std::vector<double>& delta_schedule);

/// Substitutes x1 = a t + offset, x2 = t; frequency (k1,k2) maps to
/// a k1 + k2 with the phase shift 2 pi k1 offset. Pure coefficient algebra.
TrigPoly restrict_to_circle(const TrigPoly& f, const Circle& circle);

struct MinRatioResult {
    double min_ratio = 1.0;
    double argmin_t = 0.0;
};

/// Minimum over grid points t = i/grid of the block-masked weight fraction
///   sum_{j<r} T^{jq}1(t) 1_B(t + jq alpha) Sq(1, t+jq alpha)  /  S_{qr}(1, t)
/// for the circle rotation alpha = p/q + 1/(q r), all sums in log domain.
/// The value lies in [0,1]; the masked and complement-masked fractions sum
/// to 1 at every t.
MinRatioResult auxiliary_min_ratio(const TrigPoly& f2, long long p, long long q, long long r,
                                   const ArcSet& B, long long grid, double t0 = 0.0);

struct SearchResult {
    bool found = false;
    long long r = 0;       // accepted r when found
    double achieved = 0.0; // min ratio at the accepted r
    long long best_r = 0;  // best candidate seen (also set when found)
    double best_value = 0.0;
    long long work_used = 0; // grid * q * r summed over candidates
    std::string reason;      // "found" | "r_cap" | "work_budget"
};

inline constexpr long long kDefaultRCap = 1LL << 20;
inline constexpr long long kDefaultWorkBudget = 1'000'000'000;

/// Doubling search r = 2, 4, 8, ... <= r_cap for the first r whose masked
/// ratio exceeds 1 - delta. f1 must have zero mean and no frequency >= q.
/// grid <= 0 selects the default max(4096, 8 q r) per candidate. The work
/// budget bounds the total step count; exhausting it (or the cap) yields
/// found = false with the best (r, value) pair.
SearchResult search_r(const TrigPoly& f1, long long p, long long q, double c, double t0,
                      const ArcSet& B, double delta, long long r_cap = kDefaultRCap,
                      long long grid = 0, long long work_budget = kDefaultWorkBudget);

enum class CMode { strict, relaxed };

struct AdvanceOptions {
    CMode c_mode = CMode::relaxed;
    double c_value = -1.0; // relaxed-mode amplitude; <0 selects 0.5^{n+1}
    long long r_cap = kDefaultRCap;
    long long grid = 0; // verification grid override; <=0 selects default
    long long work_budget = kDefaultWorkBudget;
    int max_retries = 8;
};

struct AdvanceDiagnostics {
    bool found = false;
    std::string reason;
    long long best_r = 0;
    double best_plus = 0.0;
    double best_minus = 0.0;
    long long work_used = 0;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

struct AdvanceResult {
    std::optional<Stage> stage; // empty when the search was exhausted
    AdvanceDiagnostics diag;
};

/// One induction step: new circles with slope a_{n+1} (rotation-invariance of
/// the circles is asserted in exact arithmetic), f_{n+1} = f_n - c sin(2 pi
/// q_n x2), joint doubling search over both circles, strip widths halved from
/// 1/(8 a_{n+1}) until the threshold verification passes on the strip, and
/// re-verification of all previous stages under the new angle (retrying with
/// a doubled r on failure). On success the bundle gains one stage.
AdvanceResult advance_stage(StageBundle& bundle, double delta_next,
                            const AdvanceOptions& opts = AdvanceOptions{});

/// Threshold verification of stage idx: extrema of the weighted ratio over
/// strip samples (circle grid plus transverse offsets). Overriding f/alpha
/// re-checks an old stage under a newer environment.
RatioReport verify_stage(const StageBundle& bundle, std::size_t idx, long long grid = 0,
                         const TrigPoly* f_override = nullptr,
                         const RotationVector* alpha_override = nullptr);

struct LimitAngle {
    RotationVector alpha;
    double tail_bound = 0.0;
};

/// Exact angle of the deepest built stage plus a heuristic tail estimate for
/// the remaining increments, assuming the achieved growth ratio continues
/// (at least doubling). Rational independence of the components and 1 holds
/// only for the limit object, not at any finite stage.
LimitAngle limit_angle(const StageBundle& bundle);

} // namespace evp
