#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "evp/analysis.hpp"
#include "evp/birkhoff.hpp"
#include "evp/closed_forms.hpp"
#include "evp/counterexample.hpp"
#include "evp/operators.hpp"
#include "evp/walk.hpp"

namespace py = pybind11;
using namespace evp;

namespace {

TorusPoint point_of(const std::vector<double>& v) { return TorusPoint(std::vector<double>(v)); }

RotationVector alpha_of(const py::object& spec) {
    if (py::isinstance<py::list>(spec) || py::isinstance<py::tuple>(spec)) {
        py::sequence seq = spec.cast<py::sequence>();
        if (seq.size() > 0 && py::isinstance<py::str>(seq[0]))
            return RotationVector::from_strings(spec.cast<std::vector<std::string>>());
        return RotationVector::from_floats(spec.cast<std::vector<double>>());
    }
    throw Error("alpha must be a list of floats or of 'num/den' strings");
}

TrigPoly poly_of(const py::object& spec) {
    if (py::isinstance<py::dict>(spec)) {
        return TrigPoly::from_json(nlohmann::json::parse(
            py::module_::import("json").attr("dumps")(spec).cast<std::string>()));
    }
    return spec.cast<TrigPoly>();
}

TestFunction phi_of(const py::object& spec) {
    if (py::isinstance<py::str>(spec)) {
        std::string s = spec.cast<std::string>();
        if (s == "one") return TestFunction::one();
        if (s == "ramp") return TestFunction(RampX1{});
        throw Error("unknown test function name: " + s);
    }
    return TestFunction(poly_of(spec));
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Random walks in quasi-periodic environments on the torus: exact walk "
              "laws, weighted ergodic sums, stationarity and mixing diagnostics, and "
              "the staged construction of non-uniquely-ergodic environments.";

    py::register_exception<Error>(m, "EvpError");

    py::class_<TrigPoly>(m, "TrigPoly")
        .def(py::init<int>(), py::arg("d"))
        .def("add_term", &TrigPoly::add_term, py::arg("k"), py::arg("cos_amp"), py::arg("sin_amp"))
        .def("set_mean", &TrigPoly::set_mean)
        .def_property_readonly("mean", &TrigPoly::mean)
        .def_property_readonly("dim", &TrigPoly::dim)
        .def_property_readonly("degree", &TrigPoly::degree)
        .def("eval", [](const TrigPoly& f, const std::vector<double>& z) {
            return f.eval(point_of(z));
        })
        .def("to_json", [](const TrigPoly& f) { return f.to_json().dump(); })
        .def_static("from_json", [](const std::string& s) {
            return TrigPoly::from_json(nlohmann::json::parse(s));
        });

    py::class_<EnvProfile>(m, "EnvProfile")
        .def_property_readonly("dim", &EnvProfile::dim)
        .def("f", [](const EnvProfile& e, const std::vector<double>& z) { return e.f(point_of(z)); })
        .def("p", [](const EnvProfile& e, const std::vector<double>& z) { return e.p(point_of(z)); })
        .def("q", [](const EnvProfile& e, const std::vector<double>& z) { return e.q(point_of(z)); })
        .def_property_readonly("symmetry_defect", &EnvProfile::symmetry_defect);

    m.def("xi_map", [](const py::object& f) { return xi_map(poly_of(f)); }, py::arg("f"),
          "Environment with p = e^f/(1+e^f) from the log-ratio polynomial f.");
    m.def("symmetry_defect", [](const py::object& f) { return symmetry_defect(poly_of(f)); });

    m.def("rotate_k", [](const std::vector<double>& z, const py::object& alpha, long long k) {
        return rotate_k(point_of(z), alpha_of(alpha), k).c;
    }, py::arg("z"), py::arg("alpha"), py::arg("k"));

    m.def("trig_eval", [](const py::object& f, const std::vector<double>& z) {
        return poly_of(f).eval(point_of(z));
    });

    m.def("birkhoff_sum", [](const py::object& f, const py::object& alpha,
                             const std::vector<double>& z, long long n) {
        return birkhoff_sum(poly_of(f), alpha_of(alpha), point_of(z), n);
    }, py::arg("f"), py::arg("alpha"), py::arg("z"), py::arg("n"));

    m.def("sine_sum_closed_form", &sine_sum_closed_form, py::arg("q"), py::arg("alpha"),
          py::arg("t"), py::arg("n"));
    m.def("zeta_r", &zeta_r, py::arg("q"), py::arg("alpha"));

    m.def("walk_pmf_exact", [](const py::object& f, const py::object& alpha,
                               const std::vector<double>& z, long long n) {
        WalkPMF pmf = walk_pmf_exact(xi_map(poly_of(f)), alpha_of(alpha), point_of(z), n);
        py::dict out;
        for (long long k = -n; k <= n; ++k)
            if (pmf.prob(k) != 0.0) out[py::int_(k)] = pmf.prob(k);
        return out;
    }, py::arg("f"), py::arg("alpha"), py::arg("z"), py::arg("n"),
       "Exact law of the walk offset after n steps, as {offset: probability}.");

    m.def("walk_sample", [](const py::object& f, const py::object& alpha,
                            const std::vector<double>& z, long long n, long long m,
                            std::uint64_t seed) {
        EndpointHistogram h =
            walk_sample(xi_map(poly_of(f)), alpha_of(alpha), point_of(z), n, m, RngSpec{seed, 0});
        py::dict out;
        for (long long k = -n; k <= n; ++k)
            if (h.freq(k) != 0.0) out[py::int_(k)] = h.freq(k);
        return out;
    }, py::arg("f"), py::arg("alpha"), py::arg("z"), py::arg("n"), py::arg("m"), py::arg("seed"));

    m.def("dual_apply", [](const py::object& phi, const py::object& f, const py::object& alpha,
                           const std::vector<double>& z, long long n) {
        return dual_apply(phi_of(phi), xi_map(poly_of(f)), alpha_of(alpha), point_of(z), n);
    }, py::arg("phi"), py::arg("f"), py::arg("alpha"), py::arg("z"), py::arg("n"));

    m.def("weighted_birkhoff", [](const py::object& f, const py::object& alpha,
                                  const py::object& phi, const std::vector<double>& z,
                                  long long n) {
        WeightedSumResult r = weighted_birkhoff(poly_of(f), alpha_of(alpha), phi_of(phi),
                                                point_of(z), n);
        return py::make_tuple(r.log_total, r.ratio);
    }, py::arg("f"), py::arg("alpha"), py::arg("phi"), py::arg("z"), py::arg("n"),
       "Returns (log S_n(1,z), weighted ratio).");

    m.def("rho_log", [](const py::object& f, const py::object& alpha,
                        const std::vector<double>& z, long long n) {
        return rho_log(xi_map(poly_of(f)), alpha_of(alpha), point_of(z), n);
    }, py::arg("f"), py::arg("alpha"), py::arg("z"), py::arg("n"));

    m.def("pf_unit_residual", [](const py::object& f, const py::object& alpha,
                                 const std::vector<double>& z) {
        return pf_unit_residual(xi_map(poly_of(f)), alpha_of(alpha), point_of(z));
    });

    m.def("t_semigroup_residual", [](const py::object& f, const py::object& alpha,
                                     const py::object& phi, const std::vector<double>& z,
                                     long long n, long long mm) {
        return t_semigroup_residual(poly_of(f), alpha_of(alpha), phi_of(phi), point_of(z), n, mm);
    });

    py::class_<ParticleMeasure>(m, "ParticleMeasure")
        .def(py::init<int>(), py::arg("d"))
        .def_static("dirac", [](const std::vector<double>& z) {
            return ParticleMeasure::dirac(point_of(z));
        })
        .def_static("uniform_grid", &ParticleMeasure::uniform_grid)
        .def("push_back", [](ParticleMeasure& mu, const std::vector<double>& z, double lw) {
            mu.push_back(point_of(z), lw);
        })
        .def("normalize", &ParticleMeasure::normalize)
        .def("compact", &ParticleMeasure::compact)
        .def("__len__", &ParticleMeasure::size)
        .def("point", [](const ParticleMeasure& mu, std::size_t i) { return mu.point(i).c; })
        .def("logw", &ParticleMeasure::logw)
        .def("integrate", [](const ParticleMeasure& mu, const py::object& phi) {
            return mu.integrate(phi_of(phi));
        })
        .def("to_json", [](const ParticleMeasure& mu) { return mu.to_json().dump(); })
        .def_static("from_json", [](const std::string& s) {
            return ParticleMeasure::from_json(nlohmann::json::parse(s));
        });

    m.def("apply_markov", [](const ParticleMeasure& mu, const py::object& f,
                             const py::object& alpha, bool compaction) {
        CompactionPolicy pol = compaction ? CompactionPolicy{} : CompactionPolicy::off();
        return apply_markov(mu, xi_map(poly_of(f)), alpha_of(alpha), pol);
    }, py::arg("mu"), py::arg("f"), py::arg("alpha"), py::arg("compaction") = true);

    m.def("quasi_invariance_residual", [](const ParticleMeasure& mu, const py::object& f,
                                          const py::object& alpha, const py::list& tests) {
        std::vector<TestFunction> ts;
        for (const auto& t : tests) ts.push_back(phi_of(py::reinterpret_borrow<py::object>(t)));
        return quasi_invariance_residual(mu, poly_of(f), alpha_of(alpha), ts);
    });

    m.def("stationary_estimate", [](const py::object& f, const py::object& alpha,
                                    const std::vector<double>& z0, long long burnin,
                                    long long length, std::uint64_t seed) {
        return stationary_estimate(xi_map(poly_of(f)), alpha_of(alpha), point_of(z0), burnin,
                                   length, RngSpec{seed, 0});
    }, py::arg("f"), py::arg("alpha"), py::arg("z0"), py::arg("burnin"), py::arg("length"),
       py::arg("seed"));

    py::class_<FourierFingerprint>(m, "FourierFingerprint")
        .def_static("of_measure", &FourierFingerprint::of_measure, py::arg("mu"), py::arg("cutoff"))
        .def_property_readonly("cutoff", &FourierFingerprint::cutoff)
        .def("coeff", &FourierFingerprint::coeff)
        .def("to_json", [](const FourierFingerprint& fp) { return fp.to_json().dump(); });

    m.def("weak_star_distance", &weak_star_distance);

    m.def("mixing_correlation", [](const py::object& f, const py::object& alpha,
                                   const ParticleMeasure& mu, const py::object& phi,
                                   const py::object& psi, const std::vector<long long>& n_list,
                                   std::uint64_t seed) {
        auto series = mixing_correlation(xi_map(poly_of(f)), alpha_of(alpha), mu, phi_of(phi),
                                         phi_of(psi), n_list, RngSpec{seed, 1});
        py::list out;
        for (const auto& row : series)
            out.append(py::make_tuple(row.n, row.value, row.stderr_));
        return out;
    }, py::arg("f"), py::arg("alpha"), py::arg("mu"), py::arg("phi"), py::arg("psi"),
       py::arg("n_list"), py::arg("seed") = 0);

    m.def("atom_partial_sums", [](const py::object& f, const py::object& alpha,
                                  const std::vector<double>& z0, long long N) {
        auto rows = atom_partial_sums(poly_of(f), alpha_of(alpha), point_of(z0), N);
        py::list out;
        for (const auto& r : rows) out.append(py::make_tuple(r.n, r.log_sum));
        return out;
    });

    m.def("record_frequency_estimate", [](const py::object& f, const py::object& alpha,
                                          const ParticleMeasure& mu, long long n, long long mm,
                                          std::uint64_t seed) {
        RecordFrequency rf = record_frequency_estimate(xi_map(poly_of(f)), alpha_of(alpha), mu, n,
                                                       mm, RngSpec{seed, 0});
        return py::make_tuple(rf.estimate, rf.stderr_);
    }, py::arg("f"), py::arg("alpha"), py::arg("mu"), py::arg("n"), py::arg("m"), py::arg("seed"));

    py::class_<StageBundle>(m, "StageBundle")
        .def("to_json", [](const StageBundle& b) { return b.to_json().dump(2); })
        .def_static("from_json", [](const std::string& s) {
            return StageBundle::from_json(nlohmann::json::parse(s));
        })
        .def_property_readonly("stage_count", [](const StageBundle& b) { return b.stages.size(); })
        .def("stage_summary", [](const StageBundle& b, std::size_t k) {
            const Stage& s = b.stages.at(k);
            py::dict out;
            out["n"] = s.n;
            out["q"] = s.q.str();
            out["a"] = s.a.str();
            out["r"] = s.r;
            out["min_plus"] = s.report.min_plus;
            out["max_minus"] = s.report.max_minus;
            out["separation"] = s.report.separation;
            return out;
        });

    m.def("init_stage0", &init_stage0, py::arg("delta_schedule"));
    m.def("advance_stage", [](StageBundle& bundle, double delta_next, const std::string& c_mode,
                              double c_value, long long r_cap, long long grid,
                              long long work_budget) {
        AdvanceOptions opts;
        opts.c_mode = c_mode == "strict" ? CMode::strict : CMode::relaxed;
        opts.c_value = c_value;
        opts.r_cap = r_cap;
        opts.grid = grid;
        opts.work_budget = work_budget;
        AdvanceResult res = advance_stage(bundle, delta_next, opts);
        py::dict out;
        out["found"] = res.diag.found;
        out["reason"] = res.diag.reason;
        out["best_r"] = res.diag.best_r;
        out["best_plus"] = res.diag.best_plus;
        out["best_minus"] = res.diag.best_minus;
        out["warnings"] = res.diag.warnings;
        return out;
    }, py::arg("bundle"), py::arg("delta_next"), py::arg("c_mode") = "relaxed",
       py::arg("c_value") = -1.0, py::arg("r_cap") = kDefaultRCap, py::arg("grid") = 0,
       py::arg("work_budget") = kDefaultWorkBudget);

    m.def("verify_stage", [](const StageBundle& bundle, std::size_t idx, long long grid) {
        RatioReport rep = verify_stage(bundle, idx, grid);
        return nlohmann::json(rep.to_json()).dump();
    }, py::arg("bundle"), py::arg("idx"), py::arg("grid") = 0);

    m.attr("__version__") = "0.1.0";
}
