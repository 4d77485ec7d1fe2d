#include "panelgmm/diagnostics.hpp"
#include "panelgmm/diff_gmm.hpp"
#include "panelgmm/distributions.hpp"
#include "panelgmm/errors.hpp"
#include "panelgmm/io.hpp"
#include "panelgmm/pipeline.hpp"
#include "panelgmm/simulation.hpp"
#include "panelgmm/static_estimators.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace panelgmm;

namespace {

DistributionRef dist(const std::string& family, double df1, double df2) {
    if (family == "normal" || family == "z") return DistributionRef::normal();
    if (family == "chi2") return DistributionRef::chi_square(df1);
    if (family == "t") return DistributionRef::student_t(df1);
    if (family == "f" || family == "F") return DistributionRef::f(df1, df2);
    if (family == "chibar2") return DistributionRef::chibar2_01();
    throw ValidationError("unknown distribution family '" + family + "' (normal, chi2, t, f, chibar2)");
}

ModelSpec make_spec(const std::string& dependent, const std::vector<std::string>& regressors, int lags,
                    const std::string& instruments, bool period_fixed) {
    ModelSpec s;
    s.dependent = dependent;
    s.regressors = regressors;
    s.dep_lag_order = lags;
    s.period_fixed = period_fixed;
    if (!instruments.empty()) s.instruments = parse_instrument_spec(instruments);
    return s;
}

py::dict test_dict(const TestResult& t) {
    py::dict d;
    d["name"] = t.name;
    d["statistic"] = t.statistic;
    d["distribution"] = label(t.distribution);
    d["p_value"] = t.p_value;
    d["decision"] = t.decision;
    d["defined"] = t.defined;
    d["note"] = t.note;
    return d;
}

py::dict result_dict(const EstimationResult& r) {
    py::dict d;
    d["method"] = to_string(r.method);
    d["names"] = r.names;
    d["coefficients"] = r.coefficients;
    d["std_errors"] = r.std_errors;
    d["stats"] = r.stats;
    d["p_values"] = r.p_values;
    d["covariance"] = r.covariance;
    d["n_obs"] = r.n_obs;
    d["n_entities"] = r.n_entities;
    d["warnings"] = r.warnings;
    if (r.fit.r_squared) d["r_squared"] = *r.fit.r_squared;
    if (r.gmm) {
        const auto& g = *r.gmm;
        d["instrument_count"] = g.instrument_count;
        d["group_count"] = g.group_count;
        if (g.sargan) d["sargan"] = test_dict(*g.sargan);
        py::list ar;
        for (const auto& t : g.ar_tests) ar.append(test_dict(t));
        d["ar_tests"] = ar;
    }
    return d;
}

GmmOptions gmm_options(std::optional<int> depth, bool collapse, bool robust) {
    GmmOptions o;
    o.max_gmm_lag_depth = depth;
    o.collapse_default = collapse;
    o.robust = robust;
    return o;
}

EstimationResult run_estimator(const PanelDataset& p, const ModelSpec& s, Method m, const GmmOptions& g) {
    switch (m) {
        case Method::pols: return pooled_ols(p, s);
        case Method::fe: return fixed_effects(p, s);
        case Method::re: return random_effects(p, s);
        case Method::fgls: return fgls(p, s);
        case Method::diff_gmm: return difference_gmm(p, s, g);
    }
    throw ValidationError("unknown method");
}

py::dict summary_dict(const MonteCarloSummary& s) {
    py::dict d;
    d["estimator"] = s.estimator;
    d["replications"] = s.replications;
    d["failures"] = s.failures;
    py::dict coefs;
    for (const auto& c : s.per_coefficient) {
        py::dict x;
        x["true_value"] = c.true_value;
        x["mean_estimate"] = c.mean_estimate;
        x["mean_bias"] = c.mean_bias;
        x["rmse"] = c.rmse;
        x["coverage"] = c.coverage;
        x["draws"] = c.draws;
        coefs[py::str(c.name)] = x;
    }
    d["coefficients"] = coefs;
    py::dict tests;
    for (const auto& t : s.per_test) tests[py::str(t.name)] = t.rejection_rate;
    d["rejection_rates"] = tests;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Panel estimators, diagnostics and difference GMM";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    py::class_<PanelDataset>(m, "Panel")
        .def(py::init([](std::vector<std::string> entities, int first, int last) {
                 return PanelDataset::with_period_range(std::move(entities), first, last);
             }),
             py::arg("entities"), py::arg("first_period"), py::arg("last_period"))
        .def_property_readonly("entities", &PanelDataset::entities)
        .def_property_readonly("periods", &PanelDataset::periods)
        .def_property_readonly("series_names", &PanelDataset::series_names)
        .def("set_series", &PanelDataset::set_series, py::arg("name"), py::arg("values"))
        .def("series", &PanelDataset::series, py::arg("name"))
        .def("__eq__", &PanelDataset::operator==)
        .def("__repr__", [](const PanelDataset& p) {
            return "<Panel " + std::to_string(p.entity_count()) + " entities x " + std::to_string(p.period_count()) +
                   " periods>";
        });

    m.def("read_panel_csv", &read_panel_csv, py::arg("path"));
    m.def("write_panel_csv", py::overload_cast<const PanelDataset&, const std::string&>(&write_panel_csv),
          py::arg("panel"), py::arg("path"));

    m.def("cdf", [](const std::string& f, double x, double df1, double df2) { return cdf(dist(f, df1, df2), x); },
          py::arg("family"), py::arg("x"), py::arg("df1") = 0.0, py::arg("df2") = 0.0);
    m.def("sf", [](const std::string& f, double x, double df1, double df2) { return sf(dist(f, df1, df2), x); },
          py::arg("family"), py::arg("x"), py::arg("df1") = 0.0, py::arg("df2") = 0.0);
    m.def("quantile",
          [](const std::string& f, double p, double df1, double df2) { return quantile(dist(f, df1, df2), p); },
          py::arg("family"), py::arg("p"), py::arg("df1") = 0.0, py::arg("df2") = 0.0);
    m.def("two_sided_normal_p", &two_sided_normal_p, py::arg("z"));

    m.def("parse_instruments", [](const std::string& s) { return render_instrument_spec(parse_instrument_spec(s)); },
          py::arg("text"), "Parses an instrument string and returns its canonical rendering.");

    m.def(
        "estimate",
        [](const PanelDataset& p, const std::string& method, const std::string& dependent,
           const std::vector<std::string>& regressors, int lags, const std::string& instruments, bool period_fixed,
           std::optional<int> max_lag_depth, bool collapse, bool robust) {
            const auto s = make_spec(dependent, regressors, lags, instruments, period_fixed);
            return result_dict(
                run_estimator(p, s, method_from_string(method), gmm_options(max_lag_depth, collapse, robust)));
        },
        py::arg("panel"), py::arg("method"), py::arg("dependent"), py::arg("regressors"), py::arg("lags") = 0,
        py::arg("instruments") = "", py::arg("period_fixed") = false, py::arg("max_lag_depth") = py::none(),
        py::arg("collapse") = false, py::arg("robust") = true);

    m.def(
        "instrument_count",
        [](const PanelDataset& p, const std::string& dependent, const std::vector<std::string>& regressors, int lags,
           const std::string& instruments, std::optional<int> max_lag_depth, bool collapse) {
            const auto plan = build_instrument_matrix(p, make_spec(dependent, regressors, lags, instruments, false),
                                                      gmm_options(max_lag_depth, collapse, true));
            py::dict d;
            d["columns"] = plan.realized_column_count;
            d["groups"] = plan.group_count;
            d["warnings"] = plan.warnings;
            return d;
        },
        py::arg("panel"), py::arg("dependent"), py::arg("regressors"), py::arg("lags") = 1,
        py::arg("instruments") = "", py::arg("max_lag_depth") = py::none(), py::arg("collapse") = false);

    m.def(
        "test",
        [](const PanelDataset& p, const std::string& name, const std::string& dependent,
           const std::vector<std::string>& regressors, const std::string& suspect,
           const std::vector<std::string>& instruments) {
            const auto s = make_spec(dependent, regressors, 0, "", false);
            if (name == "wooldridge") return test_dict(wooldridge_autocorr_test(p, s));
            if (name == "breusch_pagan") return test_dict(breusch_pagan_het_test(pooled_ols(p, s)));
            if (name == "modified_wald") return test_dict(modified_wald_groupwise_het(fixed_effects(p, s)));
            if (name == "bp_lm") return test_dict(bp_lm_re_test(pooled_ols(p, s)));
            if (name == "hausman") return test_dict(hausman_test(fixed_effects(p, s), random_effects(p, s)));
            if (name == "f_pooled_fe") {
                const auto fe = fixed_effects(p, s);
                return test_dict(f_test_pooled_vs_fe(pooled_ols(p, s, 2), fe));
            }
            if (name == "durbin" || name == "wu_hausman") {
                const auto r = dwh_endogeneity_test(p, s, suspect, instruments);
                return test_dict(name == "durbin" ? r.durbin : r.wu_hausman);
            }
            throw ValidationError("unknown test '" + name +
                                  "' (wooldridge, breusch_pagan, modified_wald, bp_lm, hausman, f_pooled_fe, "
                                  "durbin, wu_hausman)");
        },
        py::arg("panel"), py::arg("name"), py::arg("dependent"), py::arg("regressors"), py::arg("suspect") = "",
        py::arg("instruments") = std::vector<std::string>{});

    m.def(
        "unit_root",
        [](const PanelDataset& p, const std::string& variable, int lags, bool trend) {
            UnitRootOptions o;
            o.lags = lags;
            o.deterministic = trend ? AdfDeterministic::constant_trend : AdfDeterministic::constant;
            const auto r = fisher_unit_root(p, variable, o);
            py::dict d;
            d["P"] = test_dict(r.inverse_chi2);
            d["Z"] = test_dict(r.inverse_normal);
            d["L"] = test_dict(r.inverse_logit);
            d["Pm"] = test_dict(r.modified_inverse_chi2);
            d["decision"] = r.decision;
            d["warnings"] = r.warnings;
            return d;
        },
        py::arg("panel"), py::arg("variable"), py::arg("lags") = 1, py::arg("trend") = false);

    py::class_<DgpConfig>(m, "DgpConfig")
        .def(py::init<>())
        .def_readwrite("n_entities", &DgpConfig::n_entities)
        .def_readwrite("n_periods", &DgpConfig::n_periods)
        .def_readwrite("burn_in", &DgpConfig::burn_in)
        .def_readwrite("omega", &DgpConfig::omega)
        .def_readwrite("theta", &DgpConfig::theta)
        .def_readwrite("fixed_effect_sd", &DgpConfig::fixed_effect_sd)
        .def_readwrite("idiosyncratic_sd", &DgpConfig::idiosyncratic_sd)
        .def_readwrite("regressor_persistence", &DgpConfig::regressor_persistence)
        .def_readwrite("regressor_effect_loading", &DgpConfig::regressor_effect_loading)
        .def_readwrite("endogeneity_corr", &DgpConfig::endogeneity_corr)
        .def_readwrite("groupwise_het_factor", &DgpConfig::groupwise_het_factor)
        .def_readwrite("regressor_het_loading", &DgpConfig::regressor_het_loading)
        .def_readwrite("error_ar1", &DgpConfig::error_ar1)
        .def_readwrite("instrument_strength", &DgpConfig::instrument_strength)
        .def_readwrite("emit_components", &DgpConfig::emit_components)
        .def_readwrite("seed", &DgpConfig::seed);

    m.def("simulate", &simulate_dynamic_panel, py::arg("config"));

    m.def(
        "monte_carlo",
        [](const DgpConfig& c, const std::string& method, const std::vector<std::string>& regressors, int lags,
           const std::string& instruments, std::size_t reps, std::uint64_t seed) {
            McTarget t;
            t.method = method_from_string(method);
            t.spec = make_spec("y", regressors, lags, instruments, false);
            return summary_dict(monte_carlo(c, t, reps, seed));
        },
        py::arg("config"), py::arg("method"), py::arg("regressors") = std::vector<std::string>{"x1"},
        py::arg("lags") = 1, py::arg("instruments") = "", py::arg("replications") = 100, py::arg("seed") = 1);

    m.def(
        "run_pipeline",
        [](const std::string& config_path, const std::string& format) {
            const auto c = load_config(config_path);
            const auto r = run_pipeline(c);
            return py::make_tuple(render_report(r, format_from_string(format)), r.exit_code);
        },
        py::arg("config_path"), py::arg("format") = "text",
        "Runs the configured cascade; returns (rendered report, exit code).");
}
