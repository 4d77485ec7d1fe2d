#include "panelgmm/errors.hpp"
#include "panelgmm/io.hpp"
#include "panelgmm/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace panelgmm;

namespace {

struct DataOpts {
    std::string panel, bank, macro, format = "text", out;
};

struct ModelOpts {
    std::string dep, regressors, iv, gmm_iv, max_depth = "auto";
    int lags = 0;
    bool period_fixed = false, collapse = false, robust = true;
};

void add_data(CLI::App* c, DataOpts& d) {
    c->add_option("--panel", d.panel, "prebuilt panel CSV (entity_id, year, series...)");
    c->add_option("--bank", d.bank, "bank records CSV");
    c->add_option("--macro", d.macro, "macro CSV (year, gdp, inf)");
    c->add_option("--format", d.format, "text|json|csv")->check(CLI::IsMember({"text", "json", "csv"}));
    c->add_option("--out", d.out, "output path (stdout if omitted)");
}

void add_model(CLI::App* c, ModelOpts& m) {
    c->add_option("--dep", m.dep, "dependent variable")->required();
    c->add_option("--regressors", m.regressors, "comma-separated regressors (L2.x style allowed)");
    c->add_option("--lags", m.lags, "lags of the dependent variable");
    c->add_flag("--period-fixed", m.period_fixed, "add period dummies");
    c->add_option("--iv", m.iv, "iv-style instrument directives");
    c->add_option("--gmm-iv", m.gmm_iv, "gmm-style instrument directives");
    c->add_option("--max-lag-depth", m.max_depth, "auto or a positive integer");
    c->add_flag("--collapse", m.collapse, "collapse gmm-style instruments");
    c->add_flag("!--nonrobust", m.robust, "one-step non-robust GMM standard errors");
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

PipelineConfig base_config(const DataOpts& d) {
    PipelineConfig c;
    c.panel_csv = d.panel;
    c.bank_csv = d.bank;
    c.macro_csv = d.macro;
    c.format = format_from_string(d.format);
    c.out = d.out;
    if (c.panel_csv.empty() && (c.bank_csv.empty() || c.macro_csv.empty()))
        throw ValidationError("give --panel or both --bank and --macro");
    return c;
}

ModelConfig model_config(const ModelOpts& m) {
    ModelConfig mc;
    mc.name = m.dep;
    mc.spec.dependent = m.dep;
    mc.spec.regressors = split(m.regressors);
    mc.spec.dep_lag_order = m.lags;
    mc.spec.period_fixed = m.period_fixed;
    std::string inst = m.iv;
    if (!m.gmm_iv.empty()) inst += (inst.empty() ? "" : " ") + m.gmm_iv;
    if (!inst.empty()) mc.spec.instruments = parse_instrument_spec(inst);
    return mc;
}

GmmOptions gmm_options(const ModelOpts& m) {
    GmmOptions g;
    g.collapse_default = m.collapse;
    g.robust = m.robust;
    if (m.max_depth != "auto") {
        try {
            g.max_gmm_lag_depth = std::stoi(m.max_depth);
        } catch (const std::exception&) {
            throw ValidationError("--max-lag-depth expects auto or an integer");
        }
    }
    return g;
}

void emit(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out);
    if (!f) throw ValidationError("cannot write '" + out + "'");
    f << text;
}

int emit_report(const Report& r, const DataOpts& d) {
    emit(render_report(r, format_from_string(d.format)), d.out);
    return r.exit_code;
}

Report single(const std::string& id, const std::string& title, Table t, std::vector<std::string> msgs = {}) {
    Report r;
    r.title = title;
    Section s;
    s.id = id;
    s.title = title;
    s.tables.push_back(std::move(t));
    s.messages = std::move(msgs);
    r.sections.push_back(std::move(s));
    return r;
}

void add_dgp(CLI::App* c, DgpConfig& g, std::string& theta) {
    c->add_option("--seed", g.seed, "RNG seed");
    c->add_option("--entities", g.n_entities, "number of entities");
    c->add_option("--periods", g.n_periods, "number of periods");
    c->add_option("--burn-in", g.burn_in, "burn-in periods");
    c->add_option("--omega", g.omega, "coefficient on the lagged dependent variable");
    c->add_option("--theta", theta, "comma-separated regressor coefficients");
    c->add_option("--effect-sd", g.fixed_effect_sd, "sd of the entity effect");
    c->add_option("--sd", g.idiosyncratic_sd, "sd of the idiosyncratic error");
    c->add_option("--effect-loading", g.regressor_effect_loading, "loading of x on the entity effect");
    c->add_option("--endogeneity", g.endogeneity_corr, "corr(x1 innovation, error)");
    c->add_option("--group-het", g.groupwise_het_factor, "error sd factor for the second half of entities");
    c->add_option("--x-het", g.regressor_het_loading, "error sd loading on x1");
    c->add_option("--error-ar1", g.error_ar1, "AR(1) coefficient of the error");
    c->add_option("--instrument-strength", g.instrument_strength, "emit an external instrument w");
    c->add_flag("--components", g.emit_components, "emit eps and alpha series");
}

std::vector<double> parse_theta(const std::string& s) {
    std::vector<double> out;
    for (const auto& x : split(s)) out.push_back(parse_number(x, "--theta", 0, "theta"));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Static and dynamic panel estimators with specification diagnostics"};
    app.require_subcommand(1);

    DataOpts d;
    ModelOpts m;
    std::string vars, method = "fe", tests, suspects, endo_inst, config_path, policy = "all_four", theta;
    int ur_lags = 1;
    bool trend = false;
    double level = 0.05;
    std::size_t reps = 500;
    DgpConfig dgp;

    auto* describe = app.add_subcommand("describe", "descriptive statistics");
    auto* correlate = app.add_subcommand("correlate", "correlation matrix");
    auto* vifc = app.add_subcommand("vif", "variance inflation factors");
    auto* unitroot = app.add_subcommand("unitroot", "Fisher-type ADF unit-root battery");
    for (auto* c : {describe, correlate, vifc, unitroot}) {
        add_data(c, d);
        c->add_option("--vars", vars, "comma-separated variables")->required();
    }
    unitroot->add_option("--lags", ur_lags, "ADF lags");
    unitroot->add_flag("--trend", trend, "include a linear trend");
    unitroot->add_option("--policy", policy, "all_four|any|inverse_chi2")
        ->check(CLI::IsMember({"all_four", "any", "inverse_chi2"}));

    auto* estimate = app.add_subcommand("estimate", "fit one estimator");
    add_data(estimate, d);
    add_model(estimate, m);
    estimate->add_option("--method", method, "pols|fe|re|fgls|gmm")
        ->check(CLI::IsMember({"pols", "fe", "re", "fgls", "gmm"}));

    auto* test = app.add_subcommand("test", "specification and assumption tests");
    add_data(test, d);
    add_model(test, m);
    test->add_option("--tests", tests, "comma list: specification,autocorrelation,heteroskedasticity,endogeneity,gmm_validity");
    test->add_option("--suspects", suspects, "regressors suspected endogenous");
    test->add_option("--instruments", endo_inst, "external instruments for the endogeneity test");
    test->add_option("--level", level, "significance level")->check(CLI::IsMember({0.01, 0.05, 0.10}));

    auto* gmm = app.add_subcommand("gmm", "difference GMM with validity tests");
    add_data(gmm, d);
    add_model(gmm, m);

    auto* simulate = app.add_subcommand("simulate", "simulate a dynamic panel to CSV");
    add_dgp(simulate, dgp, theta);
    simulate->add_option("--out", d.out, "output CSV (stdout if omitted)");

    auto* mc = app.add_subcommand("mc", "Monte Carlo of one estimator on the simulated DGP");
    add_dgp(mc, dgp, theta);
    mc->add_option("--reps", reps, "replications");
    mc->add_option("--method", method, "pols|fe|re|fgls|gmm")->check(CLI::IsMember({"pols", "fe", "re", "fgls", "gmm"}));
    mc->add_option("--iv", m.iv, "iv-style instrument directives");
    mc->add_option("--gmm-iv", m.gmm_iv, "gmm-style instrument directives");
    mc->add_option("--max-lag-depth", m.max_depth, "auto or a positive integer");
    mc->add_flag("--collapse", m.collapse, "collapse gmm-style instruments");
    mc->add_option("--format", d.format, "text|json|csv")->check(CLI::IsMember({"text", "json", "csv"}));
    mc->add_option("--out", d.out, "output path");

    auto* pipeline = app.add_subcommand("pipeline", "run the full cascade from a config file");
    pipeline->add_option("--config", config_path, "INI config")->required()->check(CLI::ExistingFile);
    pipeline->add_option("--format", d.format, "override the output format")
        ->check(CLI::IsMember({"text", "json", "csv"}));
    pipeline->add_option("--out", d.out, "override the output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*describe || *correlate || *vifc || *unitroot) {
            PipelineConfig c = base_config(d);
            std::vector<std::string> msgs;
            const PanelDataset panel = load_panel(c, &msgs);
            const auto v = split(vars);
            if (*describe) return emit_report(single("describe", "Descriptive statistics", descriptive_table(panelgmm::describe(panel, v)), msgs), d);
            if (*correlate)
                return emit_report(single("correlation", "Correlation screening",
                                          correlation_table(correlation_matrix(panel, v)), msgs), d);
            if (*vifc) return emit_report(single("vif", "Multicollinearity (VIF)", vif_table(panelgmm::vif(panel, v)), msgs), d);
            UnitRootOptions o;
            o.lags = ur_lags;
            o.deterministic = trend ? AdfDeterministic::constant_trend : AdfDeterministic::constant;
            o.policy = policy == "any" ? UnitRootPolicy::any
                       : policy == "inverse_chi2" ? UnitRootPolicy::inverse_chi2 : UnitRootPolicy::all_four;
            std::vector<UnitRootReport> reps_ur;
            for (const auto& x : v) reps_ur.push_back(fisher_unit_root(panel, x, o));
            for (const auto& r : reps_ur)
                for (const auto& w : r.warnings) msgs.push_back(r.variable + ": " + w);
            return emit_report(single("unitroot", "Unit-root battery", unit_root_table(reps_ur), msgs), d);
        }
        if (*estimate || *test || *gmm) {
            PipelineConfig c = base_config(d);
            ModelConfig mc = model_config(m);
            c.gmm = gmm_options(m);
            c.tests.clear();
            if (*estimate) {
                mc.methods = {method == "gmm" ? Method::diff_gmm : method_from_string(method)};
            } else if (*gmm) {
                mc.methods = {Method::diff_gmm};
                c.tests = {"gmm_validity"};
            } else {
                const auto sel = tests.empty() ? std::vector<std::string>{"specification", "autocorrelation",
                                                                          "heteroskedasticity", "endogeneity"}
                                               : split(tests);
                for (const auto& s : sel) {
                    if (std::find(kPipelineStages.begin(), kPipelineStages.end(), s) == kPipelineStages.end())
                        throw ValidationError("unknown test '" + s + "'");
                    c.tests.insert(s);
                }
                mc.methods = {Method::pols, Method::fe, Method::re};
                if (c.tests.count("gmm_validity")) mc.methods.push_back(Method::diff_gmm);
                mc.endogeneity_suspects = split(suspects);
                mc.endogeneity_instruments = split(endo_inst);
                c.level = level;
            }
            c.models.push_back(mc);
            return emit_report(run_pipeline(c), d);
        }
        if (*simulate) {
            if (!theta.empty()) dgp.theta = parse_theta(theta);
            const PanelDataset p = simulate_dynamic_panel(dgp);
            std::ostringstream os;
            write_panel_csv(p, os);
            emit(os.str(), d.out);
            return 0;
        }
        if (*mc) {
            if (!theta.empty()) dgp.theta = parse_theta(theta);
            McTarget t;
            t.method = method == "gmm" ? Method::diff_gmm : method_from_string(method);
            t.spec.dependent = "y";
            t.spec.dep_lag_order = 1;
            for (std::size_t k = 0; k < dgp.theta.size(); ++k) t.spec.regressors.push_back("x" + std::to_string(k + 1));
            std::string inst = m.iv;
            if (!m.gmm_iv.empty()) inst += (inst.empty() ? "" : " ") + m.gmm_iv;
            if (!inst.empty()) t.spec.instruments = parse_instrument_spec(inst);
            t.gmm = gmm_options(m);
            const MonteCarloSummary s = monte_carlo(dgp, t, reps, dgp.seed);
            return emit_report(single("mc", "Monte Carlo", monte_carlo_table(s), s.failure_messages), d);
        }
        if (*pipeline) {
            PipelineConfig c = load_config(config_path);
            if (!d.out.empty()) c.out = d.out;
            if (pipeline->count("--format")) c.format = format_from_string(d.format);
            const Report r = run_pipeline(c);
            emit(render_report(r, c.format), c.out);
            return r.exit_code;
        }
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
