#include "panelgmm/pipeline.hpp"

#include "panelgmm/errors.hpp"
#include "panelgmm/io.hpp"
#include "panelgmm/static_estimators.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace panelgmm {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Drops an inline "; comment" (the INI reader keeps it); ';' inside quotes is kept.
std::string strip_comment(const std::string& s) {
    char quote = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (quote) {
            if (c == quote) quote = 0;
        } else if (c == '"' || c == '\'') {
            quote = c;
        } else if ((c == ';' || c == '#') && (i == 0 || s[i - 1] == ' ' || s[i - 1] == '\t')) {
            return s.substr(0, i);
        }
    }
    return s;
}

std::string unquote(std::string s) {
    s = trim(strip_comment(s));
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
        s = s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(unquote(s));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

bool parse_bool(const std::string& raw, const std::string& key) {
    std::string v = unquote(raw);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw ValidationError("config: '" + key + "' expects a boolean, got '" + raw + "'");
}

int parse_int(const std::string& raw, const std::string& key) {
    const std::string v = unquote(raw);
    try {
        std::size_t pos = 0;
        const int out = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ValidationError("config: '" + key + "' expects an integer, got '" + raw + "'");
    }
}

std::string resolve(const std::string& base, const std::string& p) {
    if (p.empty()) return p;
    std::filesystem::path path(p);
    if (path.is_absolute()) return p;
    return (std::filesystem::path(base) / path).lexically_normal().string();
}

void check_keys(const pt::ptree& sec, const std::string& name, const std::set<std::string>& allowed) {
    for (const auto& [k, v] : sec)
        if (!allowed.count(k)) throw ValidationError("config: unknown key '" + k + "' in [" + name + "]");
}

Section section(std::string id, std::string title) {
    Section s;
    s.id = std::move(id);
    s.title = std::move(title);
    return s;
}

void fail_stage(Report& rep, Section& s, const std::string& msg, int code) {
    s.status = SectionStatus::error;
    s.messages.push_back("error: " + msg);
    rep.exit_code = std::max(rep.exit_code, code);
}

// Runs `fn`; on failure marks the section and returns false.
template <class F>
bool guarded(Report& rep, Section& s, F&& fn) {
    try {
        fn();
        return true;
    } catch (const ValidationError& ex) {
        fail_stage(rep, s, ex.what(), 2);
    } catch (const NumericalError& ex) {
        fail_stage(rep, s, ex.what(), 3);
    } catch (const std::exception& ex) {
        fail_stage(rep, s, ex.what(), 3);
    }
    return false;
}

std::vector<std::string> model_variables(const ModelConfig& m) {
    std::vector<std::string> out{m.spec.dependent};
    for (const auto& r : m.spec.regressors) {
        const std::string b = TermRef::parse(r).name;
        if (std::find(out.begin(), out.end(), b) == out.end()) out.push_back(b);
    }
    return out;
}

bool wants(const PipelineConfig& c, const char* stage) { return c.tests.count(stage) != 0; }

bool has_method(const ModelConfig& m, Method x) {
    return std::find(m.methods.begin(), m.methods.end(), x) != m.methods.end();
}

}  // namespace

PipelineConfig parse_config(const std::string& text, const std::string& base_dir) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& ex) {
        throw ValidationError(std::string("config: ") + ex.what());
    }
    PipelineConfig c;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw ValidationError("config: key '" + section + "' outside of any section");
        auto get = [&body = body](const char* k) -> std::optional<std::string> {
            auto v = body.get_optional<std::string>(pt::ptree::path_type(k, '/'));
            if (!v) return std::nullopt;
            return unquote(*v);
        };
        if (section == "input") {
            check_keys(body, section, {"panel", "bank", "macro"});
            c.panel_csv = resolve(base_dir, get("panel").value_or(""));
            c.bank_csv = resolve(base_dir, get("bank").value_or(""));
            c.macro_csv = resolve(base_dir, get("macro").value_or(""));
        } else if (section == "output") {
            check_keys(body, section, {"format", "out", "level"});
            if (auto v = get("format")) c.format = format_from_string(*v);
            if (auto v = get("out")) c.out = resolve(base_dir, *v);
            if (auto v = get("level")) {
                if (*v == "0.01") c.level = 0.01;
                else if (*v == "0.05") c.level = 0.05;
                else if (*v == "0.10" || *v == "0.1") c.level = 0.10;
                else throw ValidationError("config: level must be one of 0.01, 0.05, 0.10");
            }
        } else if (section == "gmm") {
            check_keys(body, section, {"max_lag_depth", "collapse", "robust"});
            if (auto v = get("max_lag_depth")) {
                if (*v == "auto" || v->empty())
                    c.gmm.max_gmm_lag_depth.reset();
                else
                    c.gmm.max_gmm_lag_depth = parse_int(*v, "max_lag_depth");
            }
            if (auto v = get("collapse")) c.gmm.collapse_default = parse_bool(*v, "collapse");
            if (auto v = get("robust")) c.gmm.robust = parse_bool(*v, "robust");
        } else if (section == "tests") {
            check_keys(body, section, {"select", "unitroot_lags", "unitroot_trend", "unitroot_policy", "seed"});
            if (auto v = get("select")) {
                c.tests.clear();
                for (const auto& s : split_list(*v)) {
                    if (std::find(kPipelineStages.begin(), kPipelineStages.end(), s) == kPipelineStages.end())
                        throw ValidationError("config: unknown test stage '" + s + "'");
                    c.tests.insert(s);
                }
            }
            if (auto v = get("unitroot_lags")) c.unitroot.lags = parse_int(*v, "unitroot_lags");
            if (auto v = get("unitroot_trend"))
                c.unitroot.deterministic =
                    parse_bool(*v, "unitroot_trend") ? AdfDeterministic::constant_trend : AdfDeterministic::constant;
            if (auto v = get("unitroot_policy")) {
                if (*v == "all_four") c.unitroot.policy = UnitRootPolicy::all_four;
                else if (*v == "any") c.unitroot.policy = UnitRootPolicy::any;
                else if (*v == "inverse_chi2") c.unitroot.policy = UnitRootPolicy::inverse_chi2;
                else throw ValidationError("config: unknown unitroot_policy '" + *v + "'");
            }
            if (auto v = get("seed")) {
                try {
                    c.seed = std::stoull(*v);
                } catch (const std::exception&) {
                    throw ValidationError("config: seed expects an unsigned integer");
                }
            }
        } else if (section.rfind("model.", 0) == 0) {
            check_keys(body, section,
                       {"dependent", "regressors", "lags", "methods", "period_fixed", "iv", "gmm_iv", "endogeneity",
                        "endogeneity_instruments", "dis_subset"});
            ModelConfig m;
            m.name = section.substr(6);
            if (m.name.empty()) throw ValidationError("config: empty model name in [" + section + "]");
            auto dep = get("dependent");
            if (!dep || dep->empty()) throw ValidationError("config: [" + section + "] needs 'dependent'");
            m.spec.dependent = *dep;
            if (auto v = get("regressors")) m.spec.regressors = split_list(*v);
            if (auto v = get("lags")) m.spec.dep_lag_order = parse_int(*v, "lags");
            if (auto v = get("period_fixed")) m.spec.period_fixed = parse_bool(*v, "period_fixed");
            if (auto v = get("methods")) {
                m.methods.clear();
                for (const auto& s : split_list(*v)) m.methods.push_back(method_from_string(s));
            } else if (m.spec.dep_lag_order == 0) {
                // static model: the default cascade skips GMM
                m.methods.pop_back();
            }
            std::string instruments;
            if (auto v = get("iv"); v && !v->empty()) instruments += *v;
            if (auto v = get("gmm_iv"); v && !v->empty()) instruments += (instruments.empty() ? "" : " ") + *v;
            if (!instruments.empty()) m.spec.instruments = parse_instrument_spec(instruments);
            if (auto v = get("endogeneity")) m.endogeneity_suspects = split_list(*v);
            if (auto v = get("endogeneity_instruments")) m.endogeneity_instruments = split_list(*v);
            if (auto v = get("dis_subset")) {
                if (*v == "iv") {
                    m.dis_iv = true;
                } else if (*v == "none" || v->empty()) {
                    m.dis_iv = false;
                } else {
                    m.dis_iv = false;
                    for (const auto& s : split_list(*v))
                        m.dis_subset.push_back(static_cast<std::size_t>(parse_int(s, "dis_subset")));
                }
            }
            c.models.push_back(std::move(m));
        } else {
            throw ValidationError("config: unknown section [" + section + "]");
        }
    }
    if (c.models.empty()) throw ValidationError("config: no [model.NAME] section");
    if (c.panel_csv.empty() && (c.bank_csv.empty() || c.macro_csv.empty()))
        throw ValidationError("config: [input] needs 'panel' or both 'bank' and 'macro'");
    if (!c.panel_csv.empty() && !c.bank_csv.empty())
        throw ValidationError("config: [input] takes either 'panel' or 'bank' + 'macro', not both");
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto parent = std::filesystem::path(path).parent_path();
    return parse_config(ss.str(), parent.empty() ? "." : parent.string());
}

PanelDataset load_panel(const PipelineConfig& config, std::vector<std::string>* messages) {
    if (!config.panel_csv.empty()) return read_panel_csv(config.panel_csv);
    RatioPanel rp = compute_ratios(read_bank_csv(config.bank_csv), read_macro_csv(config.macro_csv));
    if (messages) {
        for (const auto& r : rp.rejected)
            messages->push_back("rejected record " + r.entity_id + " " + std::to_string(r.period) + " (" + r.field +
                                "): " + r.message);
        for (const auto& w : rp.warnings) messages->push_back(w);
    }
    return rp.panel;
}

std::string specification_choice(const TestResult& f, const TestResult& bplm, const TestResult& hausman) {
    const bool fe = f.defined && f.p_value < kSpecificationLevel;
    const bool re = bplm.defined && bplm.p_value < kSpecificationLevel;
    if (!fe && !re) return "Pooled OLS";
    if (fe && !re) return "Fixed Effect";
    if (!fe && re) return "Random Effect";
    if (hausman.defined && hausman.p_value < kSpecificationLevel) return "Fixed Effect";
    return "Random Effect";
}

Report run_pipeline(const PipelineConfig& config) {
    std::vector<std::string> messages;
    PanelDataset panel = load_panel(config, &messages);
    Report rep = run_pipeline(config, panel);
    if (!messages.empty()) {
        Section s = section("input", "Input");
        s.messages = messages;
        rep.sections.insert(rep.sections.begin(), s);
    }
    return rep;
}

Report run_pipeline(const PipelineConfig& config, const PanelDataset& panel) {
    Report rep;
    rep.title = "Panel estimation report";

    std::vector<std::string> vars;
    for (const auto& m : config.models)
        for (const auto& v : model_variables(m))
            if (std::find(vars.begin(), vars.end(), v) == vars.end()) vars.push_back(v);

    if (wants(config, "describe")) {
        Section s = section("describe", "Descriptive statistics");
        guarded(rep, s, [&] { s.tables.push_back(descriptive_table(describe(panel, vars))); });
        rep.sections.push_back(std::move(s));
    }
    if (wants(config, "correlation")) {
        Section s = section("correlation", "Correlation screening");
        guarded(rep, s, [&] { s.tables.push_back(correlation_table(correlation_matrix(panel, vars))); });
        rep.sections.push_back(std::move(s));
    }
    if (wants(config, "vif")) {
        Section s = section("vif", "Multicollinearity (VIF)");
        for (const auto& m : config.models) {
            auto v = model_variables(m);
            v.erase(v.begin());
            if (v.size() < 2) {
                s.messages.push_back(m.name + ": fewer than 2 regressors, VIF skipped");
                continue;
            }
            guarded(rep, s, [&] {
                Table t = vif_table(vif(panel, v));
                t.title += " - " + m.name;
                s.tables.push_back(std::move(t));
            });
        }
        rep.sections.push_back(std::move(s));
    }
    if (wants(config, "unitroot")) {
        Section s = section("unitroot", "Unit-root battery");
        std::vector<UnitRootReport> reps;
        for (const auto& v : vars) {
            try {
                reps.push_back(fisher_unit_root(panel, v, config.unitroot));
            } catch (const std::exception& ex) {
                s.messages.push_back(v + ": " + ex.what());
            }
        }
        if (!reps.empty()) s.tables.push_back(unit_root_table(reps));
        rep.sections.push_back(std::move(s));
    }

    for (const auto& m : config.models) {
        const std::string id = "model." + m.name;
        std::optional<EstimationResult> pols, fe, re;
        std::optional<TestResult> wooldridge;
        const bool spec_tests = wants(config, "specification") && has_method(m, Method::pols) &&
                                has_method(m, Method::fe) && has_method(m, Method::re);

        Section st = section(id + ".static", "Static estimators - " + m.name);
        std::vector<const EstimationResult*> cols;
        std::vector<std::string> labels;
        if (has_method(m, Method::pols)) {
            // Pooled OLS on the fixed-effects sample keeps the F test well defined.
            const std::size_t min_obs = has_method(m, Method::fe) ? 2 : 1;
            if (guarded(rep, st, [&] { pols = pooled_ols(panel, m.spec, min_obs); })) {
                cols.push_back(&*pols);
                labels.push_back("POLS");
            }
        }
        if (has_method(m, Method::fe) && guarded(rep, st, [&] { fe = fixed_effects(panel, m.spec); })) {
            cols.push_back(&*fe);
            labels.push_back("FEM");
        }
        if (has_method(m, Method::re) && guarded(rep, st, [&] { re = random_effects(panel, m.spec); })) {
            cols.push_back(&*re);
            labels.push_back("REM");
        }
        if (!cols.empty()) st.tables.push_back(estimation_table("Estimation results - " + m.name, labels, cols));
        if (spec_tests) {
            if (pols && fe && re) {
                guarded(rep, st, [&] {
                    TestResult f = f_test_pooled_vs_fe(*pols, *fe);
                    TestResult lm = bp_lm_re_test(*pols, kSpecificationLevel);
                    TestResult h = hausman_test(*fe, *re);
                    Table t = test_table("Specification tests - " + m.name, {f, lm, h});
                    t.rows.push_back({text_cell("Selected model"), text_cell(specification_choice(f, lm, h)),
                                      text_cell(""), text_cell(""), text_cell(""), text_cell("")});
                    t.notes.push_back("specification tests decided at the 1% level");
                    st.tables.push_back(std::move(t));
                });
            } else {
                st.messages.push_back("specification tests skipped: an estimator failed");
            }
        }
        if (!cols.empty() || st.status != SectionStatus::ok || !st.messages.empty()) rep.sections.push_back(st);

        const bool want_ac = wants(config, "autocorrelation"), want_het = wants(config, "heteroskedasticity");
        if (want_ac || want_het) {
            Section s = section(id + ".assumptions", "Assumption tests - " + m.name);
            std::vector<TestResult> tests;
            if (want_ac) guarded(rep, s, [&] { wooldridge = wooldridge_autocorr_test(panel, m.spec, config.level); });
            if (wooldridge) tests.push_back(*wooldridge);
            if (want_het) {
                if (pols) {
                    guarded(rep, s, [&] { tests.push_back(breusch_pagan_het_test(*pols, config.level)); });
                    guarded(rep, s, [&] { tests.push_back(bp_lm_re_test(*pols, config.level)); });
                } else {
                    s.messages.push_back("Breusch-Pagan tests skipped: no pooled OLS fit");
                }
                if (fe)
                    guarded(rep, s, [&] { tests.push_back(modified_wald_groupwise_het(*fe, config.level)); });
                else
                    s.messages.push_back("modified Wald test skipped: no fixed-effects fit");
            }
            if (!tests.empty()) s.tables.push_back(test_table("Autocorrelation and heteroskedasticity - " + m.name, tests));
            rep.sections.push_back(std::move(s));
        }

        if (has_method(m, Method::fgls)) {
            Section s = section(id + ".fgls", "FGLS - " + m.name);
            FglsOptions o;
            const bool ar1 = wooldridge && wooldridge->defined && wooldridge->p_value < config.level;
            o.error_model = ar1 ? FglsErrorModel::groupwise_het_ar1 : FglsErrorModel::groupwise_het;
            guarded(rep, s, [&] {
                EstimationResult r = fgls(panel, m.spec, o);
                Table t = estimation_table("FGLS - " + m.name, {"FGLS"}, {&r});
                t.notes.push_back(std::string("error model: groupwise heteroskedastic") +
                                  (ar1 ? " with common AR(1)" : ""));
                s.tables.push_back(std::move(t));
            });
            rep.sections.push_back(std::move(s));
        }

        if (wants(config, "endogeneity") && !m.endogeneity_suspects.empty()) {
            Section s = section(id + ".endogeneity", "Endogeneity tests - " + m.name);
            Table t;
            t.title = "Durbin-Wu-Hausman tests - " + m.name;
            t.columns = {"Variable", "Durbin chi2", "Prob", "Wu-Hausman F", "Prob", "Result"};
            for (const auto& sus : m.endogeneity_suspects) {
                guarded(rep, s, [&] {
                    EndogeneityTests e = dwh_endogeneity_test(panel, m.spec, sus, m.endogeneity_instruments, config.level);
                    t.rows.push_back({text_cell(sus), number_cell(e.durbin.statistic, "Durbin " + sus),
                                      p_cell(e.durbin.p_value, "Durbin p " + sus),
                                      number_cell(e.wu_hausman.statistic, "Wu-Hausman " + sus),
                                      p_cell(e.wu_hausman.p_value, "Wu-Hausman p " + sus),
                                      text_cell(e.durbin.p_value < config.level || e.wu_hausman.p_value < config.level
                                                    ? "Endo."
                                                    : "Exo.")});
                });
            }
            t.notes.push_back("H0: the variable is exogenous; Durbin chi2(1), Wu-Hausman F(1, n-k-1)");
            if (!t.rows.empty()) s.tables.push_back(std::move(t));
            rep.sections.push_back(std::move(s));
        }

        if (has_method(m, Method::diff_gmm)) {
            Section s = section(id + ".gmm", "Difference GMM - " + m.name);
            guarded(rep, s, [&] {
                EstimationResult r = difference_gmm(panel, m.spec, config.gmm);
                if (wants(config, "gmm_validity")) {
                    std::optional<DifferenceInSargan> dis;
                    const auto& g = gmm_info(r);
                    std::vector<std::size_t> subset = m.dis_iv ? iv_directive_indices(g.plan) : m.dis_subset;
                    if ((m.dis_iv || !m.dis_subset.empty()) && g.sargan && g.sargan->defined) {
                        try {
                            dis = difference_in_sargan(g, subset);
                        } catch (const ValidationError& ex) {
                            s.messages.push_back(std::string("difference-in-Sargan skipped: ") + ex.what());
                        } catch (const NumericalError& ex) {
                            s.messages.push_back(std::string("difference-in-Sargan failed: ") + ex.what());
                        }
                    }
                    s.tables.push_back(gmm_table("Difference GMM - " + m.name, r, dis));
                } else {
                    s.tables.push_back(estimation_table("Difference GMM - " + m.name, {"Difference GMM"}, {&r}));
                }
            });
            rep.sections.push_back(std::move(s));
        }
    }
    return rep;
}

}  // namespace panelgmm
