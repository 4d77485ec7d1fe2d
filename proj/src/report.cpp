#include "panelgmm/report.hpp"

#include "panelgmm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace panelgmm {

ReportFormat format_from_string(const std::string& s) {
    if (s == "text") return ReportFormat::text;
    if (s == "json") return ReportFormat::json;
    if (s == "csv") return ReportFormat::csv;
    throw ValidationError("unknown output format '" + s + "' (expected text, json, csv)");
}

std::string fmt(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "." : (v > 0 ? "inf" : "-inf");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.7g", v);
    return buf;
}

std::string stars(double p) {
    if (!(p == p)) return "";
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    if (p < 0.10) return "*";
    return "";
}

Cell text_cell(std::string text) { return {std::move(text), std::nullopt, ""}; }

Cell number_cell(double v, std::string provenance) {
    Cell c{fmt(v), std::nullopt, std::move(provenance)};
    if (std::isfinite(v)) c.value = v;
    return c;
}

Cell p_cell(double p, std::string provenance) {
    Cell c{is_missing(p) ? "." : format_p_value(p), std::nullopt, std::move(provenance)};
    if (std::isfinite(p)) c.value = p;
    return c;
}

namespace {

const char* status_name(SectionStatus s) {
    switch (s) {
        case SectionStatus::ok: return "ok";
        case SectionStatus::error: return "error";
        case SectionStatus::skipped: return "skipped";
    }
    return "ok";
}

SectionStatus status_from(const std::string& s) {
    if (s == "ok") return SectionStatus::ok;
    if (s == "error") return SectionStatus::error;
    if (s == "skipped") return SectionStatus::skipped;
    throw ValidationError("unknown section status '" + s + "'");
}

std::string method_label(Method m) {
    switch (m) {
        case Method::pols: return "POLS";
        case Method::fe: return "FEM";
        case Method::re: return "REM";
        case Method::fgls: return "FGLS";
        case Method::diff_gmm: return "Difference GMM";
    }
    return "?";
}

std::string prov(const EstimationResult& r) { return method_label(r.method); }

Cell coef_cell(const EstimationResult& r, std::size_t j) {
    const auto jj = static_cast<Eigen::Index>(j);
    Cell c = number_cell(r.coefficients(jj), prov(r) + " coefficient " + r.names[j]);
    c.text += stars(r.p_values(jj));
    return c;
}

Cell stat_cell(const EstimationResult& r, std::size_t j) {
    const double s = r.stats(static_cast<Eigen::Index>(j));
    Cell c = number_cell(s, prov(r) + (r.z_stats ? " z " : " t ") + r.names[j]);
    c.text = "(" + c.text + ")";
    return c;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

std::string exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

nlohmann::json to_json(const Report& report) {
    using nlohmann::json;
    json j;
    j["title"] = report.title;
    j["exit_code"] = report.exit_code;
    j["sections"] = json::array();
    for (const auto& s : report.sections) {
        json js{{"id", s.id}, {"title", s.title}, {"status", status_name(s.status)}, {"messages", s.messages}};
        js["tables"] = json::array();
        for (const auto& t : s.tables) {
            json jt{{"title", t.title}, {"columns", t.columns}, {"notes", t.notes}};
            jt["rows"] = json::array();
            for (const auto& row : t.rows) {
                json jr = json::array();
                for (const auto& c : row) {
                    json jc{{"text", c.text}, {"provenance", c.provenance}};
                    jc["value"] = c.value ? json(*c.value) : json(nullptr);
                    jr.push_back(jc);
                }
                jt["rows"].push_back(jr);
            }
            js["tables"].push_back(jt);
        }
        j["sections"].push_back(js);
    }
    return j;
}

Report report_from_json(const nlohmann::json& j) {
    Report r;
    try {
        r.title = j.at("title").get<std::string>();
        r.exit_code = j.at("exit_code").get<int>();
        for (const auto& js : j.at("sections")) {
            Section s;
            s.id = js.at("id").get<std::string>();
            s.title = js.at("title").get<std::string>();
            s.status = status_from(js.at("status").get<std::string>());
            s.messages = js.at("messages").get<std::vector<std::string>>();
            for (const auto& jt : js.at("tables")) {
                Table t;
                t.title = jt.at("title").get<std::string>();
                t.columns = jt.at("columns").get<std::vector<std::string>>();
                t.notes = jt.at("notes").get<std::vector<std::string>>();
                for (const auto& jr : jt.at("rows")) {
                    std::vector<Cell> row;
                    for (const auto& jc : jr) {
                        Cell c;
                        c.text = jc.at("text").get<std::string>();
                        c.provenance = jc.at("provenance").get<std::string>();
                        if (!jc.at("value").is_null()) c.value = jc.at("value").get<double>();
                        row.push_back(std::move(c));
                    }
                    t.rows.push_back(std::move(row));
                }
                s.tables.push_back(std::move(t));
            }
            r.sections.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("malformed report JSON: ") + ex.what());
    }
    return r;
}

std::string render_report(const Report& report, ReportFormat format) {
    if (format == ReportFormat::json) return to_json(report).dump(2) + "\n";
    std::ostringstream out;
    if (format == ReportFormat::csv) {
        out << "section,table,row,column,text,value,provenance\n";
        for (const auto& s : report.sections) {
            for (const auto& m : s.messages)
                out << csv_field(s.id) << ",,,," << csv_field(m) << ",," << "\n";
            for (const auto& t : s.tables)
                for (const auto& row : t.rows) {
                    const std::string label = row.empty() ? "" : row.front().text;
                    for (std::size_t c = 0; c < row.size(); ++c) {
                        const std::string col = c < t.columns.size() ? t.columns[c] : std::to_string(c);
                        out << csv_field(s.id) << ',' << csv_field(t.title) << ',' << csv_field(label) << ','
                            << csv_field(col) << ',' << csv_field(row[c].text) << ','
                            << (row[c].value ? exact(*row[c].value) : "") << ',' << csv_field(row[c].provenance)
                            << "\n";
                    }
                }
        }
        return out.str();
    }

    if (!report.title.empty()) out << report.title << "\n" << std::string(report.title.size(), '=') << "\n\n";
    for (const auto& s : report.sections) {
        out << "## " << s.title;
        if (s.status != SectionStatus::ok) out << " [" << status_name(s.status) << "]";
        out << "\n";
        for (const auto& m : s.messages) out << "  ! " << m << "\n";
        for (const auto& t : s.tables) {
            out << "\n" << t.title << "\n";
            std::vector<std::size_t> width(t.columns.size(), 0);
            for (std::size_t c = 0; c < t.columns.size(); ++c) width[c] = t.columns[c].size();
            for (const auto& row : t.rows)
                for (std::size_t c = 0; c < row.size(); ++c) {
                    if (c >= width.size()) width.push_back(0);
                    width[c] = std::max(width[c], row[c].text.size());
                }
            auto line = [&](const std::vector<std::string>& cells) {
                std::string l;
                for (std::size_t c = 0; c < width.size(); ++c) {
                    const std::string v = c < cells.size() ? cells[c] : "";
                    const std::string pad(width[c] - std::min(width[c], v.size()), ' ');
                    if (c > 0) l += "  ";
                    l += c == 0 ? v + pad : pad + v;
                }
                while (!l.empty() && l.back() == ' ') l.pop_back();
                out << l << "\n";
            };
            std::size_t total = 0;
            for (auto w : width) total += w + 2;
            line(t.columns);
            out << std::string(total > 2 ? total - 2 : 0, '-') << "\n";
            for (const auto& row : t.rows) {
                std::vector<std::string> cells;
                for (const auto& c : row) cells.push_back(c.text);
                line(cells);
            }
            for (const auto& n : t.notes) out << "Note: " << n << "\n";
        }
        out << "\n";
    }
    out << "exit status: " << report.exit_code << "\n";
    return out.str();
}

Table estimation_table(const std::string& title, const std::vector<std::string>& column_labels,
                       const std::vector<const EstimationResult*>& results) {
    Table t;
    t.title = title;
    t.columns.push_back("Variable");
    for (const auto& l : column_labels) t.columns.push_back(l);
    std::vector<std::string> names;
    bool period_effects = false;
    for (const auto* r : results)
        for (const auto& n : r->names) {
            if (is_period_effect(n)) {
                period_effects = true;
                continue;
            }
            if (n == "_cons") continue;
            if (std::find(names.begin(), names.end(), n) == names.end()) names.push_back(n);
        }
    names.push_back("_cons");
    for (const auto& n : names) {
        std::vector<Cell> coef{text_cell(n)}, stat{text_cell("")};
        bool any = false;
        for (const auto* r : results) {
            auto j = r->index_of(n);
            if (j) {
                coef.push_back(coef_cell(*r, *j));
                stat.push_back(stat_cell(*r, *j));
                any = true;
            } else {
                coef.push_back(text_cell(""));
                stat.push_back(text_cell(""));
            }
        }
        if (!any) continue;
        t.rows.push_back(coef);
        t.rows.push_back(stat);
    }
    auto row_of = [&](const std::string& label, auto fn) {
        std::vector<Cell> row{text_cell(label)};
        for (const auto* r : results) row.push_back(fn(*r));
        t.rows.push_back(row);
    };
    row_of("Observations", [](const EstimationResult& r) {
        return number_cell(static_cast<double>(r.n_obs), prov(r) + " n_obs");
    });
    row_of("Groups", [](const EstimationResult& r) {
        return number_cell(static_cast<double>(r.n_entities), prov(r) + " n_entities");
    });
    row_of("R-squared", [](const EstimationResult& r) {
        return r.fit.r_squared && r.method != Method::diff_gmm ? number_cell(*r.fit.r_squared, prov(r) + " R2")
                                                               : text_cell("");
    });
    row_of("F / Wald chi2", [](const EstimationResult& r) {
        if (r.fit.f) {
            Cell c = number_cell(r.fit.f->statistic, prov(r) + " F");
            c.text = "F(" + fmt(r.fit.f->df1) + "," + fmt(r.fit.f->df2) + ") = " + c.text;
            return c;
        }
        if (r.fit.wald) {
            Cell c = number_cell(r.fit.wald->statistic, prov(r) + " Wald");
            c.text = "chi2(" + fmt(r.fit.wald->df) + ") = " + c.text;
            return c;
        }
        return text_cell("");
    });
    row_of("Prob", [](const EstimationResult& r) {
        if (r.fit.f) return p_cell(r.fit.f->p_value, prov(r) + " F p-value");
        if (r.fit.wald) return p_cell(r.fit.wald->p_value, prov(r) + " Wald p-value");
        return text_cell("");
    });
    t.notes.push_back("t statistics (POLS, FEM) or z statistics (REM, FGLS, GMM) in parentheses; *** p<0.01, ** p<0.05, * p<0.10");
    if (period_effects) t.notes.push_back("period effects included, coefficients not shown");
    for (const auto* r : results) {
        for (const auto& d : r->dropped_columns)
            t.notes.push_back(prov(*r) + ": " + d + " dropped (collinear)");
        for (const auto& w : r->warnings) t.notes.push_back(prov(*r) + ": " + w);
    }
    return t;
}

Table test_table(const std::string& title, const std::vector<TestResult>& tests) {
    Table t;
    t.title = title;
    t.columns = {"Test", "Statistic", "Distribution", "Prob", "Decision", "H0"};
    for (const auto& r : tests) {
        if (!r.defined) {
            t.rows.push_back({text_cell(r.name), text_cell("."), text_cell(label(r.distribution)), text_cell("."),
                              text_cell("undefined"), text_cell(r.h0)});
            t.notes.push_back(r.name + ": " + r.note);
            continue;
        }
        t.rows.push_back({text_cell(r.name), number_cell(r.statistic, r.name), text_cell(label(r.distribution)),
                          p_cell(r.p_value, r.name + " p-value"), text_cell(r.decision), text_cell(r.h0)});
        if (!r.note.empty()) t.notes.push_back(r.name + ": " + r.note);
    }
    return t;
}

Table gmm_table(const std::string& title, const EstimationResult& r, const std::optional<DifferenceInSargan>& dis) {
    const GmmInfo& g = gmm_info(r);
    Table t;
    t.title = title;
    t.columns = {"", "Difference GMM", "Prob"};
    for (std::size_t j = 0; j < r.names.size(); ++j) {
        t.rows.push_back({text_cell(r.names[j]), coef_cell(r, j),
                          p_cell(r.p_values(static_cast<Eigen::Index>(j)), "GMM p-value " + r.names[j])});
        t.rows.push_back({text_cell(""), stat_cell(r, j), text_cell("")});
    }
    t.rows.push_back({text_cell("No. of group"), number_cell(static_cast<double>(g.group_count), "GMM group_count"),
                      text_cell("")});
    t.rows.push_back({text_cell("No of instruments"),
                      number_cell(static_cast<double>(g.instrument_count), "GMM instrument_count"), text_cell("")});
    std::vector<InstrumentDirective> iv, gm;
    for (const auto& d : g.plan.directives) (d.style == InstrumentStyle::iv ? iv : gm).push_back(d);
    t.rows.push_back({text_cell("Instrument variables (iv)"), text_cell(iv.empty() ? "-" : render_instrument_spec(iv)),
                      text_cell("")});
    t.rows.push_back({text_cell("GMM-type"), text_cell(gm.empty() ? "-" : render_instrument_spec(gm)), text_cell("")});
    auto test_row = [&](const std::string& label, const TestResult& tr, const std::string& prefix) {
        if (!tr.defined) {
            t.rows.push_back({text_cell(label), text_cell("undefined"), text_cell(".")});
            t.notes.push_back(label + ": " + tr.note);
            return;
        }
        Cell c = number_cell(tr.statistic, label);
        c.text = prefix + " = " + c.text;
        t.rows.push_back({text_cell(label), c, p_cell(tr.p_value, label + " p-value")});
    };
    for (std::size_t m = 0; m < g.ar_tests.size(); ++m)
        test_row("Arellano-Bond test for AR(" + std::to_string(m + 1) + ")", g.ar_tests[m], "z");
    if (g.sargan) test_row("Sargan test of overid. restrictions", *g.sargan, label(g.sargan->distribution));
    if (dis) {
        test_row("Sargan test excluding group", dis->excluding_group, label(dis->excluding_group.distribution));
        test_row("Difference (H0 = exogenous)", dis->difference, label(dis->difference.distribution));
    }
    t.notes.push_back(std::string(g.robust ? "robust" : "non-robust") +
                      " one-step difference GMM; z statistics in parentheses; *** p<0.01, ** p<0.05, * p<0.10");
    if (g.plan.lag_depth)
        t.notes.push_back("gmm-style lag depth " + std::to_string(*g.plan.lag_depth) +
                          (g.plan.depth_chosen_automatically ? " (chosen automatically)" : ""));
    for (const auto& w : r.warnings) t.notes.push_back(w);
    for (const auto& d : g.plan.diagnostics) t.notes.push_back(d);
    if (g.plan.rows_lost > 0)
        t.notes.push_back(std::to_string(g.plan.rows_lost) + " differenced rows dropped for missing values");
    return t;
}

Table descriptive_table(const std::vector<DescriptiveRow>& rows) {
    Table t;
    t.title = "Descriptive statistics";
    t.columns = {"Variable", "Obs", "Mean", "Std. Dev.", "Min", "Max"};
    for (const auto& r : rows)
        t.rows.push_back({text_cell(r.variable), number_cell(static_cast<double>(r.n_obs), "describe n_obs"),
                          number_cell(r.mean, "describe mean"), number_cell(r.std_dev, "describe sd"),
                          number_cell(r.min, "describe min"), number_cell(r.max, "describe max")});
    return t;
}

Table correlation_table(const CorrelationReport& c) {
    Table t;
    t.title = "Correlation matrix";
    t.columns.push_back("");
    for (const auto& v : c.variables) t.columns.push_back(v);
    for (std::size_t i = 0; i < c.variables.size(); ++i) {
        std::vector<Cell> row{text_cell(c.variables[i])};
        for (std::size_t j = 0; j < c.variables.size(); ++j) {
            if (j > i) {
                row.push_back(text_cell(""));
                continue;
            }
            const double v = c.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            row.push_back(is_missing(v) ? text_cell("n/a") : number_cell(v, "correlation"));
        }
        t.rows.push_back(row);
    }
    for (const auto& [a, b] : c.high_pairs) t.notes.push_back("|r| > 0.80 between " + a + " and " + b);
    for (const auto& z : c.zero_variance) t.notes.push_back(z + " has zero variance; its correlations are undefined");
    return t;
}

Table vif_table(const VifReport& v) {
    Table t;
    t.title = "Variance inflation factors";
    t.columns = {"Variable", "VIF", "1/VIF"};
    for (const auto& r : v.rows)
        t.rows.push_back({text_cell(r.variable + (r.flagged ? " (!)" : "")), number_cell(r.vif, "vif"),
                          number_cell(r.reciprocal, "vif reciprocal")});
    t.rows.push_back({text_cell("Mean VIF"), number_cell(v.mean_vif, "mean vif"), text_cell("")});
    if (v.any_flagged) t.notes.push_back("VIF > 10.0 indicates multicollinearity");
    return t;
}

Table unit_root_table(const std::vector<UnitRootReport>& reports) {
    Table t;
    t.title = "Fisher-type unit-root tests (ADF)";
    t.columns = {"Variable", "P", "Prob", "Z", "Prob", "L*", "Prob", "Pm", "Prob", "Result"};
    for (const auto& r : reports) {
        std::vector<Cell> row{text_cell(r.variable)};
        for (const TestResult* tr : {&r.inverse_chi2, &r.inverse_normal, &r.inverse_logit, &r.modified_inverse_chi2}) {
            row.push_back(number_cell(tr->statistic, r.variable + " " + tr->name));
            row.push_back(p_cell(tr->p_value, r.variable + " " + tr->name + " p-value"));
        }
        row.push_back(text_cell(r.decision));
        t.rows.push_back(row);
        for (const auto& w : r.warnings) t.notes.push_back(r.variable + ": " + w);
    }
    t.notes.push_back("H0: all panels contain unit roots");
    return t;
}

Table monte_carlo_table(const MonteCarloSummary& mc) {
    Table t;
    t.title = "Monte Carlo: " + mc.estimator + " (" + std::to_string(mc.replications) + " replications, " +
              std::to_string(mc.failures) + " failed)";
    t.columns = {"Quantity", "True", "Mean", "Bias", "RMSE", "Coverage / rejection"};
    for (const auto& c : mc.per_coefficient)
        t.rows.push_back({text_cell(c.name), number_cell(c.true_value, "mc true"), number_cell(c.mean_estimate, "mc mean"),
                          number_cell(c.mean_bias, "mc bias"), number_cell(c.rmse, "mc rmse"),
                          number_cell(c.coverage, "mc coverage")});
    for (const auto& s : mc.per_test)
        t.rows.push_back({text_cell(s.name + " rejection at " + fmt(s.level)), text_cell(""), text_cell(""),
                          text_cell(""), text_cell(""), number_cell(s.rejection_rate, "mc rejection rate")});
    for (std::size_t i = 0; i < mc.failure_messages.size() && i < 5; ++i) t.notes.push_back(mc.failure_messages[i]);
    return t;
}

}  // namespace panelgmm
