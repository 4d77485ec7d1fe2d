#include "panelgmm/diagnostics.hpp"

#include "panelgmm/errors.hpp"
#include "panelgmm/linalg.hpp"

#include <boost/math/constants/constants.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace panelgmm {

namespace {

// Consecutive runs of the same entity in an estimation sample.
std::vector<std::pair<std::size_t, std::size_t>> entity_groups(const std::vector<Observation>& sample) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t b = 0;
    for (std::size_t i = 1; i <= sample.size(); ++i)
        if (i == sample.size() || sample[i].entity != sample[b].entity) {
            out.emplace_back(b, i);
            b = i;
        }
    return out;
}

void require_residuals(const EstimationResult& r, const char* what) {
    if (r.residuals.size() == 0 || r.sample.size() != static_cast<std::size_t>(r.residuals.size()))
        throw ValidationError(std::string(what) + ": estimation result carries no residuals");
}

std::vector<TermRef> spec_terms(const ModelSpec& spec) {
    std::vector<TermRef> terms;
    for (int l = 1; l <= spec.dep_lag_order; ++l) terms.push_back({spec.dependent, l});
    for (const auto& r : spec.regressors) terms.push_back(TermRef::parse(r));
    return terms;
}

}  // namespace

TestResult wooldridge_autocorr_test(const PanelDataset& panel, const ModelSpec& spec, double level) {
    spec.validate(panel);
    const auto terms = spec_terms(spec);
    const TermRef dep{spec.dependent, 0};
    const std::string name = "Wooldridge test for autocorrelation";
    const std::string h0 = "no first-order autocorrelation";

    std::vector<Observation> rows;
    std::vector<double> dys;
    std::vector<std::vector<double>> dxs;
    for (std::size_t e = 0; e < panel.entity_count(); ++e)
        for (std::size_t t = 1; t < panel.period_count(); ++t) {
            const double y1 = term_value(panel, dep, e, t), y0 = term_value(panel, dep, e, t - 1);
            if (is_missing(y1) || is_missing(y0)) continue;
            std::vector<double> row;
            bool ok = true;
            for (const auto& term : terms) {
                const double a = term_value(panel, term, e, t), b = term_value(panel, term, e, t - 1);
                if (is_missing(a) || is_missing(b)) {
                    ok = false;
                    break;
                }
                row.push_back(a - b);
            }
            if (!ok) continue;
            rows.push_back({e, t});
            dys.push_back(y1 - y0);
            dxs.push_back(std::move(row));
        }
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto k = static_cast<Eigen::Index>(terms.size());
    if (n <= k) throw ValidationError("wooldridge_autocorr_test: too few differenced rows");
    Eigen::MatrixXd dx(n, k);
    Eigen::VectorXd dy(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        dy(i) = dys[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < k; ++j) dx(i, j) = dxs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    Eigen::VectorXd e = dy;
    if (k > 0) e = least_squares(dx, dy, false, spec.slope_names()).residuals;

    // Residual on its own lag, clustered by entity.
    std::vector<double> cur, lag;
    std::vector<std::size_t> cluster;
    for (Eigen::Index i = 1; i < n; ++i) {
        const auto& a = rows[static_cast<std::size_t>(i)];
        const auto& b = rows[static_cast<std::size_t>(i - 1)];
        if (a.entity == b.entity && a.period == b.period + 1) {
            cur.push_back(e(i));
            lag.push_back(e(i - 1));
            cluster.push_back(a.entity);
        }
    }
    std::set<std::size_t> groups(cluster.begin(), cluster.end());
    const double G = static_cast<double>(groups.size());
    if (groups.size() < 2)
        throw ValidationError("wooldridge_autocorr_test: fewer than 2 entities with 3 or more consecutive observations");
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
        sxx += lag[i] * lag[i];
        sxy += lag[i] * cur[i];
    }
    if (!(sxx > 0.0)) throw NumericalError("wooldridge_autocorr_test: lagged residuals are all zero");
    const double b = sxy / sxx;
    std::map<std::size_t, double> score;
    for (std::size_t i = 0; i < cur.size(); ++i) score[cluster[i]] += lag[i] * (cur[i] - b * lag[i]);
    double meat = 0.0;
    for (const auto& [g, s] : score) meat += s * s;
    // Small-sample factor G/(G-1) only.
    const double adj = G / (G - 1.0);
    const double var = adj * meat / (sxx * sxx);
    const double stat = (b + 0.5) * (b + 0.5) / var;
    TestResult t = make_test(name, stat, DistributionRef::f(1.0, G - 1.0), Tail::upper, h0, level, "Autocorrelation",
                             "No autocorrelation");
    return t;
}

TestResult breusch_pagan_het_test(const EstimationResult& pols, double level) {
    require_residuals(pols, "breusch_pagan_het_test");
    const std::string name = "Breusch-Pagan / Cook-Weisberg test for heteroskedasticity";
    const std::string h0 = "constant variance (homoskedasticity)";
    const Eigen::Index n = pols.residuals.size();
    const double s2 = pols.residuals.squaredNorm() / static_cast<double>(n);
    const Eigen::VectorXd& f = pols.fitted;
    const double fm = f.mean();
    const double sff = (f.array() - fm).square().sum();
    if (!(s2 > 0.0)) return undefined_test(name, DistributionRef::chi_square(1.0), h0, "residuals are all zero");
    if (!(sff > 1e-14 * std::max(1.0, f.squaredNorm())))
        return undefined_test(name, DistributionRef::chi_square(1.0), h0, "fitted values are constant");
    const Eigen::VectorXd g = pols.residuals.array().square() / s2;
    const double gm = g.mean();
    const double sfg = ((f.array() - fm) * (g.array() - gm)).sum();
    const double ess = sfg * sfg / sff;
    return make_test(name, ess / 2.0, DistributionRef::chi_square(1.0), Tail::upper, h0, level, "Heteroskedasticity",
                     "Homoskedasticity");
}

TestResult modified_wald_groupwise_het(const EstimationResult& fe, double level) {
    require_residuals(fe, "modified_wald_groupwise_het");
    const std::string name = "Modified Wald test for groupwise heteroskedasticity";
    const std::string h0 = "sigma_i^2 = sigma^2 for all entities";
    const Eigen::VectorXd& e = fe.residuals;
    const double s2 = e.squaredNorm() / static_cast<double>(e.size());
    double w = 0.0;
    std::size_t used = 0;
    std::vector<std::string> skipped;
    for (const auto& [b, end] : entity_groups(fe.sample)) {
        const auto len = static_cast<Eigen::Index>(end - b);
        const double ti = static_cast<double>(len);
        const Eigen::VectorXd seg = e.segment(static_cast<Eigen::Index>(b), len);
        const std::string id = std::to_string(fe.sample[b].entity);
        if (len < 2) {
            skipped.push_back(id);
            continue;
        }
        const double si2 = seg.squaredNorm() / ti;
        const double vi = (seg.array().square() - si2).square().sum() / (ti * (ti - 1.0));
        if (!(vi > 0.0)) {
            skipped.push_back(id);
            continue;
        }
        w += (si2 - s2) * (si2 - s2) / vi;
        ++used;
    }
    if (used == 0) throw ValidationError("modified_wald_groupwise_het: no entity has a usable residual variance");
    TestResult t = make_test(name, w, DistributionRef::chi_square(static_cast<double>(used)), Tail::upper, h0, level,
                             "Heteroskedasticity", "Homoskedasticity");
    if (!skipped.empty()) {
        t.note = "entities skipped (fewer than 2 residuals or zero variance of squared residuals):";
        for (const auto& s : skipped) t.note += " " + s;
    }
    return t;
}

TestResult bp_lm_re_test(const EstimationResult& pols, double level) {
    require_residuals(pols, "bp_lm_re_test");
    const std::string name = "Breusch-Pagan LM test for random effects";
    const std::string h0 = "var(u_i) = 0 (no entity heterogeneity; pooled OLS adequate)";
    const Eigen::VectorXd& e = pols.residuals;
    double n = 0.0, pairs = 0.0, ssq = 0.0, sum_sq = 0.0;
    for (const auto& [b, end] : entity_groups(pols.sample)) {
        const double ti = static_cast<double>(end - b);
        if (end - b < 2) continue;
        const Eigen::VectorXd seg = e.segment(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(end - b));
        n += ti;
        pairs += ti * (ti - 1.0);
        ssq += seg.squaredNorm();
        sum_sq += seg.sum() * seg.sum();
    }
    if (pairs == 0.0) throw ValidationError("bp_lm_re_test: every entity has a single observation");
    if (!(ssq > 0.0)) return undefined_test(name, DistributionRef::chibar2_01(), h0, "residuals are all zero");
    const double lm1 = std::sqrt(n * n / (2.0 * pairs)) * (sum_sq / ssq - 1.0);
    const double stat = lm1 > 0.0 ? lm1 * lm1 : 0.0;
    return make_test(name, stat, DistributionRef::chibar2_01(), Tail::upper, h0, level, "Random Effect", "Pooled OLS");
}

TestResult hausman_test(const EstimationResult& fe, const EstimationResult& re, double level) {
    const std::string name = "Hausman test FE vs RE";
    const std::string h0 = "no correlation between regressors and random effects";
    if (fe.method != Method::fe || re.method != Method::re)
        throw ValidationError("hausman_test expects a fixed-effects and a random-effects result");
    if (!(fe.sample == re.sample))
        throw ValidationError("hausman_test: fixed and random effects were fitted on different samples");
    std::vector<std::pair<std::size_t, std::size_t>> common;
    for (std::size_t j = 0; j < fe.names.size(); ++j) {
        if (fe.names[j] == "_cons" || is_period_effect(fe.names[j])) continue;
        if (auto i = re.index_of(fe.names[j])) common.emplace_back(j, *i);
    }
    if (common.empty()) throw ValidationError("hausman_test: no common time-varying coefficients");
    const auto q = static_cast<Eigen::Index>(common.size());
    Eigen::VectorXd d(q);
    Eigen::MatrixXd v(q, q);
    for (Eigen::Index a = 0; a < q; ++a) {
        const auto [fa, ra] = common[static_cast<std::size_t>(a)];
        d(a) = fe.coefficients(static_cast<Eigen::Index>(fa)) - re.coefficients(static_cast<Eigen::Index>(ra));
        for (Eigen::Index c = 0; c < q; ++c) {
            const auto [fc, rc] = common[static_cast<std::size_t>(c)];
            v(a, c) = fe.covariance(static_cast<Eigen::Index>(fa), static_cast<Eigen::Index>(fc)) -
                      re.covariance(static_cast<Eigen::Index>(ra), static_cast<Eigen::Index>(rc));
        }
    }
    Eigen::Index rank = 0;
    const Eigen::MatrixXd vinv = symmetric_pinv(v, &rank);
    if (rank == 0)
        return undefined_test(name, DistributionRef::chi_square(static_cast<double>(q)), h0,
                              "V_FE - V_RE has rank 0");
    const double h = d.dot(vinv * d);
    TestResult t = make_test(name, h, DistributionRef::chi_square(static_cast<double>(rank)), Tail::upper, h0, level,
                             "Fixed Effect", "Random Effect");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (v + v.transpose()));
    if (rank < q || es.eigenvalues().minCoeff() <= 0.0)
        t.note = "V_FE - V_RE is not positive definite; generalized inverse of rank " + std::to_string(rank) +
                 " used";
    return t;
}

EndogeneityTests dwh_endogeneity_test(const PanelDataset& panel, const ModelSpec& spec, const std::string& suspected,
                                      const std::vector<std::string>& instruments, double level) {
    spec.validate(panel);
    const std::string target = TermRef::parse(suspected).str();
    const auto slope = spec.slope_names();
    auto pos = std::find(slope.begin(), slope.end(), target);
    if (pos == slope.end())
        throw ValidationError("dwh_endogeneity_test: '" + suspected + "' is not a regressor of the model");
    if (instruments.empty()) throw ValidationError("dwh_endogeneity_test: no excluded instruments given");
    ModelSpec full = spec;
    for (const auto& z : instruments) {
        const std::string zs = TermRef::parse(z).str();
        if (std::find(slope.begin(), slope.end(), zs) != slope.end())
            throw ValidationError("dwh_endogeneity_test: instrument '" + z + "' is already a regressor");
        full.regressors.push_back(z);
    }
    Design d = build_design(panel, full, 1);
    const auto n = static_cast<Eigen::Index>(d.n());
    const auto k = static_cast<Eigen::Index>(slope.size()) + 1;  // + intercept
    const auto nz = static_cast<Eigen::Index>(instruments.size());
    const auto js = static_cast<Eigen::Index>(pos - slope.begin());
    if (n <= k + nz + 1) throw ValidationError("dwh_endogeneity_test: too few complete rows");

    Eigen::MatrixXd x(n, k);
    x.leftCols(k - 1) = d.x.leftCols(k - 1);
    x.col(k - 1).setOnes();
    std::vector<std::string> xnames = slope;
    xnames.push_back("_cons");
    const Eigen::VectorXd target_col = x.col(js);

    // First stage: suspected regressor on the exogenous regressors and instruments.
    Eigen::MatrixXd exo(n, k - 1);
    std::vector<std::string> exo_names;
    for (Eigen::Index j = 0, c = 0; j < k; ++j)
        if (j != js) {
            exo.col(c++) = x.col(j);
            exo_names.push_back(xnames[static_cast<std::size_t>(j)]);
        }
    Eigen::MatrixXd fs(n, k - 1 + nz);
    fs << exo, d.x.rightCols(nz);
    std::vector<std::string> fs_names = exo_names;
    for (const auto& z : instruments) fs_names.push_back(TermRef::parse(z).str());
    const LeastSquaresFit restricted = least_squares(exo, target_col, false, exo_names);
    const LeastSquaresFit first = least_squares(fs, target_col, false, fs_names);
    const double partial = restricted.ssr > 0.0 ? 1.0 - first.ssr / restricted.ssr : 0.0;
    if (!(partial >= 1e-10))
        throw ValidationError("dwh_endogeneity_test: instruments do not explain '" + suspected +
                              "' beyond the exogenous regressors (first stage not identified)");

    const LeastSquaresFit base = least_squares(x, d.y, false, xnames);
    Eigen::MatrixXd xa(n, k + 1);
    xa << x, first.residuals;
    std::vector<std::string> anames = xnames;
    anames.push_back("first_stage_residual");
    const LeastSquaresFit aug = least_squares(xa, d.y, false, anames);
    double drop = base.ssr - aug.ssr;
    if (drop < 0.0) drop = 0.0;

    EndogeneityTests out;
    out.first_stage_partial_r2 = partial;
    const std::string h0 = "'" + target + "' is exogenous";
    const double nn = static_cast<double>(n);
    out.durbin = make_test("Durbin (score) chi2", nn * drop / base.ssr, DistributionRef::chi_square(1.0), Tail::upper,
                           h0, level, "Endo.", "Exo.");
    const double df2 = nn - static_cast<double>(k) - 1.0;
    out.wu_hausman = make_test("Wu-Hausman F", drop / (aug.ssr / df2), DistributionRef::f(1.0, df2), Tail::upper, h0,
                               level, "Endo.", "Exo.");
    return out;
}

double mackinnon_p_value(double tau, AdfDeterministic deterministic) {
    struct Surface {
        double tau_max, tau_min, tau_star;
        double small[3];
        double large[4];
    };
    static constexpr Surface kConstant{2.74, -18.83, -1.61, {2.1659, 1.4412, 0.038269},
                                       {1.7339, 0.93202, -0.12745, -0.010368}};
    static constexpr Surface kTrend{0.7, -16.18, -2.89, {3.2512, 1.6047, 0.049588},
                                    {2.5261, 0.61654, -0.37956, -0.060285}};
    const Surface& s = deterministic == AdfDeterministic::constant ? kConstant : kTrend;
    if (std::isnan(tau)) return kMissing;
    if (tau > s.tau_max) return 1.0;
    if (tau < s.tau_min) return 0.0;
    double z;
    if (tau <= s.tau_star)
        z = s.small[0] + tau * (s.small[1] + tau * s.small[2]);
    else
        z = s.large[0] + tau * (s.large[1] + tau * (s.large[2] + tau * s.large[3]));
    return cdf(DistributionRef::normal(), z);
}

AdfResult adf_test(const std::vector<double>& series, int lags, AdfDeterministic deterministic) {
    if (lags < 0) throw ValidationError("adf_test: lag order must be non-negative");
    for (double v : series)
        if (is_missing(v)) throw ValidationError("adf_test: series contains missing values");
    const auto len = static_cast<Eigen::Index>(series.size());
    const Eigen::Index p = lags;
    const Eigen::Index cols = 2 + p + (deterministic == AdfDeterministic::constant_trend ? 1 : 0);
    const Eigen::Index n = len - 1 - p;
    if (len < p + 4 || n <= cols)
        throw ValidationError("adf_test: series of length " + std::to_string(len) + " is too short for " +
                              std::to_string(lags) + " lags");
    Eigen::MatrixXd x(n, cols);
    Eigen::VectorXd dy(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const Eigen::Index t = r + p + 1;  // index of y_t
        dy(r) = series[static_cast<std::size_t>(t)] - series[static_cast<std::size_t>(t - 1)];
        x(r, 0) = series[static_cast<std::size_t>(t - 1)];
        x(r, 1) = 1.0;
        for (Eigen::Index j = 1; j <= p; ++j)
            x(r, 1 + j) = series[static_cast<std::size_t>(t - j)] - series[static_cast<std::size_t>(t - j - 1)];
        if (deterministic == AdfDeterministic::constant_trend) x(r, cols - 1) = static_cast<double>(t);
    }
    const LeastSquaresFit fit = least_squares(x, dy);
    const double s2 = fit.ssr / static_cast<double>(n - cols);
    AdfResult out;
    out.lags = lags;
    out.n_obs = static_cast<std::size_t>(n);
    const double se = std::sqrt(s2 * fit.xtx_inv(0, 0));
    out.statistic = se > 0.0 ? fit.beta(0) / se : -std::numeric_limits<double>::infinity();
    out.p_value = mackinnon_p_value(out.statistic, deterministic);
    return out;
}

UnitRootReport fisher_combine(std::vector<UnitRootEntity> per_entity, const UnitRootOptions& options) {
    UnitRootReport rep;
    if (per_entity.size() < 2) throw ValidationError("fisher_unit_root: fewer than 2 entities with usable series");
    constexpr double lo = 1e-12, hi = 1.0 - 1e-12;
    const double N = static_cast<double>(per_entity.size());
    double sum_log = 0.0, sum_probit = 0.0, sum_logit = 0.0;
    for (auto& u : per_entity) {
        double p = u.p_value;
        if (!(p >= lo && p <= hi)) {
            rep.warnings.push_back("entity " + u.entity + ": p-value " + std::to_string(p) + " clipped");
            p = std::clamp(std::isnan(p) ? 1.0 : p, lo, hi);
        }
        sum_log += std::log(p);
        sum_probit += quantile(DistributionRef::normal(), p);
        sum_logit += std::log(p / (1.0 - p));
    }
    const double pi = boost::math::constants::pi<double>();
    const std::string h0 = "all panels contain unit roots";
    const double lv = options.level;
    rep.inverse_chi2 = make_test("Inverse chi-squared (P)", -2.0 * sum_log, DistributionRef::chi_square(2.0 * N),
                                 Tail::upper, h0, lv, "reject", "accept");
    rep.inverse_normal = make_test("Inverse normal (Z)", sum_probit / std::sqrt(N), DistributionRef::normal(),
                                   Tail::lower, h0, lv, "reject", "accept");
    const double scale = std::sqrt(3.0 * (5.0 * N + 4.0) / (pi * pi * N * (5.0 * N + 2.0)));
    rep.inverse_logit = make_test("Inverse logit (L*)", scale * sum_logit, DistributionRef::student_t(5.0 * N + 4.0),
                                  Tail::lower, h0, lv, "reject", "accept");
    rep.modified_inverse_chi2 = make_test("Modified inv. chi-squared (Pm)", (-2.0 * sum_log - 2.0 * N) / (2.0 * std::sqrt(N)),
                                          DistributionRef::normal(), Tail::upper, h0, lv, "reject", "accept");
    const bool r1 = rep.inverse_chi2.p_value < lv, r2 = rep.inverse_normal.p_value < lv,
               r3 = rep.inverse_logit.p_value < lv, r4 = rep.modified_inverse_chi2.p_value < lv;
    switch (options.policy) {
        case UnitRootPolicy::all_four: rep.stationary = r1 && r2 && r3 && r4; break;
        case UnitRootPolicy::any: rep.stationary = r1 || r2 || r3 || r4; break;
        case UnitRootPolicy::inverse_chi2: rep.stationary = r1; break;
    }
    rep.decision = rep.stationary ? "Stationary" : "Unit root";
    rep.per_entity = std::move(per_entity);
    return rep;
}

UnitRootReport fisher_unit_root(const PanelDataset& panel, const std::string& variable, const UnitRootOptions& options) {
    const auto& s = panel.series(variable);
    const std::size_t T = panel.period_count();
    std::vector<UnitRootEntity> rows;
    std::vector<std::string> warnings;
    for (std::size_t e = 0; e < panel.entity_count(); ++e) {
        std::size_t best_b = 0, best_len = 0;
        for (std::size_t t = 0; t < T;) {
            if (is_missing(s[e * T + t])) {
                ++t;
                continue;
            }
            std::size_t u = t;
            while (u < T && !is_missing(s[e * T + u])) ++u;
            if (u - t > best_len) {
                best_len = u - t;
                best_b = t;
            }
            t = u;
        }
        std::vector<double> run(s.begin() + static_cast<std::ptrdiff_t>(e * T + best_b),
                                s.begin() + static_cast<std::ptrdiff_t>(e * T + best_b + best_len));
        try {
            AdfResult a = adf_test(run, options.lags, options.deterministic);
            rows.push_back({panel.entities()[e], a.statistic, a.p_value, a.lags});
        } catch (const ValidationError&) {
            warnings.push_back("entity " + panel.entities()[e] + ": series too short for the ADF regression; skipped");
        } catch (const NumericalError&) {
            warnings.push_back("entity " + panel.entities()[e] + ": degenerate ADF regression; skipped");
        }
    }
    UnitRootReport rep = fisher_combine(std::move(rows), options);
    rep.variable = variable;
    rep.warnings.insert(rep.warnings.begin(), warnings.begin(), warnings.end());
    return rep;
}

}  // namespace panelgmm
