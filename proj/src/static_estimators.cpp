#include "panelgmm/static_estimators.hpp"

#include "panelgmm/errors.hpp"
#include "panelgmm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace panelgmm {

namespace {

constexpr const char* kConst = "_cons";

Eigen::MatrixXd period_dummies(const Design& d, const PanelDataset& panel, std::vector<std::string>& names) {
    std::set<std::size_t> used;
    for (const auto& r : d.rows) used.insert(r.period);
    std::vector<std::size_t> periods(used.begin(), used.end());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.n()),
                                              static_cast<Eigen::Index>(periods.size() > 0 ? periods.size() - 1 : 0));
    for (std::size_t j = 1; j < periods.size(); ++j) {
        names.push_back(kPeriodEffectPrefix + std::to_string(panel.periods()[periods[j]]));
        for (std::size_t i = 0; i < d.n(); ++i)
            if (d.rows[i].period == periods[j]) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j - 1)) = 1.0;
    }
    return m;
}

Eigen::Index numeric_rank(const Eigen::MatrixXd& m) {
    if (m.cols() == 0) return 0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(kRankTolerance);
    return qr.rank();
}

// Appends the columns of `extra` that add rank to `base`; returns names of the rejected ones.
std::vector<std::string> append_independent(Eigen::MatrixXd& base, std::vector<std::string>& names,
                                            const Eigen::MatrixXd& extra, const std::vector<std::string>& extra_names) {
    std::vector<std::string> dropped;
    Eigen::Index rank = numeric_rank(base);
    for (Eigen::Index j = 0; j < extra.cols(); ++j) {
        Eigen::MatrixXd trial(base.rows(), base.cols() + 1);
        trial << base, extra.col(j);
        Eigen::Index r = numeric_rank(trial);
        if (r > rank) {
            base = std::move(trial);
            names.push_back(extra_names[static_cast<std::size_t>(j)]);
            rank = r;
        } else {
            dropped.push_back(extra_names[static_cast<std::size_t>(j)]);
        }
    }
    return dropped;
}

// Wald chi-square for the joint significance of the listed coefficients.
WaldStatistic joint_wald(const Eigen::VectorXd& b, const Eigen::MatrixXd& v, const std::vector<Eigen::Index>& idx) {
    WaldStatistic w;
    const auto q = static_cast<Eigen::Index>(idx.size());
    if (q == 0) return w;
    Eigen::VectorXd bs(q);
    Eigen::MatrixXd vs(q, q);
    for (Eigen::Index a = 0; a < q; ++a) {
        bs(a) = b(idx[a]);
        for (Eigen::Index c = 0; c < q; ++c) vs(a, c) = v(idx[a], idx[c]);
    }
    Eigen::Index rank = 0;
    Eigen::MatrixXd vinv = symmetric_pinv(vs, &rank);
    w.statistic = bs.dot(vinv * bs);
    w.df = static_cast<double>(rank);
    w.p_value = rank > 0 ? sf(DistributionRef::chi_square(w.df), std::max(0.0, w.statistic)) : 1.0;
    return w;
}

std::vector<Eigen::Index> slope_indices(const std::vector<std::string>& names) {
    std::vector<Eigen::Index> idx;
    for (std::size_t j = 0; j < names.size(); ++j)
        if (names[j] != kConst) idx.push_back(static_cast<Eigen::Index>(j));
    return idx;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out(x.rows(), x.cols() + 1);
    out << x, Eigen::VectorXd::Ones(x.rows());
    return out;
}

double total_ss(const Eigen::VectorXd& y, bool centered) {
    if (!centered) return y.squaredNorm();
    return (y.array() - y.mean()).square().sum();
}

void require_rows(const Design& d, Eigen::Index k, const char* method) {
    if (static_cast<Eigen::Index>(d.n()) <= k)
        throw ValidationError(std::string(method) + ": " + std::to_string(d.n()) + " complete rows for " +
                              std::to_string(k) + " parameters");
}

}  // namespace

Eigen::MatrixXd within_transform(const Eigen::MatrixXd& m, const std::vector<std::size_t>& starts) {
    Eigen::MatrixXd out = m;
    for (std::size_t g = 0; g + 1 < starts.size(); ++g) {
        const auto b = static_cast<Eigen::Index>(starts[g]);
        const auto len = static_cast<Eigen::Index>(starts[g + 1] - starts[g]);
        if (len == 0) continue;
        Eigen::RowVectorXd mean = m.middleRows(b, len).colwise().mean();
        out.middleRows(b, len).rowwise() -= mean;
    }
    return out;
}

EstimationResult pooled_ols(const PanelDataset& panel, const ModelSpec& spec, std::size_t min_obs_per_entity) {
    Design d = build_design(panel, spec, min_obs_per_entity);
    EstimationResult r;
    r.method = Method::pols;
    std::vector<std::string> names = d.names;
    Eigen::MatrixXd x = d.x;
    if (spec.include_intercept) {
        x = with_intercept(x);
        names.push_back(kConst);
    }
    // User regressors must be full rank on their own.
    require_rows(d, x.cols(), "pooled_ols");
    (void)least_squares(x, d.y, false, names);
    if (spec.period_fixed) {
        std::vector<std::string> dn;
        Eigen::MatrixXd dm = period_dummies(d, panel, dn);
        r.dropped_columns = append_independent(x, names, dm, dn);
    }
    const auto n = static_cast<Eigen::Index>(d.n());
    const Eigen::Index k = x.cols();
    require_rows(d, k, "pooled_ols");

    LeastSquaresFit fit = least_squares(x, d.y, false, names);
    r.names = names;
    r.coefficients = fit.beta;
    r.fit.ssr = fit.ssr;
    r.fit.df_resid = static_cast<double>(n - k);
    r.fit.sigma2 = fit.ssr / r.fit.df_resid;
    r.covariance = r.fit.sigma2 * fit.xtx_inv;
    const double tss = total_ss(d.y, spec.include_intercept);
    r.fit.r_squared = tss > 0.0 ? 1.0 - fit.ssr / tss : 1.0;

    auto slopes = slope_indices(names);
    if (!slopes.empty()) {
        WaldStatistic w = joint_wald(r.coefficients, r.covariance, slopes);
        FStatistic f;
        f.df1 = w.df;
        f.df2 = r.fit.df_resid;
        f.statistic = w.df > 0 ? w.statistic / w.df : 0.0;
        f.p_value = w.df > 0 ? sf(DistributionRef::f(f.df1, f.df2), std::max(0.0, f.statistic)) : 1.0;
        r.fit.f = f;
    }
    r.n_obs = d.n();
    r.n_entities = d.groups();
    r.sample = d.rows;
    r.residuals = fit.residuals;
    r.fitted = fit.fitted;
    for (const auto& e : d.dropped_entities) r.warnings.push_back("entity " + e + " dropped: too few observations");
    finalize_inference(r);
    return r;
}

EstimationResult fixed_effects(const PanelDataset& panel, const ModelSpec& spec) {
    Design d = build_design(panel, spec, 2);
    if (d.groups() == 0) throw ValidationError("fixed_effects: every entity has fewer than 2 complete observations");
    EstimationResult r;
    r.method = Method::fe;
    for (const auto& e : d.dropped_entities)
        r.warnings.push_back("entity " + e + " dropped: fewer than 2 complete observations");

    std::vector<std::string> names = d.names;
    Eigen::MatrixXd xw = within_transform(d.x, d.entity_start);
    const Eigen::VectorXd yw = within_transform(d.y, d.entity_start);
    (void)least_squares(xw, yw, false, names);
    if (spec.period_fixed) {
        std::vector<std::string> dn;
        Eigen::MatrixXd dm = within_transform(period_dummies(d, panel, dn), d.entity_start);
        r.dropped_columns = append_independent(xw, names, dm, dn);
    }

    const auto n = static_cast<Eigen::Index>(d.n());
    const auto groups = static_cast<Eigen::Index>(d.groups());
    const Eigen::Index k = xw.cols();
    const double df = static_cast<double>(n - groups - k);
    if (df <= 0.0)
        throw ValidationError("fixed_effects: no residual degrees of freedom (n=" + std::to_string(n) +
                              ", N=" + std::to_string(groups) + ", k=" + std::to_string(k) + ")");

    LeastSquaresFit fit = least_squares(xw, yw, false, names);
    r.names = names;
    r.coefficients = fit.beta;
    r.fit.ssr = fit.ssr;
    r.fit.df_resid = df;
    r.fit.sigma2 = fit.ssr / df;
    r.covariance = r.fit.sigma2 * fit.xtx_inv;
    const double tss = yw.squaredNorm();
    r.fit.r_squared = tss > 0.0 ? 1.0 - fit.ssr / tss : 1.0;
    if (k > 0) {
        std::vector<Eigen::Index> all(static_cast<std::size_t>(k));
        for (Eigen::Index j = 0; j < k; ++j) all[static_cast<std::size_t>(j)] = j;
        WaldStatistic w = joint_wald(r.coefficients, r.covariance, all);
        FStatistic f;
        f.df1 = w.df;
        f.df2 = df;
        f.statistic = w.df > 0 ? w.statistic / w.df : 0.0;
        f.p_value = w.df > 0 ? sf(DistributionRef::f(f.df1, f.df2), std::max(0.0, f.statistic)) : 1.0;
        r.fit.f = f;
    }

    // Entity intercepts from the untransformed data (period dummies included).
    Eigen::MatrixXd xfull = d.x;
    if (spec.period_fixed) {
        std::vector<std::string> dn;
        Eigen::MatrixXd dm = period_dummies(d, panel, dn);
        Eigen::MatrixXd kept(d.x.rows(), d.x.cols() + static_cast<Eigen::Index>(names.size() - d.names.size()));
        kept.leftCols(d.x.cols()) = d.x;
        Eigen::Index col = d.x.cols();
        for (std::size_t j = 0; j < dn.size(); ++j)
            if (std::find(names.begin(), names.end(), dn[j]) != names.end())
                kept.col(col++) = dm.col(static_cast<Eigen::Index>(j));
        xfull = kept;
    }
    FixedEffectsInfo info;
    info.dropped_entities = d.dropped_entities;
    Eigen::VectorXd fitted(n);
    for (std::size_t g = 0; g < d.groups(); ++g) {
        const auto b = static_cast<Eigen::Index>(d.entity_start[g]);
        const auto len = static_cast<Eigen::Index>(d.entity_start[g + 1] - d.entity_start[g]);
        const double alpha = d.y.segment(b, len).mean() - xfull.middleRows(b, len).colwise().mean().dot(r.coefficients);
        info.entities.push_back(d.entity_ids[g]);
        info.entity_intercepts.push_back(alpha);
        fitted.segment(b, len) = (xfull.middleRows(b, len) * r.coefficients).array() + alpha;
    }
    r.fe = info;
    r.n_obs = d.n();
    r.n_entities = d.groups();
    r.sample = d.rows;
    r.residuals = fit.residuals;  // within residuals equal y - alpha_i - x'b
    r.fitted = fitted;
    finalize_inference(r);
    return r;
}

EstimationResult random_effects(const PanelDataset& panel, const ModelSpec& spec,
                                const std::optional<VarianceComponents>& injected) {
    Design d = build_design(panel, spec, 2);
    if (d.groups() == 0) throw ValidationError("random_effects: every entity has fewer than 2 complete observations");
    EstimationResult r;
    r.method = Method::re;
    r.z_stats = true;
    for (const auto& e : d.dropped_entities)
        r.warnings.push_back("entity " + e + " dropped: fewer than 2 complete observations");

    const auto n = static_cast<Eigen::Index>(d.n());
    const auto groups = static_cast<Eigen::Index>(d.groups());
    const Eigen::Index k = d.x.cols();

    RandomEffectsInfo info;
    if (injected) {
        info.components = *injected;
    } else {
        // Idiosyncratic variance from the within regression.
        const Eigen::MatrixXd xw = within_transform(d.x, d.entity_start);
        const Eigen::VectorXd yw = within_transform(d.y, d.entity_start);
        LeastSquaresFit within = least_squares(xw, yw, false, d.names);
        const double df_w = static_cast<double>(n - groups - k);
        if (df_w <= 0.0) throw ValidationError("random_effects: no within degrees of freedom");
        info.components.sigma_e2 = within.ssr / df_w;

        // Between regression on entity means.
        const double df_b = static_cast<double>(groups - k - 1);
        if (df_b <= 0.0) {
            info.components.sigma_v2 = 0.0;
            info.floored = true;
            r.warnings.push_back("too few entities for the between regression; sigma_v^2 set to 0");
        } else {
            Eigen::MatrixXd xb(groups, k);
            Eigen::VectorXd yb(groups);
            double inv_t = 0.0;
            for (Eigen::Index g = 0; g < groups; ++g) {
                const auto b = static_cast<Eigen::Index>(d.entity_start[static_cast<std::size_t>(g)]);
                const auto len = static_cast<Eigen::Index>(d.entity_start[static_cast<std::size_t>(g) + 1]) - b;
                xb.row(g) = d.x.middleRows(b, len).colwise().mean();
                yb(g) = d.y.segment(b, len).mean();
                inv_t += 1.0 / static_cast<double>(len);
            }
            const double t_harmonic = static_cast<double>(groups) / inv_t;
            LeastSquaresFit between = least_squares(with_intercept(xb), yb, true);
            const double s2b = between.ssr / df_b;
            info.components.sigma_v2 = s2b - info.components.sigma_e2 / t_harmonic;
            if (info.components.sigma_v2 < 0.0) {
                info.components.sigma_v2 = 0.0;
                info.floored = true;
                r.warnings.push_back("estimated sigma_v^2 negative; floored at 0 (random effects equals pooled OLS)");
            }
        }
    }

    const double se2 = info.components.sigma_e2;
    const double sv2 = info.components.sigma_v2;
    Eigen::MatrixXd xs(n, k + 1);
    Eigen::VectorXd ys(n);
    for (Eigen::Index g = 0; g < groups; ++g) {
        const auto b = static_cast<Eigen::Index>(d.entity_start[static_cast<std::size_t>(g)]);
        const auto len = static_cast<Eigen::Index>(d.entity_start[static_cast<std::size_t>(g) + 1]) - b;
        const double ti = static_cast<double>(len);
        const double theta = (se2 > 0.0) ? 1.0 - std::sqrt(se2 / (ti * sv2 + se2)) : 1.0;
        info.theta.push_back(theta);
        const Eigen::RowVectorXd xm = d.x.middleRows(b, len).colwise().mean();
        const double ym = d.y.segment(b, len).mean();
        xs.block(b, 0, len, k) = d.x.middleRows(b, len).rowwise() - theta * xm;
        xs.block(b, k, len, 1).setConstant(1.0 - theta);
        ys.segment(b, len) = d.y.segment(b, len).array() - theta * ym;
    }

    std::vector<std::string> names = d.names;
    names.push_back(kConst);
    LeastSquaresFit fit = least_squares(xs, ys, false, names);
    r.names = names;
    r.coefficients = fit.beta;
    r.fit.sigma2 = se2;
    r.fit.df_resid = static_cast<double>(n - k - 1);
    r.covariance = se2 * fit.xtx_inv;
    Eigen::MatrixXd x1 = with_intercept(d.x);
    r.fitted = x1 * r.coefficients;
    r.residuals = d.y - r.fitted;
    r.fit.ssr = r.residuals.squaredNorm();
    const double tss = total_ss(d.y, true);
    r.fit.r_squared = tss > 0.0 ? 1.0 - r.fit.ssr / tss : 1.0;
    r.fit.wald = joint_wald(r.coefficients, r.covariance, slope_indices(names));
    r.re = info;
    r.n_obs = d.n();
    r.n_entities = d.groups();
    r.sample = d.rows;
    finalize_inference(r);
    return r;
}

EstimationResult fgls(const PanelDataset& panel, const ModelSpec& spec, const FglsOptions& options) {
    const bool ar1 = options.error_model == FglsErrorModel::groupwise_het_ar1;
    Design d = build_design(panel, spec, ar1 ? 3 : 1);
    if (d.groups() == 0) throw ValidationError("fgls: no usable entities");
    EstimationResult r;
    r.method = Method::fgls;
    r.z_stats = true;
    for (const auto& e : d.dropped_entities)
        r.warnings.push_back("entity " + e + " dropped: fewer than 3 observations for the AR(1) error model");

    std::vector<std::string> names = d.names;
    Eigen::MatrixXd x = d.x;
    if (spec.include_intercept) {
        x = with_intercept(x);
        names.push_back(kConst);
    }
    const auto n = static_cast<Eigen::Index>(d.n());
    const Eigen::Index k = x.cols();
    const std::size_t groups = d.groups();
    require_rows(d, k, "fgls");

    if (options.fixed_sigma2 && options.fixed_sigma2->size() != groups)
        throw ValidationError("fgls: fixed_sigma2 must have one entry per estimation entity");

    auto gls = [&](const std::vector<double>& s2, double rho) {
        Eigen::MatrixXd xt(n, k);
        Eigen::VectorXd yt(n);
        for (std::size_t g = 0; g < groups; ++g) {
            const std::size_t b = d.entity_start[g];
            const std::size_t e = d.entity_start[g + 1];
            const double sd = std::sqrt(s2[g]);
            for (std::size_t i = b; i < e; ++i) {
                const auto ii = static_cast<Eigen::Index>(i);
                if (i == b || rho == 0.0) {
                    xt.row(ii) = x.row(ii) / sd;
                    yt(ii) = d.y(ii) / sd;
                    continue;
                }
                const int gap = static_cast<int>(d.rows[i].period - d.rows[i - 1].period);
                const double rg = std::pow(rho, gap);
                const double scale = sd * std::sqrt(1.0 - rg * rg);
                xt.row(ii) = (x.row(ii) - rg * x.row(ii - 1)) / scale;
                yt(ii) = (d.y(ii) - rg * d.y(ii - 1)) / scale;
            }
        }
        return least_squares(xt, yt, false, names);
    };

    FglsInfo info;
    info.ar1 = ar1;
    Eigen::VectorXd beta = least_squares(x, d.y, false, names).beta;
    std::vector<double> s2(groups, 1.0);
    double rho = 0.0;
    LeastSquaresFit fit;

    auto estimate_components = [&](const Eigen::VectorXd& b) {
        const Eigen::VectorXd e = d.y - x * b;
        for (std::size_t g = 0; g < groups; ++g) {
            const auto start = static_cast<Eigen::Index>(d.entity_start[g]);
            const auto len = static_cast<Eigen::Index>(d.entity_start[g + 1]) - start;
            s2[g] = e.segment(start, len).squaredNorm() / static_cast<double>(len);
        }
        double pos = std::numeric_limits<double>::infinity();
        for (double v : s2)
            if (v > 0.0) pos = std::min(pos, v);
        for (auto& v : s2)
            if (!(v > 0.0)) v = std::isfinite(pos) ? pos : 1.0;
        if (ar1) {
            double num = 0.0, den = 0.0;
            for (std::size_t g = 0; g < groups; ++g)
                for (std::size_t i = d.entity_start[g] + 1; i < d.entity_start[g + 1]; ++i)
                    if (d.rows[i].period == d.rows[i - 1].period + 1) {
                        num += e(static_cast<Eigen::Index>(i)) * e(static_cast<Eigen::Index>(i - 1));
                        den += e(static_cast<Eigen::Index>(i - 1)) * e(static_cast<Eigen::Index>(i - 1));
                    }
            rho = den > 0.0 ? num / den : 0.0;
            if (std::fabs(rho) >= 1.0) {
                rho = rho > 0.0 ? 0.99 : -0.99;
                r.warnings.push_back("estimated AR(1) coefficient outside (-1, 1); clamped to " + std::to_string(rho));
            }
        }
    };

    if (options.fixed_sigma2 || options.fixed_rho) {
        if (!options.fixed_sigma2 || (ar1 && !options.fixed_rho)) estimate_components(beta);
        if (options.fixed_sigma2) s2 = *options.fixed_sigma2;
        if (options.fixed_rho) rho = ar1 ? *options.fixed_rho : 0.0;
        fit = gls(s2, rho);
        info.iterations = 1;
    } else {
        info.converged = false;
        for (int it = 1; it <= options.max_iterations; ++it) {
            estimate_components(beta);
            fit = gls(s2, rho);
            const double change = (fit.beta - beta).cwiseAbs().maxCoeff() / std::max(beta.cwiseAbs().maxCoeff(), 1e-300);
            beta = fit.beta;
            info.iterations = it;
            if (change < options.tolerance) {
                info.converged = true;
                break;
            }
        }
        if (!info.converged)
            r.warnings.push_back("iterations did not converge in " + std::to_string(options.max_iterations) + " iterations");
    }
    info.sigma2 = s2;
    info.rho = rho;

    r.names = names;
    r.coefficients = fit.beta;
    r.covariance = fit.xtx_inv;
    r.fitted = x * r.coefficients;
    r.residuals = d.y - r.fitted;
    r.fit.ssr = r.residuals.squaredNorm();
    r.fit.df_resid = static_cast<double>(n - k);
    r.fit.sigma2 = 1.0;
    r.fit.wald = joint_wald(r.coefficients, r.covariance, slope_indices(names));
    r.fgls = info;
    r.n_obs = d.n();
    r.n_entities = groups;
    r.sample = d.rows;
    finalize_inference(r);
    return r;
}

TestResult f_test_pooled_vs_fe(const EstimationResult& pols, const EstimationResult& fe, double level) {
    if (pols.method != Method::pols || fe.method != Method::fe)
        throw ValidationError("f_test_pooled_vs_fe expects a pooled OLS and a fixed-effects result");
    if (!(pols.sample == fe.sample))
        throw ValidationError("f_test_pooled_vs_fe: pooled OLS and fixed effects were fitted on different samples (" +
                              std::to_string(pols.n_obs) + " vs " + std::to_string(fe.n_obs) +
                              " rows); fit pooled OLS with min_obs_per_entity = 2");
    const double groups = static_cast<double>(fe.n_entities);
    const double df1 = groups - 1.0;
    const double df2 = fe.fit.df_resid;
    const DistributionRef dist = DistributionRef::f(std::max(df1, 1.0), df2);
    const std::string h0 = "no heterogeneity across entities (pooled OLS adequate)";
    if (df1 < 1.0) return undefined_test("F test pooled OLS vs FE", dist, h0, "a single entity has no effects to test");
    double diff = pols.fit.ssr - fe.fit.ssr;
    if (diff < 0.0 && diff > -1e-10 * std::max(1.0, pols.fit.ssr)) diff = 0.0;
    const double stat = (diff / df1) / (fe.fit.ssr / df2);
    return make_test("F test pooled OLS vs FE", stat, dist, Tail::upper, h0, level, "Fixed Effect", "Pooled OLS");
}

}  // namespace panelgmm
