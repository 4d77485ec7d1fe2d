#include "panelgmm/diff_gmm.hpp"

#include "panelgmm/errors.hpp"
#include "panelgmm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace panelgmm {

PanelDataset first_difference(const PanelDataset& panel, const std::vector<std::string>& variables) {
    PanelDataset out(panel.entities(), panel.periods());
    const std::size_t T = panel.period_count();
    for (const auto& name : variables) {
        const auto& src = panel.series(name);
        std::vector<double> d(src.size(), kMissing);
        for (std::size_t e = 0; e < panel.entity_count(); ++e)
            for (std::size_t t = 1; t < T; ++t) {
                const double a = src[e * T + t], b = src[e * T + t - 1];
                if (!is_missing(a) && !is_missing(b)) d[e * T + t] = a - b;
            }
        out.set_series(name, std::move(d));
    }
    return out;
}

std::size_t InstrumentPlan::row_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.periods.size();
    return n;
}

Eigen::MatrixXd difference_weighting(const std::vector<std::size_t>& periods) {
    const auto n = static_cast<Eigen::Index>(periods.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        h(i, i) = 2.0;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i && (periods[i] + 1 == periods[j] || periods[j] + 1 == periods[i])) h(i, j) = -1.0;
    }
    return h;
}

namespace {

constexpr int kUnbounded = std::numeric_limits<int>::max() / 4;

struct CandidateRow {
    std::size_t period;
    double dy;
    std::vector<double> dx;
    std::vector<double> iv;  // one per iv directive, in directive order
};

double iv_value(const PanelDataset& panel, const InstrumentDirective& d, std::size_t e, std::size_t t) {
    const double v = term_value(panel, {d.base_variable, d.inner_lag}, e, t);
    if (!d.differenced || is_missing(v)) return v;
    const double prev = term_value(panel, {d.base_variable, d.inner_lag + 1}, e, t);
    return is_missing(prev) ? kMissing : v - prev;
}

int lag_upper(const InstrumentDirective& d, std::optional<int> depth) {
    int hi = d.lag_to ? *d.lag_to : kUnbounded;
    if (depth) hi = std::min(hi, d.lag_from + *depth - 1);
    return hi;
}

// (period, lag) for uncollapsed, (-1, lag) for collapsed
using Cell = std::pair<int, int>;

std::string gmm_label(const InstrumentDirective& d, int period_value, int lag, bool collapsed) {
    std::string s = TermRef{d.base_variable, d.inner_lag + lag}.str();
    if (!collapsed) s += "@" + std::to_string(period_value);
    return s;
}

std::string rule_warning(std::size_t columns, std::size_t groups) {
    return "instrument count " + std::to_string(columns) + " exceeds group count " + std::to_string(groups) + ": " +
           kInstrumentRule;
}

}  // namespace

InstrumentPlan build_instrument_matrix(const PanelDataset& panel, const ModelSpec& spec, const GmmOptions& options) {
    spec.validate(panel);
    if (spec.dep_lag_order < 1)
        throw ValidationError("difference GMM needs a lagged dependent variable (dep_lag_order >= 1)");
    require_dynamic_support(panel, {spec.dependent});
    if (options.max_gmm_lag_depth && *options.max_gmm_lag_depth < 1)
        throw ValidationError("max_gmm_lag_depth must be at least 1");

    InstrumentPlan plan;
    plan.parameter_names = spec.slope_names();
    bool covered = false;
    for (auto d : spec.instruments) {
        (void)panel.series(d.base_variable);
        if (d.style == InstrumentStyle::gmm) {
            if (d.lag_from < 1 || (d.lag_to && *d.lag_to < d.lag_from))
                throw ValidationError("invalid gmm lag range in '" + render_directive(d) + "'");
            d.collapsed = d.collapsed || options.collapse_default;
        }
        if (d.base_variable == spec.dependent) covered = true;
        plan.directives.push_back(d);
    }
    if (!covered) {
        InstrumentDirective d;
        d.style = InstrumentStyle::gmm;
        d.base_variable = spec.dependent;
        d.lag_from = 2;
        d.collapsed = options.collapse_default;
        d.implicit = true;
        plan.directives.push_back(d);
    }

    std::vector<TermRef> terms;
    for (int l = 1; l <= spec.dep_lag_order; ++l) terms.push_back({spec.dependent, l});
    for (const auto& r : spec.regressors) terms.push_back(TermRef::parse(r));
    const TermRef dep{spec.dependent, 0};

    std::vector<std::size_t> iv_idx, gmm_idx;
    for (std::size_t j = 0; j < plan.directives.size(); ++j)
        (plan.directives[j].style == InstrumentStyle::iv ? iv_idx : gmm_idx).push_back(j);

    const std::size_t T = panel.period_count();
    const auto& periods = panel.periods();
    std::vector<std::vector<CandidateRow>> candidates(panel.entity_count());
    for (std::size_t e = 0; e < panel.entity_count(); ++e) {
        bool seen = false, gap = false;
        for (std::size_t t = 0; t < T; ++t) {
            const bool obs = panel.observed(spec.dependent, e, t);
            if (obs && seen && t > 0 && !panel.observed(spec.dependent, e, t - 1)) gap = true;
            seen = seen || obs;
        }
        if (gap)
            plan.diagnostics.push_back("entity " + panel.entities()[e] +
                                       ": gap in " + spec.dependent + " breaks differencing across it");
        for (std::size_t t = 1; t < T; ++t) {
            const double y1 = term_value(panel, dep, e, t), y0 = term_value(panel, dep, e, t - 1);
            if (is_missing(y1) || is_missing(y0)) continue;
            CandidateRow row{t, y1 - y0, {}, {}};
            bool ok = true;
            for (const auto& term : terms) {
                const double a = term_value(panel, term, e, t);
                const double b = term_value(panel, term, e, t - 1);
                if (is_missing(a) || is_missing(b)) {
                    ok = false;
                    break;
                }
                row.dx.push_back(a - b);
            }
            for (std::size_t j = 0; ok && j < iv_idx.size(); ++j) {
                const double v = iv_value(panel, plan.directives[iv_idx[j]], e, t);
                if (is_missing(v))
                    ok = false;
                else
                    row.iv.push_back(v);
            }
            if (!ok) {
                ++plan.rows_lost;
                continue;
            }
            candidates[e].push_back(std::move(row));
        }
    }
    for (const auto& c : candidates) plan.group_count += c.empty() ? 0 : 1;
    if (plan.group_count == 0) throw ValidationError("no usable first-differenced rows for difference GMM");

    // Every populated cell, with unbounded depth.
    std::vector<std::set<Cell>> cells(plan.directives.size());
    for (std::size_t j : gmm_idx) {
        const auto& d = plan.directives[j];
        const int hi = lag_upper(d, std::nullopt);
        for (std::size_t e = 0; e < candidates.size(); ++e)
            for (const auto& row : candidates[e]) {
                const int t = static_cast<int>(row.period);
                for (int l = d.lag_from; l <= hi && t - d.inner_lag - l >= 0; ++l)
                    if (panel.observed(d.base_variable, e, static_cast<std::size_t>(t - d.inner_lag - l)))
                        cells[j].insert({d.collapsed ? -1 : t, l});
            }
    }
    auto count_at = [&](std::optional<int> depth) {
        std::size_t n = iv_idx.size();
        for (std::size_t j : gmm_idx) {
            const int hi = lag_upper(plan.directives[j], depth);
            for (const auto& c : cells[j]) n += c.second <= hi ? 1 : 0;
        }
        return n;
    };

    std::optional<int> depth = options.max_gmm_lag_depth;
    if (!options.max_gmm_lag_depth && !gmm_idx.empty()) {
        plan.depth_chosen_automatically = true;
        const std::size_t full = count_at(std::nullopt);
        if (full <= plan.group_count) {
            depth.reset();
        } else {
            depth = 1;
            for (int D = 2; D <= static_cast<int>(T); ++D) {
                if (count_at(D) > plan.group_count) break;
                depth = D;
            }
            if (count_at(1) > plan.group_count)
                plan.warnings.push_back("even a lag depth of 1 leaves more instruments than groups");
        }
    }
    plan.lag_depth = depth;

    // Column layout.
    std::vector<std::map<Cell, Eigen::Index>> col_of(plan.directives.size());
    std::vector<Eigen::Index> iv_col(plan.directives.size(), -1);
    for (std::size_t j = 0; j < plan.directives.size(); ++j) {
        const auto& d = plan.directives[j];
        if (d.style == InstrumentStyle::iv) {
            iv_col[j] = static_cast<Eigen::Index>(plan.columns.size());
            std::string label = render_directive(d);
            plan.columns.push_back({j, -1, 0, d.differenced ? "D." + label : label});
            continue;
        }
        const int hi = lag_upper(d, depth);
        for (const auto& c : cells[j]) {
            if (c.second > hi) continue;
            col_of[j][c] = static_cast<Eigen::Index>(plan.columns.size());
            const int pv = c.first >= 0 ? periods[static_cast<std::size_t>(c.first)] : 0;
            plan.columns.push_back({j, c.first, c.second, gmm_label(d, pv, c.second, d.collapsed)});
        }
    }
    plan.realized_column_count = plan.columns.size();
    const auto L = static_cast<Eigen::Index>(plan.columns.size());
    const auto k = static_cast<Eigen::Index>(terms.size());

    for (std::size_t e = 0; e < candidates.size(); ++e) {
        const auto& rows = candidates[e];
        if (rows.empty()) continue;
        EntityBlock b;
        b.entity = e;
        const auto n = static_cast<Eigen::Index>(rows.size());
        b.dy.resize(n);
        b.dx.resize(n, k);
        b.z = Eigen::MatrixXd::Zero(n, L);
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto& row = rows[static_cast<std::size_t>(r)];
            b.periods.push_back(row.period);
            b.dy(r) = row.dy;
            for (Eigen::Index c = 0; c < k; ++c) b.dx(r, c) = row.dx[static_cast<std::size_t>(c)];
            for (std::size_t q = 0; q < iv_idx.size(); ++q) b.z(r, iv_col[iv_idx[q]]) = row.iv[q];
            const int t = static_cast<int>(row.period);
            for (std::size_t j : gmm_idx) {
                const auto& d = plan.directives[j];
                for (const auto& [cell, col] : col_of[j]) {
                    if (cell.first >= 0 && cell.first != t) continue;
                    const int s = t - d.inner_lag - cell.second;
                    if (s < 0) continue;
                    const double v = panel.value(d.base_variable, e, static_cast<std::size_t>(s));
                    if (!is_missing(v)) b.z(r, col) = v;
                }
            }
        }
        plan.blocks.push_back(std::move(b));
    }

    if (plan.realized_column_count < plan.parameter_names.size())
        throw ValidationError("under-identified: " + std::to_string(plan.realized_column_count) +
                              " instrument columns for " + std::to_string(plan.parameter_names.size()) +
                              " parameters");
    if (plan.exceeds_group_rule()) plan.warnings.push_back(rule_warning(plan.realized_column_count, plan.group_count));
    return plan;
}

InstrumentPlan restrict_plan(const InstrumentPlan& plan, const std::vector<std::size_t>& keep_directives) {
    InstrumentPlan out;
    out.group_count = plan.group_count;
    out.lag_depth = plan.lag_depth;
    out.depth_chosen_automatically = plan.depth_chosen_automatically;
    out.parameter_names = plan.parameter_names;
    out.rows_lost = plan.rows_lost;
    out.diagnostics = plan.diagnostics;
    std::vector<std::size_t> keep = keep_directives;
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    std::map<std::size_t, std::size_t> remap;
    for (std::size_t j : keep) {
        if (j >= plan.directives.size()) throw ValidationError("instrument directive index out of range");
        remap[j] = out.directives.size();
        out.directives.push_back(plan.directives[j]);
    }
    std::vector<Eigen::Index> cols;
    for (std::size_t c = 0; c < plan.columns.size(); ++c) {
        auto it = remap.find(plan.columns[c].directive);
        if (it == remap.end()) continue;
        InstrumentColumn col = plan.columns[c];
        col.directive = it->second;
        out.columns.push_back(col);
        cols.push_back(static_cast<Eigen::Index>(c));
    }
    out.realized_column_count = out.columns.size();
    for (const auto& b : plan.blocks) {
        EntityBlock nb{b.entity, b.periods, b.dy, b.dx, Eigen::MatrixXd(b.z.rows(), static_cast<Eigen::Index>(cols.size()))};
        for (std::size_t c = 0; c < cols.size(); ++c) nb.z.col(static_cast<Eigen::Index>(c)) = b.z.col(cols[c]);
        out.blocks.push_back(std::move(nb));
    }
    if (out.exceeds_group_rule()) out.warnings.push_back(rule_warning(out.realized_column_count, out.group_count));
    return out;
}

std::vector<std::size_t> iv_directive_indices(const InstrumentPlan& plan) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < plan.directives.size(); ++j)
        if (plan.directives[j].style == InstrumentStyle::iv) out.push_back(j);
    return out;
}

namespace {

const char* kSingularHint = "; try collapsing gmm-style instruments or lowering max_gmm_lag_depth";

std::shared_ptr<GmmInfo> fit_one_step(const InstrumentPlan& plan, bool robust) {
    const auto L = static_cast<Eigen::Index>(plan.columns.size());
    const auto k = static_cast<Eigen::Index>(plan.parameter_names.size());
    if (L < k)
        throw ValidationError("under-identified: " + std::to_string(L) + " instrument columns for " +
                              std::to_string(k) + " parameters");
    const std::size_t n = plan.row_count();
    if (n <= static_cast<std::size_t>(k))
        throw ValidationError("difference GMM needs more differenced rows (" + std::to_string(n) +
                              ") than parameters (" + std::to_string(k) + ")");

    auto g = std::make_shared<GmmInfo>();
    g->plan = plan;
    g->robust = robust;
    g->instrument_count = static_cast<std::size_t>(L);
    g->group_count = plan.group_count;
    g->parameter_count = static_cast<std::size_t>(k);

    Eigen::MatrixXd zhz = Eigen::MatrixXd::Zero(L, L);
    Eigen::MatrixXd zx = Eigen::MatrixXd::Zero(L, k);
    Eigen::VectorXd zy = Eigen::VectorXd::Zero(L);
    for (const auto& b : plan.blocks) {
        zhz.noalias() += b.z.transpose() * difference_weighting(b.periods) * b.z;
        zx.noalias() += b.z.transpose() * b.dx;
        zy.noalias() += b.z.transpose() * b.dy;
    }
    try {
        g->weight = spd_inverse(zhz, "instrument weighting block sum Z'HZ");
    } catch (const NumericalError& ex) {
        throw NumericalError(std::string(ex.what()) + kSingularHint);
    }
    const Eigen::MatrixXd xza = zx.transpose() * g->weight;
    const Eigen::MatrixXd m = xza * zx;
    try {
        g->m_inverse = spd_inverse(m, "moment matrix X'Z A Z'X");
    } catch (const NumericalError& ex) {
        throw NumericalError(std::string(ex.what()) + kSingularHint);
    }
    g->zx = zx;
    g->beta = g->m_inverse * (xza * zy);

    double ssr = 0.0;
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(L, L);
    for (const auto& b : plan.blocks) {
        Eigen::VectorXd e = b.dy - b.dx * g->beta;
        ssr += e.squaredNorm();
        const Eigen::VectorXd ze = b.z.transpose() * e;
        omega.noalias() += ze * ze.transpose();
        g->residuals.push_back(std::move(e));
    }
    g->sigma2 = ssr / (2.0 * static_cast<double>(n - static_cast<std::size_t>(k)));
    g->cov_nonrobust = g->sigma2 * g->m_inverse;
    g->cov_robust = g->m_inverse * xza * omega * xza.transpose() * g->m_inverse;
    g->cov_robust = 0.5 * (g->cov_robust + g->cov_robust.transpose()).eval();
    return g;
}

EstimationResult result_from(std::shared_ptr<GmmInfo> g) {
    const InstrumentPlan& plan = g->plan;
    EstimationResult r;
    r.method = Method::diff_gmm;
    r.names = plan.parameter_names;
    r.coefficients = g->beta;
    r.covariance = g->robust ? g->cov_robust : g->cov_nonrobust;
    r.z_stats = true;
    r.n_obs = plan.row_count();
    r.n_entities = plan.group_count;
    r.warnings = plan.warnings;
    const auto n = static_cast<Eigen::Index>(r.n_obs);
    r.residuals.resize(n);
    r.fitted.resize(n);
    Eigen::Index pos = 0;
    double ssr = 0.0;
    for (std::size_t bi = 0; bi < plan.blocks.size(); ++bi) {
        const auto& b = plan.blocks[bi];
        const auto& e = g->residuals[bi];
        for (Eigen::Index i = 0; i < e.size(); ++i, ++pos) {
            r.sample.push_back({b.entity, b.periods[static_cast<std::size_t>(i)]});
            r.residuals(pos) = e(i);
            r.fitted(pos) = b.dy(i) - e(i);
        }
        ssr += e.squaredNorm();
    }
    r.fit.ssr = ssr;
    r.fit.sigma2 = g->sigma2;
    r.fit.df_resid = static_cast<double>(r.n_obs) - static_cast<double>(g->parameter_count);
    finalize_inference(r);

    Eigen::Index rank = 0;
    const Eigen::MatrixXd vinv = symmetric_pinv(r.covariance, &rank);
    if (rank > 0) {
        WaldStatistic w;
        w.statistic = r.coefficients.dot(vinv * r.coefficients);
        w.df = static_cast<double>(rank);
        w.p_value = sf(DistributionRef::chi_square(w.df), std::max(0.0, w.statistic));
        r.fit.wald = w;
    }

    g->sargan = sargan_test(*g);
    g->ar_tests = {ar_test(*g, 1), ar_test(*g, 2)};
    r.gmm = std::move(g);
    return r;
}

}  // namespace

EstimationResult estimate_one_step(const InstrumentPlan& plan, bool robust) {
    return result_from(fit_one_step(plan, robust));
}

EstimationResult estimate_one_step(const PanelDataset& panel, const ModelSpec& spec, const InstrumentPlan& plan,
                                   bool robust) {
    spec.validate(panel);
    if (spec.slope_names() != plan.parameter_names)
        throw ValidationError("instrument plan was built for a different model specification");
    return estimate_one_step(plan, robust);
}

EstimationResult difference_gmm(const PanelDataset& panel, const ModelSpec& spec, const GmmOptions& options) {
    return estimate_one_step(build_instrument_matrix(panel, spec, options), options.robust);
}

const GmmInfo& gmm_info(const EstimationResult& r) {
    if (!r.gmm) throw ValidationError("estimation result carries no GMM information");
    return *r.gmm;
}

namespace {
const char* kSarganH0 = "instrument variables are exogenous";
}

TestResult sargan_test(const GmmInfo& gmm) {
    const long df = static_cast<long>(gmm.instrument_count) - static_cast<long>(gmm.parameter_count);
    const std::string name = "Sargan test of overid. restrictions";
    if (df < 1)
        return undefined_test(name, DistributionRef::chi_square(1.0), kSarganH0,
                              "exactly identified: no over-identifying restrictions to test");
    Eigen::VectorXd ze = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(gmm.instrument_count));
    for (std::size_t bi = 0; bi < gmm.plan.blocks.size(); ++bi)
        ze.noalias() += gmm.plan.blocks[bi].z.transpose() * gmm.residuals[bi];
    const double s = ze.dot(gmm.weight * ze) / gmm.sigma2;
    return make_test(name, s, DistributionRef::chi_square(static_cast<double>(df)), Tail::upper, kSarganH0, 0.05,
                     "reject: instruments not exogenous", "instruments valid");
}

TestResult ar_test(const GmmInfo& gmm, int order) {
    const std::string name = "Arellano-Bond test for AR(" + std::to_string(order) + ") in first differences";
    const std::string h0 = "no autocorrelation of order " + std::to_string(order) + " in differenced residuals";
    if (order < 1) throw ValidationError("AR test order must be at least 1");
    const auto L = static_cast<Eigen::Index>(gmm.instrument_count);
    const auto k = static_cast<Eigen::Index>(gmm.parameter_count);
    const Eigen::MatrixXd& vrob = gmm.cov_robust;

    double d0 = 0.0, d1 = 0.0;
    Eigen::RowVectorXd wx = Eigen::RowVectorXd::Zero(k);
    Eigen::VectorXd zew = Eigen::VectorXd::Zero(L);
    std::size_t overlap = 0;
    for (std::size_t bi = 0; bi < gmm.plan.blocks.size(); ++bi) {
        const auto& b = gmm.plan.blocks[bi];
        const auto& e = gmm.residuals[bi];
        const auto n = static_cast<Eigen::Index>(b.periods.size());
        Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                if (b.periods[static_cast<std::size_t>(j)] + static_cast<std::size_t>(order) ==
                    b.periods[static_cast<std::size_t>(i)]) {
                    w(i) = e(j);
                    ++overlap;
                }
        const double we = w.dot(e);
        d0 += we;
        d1 += we * we;
        wx.noalias() += w.transpose() * b.dx;
        zew.noalias() += b.z.transpose() * e * we;
    }
    if (overlap == 0)
        return undefined_test(name, DistributionRef::normal(), h0,
                              "no residual pairs " + std::to_string(order) + " periods apart");
    const Eigen::MatrixXd xza = gmm.zx.transpose() * gmm.weight;
    const double var = d1 - 2.0 * wx.dot(gmm.m_inverse * (xza * zew)) + wx * vrob * wx.transpose();
    if (!(var > 0.0))
        return undefined_test(name, DistributionRef::normal(), h0, "non-positive variance estimate");
    TestResult t = make_test(name, d0 / std::sqrt(var), DistributionRef::normal(), Tail::two_sided, h0, 0.05,
                             "reject: autocorrelation", "no autocorrelation");
    return t;
}

DifferenceInSargan difference_in_sargan(const GmmInfo& full, const std::vector<std::size_t>& subset) {
    const TestResult s_full = sargan_test(full);
    if (!s_full.defined) throw ValidationError("difference-in-Sargan needs an over-identified full model");
    const double df_full = s_full.distribution.df1;
    const std::string h0 = "instrument subset is exogenous";
    DifferenceInSargan out;

    auto zero_df = [&](std::string name, std::string h) {
        TestResult t;
        t.name = std::move(name);
        t.statistic = 0.0;
        t.distribution = DistributionRef::chi_square(0.0);
        t.tail = Tail::upper;
        t.p_value = 1.0;
        t.h0 = std::move(h);
        t.level = 0.05;
        t.decision = "not rejected";
        t.note = "zero degrees of freedom";
        return t;
    };

    std::set<std::size_t> drop(subset.begin(), subset.end());
    for (std::size_t j : drop)
        if (j >= full.plan.directives.size()) throw ValidationError("instrument directive index out of range");
    if (drop.empty()) {
        out.excluding_group = s_full;
        out.excluding_group.name = "Sargan test excluding group";
        out.difference = zero_df("Difference (H0 = exogenous)", h0);
        return out;
    }
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < full.plan.directives.size(); ++j)
        if (!drop.count(j)) keep.push_back(j);
    const InstrumentPlan restricted = restrict_plan(full.plan, keep);
    if (restricted.realized_column_count < restricted.parameter_names.size())
        throw ValidationError("removing the instrument subset leaves the model under-identified (" +
                              std::to_string(restricted.realized_column_count) + " columns for " +
                              std::to_string(restricted.parameter_names.size()) + " parameters)");
    const auto g = fit_one_step(restricted, full.robust);
    const long df_excl = static_cast<long>(g->instrument_count) - static_cast<long>(g->parameter_count);
    double s_excl = 0.0;
    if (df_excl == 0) {
        out.excluding_group = zero_df("Sargan test excluding group", kSarganH0);
    } else {
        out.excluding_group = sargan_test(*g);
        out.excluding_group.name = "Sargan test excluding group";
        s_excl = out.excluding_group.statistic;
    }
    const double df = df_full - static_cast<double>(df_excl);
    if (df <= 0.0) {
        out.difference = zero_df("Difference (H0 = exogenous)", h0);
        return out;
    }
    out.difference = make_test("Difference (H0 = exogenous)", s_full.statistic - s_excl,
                               DistributionRef::chi_square(df), Tail::upper, h0, 0.05,
                               "reject: subset not exogenous", "subset exogenous");
    return out;
}

}  // namespace panelgmm
