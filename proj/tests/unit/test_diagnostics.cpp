#include "oracles.hpp"
#include "panelgmm/diagnostics.hpp"
#include "panelgmm/errors.hpp"
#include "panelgmm/static_estimators.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace panelgmm;

namespace {

ModelSpec spec_k(int k) {
    ModelSpec s;
    s.dependent = "y";
    for (int j = 1; j <= k; ++j) s.regressors.push_back("x" + std::to_string(j));
    return s;
}

oracle::Vec ols_resid(const oracle::Mat& x, const oracle::Vec& y) {
    const auto b = oracle::normal_equations(x, y);
    oracle::Vec e(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        e[i] = y[i];
        for (std::size_t j = 0; j < b.size(); ++j) e[i] -= x[i][j] * b[j];
    }
    return e;
}

}  // namespace

TEST(Diagnostics, BreuschPaganMatchesAuxiliaryRegression) {
    std::mt19937_64 rng(1);
    auto p = oracle::random_panel(rng, 15, 6, 2);
    auto po = pooled_ols(p, spec_k(2));
    const auto n = static_cast<std::size_t>(po.residuals.size());
    long double s2 = 0.0L;
    for (std::size_t i = 0; i < n; ++i) s2 += po.residuals(i) * po.residuals(i);
    s2 /= n;
    oracle::Mat x;
    oracle::Vec g;
    long double gm = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        x.push_back({1.0L, po.fitted(i)});
        g.push_back(po.residuals(i) * po.residuals(i) / s2);
        gm += g.back() / n;
    }
    const auto e = ols_resid(x, g);
    long double sst = 0.0L, ssr = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        sst += (g[i] - gm) * (g[i] - gm);
        ssr += e[i] * e[i];
    }
    const double ref = static_cast<double>((sst - ssr) / 2.0L);
    auto t = breusch_pagan_het_test(po);
    EXPECT_NEAR(t.statistic / ref, 1.0, 1e-9);
    EXPECT_EQ(t.distribution, DistributionRef::chi_square(1));
}

TEST(Diagnostics, BpLmBalancedFormula) {
    std::mt19937_64 rng(2);
    auto p = oracle::random_panel(rng, 20, 5, 1);
    auto po = pooled_ols(p, spec_k(1));
    long double ss = 0.0L, sb = 0.0L;
    for (int g = 0; g < 20; ++g) {
        long double s = 0.0L;
        for (int t = 0; t < 5; ++t) {
            s += po.residuals(g * 5 + t);
            ss += po.residuals(g * 5 + t) * po.residuals(g * 5 + t);
        }
        sb += s * s;
    }
    const long double lm1 = std::sqrt(100.0L / (2.0L * 4.0L)) * (sb / ss - 1.0L);
    auto t = bp_lm_re_test(po);
    EXPECT_NEAR(t.statistic, static_cast<double>(lm1 > 0 ? lm1 * lm1 : 0.0L), 1e-9);
    EXPECT_EQ(t.distribution, DistributionRef::chibar2_01());
    // random_panel plants entity effects
    EXPECT_EQ(t.decision, "Random Effect");
}

TEST(Diagnostics, BpLmOneSidedTruncation) {
    // Residual sums per entity are zero: LM1 < 0, statistic 0, p = 1.
    auto p = PanelDataset::with_period_range({"a", "b", "c"}, 1, 4);
    p.set_series("y", {1, -1, 2, -2, 3, -3, 1, -1, 2, -2, 0.5, -0.5});
    p.set_series("x1", {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1.0001});
    auto po = pooled_ols(p, spec_k(0));
    auto t = bp_lm_re_test(po);
    EXPECT_DOUBLE_EQ(t.statistic, 0.0);
    EXPECT_DOUBLE_EQ(t.p_value, 1.0);
    EXPECT_EQ(t.decision, "Pooled OLS");
}

TEST(Diagnostics, ModifiedWaldFormula) {
    std::mt19937_64 rng(3);
    auto p = oracle::random_panel(rng, 10, 8, 2);
    auto fe = fixed_effects(p, spec_k(2));
    long double s2 = 0.0L;
    const auto n = fe.residuals.size();
    for (Eigen::Index i = 0; i < n; ++i) s2 += fe.residuals(i) * fe.residuals(i);
    s2 /= n;
    long double w = 0.0L;
    for (int g = 0; g < 10; ++g) {
        long double si = 0.0L;
        for (int t = 0; t < 8; ++t) si += fe.residuals(g * 8 + t) * fe.residuals(g * 8 + t) / 8.0L;
        long double v = 0.0L;
        for (int t = 0; t < 8; ++t) {
            const long double d = fe.residuals(g * 8 + t) * fe.residuals(g * 8 + t) - si;
            v += d * d;
        }
        v /= 8.0L * 7.0L;
        w += (si - s2) * (si - s2) / v;
    }
    auto t = modified_wald_groupwise_het(fe);
    EXPECT_NEAR(t.statistic / static_cast<double>(w), 1.0, 1e-9);
    EXPECT_EQ(t.distribution, DistributionRef::chi_square(10));
}

TEST(Diagnostics, HausmanQuadraticForm) {
    std::mt19937_64 rng(4);
    auto p = oracle::random_panel(rng, 40, 5, 2);
    auto fe = fixed_effects(p, spec_k(2));
    auto re = random_effects(p, spec_k(2));
    oracle::Mat v(2, oracle::Vec(2));
    oracle::Vec d(2);
    for (int a = 0; a < 2; ++a) {
        d[a] = fe.coefficients(a) - re.coefficients(a);
        for (int b = 0; b < 2; ++b) v[a][b] = fe.covariance(a, b) - re.covariance(a, b);
    }
    const auto vi = oracle::inverse(v);
    long double h = 0.0L;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) h += d[a] * vi[a][b] * d[b];
    auto t = hausman_test(fe, re);
    if (t.note.empty()) {
        EXPECT_NEAR(t.statistic / static_cast<double>(h), 1.0, 1e-7);
        EXPECT_EQ(t.distribution, DistributionRef::chi_square(2));
    }
    // random_panel correlates x with the entity effect
    EXPECT_EQ(t.decision, "Fixed Effect");
}

TEST(Diagnostics, WooldridgeByHand) {
    std::mt19937_64 rng(5);
    auto p = oracle::random_panel(rng, 25, 6, 1);
    // differenced regression without constant
    oracle::Mat dx;
    oracle::Vec dy;
    std::vector<int> ent;
    for (int g = 0; g < 25; ++g)
        for (int t = 1; t < 6; ++t) {
            dx.push_back({p.value("x1", g, t) - p.value("x1", g, t - 1)});
            dy.push_back(p.value("y", g, t) - p.value("y", g, t - 1));
            ent.push_back(g);
        }
    const auto e = ols_resid(dx, dy);
    long double sxx = 0.0L, sxy = 0.0L;
    for (std::size_t i = 1; i < e.size(); ++i)
        if (ent[i] == ent[i - 1]) {
            sxx += e[i - 1] * e[i - 1];
            sxy += e[i - 1] * e[i];
        }
    const long double b = sxy / sxx;
    std::map<int, long double> score;
    for (std::size_t i = 1; i < e.size(); ++i)
        if (ent[i] == ent[i - 1]) score[ent[i]] += e[i - 1] * (e[i] - b * e[i - 1]);
    long double meat = 0.0L;
    for (auto& [g, s] : score) meat += s * s;
    const long double var = 25.0L / 24.0L * meat / (sxx * sxx);
    const long double f = (b + 0.5L) * (b + 0.5L) / var;
    auto t = wooldridge_autocorr_test(p, spec_k(1));
    EXPECT_NEAR(t.statistic / static_cast<double>(f), 1.0, 1e-9);
    EXPECT_EQ(t.distribution, DistributionRef::f(1, 24));
}

TEST(Diagnostics, DurbinWuHausmanControlFunction) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> nd;
    auto p = PanelDataset::with_period_range({"a", "b", "c", "d", "e"}, 1, 40);
    std::vector<double> y(200), x(200), z(200), w(200);
    for (int i = 0; i < 200; ++i) {
        z[i] = nd(rng);
        w[i] = nd(rng);
        const double u = nd(rng);
        x[i] = 0.8 * z[i] + 0.6 * u + 0.3 * nd(rng);
        y[i] = 1.0 + x[i] + 0.5 * w[i] + u;
    }
    p.set_series("y", y);
    p.set_series("x1", x);
    p.set_series("x2", w);
    p.set_series("z", z);
    oracle::Mat fs, base;
    oracle::Vec xv, yv;
    for (int i = 0; i < 200; ++i) {
        fs.push_back({w[i], 1.0L, z[i]});
        base.push_back({x[i], w[i], 1.0L});
        xv.push_back(x[i]);
        yv.push_back(y[i]);
    }
    const auto v = ols_resid(fs, xv);
    oracle::Mat aug = base;
    for (int i = 0; i < 200; ++i) aug[i].push_back(v[i]);
    long double ssr_b = 0.0L, ssr_a = 0.0L;
    for (auto r : ols_resid(base, yv)) ssr_b += r * r;
    for (auto r : ols_resid(aug, yv)) ssr_a += r * r;
    auto t = dwh_endogeneity_test(p, spec_k(2), "x1", {"z"});
    EXPECT_NEAR(t.durbin.statistic / static_cast<double>(200.0L * (ssr_b - ssr_a) / ssr_b), 1.0, 1e-9);
    EXPECT_NEAR(t.wu_hausman.statistic / static_cast<double>((ssr_b - ssr_a) / (ssr_a / (200 - 3 - 1))), 1.0, 1e-9);
    EXPECT_EQ(t.wu_hausman.distribution, DistributionRef::f(1, 196));
    EXPECT_EQ(t.durbin.decision, "Endo.");
    EXPECT_THROW(dwh_endogeneity_test(p, spec_k(2), "z", {"x2"}), ValidationError);
}

TEST(Diagnostics, DwhWeakFirstStage) {
    auto p = PanelDataset::with_period_range({"a", "b"}, 1, 6);
    p.set_series("y", {1, 2, 3, 2, 1, 5, 3, 2, 6, 1, 2, 4});
    p.set_series("x1", {1, 3, 2, 4, 3, 5, 1, 2, 3, 2, 6, 1});
    p.set_series("z", {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
    p.set_series("c", {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1});
    EXPECT_THROW(dwh_endogeneity_test(p, spec_k(1), "x1", {"z"}), std::exception);
}

TEST(Diagnostics, MacKinnonReferenceValues) {
    // statsmodels mackinnonp, N = 1
    EXPECT_NEAR(mackinnon_p_value(-2.8621, AdfDeterministic::constant), 0.049936096264282435, 1e-10);
    EXPECT_NEAR(mackinnon_p_value(-3.4336, AdfDeterministic::constant), 0.009865407195009288, 1e-10);
    EXPECT_NEAR(mackinnon_p_value(-1.0, AdfDeterministic::constant), 0.7532643012005655, 1e-10);
    EXPECT_NEAR(mackinnon_p_value(0.5, AdfDeterministic::constant), 0.9848730963065522, 1e-10);
    EXPECT_NEAR(mackinnon_p_value(-5.0, AdfDeterministic::constant), 2.2193154713956276e-05, 1e-12);
    EXPECT_DOUBLE_EQ(mackinnon_p_value(3.0, AdfDeterministic::constant), 1.0);
    EXPECT_DOUBLE_EQ(mackinnon_p_value(-20.0, AdfDeterministic::constant), 0.0);
    EXPECT_NEAR(mackinnon_p_value(-3.4126, AdfDeterministic::constant_trend), 0.0497271069283874, 1e-10);
    EXPECT_NEAR(mackinnon_p_value(-3.9638, AdfDeterministic::constant_trend), 0.009892574239029402, 1e-10);
    EXPECT_NEAR(mackinnon_p_value(-1.0, AdfDeterministic::constant_trend), 0.9441147109023218, 1e-10);
    EXPECT_NEAR(mackinnon_p_value(-6.0, AdfDeterministic::constant_trend), 2.1968599946249723e-06, 1e-12);
}

TEST(Diagnostics, AdfRegressionByHand) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    std::vector<double> s{0.0};
    for (int t = 1; t < 60; ++t) s.push_back(0.6 * s.back() + nd(rng));
    for (auto det : {AdfDeterministic::constant, AdfDeterministic::constant_trend}) {
        oracle::Mat x;
        oracle::Vec dy;
        for (std::size_t t = 2; t < s.size(); ++t) {
            oracle::Vec r{s[t - 1], 1.0L, s[t - 1] - s[t - 2]};
            if (det == AdfDeterministic::constant_trend) r.push_back(static_cast<long double>(t));
            x.push_back(r);
            dy.push_back(s[t] - s[t - 1]);
        }
        const auto b = oracle::normal_equations(x, dy);
        const auto e = ols_resid(x, dy);
        long double ssr = 0.0L;
        for (auto v : e) ssr += v * v;
        const auto inv = oracle::inverse(oracle::transpose_times(x, x));
        const long double tau = b[0] / std::sqrt(ssr / (x.size() - b.size()) * inv[0][0]);
        auto r = adf_test(s, 1, det);
        EXPECT_NEAR(r.statistic / static_cast<double>(tau), 1.0, 1e-9);
        EXPECT_EQ(r.n_obs, 58u);
    }
    EXPECT_THROW(adf_test({1.0, 2.0, 3.0, 4.0}, 1), ValidationError);
}

TEST(Diagnostics, FisherCombinations) {
    std::vector<UnitRootEntity> ents;
    const std::vector<double> ps{0.01, 0.2, 0.5, 0.03, 0.9};
    for (std::size_t i = 0; i < ps.size(); ++i) ents.push_back({"e" + std::to_string(i), -1.0, ps[i], 1});
    auto r = fisher_combine(ents);
    long double sl = 0.0L, sp = 0.0L, sg = 0.0L;
    for (double p : ps) {
        sl += std::log(static_cast<long double>(p));
        sp += quantile(DistributionRef::normal(), p);
        sg += std::log(static_cast<long double>(p) / (1.0L - p));
    }
    const double N = 5.0, pi = 3.14159265358979323846;
    EXPECT_NEAR(r.inverse_chi2.statistic, static_cast<double>(-2.0L * sl), 1e-12);
    EXPECT_EQ(r.inverse_chi2.distribution, DistributionRef::chi_square(10));
    EXPECT_NEAR(r.inverse_normal.statistic, static_cast<double>(sp) / std::sqrt(N), 1e-12);
    EXPECT_NEAR(r.inverse_logit.statistic,
                std::sqrt(3.0 * (5 * N + 4) / (pi * pi * N * (5 * N + 2))) * static_cast<double>(sg), 1e-12);
    EXPECT_NEAR(r.modified_inverse_chi2.statistic, (static_cast<double>(-2.0L * sl) - 2 * N) / (2 * std::sqrt(N)), 1e-12);
}

TEST(Diagnostics, FisherClipsDegeneratePValues) {
    std::vector<UnitRootEntity> ones{{"a", 0, 1.0, 1}, {"b", 0, 1.0, 1}, {"c", 0, 1.0, 1}};
    auto r = fisher_combine(ones);
    EXPECT_EQ(r.warnings.size(), 3u);
    EXPECT_NEAR(r.inverse_chi2.statistic, 0.0, 1e-10);
    EXPECT_NEAR(r.inverse_chi2.p_value, 1.0, 1e-10);
    EXPECT_FALSE(r.stationary);
    std::vector<UnitRootEntity> zeros{{"a", 0, 0.0, 1}, {"b", 0, 0.0, 1}};
    auto z = fisher_combine(zeros);
    EXPECT_TRUE(std::isfinite(z.inverse_chi2.statistic));
    EXPECT_TRUE(z.stationary);
    EXPECT_THROW(fisher_combine({{"a", 0, 0.5, 1}}), ValidationError);
}

TEST(Diagnostics, FisherPolicies) {
    std::vector<UnitRootEntity> ents;
    for (double p : {0.001, 0.6, 0.7, 0.8}) ents.push_back({"e", 0, p, 1});
    UnitRootOptions o;
    o.policy = UnitRootPolicy::any;
    const bool any = fisher_combine(ents, o).stationary;
    o.policy = UnitRootPolicy::all_four;
    const bool all = fisher_combine(ents, o).stationary;
    EXPECT_TRUE(any || !all);
    EXPECT_FALSE(all && !any);
}

TEST(Diagnostics, UnitRootUsesLongestRun) {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> nd;
    auto p = PanelDataset::with_period_range({"a", "b", "c"}, 1, 30);
    std::vector<double> v(90);
    for (auto& c : v) c = nd(rng);
    v[5] = kMissing;
    p.set_series("s", v);
    auto r = fisher_unit_root(p, "s");
    ASSERT_EQ(r.per_entity.size(), 3u);
    const std::vector<double> run(v.begin() + 6, v.begin() + 30);
    EXPECT_DOUBLE_EQ(r.per_entity[0].adf_stat, adf_test(run, 1).statistic);
}
