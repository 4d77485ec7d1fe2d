#include "oracles.hpp"
#include "panelgmm/diff_gmm.hpp"
#include "panelgmm/errors.hpp"
#include "panelgmm/simulation.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace panelgmm;

namespace {

ModelSpec dyn_spec(const std::string& inst) {
    ModelSpec s;
    s.dependent = "y";
    s.dep_lag_order = 1;
    s.regressors = {"x1"};
    if (!inst.empty()) s.instruments = parse_instrument_spec(inst);
    return s;
}

PanelDataset sim(std::uint64_t seed, int n, int t) {
    DgpConfig c;
    c.seed = seed;
    c.n_entities = n;
    c.n_periods = t;
    return simulate_dynamic_panel(c);
}

struct Stacked {
    std::vector<oracle::Mat> x, z;
    std::vector<oracle::Vec> y;
    std::size_t cols = 0;
};

// Differenced rows t = 2..T-1 of a balanced panel with instruments D.x1 and,
// uncollapsed, every level y_s with s <= t - 2.
Stacked stack_ab(const PanelDataset& p) {
    const std::size_t T = p.period_count();
    std::vector<std::pair<std::size_t, std::size_t>> cells;  // (row period, source period)
    for (std::size_t t = 2; t < T; ++t)
        for (std::size_t s = 0; s + 2 <= t; ++s) cells.emplace_back(t, s);
    Stacked out;
    out.cols = 1 + cells.size();
    for (std::size_t e = 0; e < p.entity_count(); ++e) {
        oracle::Mat x, z;
        oracle::Vec y;
        auto v = [&](const char* n, std::size_t t) { return static_cast<long double>(p.value(n, e, t)); };
        for (std::size_t t = 2; t < T; ++t) {
            y.push_back(v("y", t) - v("y", t - 1));
            x.push_back({v("y", t - 1) - v("y", t - 2), v("x1", t) - v("x1", t - 1)});
            oracle::Vec zr{v("x1", t) - v("x1", t - 1)};
            for (auto [rt, s] : cells) zr.push_back(rt == t ? v("y", s) : 0.0L);
            z.push_back(zr);
        }
        out.x.push_back(x);
        out.z.push_back(z);
        out.y.push_back(y);
    }
    return out;
}

oracle::Mat mul(const oracle::Mat& a, const oracle::Mat& b) {
    oracle::Mat o(a.size(), oracle::Vec(b[0].size(), 0.0L));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            for (std::size_t j = 0; j < b[0].size(); ++j) o[i][j] += a[i][k] * b[k][j];
    return o;
}

oracle::Mat tr(const oracle::Mat& a) {
    oracle::Mat o(a[0].size(), oracle::Vec(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[0].size(); ++j) o[j][i] = a[i][j];
    return o;
}

oracle::Mat add(oracle::Mat a, const oracle::Mat& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[0].size(); ++j) a[i][j] += b[i][j];
    return a;
}

oracle::Mat col(const oracle::Vec& v) {
    oracle::Mat o;
    for (auto x : v) o.push_back({x});
    return o;
}

}  // namespace

TEST(DiffGmm, FirstDifferenceMarksGaps) {
    auto p = PanelDataset::with_period_range({"a"}, 1, 5);
    p.set_series("v", {1.0, 3.0, kMissing, 4.0, 7.0});
    auto d = first_difference(p, {"v"});
    EXPECT_TRUE(is_missing(d.value("v", 0, 0)));
    EXPECT_DOUBLE_EQ(d.value("v", 0, 1), 2.0);
    EXPECT_TRUE(is_missing(d.value("v", 0, 2)));
    EXPECT_TRUE(is_missing(d.value("v", 0, 3)));
    EXPECT_DOUBLE_EQ(d.value("v", 0, 4), 3.0);
}

TEST(DiffGmm, DifferenceWeighting) {
    auto h = difference_weighting({2, 3, 5});
    EXPECT_DOUBLE_EQ(h(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(h(0, 1), -1.0);
    EXPECT_DOUBLE_EQ(h(1, 2), 0.0);
    EXPECT_DOUBLE_EQ(h(2, 1), 0.0);
}

TEST(DiffGmm, CellEnumerationFivePeriods) {
    auto p = sim(1, 10, 5);
    ModelSpec s;
    s.dependent = "y";
    s.dep_lag_order = 1;
    auto plan = build_instrument_matrix(p, s);
    // brute force: rows t = 2..4 (0-based), one column per level y_s with s <= t - 2
    std::set<std::pair<int, int>> cells;
    for (int t = 0; t < 5; ++t)
        for (int s2 = 0; s2 < 5; ++s2)
            if (t >= 2 && s2 <= t - 2) cells.emplace(t, s2);
    EXPECT_EQ(cells.size(), 6u);
    EXPECT_EQ(plan.realized_column_count, cells.size());
    EXPECT_EQ(plan.row_count(), 30u);
    EXPECT_EQ(plan.group_count, 10u);
    ASSERT_EQ(plan.directives.size(), 1u);
    EXPECT_TRUE(plan.directives[0].implicit);
}

TEST(DiffGmm, CollapseAndDepth) {
    auto p = sim(2, 40, 8);
    ModelSpec s;
    s.dependent = "y";
    s.dep_lag_order = 1;
    GmmOptions o;
    o.collapse_default = true;
    EXPECT_EQ(build_instrument_matrix(p, s, o).realized_column_count, 6u);  // lags 2..7
    o.collapse_default = false;
    o.max_gmm_lag_depth = 2;
    // rows t = 2..7; t = 2 has one lag, the rest two
    EXPECT_EQ(build_instrument_matrix(p, s, o).realized_column_count, 11u);
    o.max_gmm_lag_depth.reset();
    auto full = build_instrument_matrix(p, s, o);
    EXPECT_EQ(full.realized_column_count, 21u);
    EXPECT_FALSE(full.exceeds_group_rule());
}

TEST(DiffGmm, AutoDepthRespectsGroups) {
    auto p = sim(3, 12, 9);
    ModelSpec s;
    s.dependent = "y";
    s.dep_lag_order = 1;
    auto plan = build_instrument_matrix(p, s);
    EXPECT_TRUE(plan.depth_chosen_automatically);
    EXPECT_LE(plan.realized_column_count, plan.group_count);
    ASSERT_TRUE(plan.lag_depth.has_value());
    GmmOptions deeper;
    deeper.max_gmm_lag_depth = *plan.lag_depth + 1;
    auto over = build_instrument_matrix(p, s, deeper);
    EXPECT_GT(over.realized_column_count, over.group_count);
    ASSERT_FALSE(over.warnings.empty());
    EXPECT_NE(over.warnings.back().find(kInstrumentRule), std::string::npos);
    EXPECT_TRUE(plan.warnings.empty());
}

TEST(DiffGmm, OneStepMatchesDirectFormula) {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        auto p = sim(seed, 60, 6);
        auto r = difference_gmm(p, dyn_spec("D.(x1)"), GmmOptions{std::nullopt, false, true});
        const auto& g = gmm_info(r);
        const Stacked st = stack_ab(p);
        ASSERT_EQ(g.instrument_count, st.cols);

        oracle::Mat zhz(st.cols, oracle::Vec(st.cols, 0.0L)), zx(st.cols, oracle::Vec(2, 0.0L));
        oracle::Mat zy(st.cols, oracle::Vec(1, 0.0L));
        for (std::size_t i = 0; i < st.x.size(); ++i) {
            const std::size_t m = st.y[i].size();
            oracle::Mat h(m, oracle::Vec(m, 0.0L));
            for (std::size_t a = 0; a < m; ++a) {
                h[a][a] = 2.0L;
                if (a + 1 < m) h[a][a + 1] = h[a + 1][a] = -1.0L;
            }
            zhz = add(zhz, mul(mul(tr(st.z[i]), h), st.z[i]));
            zx = add(zx, mul(tr(st.z[i]), st.x[i]));
            zy = add(zy, mul(tr(st.z[i]), col(st.y[i])));
        }
        const auto a = oracle::inverse(zhz);
        const auto xza = mul(tr(zx), a);
        const auto minv = oracle::inverse(mul(xza, zx));
        const auto beta = mul(minv, mul(xza, zy));
        EXPECT_LT(oracle::rel_err(r.coefficients(0), beta[0][0]), 1e-8);
        EXPECT_LT(oracle::rel_err(r.coefficients(1), beta[1][0]), 1e-8);

        long double ssr = 0.0L;
        std::size_t n = 0;
        oracle::Mat ze(st.cols, oracle::Vec(1, 0.0L)), omega(st.cols, oracle::Vec(st.cols, 0.0L));
        for (std::size_t i = 0; i < st.x.size(); ++i) {
            oracle::Vec e(st.y[i].size());
            for (std::size_t t = 0; t < e.size(); ++t) {
                e[t] = st.y[i][t] - st.x[i][t][0] * beta[0][0] - st.x[i][t][1] * beta[1][0];
                ssr += e[t] * e[t];
            }
            n += e.size();
            const auto zei = mul(tr(st.z[i]), col(e));
            ze = add(ze, zei);
            omega = add(omega, mul(zei, tr(zei)));
        }
        const long double sigma2 = ssr / (2.0L * (n - 2));
        EXPECT_LT(oracle::rel_err(g.sigma2, sigma2), 1e-8);
        const long double sargan = mul(mul(tr(ze), a), ze)[0][0] / sigma2;
        ASSERT_TRUE(g.sargan.has_value());
        EXPECT_LT(oracle::rel_err(g.sargan->statistic, sargan), 1e-7);
        EXPECT_EQ(g.sargan->distribution, DistributionRef::chi_square(static_cast<double>(st.cols - 2)));

        const auto vrob = mul(mul(mul(mul(minv, xza), omega), tr(xza)), minv);
        EXPECT_LT(oracle::rel_err(r.std_errors(0), std::sqrt(vrob[0][0])), 1e-7);
        EXPECT_LT(oracle::rel_err(r.std_errors(1), std::sqrt(vrob[1][1])), 1e-7);

        auto nr = difference_gmm(p, dyn_spec("D.(x1)"), GmmOptions{std::nullopt, false, false});
        EXPECT_LT(oracle::rel_err(nr.std_errors(0), std::sqrt(sigma2 * minv[0][0])), 1e-7);
    }
}

TEST(DiffGmm, ExactlyIdentifiedIsIv) {
    std::mt19937_64 rng(77);
    for (int inst = 0; inst < 20; ++inst) {
        auto p = sim(rng(), 30 + inst, 5 + inst % 4);
        auto r = difference_gmm(p, dyn_spec("D.(x1) L(2/2).y collapse"));
        oracle::Mat z, x;
        oracle::Vec y;
        for (std::size_t e = 0; e < p.entity_count(); ++e)
            for (std::size_t t = 2; t < p.period_count(); ++t) {
                auto v = [&](const char* n, std::size_t tt) { return static_cast<long double>(p.value(n, e, tt)); };
                y.push_back(v("y", t) - v("y", t - 1));
                x.push_back({v("y", t - 1) - v("y", t - 2), v("x1", t) - v("x1", t - 1)});
                z.push_back({v("x1", t) - v("x1", t - 1), v("y", t - 2)});
            }
        const auto b = oracle::iv_exact(z, x, y);
        EXPECT_LT(oracle::rel_err(r.coefficients(0), b[0]), 1e-9);
        EXPECT_LT(oracle::rel_err(r.coefficients(1), b[1]), 1e-9);
        EXPECT_FALSE(gmm_info(r).sargan->defined);
    }
}

TEST(DiffGmm, UnderIdentifiedThrows) {
    auto p = sim(5, 20, 6);
    EXPECT_THROW(build_instrument_matrix(p, dyn_spec("L(2/2).y collapse")), ValidationError);
}

TEST(DiffGmm, StaticSpecRejected) {
    auto p = sim(5, 20, 6);
    ModelSpec s = dyn_spec("");
    s.dep_lag_order = 0;
    EXPECT_THROW(build_instrument_matrix(p, s), ValidationError);
}

TEST(DiffGmm, UnknownSeriesRejected) {
    auto p = sim(5, 20, 6);
    EXPECT_THROW(build_instrument_matrix(p, dyn_spec("D.(nope)")), ValidationError);
}

TEST(DiffGmm, ImplicitDirectiveOnlyWhenDependentUncovered) {
    auto p = sim(6, 30, 6);
    auto a = build_instrument_matrix(p, dyn_spec("D.(x1)"));
    ASSERT_EQ(a.directives.size(), 2u);
    EXPECT_TRUE(a.directives[1].implicit);
    auto b = build_instrument_matrix(p, dyn_spec("D.(x1) L(2/3).y"));
    EXPECT_EQ(b.directives.size(), 2u);
    EXPECT_FALSE(b.directives[1].implicit);
}

TEST(DiffGmm, RestrictPlanKeepsRows) {
    auto p = sim(7, 40, 6);
    auto plan = build_instrument_matrix(p, dyn_spec("D.(x1)"));
    auto sub = restrict_plan(plan, {1});
    EXPECT_EQ(sub.row_count(), plan.row_count());
    EXPECT_EQ(sub.realized_column_count + 1, plan.realized_column_count);
    EXPECT_EQ(iv_directive_indices(plan), std::vector<std::size_t>{0});
}

TEST(DiffGmm, DifferenceInSarganAddsUp) {
    auto p = sim(8, 80, 6);
    auto r = difference_gmm(p, dyn_spec("D.(x1)"));
    const auto& g = gmm_info(r);
    auto dis = difference_in_sargan(g, iv_directive_indices(g.plan));
    EXPECT_NEAR(dis.difference.statistic, g.sargan->statistic - dis.excluding_group.statistic, 1e-9);
    EXPECT_EQ(dis.difference.distribution, DistributionRef::chi_square(1));
    auto none = difference_in_sargan(g, {});
    EXPECT_DOUBLE_EQ(none.difference.statistic, 0.0);
    EXPECT_DOUBLE_EQ(none.difference.p_value, 1.0);
}

TEST(DiffGmm, ArTestsReported) {
    auto p = sim(9, 100, 7);
    auto r = difference_gmm(p, dyn_spec("D.(x1)"));
    const auto& g = gmm_info(r);
    ASSERT_EQ(g.ar_tests.size(), 2u);
    EXPECT_EQ(g.ar_tests[0].distribution, DistributionRef::normal());
    EXPECT_EQ(g.ar_tests[0].tail, Tail::two_sided);
    // Differenced white noise is MA(1) with correlation -1/2.
    EXPECT_LT(g.ar_tests[0].statistic, -2.0);
}

TEST(DiffGmm, NimStylePlanHasThirteenColumns) {
    std::vector<std::string> ids;
    for (int i = 0; i < 26; ++i) ids.push_back("b" + std::to_string(i));
    auto p = PanelDataset::with_period_range(ids, 1, 10);
    std::mt19937_64 rng(26);
    std::normal_distribution<double> nd;
    for (const char* n : {"nim", "gdp", "size", "inf", "nplr", "car", "llpr"}) {
        std::vector<double> v(260);
        for (auto& c : v) c = nd(rng);
        p.set_series(n, v);
    }
    ModelSpec s;
    s.dependent = "nim";
    s.dep_lag_order = 1;
    s.regressors = {"size", "nplr", "llpr", "car", "gdp", "inf"};
    s.instruments = parse_instrument_spec("D.(L2.nim L2.gdp size inf L.nplr L.car) L.L.llpr");
    auto plan = build_instrument_matrix(p, s);
    EXPECT_EQ(plan.realized_column_count, 13u);
    EXPECT_EQ(plan.group_count, 26u);
    EXPECT_TRUE(plan.warnings.empty());
}
