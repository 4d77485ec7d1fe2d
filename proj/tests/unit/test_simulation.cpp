#include "panelgmm/errors.hpp"
#include "panelgmm/simulation.hpp"
#include "panelgmm/static_estimators.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace panelgmm;

TEST(Rng, FollowsStandardEngine) {
    // The standard pins the 10000th output of a default-seeded mt19937_64.
    Rng r(5489u);
    std::uint64_t v = 0;
    for (int i = 0; i < 10000; ++i) v = r.next_u64();
    EXPECT_EQ(v, 9981545732273789042ull);
}

TEST(Rng, UniformAndNormalMoments) {
    Rng r(42);
    double su = 0.0, sn = 0.0, sn2 = 0.0, mn = 1.0, mx = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        mn = std::min(mn, u);
        mx = std::max(mx, u);
        su += u;
    }
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        sn += z;
        sn2 += z * z;
    }
    EXPECT_GE(mn, 0.0);
    EXPECT_LT(mx, 1.0);
    EXPECT_NEAR(su / n, 0.5, 0.005);
    EXPECT_NEAR(sn / n, 0.0, 0.01);
    EXPECT_NEAR(sn2 / n, 1.0, 0.015);
}

TEST(Simulation, DeterministicBySeed) {
    DgpConfig c;
    c.seed = 99;
    auto a = simulate_dynamic_panel(c);
    auto b = simulate_dynamic_panel(c);
    EXPECT_TRUE(a == b);
    c.seed = 100;
    EXPECT_FALSE(a == simulate_dynamic_panel(c));
    EXPECT_EQ(a.entity_count(), 100u);
    EXPECT_EQ(a.period_count(), 7u);
    EXPECT_EQ(a.entities().front(), "e1");
    EXPECT_EQ(a.periods().front(), 1);
    EXPECT_EQ(a.series_names(), (std::vector<std::string>{"y", "x1"}));
}

TEST(Simulation, ComponentsReproduceOutcome) {
    DgpConfig c;
    c.n_entities = 5;
    c.n_periods = 6;
    c.theta = {1.0, -0.5};
    c.emit_components = true;
    auto p = simulate_dynamic_panel(c);
    for (std::size_t e = 0; e < 5; ++e)
        for (std::size_t t = 1; t < 6; ++t) {
            const double y = p.value("alpha", e, t) + c.omega * p.value("y", e, t - 1) + p.value("x1", e, t) -
                             0.5 * p.value("x2", e, t) + p.value("eps", e, t);
            EXPECT_NEAR(p.value("y", e, t), y, 1e-12);
        }
}

TEST(Simulation, InvalidConfig) {
    DgpConfig c;
    c.n_entities = 0;
    EXPECT_THROW(simulate_dynamic_panel(c), ValidationError);
    c = DgpConfig{};
    c.omega = 1.0;
    EXPECT_THROW(simulate_dynamic_panel(c), ValidationError);
    c = DgpConfig{};
    c.endogeneity_corr = 1.5;
    EXPECT_THROW(simulate_dynamic_panel(c), ValidationError);
}

TEST(MonteCarlo, SummaryArithmetic) {
    DgpConfig c;
    c.n_entities = 30;
    c.omega = 0.0;
    // pooled OLS on a static model: estimates scatter around theta = 1
    std::map<std::string, double> truth{{"x1", 1.0}};
    auto fn = [](const PanelDataset& p) {
        ModelSpec s;
        s.dependent = "y";
        s.regressors = {"x1"};
        auto r = pooled_ols(p, s);
        McDraw d;
        d.estimates["x1"] = {r.coefficients(0), r.std_errors(0)};
        d.p_values["slope"] = r.p_values(0);
        return d;
    };
    auto a = monte_carlo(c, "pols", fn, truth, 40, 7);
    auto b = monte_carlo(c, "pols", fn, truth, 40, 7);
    EXPECT_EQ(a.replications, 40u);
    EXPECT_EQ(a.failures, 0u);
    EXPECT_DOUBLE_EQ(a.coefficient("x1").mean_estimate, b.coefficient("x1").mean_estimate);
    const auto& x = a.coefficient("x1");
    EXPECT_NEAR(x.mean_bias, x.mean_estimate - 1.0, 1e-12);
    EXPECT_GE(x.rmse, std::fabs(x.mean_bias));
    EXPECT_GE(x.coverage, 0.0);
    EXPECT_LE(x.coverage, 1.0);
    EXPECT_DOUBLE_EQ(a.test("slope").rejection_rate, 1.0);
}

TEST(MonteCarlo, FailuresAreCounted) {
    DgpConfig c;
    c.n_entities = 10;
    auto fn = [](const PanelDataset& p) -> McDraw {
        if (p.value("y", 0, 0) > 0.0) throw NumericalError("planted failure");
        return McDraw{{{"x1", {1.0, 0.1}}}, {}};
    };
    auto s = monte_carlo(c, "x", fn, {{"x1", 1.0}}, 30, 3);
    EXPECT_GT(s.failures, 0u);
    EXPECT_LT(s.failures, 30u);
    EXPECT_EQ(s.failure_messages.size(), s.failures);
    EXPECT_EQ(s.coefficient("x1").draws + s.failures, 30u);
}

TEST(MonteCarlo, GmmTargetRecordsValidityTests) {
    DgpConfig c;
    McTarget t;
    t.method = Method::diff_gmm;
    t.spec.dependent = "y";
    t.spec.dep_lag_order = 1;
    t.spec.regressors = {"x1"};
    t.spec.instruments = parse_instrument_spec("D.(x1)");
    auto s = monte_carlo(c, t, 20, 1);
    EXPECT_EQ(s.failures, 0u);
    EXPECT_NO_THROW(s.test("sargan"));
    EXPECT_NO_THROW(s.test("ar2"));
    EXPECT_NEAR(s.coefficient("L.y").true_value, 0.5, 0.0);
    EXPECT_LT(std::fabs(s.coefficient("L.y").mean_bias), 0.1);
}
