#include "oracles.hpp"
#include "panelgmm/distributions.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace panelgmm;

namespace {

struct Triple {
    DistributionRef dist;
    double stat;
    double p;  // upper tail, scipy 1.x
};

}  // namespace

TEST(Distributions, UpperTailMatchesReferenceValues) {
    const std::vector<Triple> cases{
        {DistributionRef::chi_square(19), 16.69, 0.6108606060429504},
        {DistributionRef::chi_square(19), 14.13, 0.7760609101945902},
        {DistributionRef::chi_square(6), 5.74, 0.45293654003677786},
        {DistributionRef::chi_square(6), 5.66, 0.46233325143060544},
        {DistributionRef::chi_square(1), 5.56, 0.018375414259013713},
        {DistributionRef::chi_square(1), 4.09748, 0.04294718043960292},
        {DistributionRef::f(1, 247), 4.09908, 0.04398262692473024},
        {DistributionRef::f(1, 25), 2.506, 0.12598348318130725},
        {DistributionRef::f(2, 4000), 150.0, 1.5243036752274355e-63},
        {DistributionRef::student_t(30), 1.3, 0.10175047926905845},
        {DistributionRef::chi_square(400), 500.0, 0.00048221275959343273},
        {DistributionRef::chi_square(3), 1e-8, 0.999999999999734},
    };
    for (const auto& c : cases) {
        const double p = sf(c.dist, c.stat);
        EXPECT_NEAR(p / c.p, 1.0, 1e-9) << label(c.dist) << " at " << c.stat;
    }
}

TEST(Distributions, CdfReferenceValues) {
    EXPECT_NEAR(cdf(DistributionRef::student_t(7), -2.1), 0.0369355981064613, 1e-13);
    EXPECT_NEAR(cdf(DistributionRef::chi_square(2.5), 0.3), 0.07586891513210575, 1e-13);
    EXPECT_NEAR(cdf(DistributionRef::f(5, 9), 0.7), 0.36269560801056466, 1e-13);
    EXPECT_NEAR(cdf(DistributionRef::normal(), -8.2) / 1.2019351542735735e-16, 1.0, 1e-9);
}

TEST(Distributions, TwoSidedNormal) {
    const std::vector<std::pair<double, double>> zs{{-3.01, 0.002612476897538935},
                                                    {1.43, 0.15271701907347826},
                                                    {-2.81, 0.004954149997571722},
                                                    {1.64, 0.10100516694820742},
                                                    {-0.97, 0.33204649212705917}};
    for (auto [z, p] : zs) {
        EXPECT_NEAR(two_sided_normal_p(z), p, 1e-14);
        EXPECT_NEAR(tail_probability(DistributionRef::normal(), z, Tail::two_sided), p, 1e-14);
    }
}

TEST(Distributions, QuantileAgreesWithBisection) {
    const std::vector<DistributionRef> ds{DistributionRef::normal(), DistributionRef::chi_square(3),
                                          DistributionRef::chi_square(40), DistributionRef::student_t(12),
                                          DistributionRef::f(3, 17), DistributionRef::f(1, 25)};
    for (const auto& d : ds)
        for (double p : {0.001, 0.01, 0.3, 0.5, 0.9, 0.975, 0.999}) {
            const double lo = d.family == Family::normal || d.family == Family::student_t ? -100.0 : 0.0;
            const double ref = oracle::bisect([&](double x) { return cdf(d, x); }, p, lo, 500.0);
            EXPECT_NEAR(quantile(d, p), ref, 1e-8 * std::max(1.0, std::fabs(ref))) << label(d) << " p=" << p;
        }
    EXPECT_NEAR(quantile(DistributionRef::chi_square(3), 0.95), 7.814727903251179, 1e-10);
    EXPECT_NEAR(quantile(DistributionRef::student_t(12), 0.975), 2.1788128296634177, 1e-10);
    EXPECT_NEAR(quantile(DistributionRef::normal(), 1e-10), -6.361340902404056, 1e-9);
}

TEST(Distributions, QuantileRejectsBoundary) {
    EXPECT_THROW(quantile(DistributionRef::normal(), 0.0), std::domain_error);
    EXPECT_THROW(quantile(DistributionRef::normal(), 1.0), std::domain_error);
    EXPECT_THROW(quantile(DistributionRef::chi_square(2), 1.5), std::domain_error);
}

TEST(Distributions, InvalidDegreesOfFreedom) {
    EXPECT_THROW(sf(DistributionRef::chi_square(0), 1.0), std::invalid_argument);
    EXPECT_THROW(cdf(DistributionRef::f(2, -1), 1.0), std::invalid_argument);
    EXPECT_THROW(validate(DistributionRef::student_t(0)), std::invalid_argument);
}

TEST(Distributions, CdfPlusSurvivalIsOne) {
    for (double x : {0.01, 0.5, 1.0, 3.0, 10.0, 30.0}) {
        for (const auto& d : {DistributionRef::chi_square(4), DistributionRef::f(2, 30), DistributionRef::student_t(5)})
            EXPECT_NEAR(cdf(d, x) + sf(d, x), 1.0, 1e-14);
    }
}

TEST(Distributions, ChiBarMixture) {
    EXPECT_NEAR(chibar2_01_p(2.7), 0.05017412323114527, 1e-14);
    EXPECT_DOUBLE_EQ(chibar2_01_p(0.0), 1.0);
    EXPECT_THROW(chibar2_01_p(-1.0), std::domain_error);
}

TEST(Distributions, Labels) {
    EXPECT_EQ(label(DistributionRef::chi_square(19)), "chi2(19)");
    EXPECT_EQ(label(DistributionRef::f(1, 25)), "F(1,25)");
    EXPECT_EQ(label(DistributionRef::normal()), "z");
    EXPECT_EQ(label(DistributionRef::student_t(223)), "t(223)");
    EXPECT_EQ(label(DistributionRef::chibar2_01()), "chibar2(01)");
}

TEST(Distributions, PValueFormatting) {
    EXPECT_EQ(format_p_value(0.00003), "0.0000");
    EXPECT_EQ(format_p_value(0.6108606), "0.6109");
    EXPECT_EQ(format_p_value(1.0), "1.0000");
}

TEST(Distributions, LowerTailAndExtremes) {
    const auto d = DistributionRef::chi_square(6);
    EXPECT_NEAR(tail_probability(d, 5.74, Tail::lower), 1.0 - 0.45293654003677786, 1e-13);
    EXPECT_THROW(sf(d, std::numeric_limits<double>::infinity()), std::domain_error);
    EXPECT_DOUBLE_EQ(sf(d, 0.0), 1.0);
}
