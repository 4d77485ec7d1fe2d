#pragma once

#include <string>

namespace panelgmm {

// Reference distributions used by every estimator and test in the library.
enum class Family { normal, chi_square, student_t, f, chibar2_01 };

struct DistributionRef {
    Family family = Family::normal;
    double df1 = 0.0;  // unused for normal and chibar2_01
    double df2 = 0.0;  // f only

    static DistributionRef normal() { return {Family::normal, 0.0, 0.0}; }
    static DistributionRef chi_square(double df) { return {Family::chi_square, df, 0.0}; }
    static DistributionRef student_t(double df) { return {Family::student_t, df, 0.0}; }
    static DistributionRef f(double df1, double df2) { return {Family::f, df1, df2}; }
    static DistributionRef chibar2_01() { return {Family::chibar2_01, 0.0, 0.0}; }

    bool operator==(const DistributionRef&) const = default;
};

// Which tail of the reference distribution a test reports.
enum class Tail { upper, lower, two_sided };

// Throws std::invalid_argument for non-positive degrees of freedom.
void validate(const DistributionRef& d);

double cdf(const DistributionRef& d, double x);

// Survival function computed directly in the upper tail (no 1 - cdf cancellation).
double sf(const DistributionRef& d, double x);

// p in (0, 1); throws std::domain_error otherwise.
double quantile(const DistributionRef& d, double p);

// 2 * Phi(-|z|)
double two_sided_normal_p(double z);

// 50:50 mixture of a point mass at zero and chi-square(1).
double chibar2_01_p(double stat);

// Tail probability of `stat` under `d` in the requested direction.
double tail_probability(const DistributionRef& d, double stat, Tail tail);

// "chi2(19)", "F(1,25)", "z", "t(223)", "chibar2(01)"
std::string label(const DistributionRef& d);

// Renders a p-value the way the paper-style tables print them: values below
// 5e-5 become "0.0000".
std::string format_p_value(double p);

}  // namespace panelgmm
