#include "panelgmm/distributions.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace panelgmm {

namespace bm = boost::math;

namespace {

void require_finite(double x) {
    if (!std::isfinite(x)) throw std::domain_error("distribution argument must be finite");
}

}  // namespace

void validate(const DistributionRef& d) {
    switch (d.family) {
        case Family::normal:
        case Family::chibar2_01:
            return;
        case Family::chi_square:
        case Family::student_t:
            if (!(d.df1 > 0.0)) throw std::invalid_argument("degrees of freedom must be positive: " + label(d));
            return;
        case Family::f:
            if (!(d.df1 > 0.0) || !(d.df2 > 0.0))
                throw std::invalid_argument("degrees of freedom must be positive: " + label(d));
            return;
    }
}

double cdf(const DistributionRef& d, double x) {
    validate(d);
    require_finite(x);
    switch (d.family) {
        case Family::normal:
            return 0.5 * bm::erfc(-x / std::sqrt(2.0));
        case Family::chi_square:
            if (x <= 0.0) return 0.0;
            return bm::cdf(bm::chi_squared_distribution<double>(d.df1), x);
        case Family::student_t:
            return bm::cdf(bm::students_t_distribution<double>(d.df1), x);
        case Family::f:
            if (x <= 0.0) return 0.0;
            return bm::cdf(bm::fisher_f_distribution<double>(d.df1, d.df2), x);
        case Family::chibar2_01:
            if (x < 0.0) return 0.0;
            return 1.0 - chibar2_01_p(x);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double sf(const DistributionRef& d, double x) {
    validate(d);
    require_finite(x);
    switch (d.family) {
        case Family::normal:
            return 0.5 * bm::erfc(x / std::sqrt(2.0));
        case Family::chi_square:
            if (x <= 0.0) return 1.0;
            return bm::cdf(bm::complement(bm::chi_squared_distribution<double>(d.df1), x));
        case Family::student_t:
            return bm::cdf(bm::complement(bm::students_t_distribution<double>(d.df1), x));
        case Family::f:
            if (x <= 0.0) return 1.0;
            return bm::cdf(bm::complement(bm::fisher_f_distribution<double>(d.df1, d.df2), x));
        case Family::chibar2_01:
            if (x < 0.0) return 1.0;
            return chibar2_01_p(x);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double quantile(const DistributionRef& d, double p) {
    validate(d);
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile probability must lie in (0, 1)");
    switch (d.family) {
        case Family::normal:
            return bm::quantile(bm::normal_distribution<double>(), p);
        case Family::chi_square:
            return bm::quantile(bm::chi_squared_distribution<double>(d.df1), p);
        case Family::student_t:
            return bm::quantile(bm::students_t_distribution<double>(d.df1), p);
        case Family::f:
            return bm::quantile(bm::fisher_f_distribution<double>(d.df1, d.df2), p);
        case Family::chibar2_01:
            // Half the mass sits at zero.
            if (p <= 0.5) return 0.0;
            return bm::quantile(bm::chi_squared_distribution<double>(1.0), 2.0 * p - 1.0);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double two_sided_normal_p(double z) {
    require_finite(z);
    return bm::erfc(std::fabs(z) / std::sqrt(2.0));
}

double chibar2_01_p(double stat) {
    require_finite(stat);
    if (stat < 0.0) throw std::domain_error("chibar2(01) statistic must be non-negative");
    if (stat == 0.0) return 1.0;
    return 0.5 * bm::cdf(bm::complement(bm::chi_squared_distribution<double>(1.0), stat));
}

double tail_probability(const DistributionRef& d, double stat, Tail tail) {
    switch (tail) {
        case Tail::upper:
            return sf(d, stat);
        case Tail::lower:
            return cdf(d, stat);
        case Tail::two_sided: {
            if (d.family == Family::normal) return two_sided_normal_p(stat);
            double p = 2.0 * std::min(cdf(d, stat), sf(d, stat));
            return std::min(p, 1.0);
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

std::string label(const DistributionRef& d) {
    auto num = [](double v) {
        char buf[32];
        if (v == std::floor(v) && std::fabs(v) < 1e15)
            std::snprintf(buf, sizeof buf, "%.0f", v);
        else
            std::snprintf(buf, sizeof buf, "%.4g", v);
        return std::string(buf);
    };
    switch (d.family) {
        case Family::normal:
            return "z";
        case Family::chi_square:
            return "chi2(" + num(d.df1) + ")";
        case Family::student_t:
            return "t(" + num(d.df1) + ")";
        case Family::f:
            return "F(" + num(d.df1) + "," + num(d.df2) + ")";
        case Family::chibar2_01:
            return "chibar2(01)";
    }
    return "?";
}

std::string format_p_value(double p) {
    if (std::isnan(p)) return ".";
    if (p < 5e-5) return "0.0000";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", p);
    return buf;
}

}  // namespace panelgmm
