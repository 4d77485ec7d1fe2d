#pragma once

// Reference computations for the tests. Nothing here calls into the library:
// dense long-double Gaussian elimination, explicit dummy-variable regressions
// and the textbook IV formula.

#include "panelgmm/panel.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

using Mat = std::vector<std::vector<long double>>;
using Vec = std::vector<long double>;

// Solves A x = b by partial-pivot elimination.
inline Vec solve(Mat a, Vec b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
        if (std::fabs(a[piv][c]) < 1e-300L) throw std::runtime_error("oracle: singular system");
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const long double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    Vec x(n);
    for (std::size_t i = n; i-- > 0;) {
        long double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
        x[i] = s / a[i][i];
    }
    return x;
}

inline Mat transpose_times(const Mat& a, const Mat& b) {
    const std::size_t n = a.size(), p = a[0].size(), q = b[0].size();
    Mat out(p, Vec(q, 0.0L));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = 0; k < q; ++k) out[j][k] += a[i][j] * b[i][k];
    return out;
}

inline Vec transpose_times(const Mat& a, const Vec& y) {
    Vec out(a[0].size(), 0.0L);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[0].size(); ++j) out[j] += a[i][j] * y[i];
    return out;
}

// beta = (X'X)^{-1} X'y
inline Vec normal_equations(const Mat& x, const Vec& y) { return solve(transpose_times(x, x), transpose_times(x, y)); }

// Exactly identified IV: beta = (Z'X)^{-1} Z'y
inline Vec iv_exact(const Mat& z, const Mat& x, const Vec& y) {
    return solve(transpose_times(z, x), transpose_times(z, y));
}

// Inverse of a small matrix column by column.
inline Mat inverse(const Mat& a) {
    const std::size_t n = a.size();
    Mat out(n, Vec(n));
    for (std::size_t j = 0; j < n; ++j) {
        Vec e(n, 0.0L);
        e[j] = 1.0L;
        const Vec c = solve(a, e);
        for (std::size_t i = 0; i < n; ++i) out[i][j] = c[i];
    }
    return out;
}

// Mean and sample standard deviation by the two-pass formula.
inline std::pair<long double, long double> mean_sd(const std::vector<double>& v) {
    long double m = 0.0L;
    for (double x : v) m += x;
    m /= static_cast<long double>(v.size());
    long double ss = 0.0L;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<long double>(v.size() - 1))};
}

// Bisection inverse of a monotone cdf on [lo, hi].
template <class F>
double bisect(F cdf, double p, double lo, double hi) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// Balanced or ragged random panel: entities "g1".."gN", periods 1..T, series
// y and x1..xk; `missing_share` of the cells of each series are dropped.
inline panelgmm::PanelDataset random_panel(std::mt19937_64& rng, int n, int t, int k, double missing_share = 0.0) {
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud;
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("g" + std::to_string(i + 1));
    auto p = panelgmm::PanelDataset::with_period_range(ids, 1, t);
    std::vector<double> alpha(n);
    for (auto& a : alpha) a = nd(rng);
    std::vector<std::vector<double>> xs(k, std::vector<double>(n * t));
    for (int j = 0; j < k; ++j)
        for (int c = 0; c < n * t; ++c) xs[j][c] = nd(rng) + 0.5 * alpha[c / t];
    std::vector<double> y(n * t);
    for (int c = 0; c < n * t; ++c) {
        y[c] = alpha[c / t] + nd(rng);
        for (int j = 0; j < k; ++j) y[c] += (j + 1) * 0.3 * xs[j][c];
    }
    auto drop = [&](std::vector<double>& v) {
        for (auto& c : v)
            if (ud(rng) < missing_share) c = panelgmm::kMissing;
    };
    drop(y);
    p.set_series("y", y);
    for (int j = 0; j < k; ++j) {
        drop(xs[j]);
        p.set_series("x" + std::to_string(j + 1), xs[j]);
    }
    return p;
}

inline double rel_err(long double a, long double b) {
    return static_cast<double>(std::fabs(a - b) / std::max(1.0L, std::fabs(b)));
}

}  // namespace oracle
