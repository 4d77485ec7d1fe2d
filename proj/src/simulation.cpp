#include "panelgmm/simulation.hpp"

#include "panelgmm/errors.hpp"
#include "panelgmm/static_estimators.hpp"

#include <boost/math/constants/constants.hpp>

#include <cmath>

namespace panelgmm {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * boost::math::constants::pi<double>() * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

void DgpConfig::validate() const {
    auto fail = [](const std::string& m) { throw ValidationError("invalid DGP configuration: " + m); };
    if (n_entities < 1) fail("n_entities must be at least 1");
    if (n_periods < 1) fail("n_periods must be at least 1");
    if (burn_in < 0) fail("burn_in must be non-negative");
    if (!(std::abs(omega) < 1.0)) fail("|omega| must be below 1");
    if (!regressor_persistence.empty() && regressor_persistence.size() != theta.size())
        fail("regressor_persistence needs one entry per theta");
    for (double r : regressor_persistence)
        if (!(std::abs(r) < 1.0)) fail("regressor persistence must lie in (-1, 1)");
    if (!(fixed_effect_sd >= 0.0)) fail("fixed_effect_sd must be non-negative");
    if (!(idiosyncratic_sd > 0.0)) fail("idiosyncratic_sd must be positive");
    if (!(std::abs(endogeneity_corr) <= 1.0)) fail("endogeneity_corr must lie in [-1, 1]");
    if (endogeneity_corr != 0.0 && theta.empty()) fail("endogeneity_corr needs at least one regressor");
    if (!(groupwise_het_factor >= 1.0)) fail("groupwise_het_factor must be at least 1");
    if (!(std::abs(error_ar1) < 1.0)) fail("error_ar1 must lie in (-1, 1)");
    if (!(instrument_strength >= 0.0)) fail("instrument_strength must be non-negative");
    if ((instrument_strength > 0.0 || regressor_het_loading != 0.0) && theta.empty())
        fail("instrument_strength and regressor_het_loading need at least one regressor");
    for (double v : theta)
        if (!std::isfinite(v)) fail("theta must be finite");
}

PanelDataset simulate_dynamic_panel(const DgpConfig& c) {
    c.validate();
    const auto N = static_cast<std::size_t>(c.n_entities);
    const auto T = static_cast<std::size_t>(c.n_periods);
    const std::size_t K = c.theta.size();
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < N; ++i) ids.push_back("e" + std::to_string(i + 1));
    PanelDataset panel = PanelDataset::with_period_range(ids, 1, c.n_periods);

    std::vector<double> y(N * T), eps(N * T), alpha(N * T), w(N * T);
    std::vector<std::vector<double>> x(K, std::vector<double>(N * T));
    Rng rng(c.seed);
    const double ce = c.endogeneity_corr, se = std::sqrt(1.0 - ce * ce);
    for (std::size_t i = 0; i < N; ++i) {
        const double a = c.fixed_effect_sd * rng.normal();
        const double sigma = c.idiosyncratic_sd * (i >= N / 2 && N > 1 ? c.groupwise_het_factor : 1.0);
        double yv = a / (1.0 - c.omega) + sigma / std::sqrt(1.0 - c.omega * c.omega) * rng.normal();
        double ev = 0.0;
        std::vector<double> xv(K, 0.0);
        const std::size_t steps = static_cast<std::size_t>(c.burn_in) + T;
        for (std::size_t s = 0; s < steps; ++s) {
            const double eta = rng.normal();
            const double wv = c.instrument_strength > 0.0 ? rng.normal() : 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                double u = rng.normal();
                if (k == 0) u = ce * eta + se * u + c.instrument_strength * wv;
                const double rho = c.regressor_persistence.empty() ? 0.0 : c.regressor_persistence[k];
                xv[k] = rho * xv[k] + c.regressor_effect_loading * a + u;
            }
            double sd = sigma;
            if (c.regressor_het_loading != 0.0) sd *= std::exp(0.5 * c.regressor_het_loading * xv[0]);
            ev = c.error_ar1 * ev + sd * eta;
            double xb = 0.0;
            for (std::size_t k = 0; k < K; ++k) xb += c.theta[k] * xv[k];
            yv = a + c.omega * yv + xb + ev;
            if (s < static_cast<std::size_t>(c.burn_in)) continue;
            const std::size_t cell = i * T + (s - static_cast<std::size_t>(c.burn_in));
            y[cell] = yv;
            eps[cell] = ev;
            alpha[cell] = a;
            w[cell] = wv;
            for (std::size_t k = 0; k < K; ++k) x[k][cell] = xv[k];
        }
    }
    panel.set_series("y", std::move(y));
    for (std::size_t k = 0; k < K; ++k) panel.set_series("x" + std::to_string(k + 1), std::move(x[k]));
    if (c.instrument_strength > 0.0) panel.set_series("w", std::move(w));
    if (c.emit_components) {
        panel.set_series("eps", std::move(eps));
        panel.set_series("alpha", std::move(alpha));
    }
    return panel;
}

const CoefficientSummary& MonteCarloSummary::coefficient(const std::string& name) const {
    for (const auto& c : per_coefficient)
        if (c.name == name) return c;
    throw ValidationError("Monte Carlo summary has no coefficient '" + name + "'");
}

const TestSummary& MonteCarloSummary::test(const std::string& name) const {
    for (const auto& t : per_test)
        if (t.name == name) return t;
    throw ValidationError("Monte Carlo summary has no test '" + name + "'");
}

MonteCarloSummary monte_carlo(const DgpConfig& config, const std::string& label, const ReplicationFn& replicate,
                              const std::map<std::string, double>& true_values, std::size_t replications,
                              std::uint64_t base_seed, double level) {
    if (replications < 1) throw ValidationError("monte_carlo needs at least one replication");
    config.validate();
    MonteCarloSummary out;
    out.estimator = label;
    out.replications = replications;
    std::vector<McDraw> draws;
    draws.reserve(replications);
    for (std::size_t r = 0; r < replications; ++r) {
        DgpConfig c = config;
        c.seed = base_seed ^ static_cast<std::uint64_t>(r);
        try {
            draws.push_back(replicate(simulate_dynamic_panel(c)));
        } catch (const std::exception& ex) {
            ++out.failures;
            out.failure_messages.push_back("replication " + std::to_string(r) + ": " + ex.what());
        }
    }
    const double z975 = 1.959963984540054;
    for (const auto& [name, truth] : true_values) {
        CoefficientSummary s;
        s.name = name;
        s.true_value = truth;
        double sum = 0.0, sq = 0.0, cover = 0.0;
        for (const auto& d : draws) {
            auto it = d.estimates.find(name);
            if (it == d.estimates.end() || !std::isfinite(it->second.first)) continue;
            const auto [est, se] = it->second;
            ++s.draws;
            sum += est;
            sq += (est - truth) * (est - truth);
            cover += std::abs(est - truth) <= z975 * se ? 1.0 : 0.0;
        }
        if (s.draws > 0) {
            const double m = static_cast<double>(s.draws);
            s.mean_estimate = sum / m;
            s.mean_bias = s.mean_estimate - truth;
            s.rmse = std::sqrt(sq / m);
            s.coverage = cover / m;
        } else {
            s.mean_estimate = s.mean_bias = s.rmse = s.coverage = kMissing;
        }
        out.per_coefficient.push_back(s);
    }
    std::map<std::string, std::pair<std::size_t, std::size_t>> tests;  // name -> (rejections, draws)
    for (const auto& d : draws)
        for (const auto& [name, p] : d.p_values) {
            auto& slot = tests[name];
            if (!std::isfinite(p)) continue;
            ++slot.second;
            slot.first += p < level ? 1 : 0;
        }
    for (const auto& [name, counts] : tests) {
        TestSummary t;
        t.name = name;
        t.level = level;
        t.draws = counts.second;
        t.rejection_rate = counts.second > 0 ? static_cast<double>(counts.first) / static_cast<double>(counts.second)
                                             : kMissing;
        out.per_test.push_back(t);
    }
    return out;
}

MonteCarloSummary monte_carlo(const DgpConfig& config, const McTarget& target, std::size_t replications,
                              std::uint64_t base_seed, double level) {
    std::map<std::string, double> truth;
    if (target.spec.dep_lag_order >= 1) truth[TermRef{target.spec.dependent, 1}.str()] = config.omega;
    for (std::size_t k = 0; k < config.theta.size(); ++k) truth["x" + std::to_string(k + 1)] = config.theta[k];
    ReplicationFn fn = [&target](const PanelDataset& panel) {
        EstimationResult r;
        switch (target.method) {
            case Method::pols: r = pooled_ols(panel, target.spec); break;
            case Method::fe: r = fixed_effects(panel, target.spec); break;
            case Method::re: r = random_effects(panel, target.spec); break;
            case Method::fgls: r = fgls(panel, target.spec); break;
            case Method::diff_gmm: r = difference_gmm(panel, target.spec, target.gmm); break;
        }
        McDraw d;
        for (std::size_t j = 0; j < r.names.size(); ++j)
            d.estimates[r.names[j]] = {r.coefficients(static_cast<Eigen::Index>(j)),
                                       r.std_errors(static_cast<Eigen::Index>(j))};
        if (r.gmm) {
            if (r.gmm->sargan && r.gmm->sargan->defined) d.p_values["sargan"] = r.gmm->sargan->p_value;
            for (std::size_t m = 0; m < r.gmm->ar_tests.size(); ++m)
                if (r.gmm->ar_tests[m].defined) d.p_values["ar" + std::to_string(m + 1)] = r.gmm->ar_tests[m].p_value;
        }
        return d;
    };
    return monte_carlo(config, to_string(target.method), fn, truth, replications, base_seed, level);
}

}  // namespace panelgmm
