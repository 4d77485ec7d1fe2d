#pragma once

#include "panelgmm/diff_gmm.hpp"
#include "panelgmm/model.hpp"
#include "panelgmm/panel.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace panelgmm {

// std::mt19937_64 (output sequence fixed by the standard) seeded with the 64-bit
// seed. Uniforms are (x >> 11) * 2^-53 on [0, 1); normals come from Box-Muller
// on (1 - u1, u2), cosine branch first, sine branch cached for the next call.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next_u64();
    double uniform();
    double normal();

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

struct DgpConfig {
    int n_entities = 100;
    int n_periods = 7;
    int burn_in = 50;
    double omega = 0.5;
    std::vector<double> theta{1.0};
    double fixed_effect_sd = 1.0;
    double idiosyncratic_sd = 1.0;
    std::vector<double> regressor_persistence;  // per regressor; empty means 0 for all
    double regressor_effect_loading = 0.0;      // x_kit picks up loading * alpha_i
    double endogeneity_corr = 0.0;              // corr(innovation of x1, epsilon innovation)
    double groupwise_het_factor = 1.0;          // sd multiplier for the second half of the entities
    double regressor_het_loading = 0.0;         // epsilon sd scaled by exp(loading * x1 / 2)
    double error_ar1 = 0.0;
    double instrument_strength = 0.0;           // > 0 emits series "w" driving x1
    bool emit_components = false;               // emit "eps" and "alpha"
    std::uint64_t seed = 1;

    void validate() const;
};

// Series "y", "x1".."xk" (plus "w", "eps", "alpha" on request); entities
// "e1".."eN"; periods 1..T.
PanelDataset simulate_dynamic_panel(const DgpConfig& config);

struct McDraw {
    std::map<std::string, std::pair<double, double>> estimates;  // name -> (estimate, std error)
    std::map<std::string, double> p_values;                       // test name -> p
};

struct CoefficientSummary {
    std::string name;
    double true_value = 0.0;
    double mean_estimate = 0.0;
    double mean_bias = 0.0;
    double rmse = 0.0;
    double coverage = 0.0;  // share of nominal 95% intervals covering the true value
    std::size_t draws = 0;
};

struct TestSummary {
    std::string name;
    double level = 0.05;
    double rejection_rate = 0.0;
    std::size_t draws = 0;
};

struct MonteCarloSummary {
    std::string estimator;
    std::size_t replications = 0;
    std::size_t failures = 0;
    std::vector<std::string> failure_messages;  // "replication r: message"
    std::vector<CoefficientSummary> per_coefficient;
    std::vector<TestSummary> per_test;

    const CoefficientSummary& coefficient(const std::string& name) const;
    const TestSummary& test(const std::string& name) const;
};

using ReplicationFn = std::function<McDraw(const PanelDataset&)>;

// Replication r simulates with seed base_seed XOR r. Coefficients without an
// entry in `true_values` are ignored.
MonteCarloSummary monte_carlo(const DgpConfig& config, const std::string& label, const ReplicationFn& replicate,
                              const std::map<std::string, double>& true_values, std::size_t replications,
                              std::uint64_t base_seed, double level = 0.05);

struct McTarget {
    Method method = Method::fe;
    ModelSpec spec;
    GmmOptions gmm;
};

// Standard estimators; true values L.y -> omega and x_k -> theta_k. GMM draws
// also record the Sargan, AR(1) and AR(2) p-values.
MonteCarloSummary monte_carlo(const DgpConfig& config, const McTarget& target, std::size_t replications,
                              std::uint64_t base_seed, double level = 0.05);

}  // namespace panelgmm
