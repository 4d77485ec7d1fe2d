#pragma once

#include "panelgmm/distributions.hpp"
#include "panelgmm/instruments.hpp"
#include "panelgmm/panel.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace panelgmm {

// A series reference with an optional lag, written "x", "L.x" or "L3.x".
struct TermRef {
    std::string name;
    int lag = 0;

    static TermRef parse(const std::string& text);
    std::string str() const;
    bool operator==(const TermRef&) const = default;
};

// Level value of `term` at (entity, period index); missing when the lag runs
// off the front of the panel or the cell is unobserved.
double term_value(const PanelDataset& panel, const TermRef& term, std::size_t entity, std::size_t period);

struct ModelSpec {
    std::string dependent;
    int dep_lag_order = 0;                 // 0 for static models
    std::vector<std::string> regressors;   // TermRef syntax
    bool include_intercept = true;
    bool period_fixed = false;             // period indicator columns (fixed effects only)
    std::vector<InstrumentDirective> instruments;

    // Coefficient names: "L.y" ... then regressors.
    std::vector<std::string> slope_names() const;
    void validate(const PanelDataset& panel) const;
};

enum class Method { pols, fe, re, fgls, diff_gmm };
std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct TestResult {
    std::string name;
    double statistic = 0.0;
    DistributionRef distribution;
    Tail tail = Tail::upper;
    double p_value = 1.0;
    std::string h0;
    std::string decision;
    double level = 0.05;
    bool defined = true;   // false when the test cannot be computed; `note` explains
    std::string note;
};

// Fills p_value from the distribution/tail and chooses between the two decision texts.
TestResult make_test(std::string name, double statistic, DistributionRef dist, Tail tail, std::string h0,
                     double level, const std::string& reject_text, const std::string& accept_text);
TestResult undefined_test(std::string name, DistributionRef dist, std::string h0, std::string note);

struct Observation {
    std::size_t entity = 0;
    std::size_t period = 0;
    bool operator==(const Observation&) const = default;
};

struct WaldStatistic {
    double statistic = 0.0;
    double df = 0.0;
    double p_value = 1.0;
};

struct FStatistic {
    double statistic = 0.0;
    double df1 = 0.0;
    double df2 = 0.0;
    double p_value = 1.0;
};

struct FitStatistics {
    std::optional<double> r_squared;
    std::optional<WaldStatistic> wald;
    std::optional<FStatistic> f;
    double ssr = 0.0;
    double sigma2 = 0.0;
    double df_resid = 0.0;
};

struct VarianceComponents {
    double sigma_e2 = 0.0;  // idiosyncratic
    double sigma_v2 = 0.0;  // entity effect
};

struct RandomEffectsInfo {
    VarianceComponents components;
    std::vector<double> theta;  // per estimation entity
    bool floored = false;
};

struct FixedEffectsInfo {
    std::vector<std::size_t> entities;        // entity indices kept
    std::vector<double> entity_intercepts;    // alpha_i = ybar_i - xbar_i' b
    std::vector<std::string> dropped_entities;
};

struct FglsInfo {
    std::vector<double> sigma2;  // per estimation entity
    double rho = 0.0;
    bool ar1 = false;
    int iterations = 0;
    bool converged = true;
};

struct GmmInfo;  // diff_gmm.hpp

struct EstimationResult {
    Method method = Method::pols;
    std::vector<std::string> names;
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd std_errors;
    Eigen::VectorXd stats;     // t or z
    Eigen::VectorXd p_values;
    bool z_stats = false;      // true: normal reference; false: t(df_resid)
    std::size_t n_obs = 0;
    std::size_t n_entities = 0;
    FitStatistics fit;
    std::vector<Observation> sample;
    Eigen::VectorXd residuals;  // aligned with `sample`
    Eigen::VectorXd fitted;     // aligned with `sample`
    std::vector<std::string> dropped_columns;
    std::vector<std::string> warnings;

    std::optional<RandomEffectsInfo> re;
    std::optional<FixedEffectsInfo> fe;
    std::optional<FglsInfo> fgls;
    std::shared_ptr<const GmmInfo> gmm;

    std::optional<std::size_t> index_of(const std::string& name) const;
    double coef(const std::string& name) const;
    double se(const std::string& name) const;
};

// Period indicator columns are named with this prefix.
inline constexpr const char* kPeriodEffectPrefix = "year.";
bool is_period_effect(const std::string& name);

// Fills std_errors / stats / p_values from coefficients and covariance.
void finalize_inference(EstimationResult& r);

// Stacked complete-case rows for a specification (sorted by entity, then period).
struct Design {
    std::vector<Observation> rows;
    Eigen::VectorXd y;
    Eigen::MatrixXd x;                 // slopes only, no intercept
    std::vector<std::string> names;
    std::vector<std::size_t> entity_start;  // row offsets per entity group (+ end sentinel)
    std::vector<std::size_t> entity_ids;    // entity index per group
    std::vector<std::string> dropped_entities;

    std::size_t n() const { return rows.size(); }
    std::size_t groups() const { return entity_ids.size(); }
};

// Entities with fewer than `min_obs_per_entity` complete rows are dropped and listed.
Design build_design(const PanelDataset& panel, const ModelSpec& spec, std::size_t min_obs_per_entity = 1);

}  // namespace panelgmm
