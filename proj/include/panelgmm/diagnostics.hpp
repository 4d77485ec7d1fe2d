#pragma once

#include "panelgmm/model.hpp"
#include "panelgmm/panel.hpp"
#include "panelgmm/static_estimators.hpp"

#include <string>
#include <vector>

namespace panelgmm {

// Serial correlation in the idiosyncratic errors: first-difference regression
// without intercept, then the residual on its own lag; H0 coefficient = -0.5
// tested with entity-clustered variance, F(1, G-1).
TestResult wooldridge_autocorr_test(const PanelDataset& panel, const ModelSpec& spec, double level = 0.05);

// Cook-Weisberg score form on the fitted values of a pooled OLS fit, chi2(1).
TestResult breusch_pagan_het_test(const EstimationResult& pols, double level = 0.05);

// Groupwise heteroskedasticity in a fixed-effects fit, chi2(N_g). Entities with
// zero variance-of-variance are skipped and named in the note.
TestResult modified_wald_groupwise_het(const EstimationResult& fe, double level = 0.05);

// Breusch-Pagan LM for random effects on pooled OLS residuals (unbalanced
// Baltagi-Li scaling, one-sided so the reference is chibar2(01)).
TestResult bp_lm_re_test(const EstimationResult& pols, double level = kSpecificationLevel);

// Contrast of the common time-varying slopes of FE and RE. A pseudo-inverse is
// used when V_FE - V_RE is not positive definite; df is its rank.
TestResult hausman_test(const EstimationResult& fe, const EstimationResult& re, double level = kSpecificationLevel);

struct EndogeneityTests {
    TestResult durbin;       // chi2(1)
    TestResult wu_hausman;   // F(1, n-k-1)
    double first_stage_partial_r2 = 0.0;
};

// Control-function tests on pooled data: `suspected` must be one of the spec's
// regressors and `instruments` are the excluded instruments.
EndogeneityTests dwh_endogeneity_test(const PanelDataset& panel, const ModelSpec& spec, const std::string& suspected,
                                      const std::vector<std::string>& instruments, double level = 0.05);

enum class AdfDeterministic { constant, constant_trend };

struct AdfResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int lags = 0;
    std::size_t n_obs = 0;
};

// MacKinnon (1994) response-surface p-value for a single-series ADF tau.
double mackinnon_p_value(double tau, AdfDeterministic deterministic);

// Throws ValidationError when the series (no missing values) is too short.
AdfResult adf_test(const std::vector<double>& series, int lags = 1,
                   AdfDeterministic deterministic = AdfDeterministic::constant);

enum class UnitRootPolicy { all_four, any, inverse_chi2 };

struct UnitRootOptions {
    int lags = 1;
    AdfDeterministic deterministic = AdfDeterministic::constant;
    UnitRootPolicy policy = UnitRootPolicy::all_four;
    double level = 0.05;
};

struct UnitRootEntity {
    std::string entity;
    double adf_stat = 0.0;
    double p_value = 1.0;
    int lags_used = 0;
};

struct UnitRootReport {
    std::string variable;
    std::vector<UnitRootEntity> per_entity;
    TestResult inverse_chi2;           // P, chi2(2N), upper tail
    TestResult inverse_normal;         // Z, N(0,1), lower tail
    TestResult inverse_logit;          // L*, t(5N+4), lower tail
    TestResult modified_inverse_chi2;  // Pm, N(0,1), upper tail
    bool stationary = false;
    std::string decision;              // "Stationary" / "Unit root"
    std::vector<std::string> warnings;
};

// Combines per-entity p-values four ways. p-values at 0 or 1 are clipped to
// [1e-12, 1 - 1e-12] with a warning.
UnitRootReport fisher_combine(std::vector<UnitRootEntity> per_entity, const UnitRootOptions& options = {});

// Per-entity ADF on the longest run of consecutive observed periods, then fisher_combine.
UnitRootReport fisher_unit_root(const PanelDataset& panel, const std::string& variable,
                                const UnitRootOptions& options = {});

}  // namespace panelgmm
