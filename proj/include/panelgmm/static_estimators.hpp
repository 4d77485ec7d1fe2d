#pragma once

#include "panelgmm/model.hpp"
#include "panelgmm/panel.hpp"

#include <optional>
#include <vector>

namespace panelgmm {

// Significance level used by the specification tests (F, BP-LM, Hausman).
inline constexpr double kSpecificationLevel = 0.01;

// Classical OLS on complete-case rows: sigma^2 = SSR/(n-k), t(n-k) inference,
// F for joint slope significance. `min_obs_per_entity` lets callers align the
// sample with the fixed-effects estimator (which needs 2 rows per entity).
EstimationResult pooled_ols(const PanelDataset& panel, const ModelSpec& spec, std::size_t min_obs_per_entity = 1);

// Within (entity-demeaned) estimator, df = n - N - k. Entities with fewer than two
// rows are dropped with a warning. Period indicators are added when
// spec.period_fixed is set; indicators collinear with the regressors are dropped
// and listed in dropped_columns.
EstimationResult fixed_effects(const PanelDataset& panel, const ModelSpec& spec);

// Swamy-Arora random effects. When `injected` is given its variance components
// replace the estimated ones.
EstimationResult random_effects(const PanelDataset& panel, const ModelSpec& spec,
                                const std::optional<VarianceComponents>& injected = std::nullopt);

enum class FglsErrorModel { groupwise_het, groupwise_het_ar1 };

struct FglsOptions {
    FglsErrorModel error_model = FglsErrorModel::groupwise_het;
    int max_iterations = 50;
    double tolerance = 1e-8;
    // Fixed per-entity variances (in design entity order) and AR(1) coefficient;
    // when set they are used as-is and no iteration takes place.
    std::optional<std::vector<double>> fixed_sigma2;
    std::optional<double> fixed_rho;
};

EstimationResult fgls(const PanelDataset& panel, const ModelSpec& spec, const FglsOptions& options = {});

// F = ((SSR_pols - SSR_fe)/(N-1)) / (SSR_fe/(n-N-k)). Both fits must share the sample.
TestResult f_test_pooled_vs_fe(const EstimationResult& pols, const EstimationResult& fe,
                               double level = kSpecificationLevel);

// Within transform of the columns of `m`, groups delimited by `starts` (end sentinel included).
Eigen::MatrixXd within_transform(const Eigen::MatrixXd& m, const std::vector<std::size_t>& starts);

}  // namespace panelgmm
