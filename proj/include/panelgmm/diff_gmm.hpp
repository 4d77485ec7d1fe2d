#pragma once

#include "panelgmm/instruments.hpp"
#include "panelgmm/model.hpp"
#include "panelgmm/panel.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace panelgmm {

// x_it - x_i,t-1 for each requested series; the first observed period of an
// entity and any cell next to a gap become missing. Only the listed series are
// carried into the result.
PanelDataset first_difference(const PanelDataset& panel, const std::vector<std::string>& variables);

struct GmmOptions {
    // Maximum number of lags per gmm-style directive. nullopt picks the largest
    // depth that keeps the instrument count within the group count.
    std::optional<int> max_gmm_lag_depth;
    bool collapse_default = false;
    bool robust = false;
};

struct InstrumentColumn {
    std::size_t directive = 0;
    int period = -1;   // period index of an uncollapsed gmm column; -1 otherwise
    int lag = 0;       // gmm lag (0 for iv)
    std::string label;
};

// Differenced rows of one entity: Delta y, Delta X (lagged dependent first) and
// the instrument rows, all aligned with `periods`.
struct EntityBlock {
    std::size_t entity = 0;
    std::vector<std::size_t> periods;
    Eigen::VectorXd dy;
    Eigen::MatrixXd dx;
    Eigen::MatrixXd z;
};

inline constexpr const char* kInstrumentRule =
    "the number of instruments should be less than or equal to the number of groups";

struct InstrumentPlan {
    std::vector<InstrumentDirective> directives;  // explicit ones, then the implicit dependent-variable block
    std::vector<InstrumentColumn> columns;
    std::size_t realized_column_count = 0;
    std::size_t group_count = 0;
    std::optional<int> lag_depth;                 // depth applied (nullopt: unbounded)
    bool depth_chosen_automatically = false;
    std::vector<std::string> parameter_names;
    std::vector<EntityBlock> blocks;
    std::size_t rows_lost = 0;
    std::vector<std::string> diagnostics;
    std::vector<std::string> warnings;

    bool exceeds_group_rule() const { return realized_column_count > group_count; }
    std::size_t row_count() const;
};

// Assembles the differenced rows and per-entity instrument matrices. Throws
// ValidationError when the instruments cannot identify the parameters; a plan
// with more columns than groups carries a warning quoting kInstrumentRule.
InstrumentPlan build_instrument_matrix(const PanelDataset& panel, const ModelSpec& spec, const GmmOptions& options = {});

// Rebuilds a plan keeping only the listed directive indices, on the same rows.
InstrumentPlan restrict_plan(const InstrumentPlan& plan, const std::vector<std::size_t>& keep_directives);

// Indices of iv-style directives (the subset the difference-in-Sargan test usually targets).
std::vector<std::size_t> iv_directive_indices(const InstrumentPlan& plan);

// First-difference weighting matrix for rows observed at `periods`: 2 on the
// diagonal, -1 between rows one period apart.
Eigen::MatrixXd difference_weighting(const std::vector<std::size_t>& periods);

struct GmmInfo {
    std::size_t instrument_count = 0;
    std::size_t group_count = 0;
    std::size_t parameter_count = 0;
    std::string weighting = "one_step_h";
    bool robust = false;
    std::optional<TestResult> sargan;
    std::vector<TestResult> ar_tests;

    InstrumentPlan plan;
    Eigen::MatrixXd weight;            // A = (sum Z'HZ)^{-1}
    Eigen::MatrixXd m_inverse;         // (X'Z A Z'X)^{-1}
    Eigen::MatrixXd zx;                // sum Z'X
    Eigen::VectorXd beta;
    Eigen::MatrixXd cov_nonrobust;
    Eigen::MatrixXd cov_robust;
    double sigma2 = 0.0;               // idiosyncratic variance estimate
    std::vector<Eigen::VectorXd> residuals;  // per block
};

// One-step Arellano-Bond difference GMM on a prepared plan.
EstimationResult estimate_one_step(const InstrumentPlan& plan, bool robust);
EstimationResult estimate_one_step(const PanelDataset& panel, const ModelSpec& spec, const InstrumentPlan& plan,
                                   bool robust);

// Plan + estimate + Sargan + AR(1)/AR(2) in one call.
EstimationResult difference_gmm(const PanelDataset& panel, const ModelSpec& spec, const GmmOptions& options = {});

const GmmInfo& gmm_info(const EstimationResult& r);

TestResult sargan_test(const GmmInfo& gmm);
TestResult ar_test(const GmmInfo& gmm, int order);

struct DifferenceInSargan {
    TestResult excluding_group;
    TestResult difference;
};

// Re-estimates without the directives in `subset` (same rows) and contrasts the
// two Sargan statistics.
DifferenceInSargan difference_in_sargan(const GmmInfo& full, const std::vector<std::size_t>& subset);

}  // namespace panelgmm
