#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace panelgmm {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return v != v; }

// Entity x period grid of named real series. Periods are consecutive integers;
// a cell that was not observed holds kMissing. Treat instances as immutable
// once handed to an estimator.
class PanelDataset {
public:
    PanelDataset() = default;
    PanelDataset(std::vector<std::string> entities, std::vector<int> periods);

    // Builds the contiguous period range [first, last].
    static PanelDataset with_period_range(std::vector<std::string> entities, int first, int last);

    std::size_t entity_count() const { return entities_.size(); }
    std::size_t period_count() const { return periods_.size(); }
    const std::vector<std::string>& entities() const { return entities_; }
    const std::vector<int>& periods() const { return periods_; }
    std::optional<std::size_t> period_index(int period) const;
    std::optional<std::size_t> entity_index(const std::string& entity) const;

    const std::vector<std::string>& series_names() const { return order_; }
    bool has_series(const std::string& name) const { return data_.count(name) != 0; }

    // `values` is entity-major (entity * period_count + period); NaN marks missing.
    void set_series(const std::string& name, std::vector<double> values);

    // Throws ValidationError naming the available series when `name` is unknown.
    const std::vector<double>& series(const std::string& name) const;
    void require_series(const std::vector<std::string>& names) const;

    double value(const std::string& name, std::size_t entity, std::size_t period) const {
        return series(name)[entity * periods_.size() + period];
    }
    bool observed(const std::string& name, std::size_t entity, std::size_t period) const {
        return !is_missing(value(name, entity, period));
    }
    std::size_t cell(std::size_t entity, std::size_t period) const { return entity * periods_.size() + period; }

    // Number of non-missing cells of a series.
    std::size_t observed_count(const std::string& name) const;

    bool operator==(const PanelDataset& other) const;

private:
    std::vector<std::string> entities_;
    std::vector<int> periods_;
    std::vector<std::string> order_;
    std::map<std::string, std::vector<double>> data_;
};

// Throws ValidationError unless N >= 2 and some entity has >= 3 jointly observed periods of `names`.
void require_dynamic_support(const PanelDataset& panel, const std::vector<std::string>& names);

// ---------------------------------------------------------------------------
// Bank ratio construction
// ---------------------------------------------------------------------------

struct RawBankRecord {
    std::string entity_id;
    int period = 0;
    double net_profit_after_tax = 0.0;
    double total_assets = 0.0;
    double total_equity = 0.0;
    double net_interest_income = 0.0;
    double earning_assets = 0.0;
    double non_performing_loans = 0.0;
    double gross_loans = 0.0;
    double credit_loss_provision = 0.0;
    double tier1_capital = 0.0;
    double tier2_capital = 0.0;
    double risk_weighted_assets = 0.0;
};

struct MacroRecord {
    int period = 0;
    double gdp_growth = 0.0;
    double inflation = 0.0;
};

struct RejectedRecord {
    std::string entity_id;
    int period = 0;
    std::string field;
    std::string message;
};

struct RatioPanel {
    PanelDataset panel;
    std::vector<RejectedRecord> rejected;
    std::vector<std::string> warnings;  // regulatory flags
};

// Series produced: roa, roe, nim, nplr, llpr, car, size, gdp, inf (percentage points,
// size in natural log). roa/roe average the t-1 and t denominators and are missing
// when the t-1 record is absent.
RatioPanel compute_ratios(const std::vector<RawBankRecord>& records, const std::vector<MacroRecord>& macro);

inline constexpr double kNplrRegulatoryLimit = 3.0;
inline constexpr double kCarRegulatoryMinimum = 9.0;

// NPLR above 3% and CAR below 9%, one message per offending cell.
std::vector<std::string> regulatory_flags(const PanelDataset& panel);

// ---------------------------------------------------------------------------
// Screening statistics
// ---------------------------------------------------------------------------

struct DescriptiveRow {
    std::string variable;
    double mean = 0.0;
    double std_dev = 0.0;
    double min = 0.0;
    double max = 0.0;
    std::size_t n_obs = 0;
};

std::vector<DescriptiveRow> describe(const PanelDataset& panel, const std::vector<std::string>& variables);

inline constexpr double kCorrelationScreen = 0.80;

struct CorrelationReport {
    std::vector<std::string> variables;
    Eigen::MatrixXd matrix;                 // NaN where undefined
    Eigen::MatrixXi pair_counts;            // pairwise-complete observation counts
    std::vector<std::pair<std::string, std::string>> high_pairs;  // |r| > 0.80
    std::vector<std::string> zero_variance; // variables whose correlations are undefined
};

CorrelationReport correlation_matrix(const PanelDataset& panel, const std::vector<std::string>& variables);

inline constexpr double kVifThreshold = 10.0;

struct VifRow {
    std::string variable;
    double vif = 0.0;         // +inf under perfect collinearity
    double reciprocal = 0.0;  // 1 / vif
    bool flagged = false;
};

struct VifReport {
    std::vector<VifRow> rows;
    double mean_vif = 0.0;
    bool any_flagged = false;
    std::size_t n_obs = 0;
};

VifReport vif(const PanelDataset& panel, const std::vector<std::string>& regressors);

}  // namespace panelgmm
