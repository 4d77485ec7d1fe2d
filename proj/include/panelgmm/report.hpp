#pragma once

#include "panelgmm/diagnostics.hpp"
#include "panelgmm/diff_gmm.hpp"
#include "panelgmm/model.hpp"
#include "panelgmm/panel.hpp"
#include "panelgmm/simulation.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace panelgmm {

// One table cell: display text, the full-precision number behind it (if any)
// and the operation that produced it.
struct Cell {
    std::string text;
    std::optional<double> value;
    std::string provenance;
    bool operator==(const Cell&) const = default;
};

struct Table {
    std::string title;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    std::vector<std::string> notes;
    bool operator==(const Table&) const = default;
};

enum class SectionStatus { ok, error, skipped };

struct Section {
    std::string id;
    std::string title;
    SectionStatus status = SectionStatus::ok;
    std::vector<Table> tables;
    std::vector<std::string> messages;
    bool operator==(const Section&) const = default;
};

struct Report {
    std::string title;
    std::vector<Section> sections;
    int exit_code = 0;  // 0 clean, 2 validation error, 3 numerical failure
    bool operator==(const Report&) const = default;
};

enum class ReportFormat { text, json, csv };
ReportFormat format_from_string(const std::string& s);

nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

// Deterministic rendering; text uses the display strings, json/csv carry values and provenance.
std::string render_report(const Report& report, ReportFormat format);

// 7 significant digits, "." for missing.
std::string fmt(double v);
// "***" p < 0.01, "**" p < 0.05, "*" p < 0.10.
std::string stars(double p);

Cell text_cell(std::string text);
Cell number_cell(double v, std::string provenance);
Cell p_cell(double p, std::string provenance);

// Coefficient table in the shape of the paper's estimation tables: one column
// per result, each coefficient followed by its parenthesized t or z statistic.
Table estimation_table(const std::string& title, const std::vector<std::string>& column_labels,
                       const std::vector<const EstimationResult*>& results);

// Statistic / distribution / p-value / decision rows.
Table test_table(const std::string& title, const std::vector<TestResult>& tests);

// Coefficient rows plus the validity block: groups, instruments, iv and
// GMM-type directives, AR(1), AR(2), Sargan and difference-in-Sargan.
Table gmm_table(const std::string& title, const EstimationResult& gmm,
                const std::optional<DifferenceInSargan>& dis = std::nullopt);

Table descriptive_table(const std::vector<DescriptiveRow>& rows);
Table correlation_table(const CorrelationReport& corr);
Table vif_table(const VifReport& v);
Table unit_root_table(const std::vector<UnitRootReport>& reports);
Table monte_carlo_table(const MonteCarloSummary& mc);

}  // namespace panelgmm
