#pragma once

#include "panelgmm/panel.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace panelgmm {

// Comma-separated text with a header row. Fields may be double-quoted ("" escapes
// a quote). `lines` holds the 1-based file line of each data row.
struct CsvTable {
    std::string source;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;
};

CsvTable parse_csv(std::istream& in, const std::string& source);
CsvTable read_csv(const std::string& path);

// Decimal number with '.' radix; empty cell -> kMissing. Throws ValidationError
// naming source, line and column otherwise.
double parse_number(const std::string& cell, const std::string& source, std::size_t line, const std::string& column);

// Bank schema: entity_id, year, net_profit_after_tax, total_assets, total_equity,
// net_interest_income, earning_assets, npl, gross_loans, provisions, tier1, tier2, rwa.
std::vector<RawBankRecord> bank_records_from_csv(const CsvTable& table);
// Macro schema: year, gdp, inf.
std::vector<MacroRecord> macro_records_from_csv(const CsvTable& table);
// Prebuilt panel: entity_id, year, then one column per series. Entities keep
// first-appearance order; periods span the smallest to the largest year.
PanelDataset panel_from_csv(const CsvTable& table);

std::vector<RawBankRecord> read_bank_csv(const std::string& path);
std::vector<MacroRecord> read_macro_csv(const std::string& path);
PanelDataset read_panel_csv(const std::string& path);

// Writes the prebuilt-panel schema; rows whose series are all missing are
// omitted. Numbers use the shortest round-trip representation.
void write_panel_csv(const PanelDataset& panel, std::ostream& out);
void write_panel_csv(const PanelDataset& panel, const std::string& path);

std::string format_number_exact(double v);

}  // namespace panelgmm
