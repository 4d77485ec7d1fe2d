#include "panelgmm/io.hpp"

#include "panelgmm/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace panelgmm {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string where(const std::string& source, std::size_t line) { return source + ":" + std::to_string(line); }

std::vector<std::string> split_record(const std::string& line, const std::string& source, std::size_t lineno) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false, was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            if (!trim(cur).empty()) throw ValidationError(where(source, lineno) + ": stray quote inside a field");
            cur.clear();
            quoted = was_quoted = true;
        } else if (c == ',') {
            out.push_back(was_quoted ? cur : trim(cur));
            cur.clear();
            was_quoted = false;
        } else {
            cur += c;
        }
    }
    if (quoted) throw ValidationError(where(source, lineno) + ": unterminated quoted field");
    out.push_back(was_quoted ? cur : trim(cur));
    return out;
}

std::map<std::string, std::size_t> require_columns(const CsvTable& t, const std::vector<std::string>& expected) {
    std::map<std::string, std::size_t> pos;
    for (std::size_t j = 0; j < t.header.size(); ++j) pos[t.header[j]] = j;
    std::vector<std::string> missing;
    for (const auto& e : expected)
        if (!pos.count(e)) missing.push_back(e);
    if (!missing.empty()) {
        std::string msg = t.source + ": missing required column(s):";
        for (const auto& m : missing) msg += " " + m;
        msg += "; found:";
        for (const auto& h : t.header) msg += " " + h;
        msg += "; expected:";
        for (const auto& e : expected) msg += " " + e;
        throw ValidationError(msg);
    }
    return pos;
}

int parse_year(const std::string& cell, const std::string& source, std::size_t line) {
    int v = 0;
    const char* b = cell.data();
    const char* e = b + cell.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (cell.empty() || ec != std::errc() || p != e)
        throw ValidationError(where(source, line) + ", column year: '" + cell + "' is not an integer year");
    return v;
}

void check_duplicates(const CsvTable& t, std::size_t id_col, std::size_t year_col) {
    std::map<std::pair<std::string, std::string>, std::size_t> seen;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto key = std::make_pair(id_col < t.rows[r].size() ? t.rows[r][id_col] : std::string(),
                                        t.rows[r][year_col]);
        auto [it, fresh] = seen.emplace(key, t.lines[r]);
        if (!fresh)
            throw ValidationError(t.source + ": duplicate (" + (key.first.empty() ? "" : key.first + ", ") +
                                  key.second + ") at lines " + std::to_string(it->second) + " and " +
                                  std::to_string(t.lines[r]));
    }
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& source) {
    CsvTable t;
    t.source = source;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        auto fields = split_record(line, source, lineno);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            std::vector<std::string> sorted = t.header;
            std::sort(sorted.begin(), sorted.end());
            auto dup = std::adjacent_find(sorted.begin(), sorted.end());
            if (dup != sorted.end()) throw ValidationError(source + ": duplicate column '" + *dup + "' in header");
            continue;
        }
        if (fields.size() != t.header.size())
            throw ValidationError(where(source, lineno) + ": expected " + std::to_string(t.header.size()) +
                                  " fields, found " + std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
        t.lines.push_back(lineno);
    }
    if (!have_header) throw ValidationError(source + ": empty file (no header row)");
    return t;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return parse_csv(in, path);
}

double parse_number(const std::string& cell, const std::string& source, std::size_t line, const std::string& column) {
    if (cell.empty()) return kMissing;
    double v = 0.0;
    const char* b = cell.data();
    const char* e = b + cell.size();
    if (*b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e || !std::isfinite(v))
        throw ValidationError(where(source, line) + ", column " + column + ": '" + cell + "' is not a number");
    return v;
}

std::vector<RawBankRecord> bank_records_from_csv(const CsvTable& t) {
    const std::vector<std::string> cols{"entity_id",     "year",  "net_profit_after_tax", "total_assets",
                                        "total_equity",  "net_interest_income", "earning_assets", "npl",
                                        "gross_loans",   "provisions", "tier1", "tier2", "rwa"};
    auto pos = require_columns(t, cols);
    check_duplicates(t, pos["entity_id"], pos["year"]);
    std::vector<RawBankRecord> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::size_t ln = t.lines[r];
        auto num = [&](const char* c) { return parse_number(row[pos[c]], t.source, ln, c); };
        RawBankRecord b;
        b.entity_id = row[pos["entity_id"]];
        if (b.entity_id.empty()) throw ValidationError(where(t.source, ln) + ", column entity_id: empty entity id");
        b.period = parse_year(row[pos["year"]], t.source, ln);
        b.net_profit_after_tax = num("net_profit_after_tax");
        b.total_assets = num("total_assets");
        b.total_equity = num("total_equity");
        b.net_interest_income = num("net_interest_income");
        b.earning_assets = num("earning_assets");
        b.non_performing_loans = num("npl");
        b.gross_loans = num("gross_loans");
        b.credit_loss_provision = num("provisions");
        b.tier1_capital = num("tier1");
        b.tier2_capital = num("tier2");
        b.risk_weighted_assets = num("rwa");
        out.push_back(b);
    }
    return out;
}

std::vector<MacroRecord> macro_records_from_csv(const CsvTable& t) {
    auto pos = require_columns(t, {"year", "gdp", "inf"});
    std::map<int, std::size_t> seen;
    std::vector<MacroRecord> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        const std::size_t ln = t.lines[r];
        MacroRecord m;
        m.period = parse_year(row[pos["year"]], t.source, ln);
        auto [it, fresh] = seen.emplace(m.period, ln);
        if (!fresh)
            throw ValidationError(t.source + ": duplicate year " + std::to_string(m.period) + " at lines " +
                                  std::to_string(it->second) + " and " + std::to_string(ln));
        m.gdp_growth = parse_number(row[pos["gdp"]], t.source, ln, "gdp");
        m.inflation = parse_number(row[pos["inf"]], t.source, ln, "inf");
        if (is_missing(m.gdp_growth) || is_missing(m.inflation))
            throw ValidationError(where(t.source, ln) + ": macro values may not be empty");
        out.push_back(m);
    }
    return out;
}

PanelDataset panel_from_csv(const CsvTable& t) {
    auto pos = require_columns(t, {"entity_id", "year"});
    check_duplicates(t, pos["entity_id"], pos["year"]);
    if (t.rows.empty()) throw ValidationError(t.source + ": no data rows");
    std::vector<std::string> entities;
    std::map<std::string, std::size_t> entity_pos;
    std::vector<int> years;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& id = t.rows[r][pos["entity_id"]];
        if (id.empty()) throw ValidationError(where(t.source, t.lines[r]) + ", column entity_id: empty entity id");
        if (entity_pos.emplace(id, entities.size()).second) entities.push_back(id);
        years.push_back(parse_year(t.rows[r][pos["year"]], t.source, t.lines[r]));
    }
    const auto [lo, hi] = std::minmax_element(years.begin(), years.end());
    PanelDataset panel = PanelDataset::with_period_range(entities, *lo, *hi);
    const std::size_t T = panel.period_count();
    for (std::size_t j = 0; j < t.header.size(); ++j) {
        const auto& name = t.header[j];
        if (name == "entity_id" || name == "year") continue;
        if (name.empty()) throw ValidationError(t.source + ": empty column name in header");
        std::vector<double> values(entities.size() * T, kMissing);
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const std::size_t e = entity_pos[t.rows[r][pos["entity_id"]]];
            const auto p = static_cast<std::size_t>(years[r] - *lo);
            values[e * T + p] = parse_number(t.rows[r][j], t.source, t.lines[r], name);
        }
        panel.set_series(name, std::move(values));
    }
    return panel;
}

std::vector<RawBankRecord> read_bank_csv(const std::string& path) { return bank_records_from_csv(read_csv(path)); }
std::vector<MacroRecord> read_macro_csv(const std::string& path) { return macro_records_from_csv(read_csv(path)); }
PanelDataset read_panel_csv(const std::string& path) { return panel_from_csv(read_csv(path)); }

std::string format_number_exact(double v) {
    if (is_missing(v)) return "";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

void write_panel_csv(const PanelDataset& panel, std::ostream& out) {
    const auto& names = panel.series_names();
    out << "entity_id,year";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    };
    for (std::size_t e = 0; e < panel.entity_count(); ++e)
        for (std::size_t t = 0; t < panel.period_count(); ++t) {
            bool any = false;
            for (const auto& n : names) any = any || panel.observed(n, e, t);
            if (!any) continue;
            out << quote(panel.entities()[e]) << ',' << panel.periods()[t];
            for (const auto& n : names) out << ',' << format_number_exact(panel.value(n, e, t));
            out << '\n';
        }
}

void write_panel_csv(const PanelDataset& panel, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    write_panel_csv(panel, out);
}

}  // namespace panelgmm
