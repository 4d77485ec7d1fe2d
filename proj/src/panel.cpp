#include "panelgmm/panel.hpp"

#include "panelgmm/errors.hpp"
#include "panelgmm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace panelgmm {

PanelDataset::PanelDataset(std::vector<std::string> entities, std::vector<int> periods)
    : entities_(std::move(entities)), periods_(std::move(periods)) {
    for (std::size_t t = 1; t < periods_.size(); ++t)
        if (periods_[t] != periods_[t - 1] + 1)
            throw ValidationError("panel periods must be consecutive integers");
    std::set<std::string> seen;
    for (const auto& e : entities_)
        if (!seen.insert(e).second) throw ValidationError("duplicate entity id '" + e + "'");
}

PanelDataset PanelDataset::with_period_range(std::vector<std::string> entities, int first, int last) {
    std::vector<int> periods;
    for (int p = first; p <= last; ++p) periods.push_back(p);
    return PanelDataset(std::move(entities), std::move(periods));
}

std::optional<std::size_t> PanelDataset::period_index(int period) const {
    if (periods_.empty() || period < periods_.front() || period > periods_.back()) return std::nullopt;
    return static_cast<std::size_t>(period - periods_.front());
}

std::optional<std::size_t> PanelDataset::entity_index(const std::string& entity) const {
    auto it = std::find(entities_.begin(), entities_.end(), entity);
    if (it == entities_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - entities_.begin());
}

void PanelDataset::set_series(const std::string& name, std::vector<double> values) {
    if (values.size() != entities_.size() * periods_.size())
        throw ValidationError("series '" + name + "' has " + std::to_string(values.size()) + " cells, expected " +
                              std::to_string(entities_.size() * periods_.size()));
    if (!has_series(name)) order_.push_back(name);
    data_[name] = std::move(values);
}

const std::vector<double>& PanelDataset::series(const std::string& name) const {
    auto it = data_.find(name);
    if (it == data_.end()) {
        std::string avail;
        for (const auto& s : order_) avail += (avail.empty() ? "" : ", ") + s;
        throw ValidationError("unknown series '" + name + "'; available: " + (avail.empty() ? "(none)" : avail));
    }
    return it->second;
}

void PanelDataset::require_series(const std::vector<std::string>& names) const {
    for (const auto& n : names) (void)series(n);
}

std::size_t PanelDataset::observed_count(const std::string& name) const {
    const auto& v = series(name);
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double x) { return !is_missing(x); }));
}

bool PanelDataset::operator==(const PanelDataset& other) const {
    if (entities_ != other.entities_ || periods_ != other.periods_ || order_ != other.order_) return false;
    for (const auto& [name, values] : data_) {
        const auto& rhs = other.data_.at(name);
        for (std::size_t i = 0; i < values.size(); ++i) {
            const bool ma = is_missing(values[i]);
            const bool mb = is_missing(rhs[i]);
            if (ma != mb || (!ma && values[i] != rhs[i])) return false;
        }
    }
    return true;
}

void require_dynamic_support(const PanelDataset& panel, const std::vector<std::string>& names) {
    panel.require_series(names);
    if (panel.entity_count() < 2) throw ValidationError("dynamic estimation needs at least 2 entities");
    for (std::size_t e = 0; e < panel.entity_count(); ++e) {
        std::size_t count = 0;
        for (std::size_t t = 0; t < panel.period_count(); ++t) {
            bool all = std::all_of(names.begin(), names.end(),
                                   [&](const std::string& n) { return panel.observed(n, e, t); });
            if (all) ++count;
        }
        if (count >= 3) return;
    }
    throw ValidationError("dynamic estimation needs at least one entity with 3 or more observed periods");
}

// ---------------------------------------------------------------------------
// Ratio construction
// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::optional<RejectedRecord> check_record(const RawBankRecord& r) {
    auto reject = [&](const char* field, double v, const char* rule) {
        return RejectedRecord{r.entity_id, r.period, field,
                              "entity " + r.entity_id + " period " + std::to_string(r.period) + ": " + field + " = " +
                                  fmt(v) + " " + rule};
    };
    if (!(r.total_assets > 0.0)) return reject("total_assets", r.total_assets, "must be positive");
    if (!(r.risk_weighted_assets > 0.0)) return reject("rwa", r.risk_weighted_assets, "must be positive");
    if (!(r.earning_assets > 0.0)) return reject("earning_assets", r.earning_assets, "must be positive");
    if (!(r.gross_loans > 0.0)) return reject("gross_loans", r.gross_loans, "must be positive");
    return std::nullopt;
}

}  // namespace

RatioPanel compute_ratios(const std::vector<RawBankRecord>& records, const std::vector<MacroRecord>& macro) {
    if (records.empty()) throw ValidationError("no bank records supplied");

    std::vector<std::string> entities;
    std::set<std::string> entity_set;
    int first = records.front().period;
    int last = records.front().period;
    for (const auto& r : records) {
        if (entity_set.insert(r.entity_id).second) entities.push_back(r.entity_id);
        first = std::min(first, r.period);
        last = std::max(last, r.period);
    }
    std::sort(entities.begin(), entities.end());

    std::map<int, MacroRecord> macro_by_period;
    for (const auto& m : macro) {
        if (!macro_by_period.emplace(m.period, m).second)
            throw ValidationError("duplicate macro record for period " + std::to_string(m.period));
    }
    for (int p = first; p <= last; ++p)
        if (!macro_by_period.count(p))
            throw ValidationError("missing macro record for period " + std::to_string(p));

    RatioPanel out;
    out.panel = PanelDataset::with_period_range(entities, first, last);
    const std::size_t n_cells = entities.size() * out.panel.period_count();

    std::vector<const RawBankRecord*> grid(n_cells, nullptr);
    std::vector<bool> seen(n_cells, false);
    for (const auto& r : records) {
        const std::size_t e = *out.panel.entity_index(r.entity_id);
        const std::size_t t = *out.panel.period_index(r.period);
        const std::size_t c = out.panel.cell(e, t);
        if (seen[c]) throw ValidationError("duplicate record for entity " + r.entity_id + " period " + std::to_string(r.period));
        seen[c] = true;
        if (auto bad = check_record(r)) {
            out.rejected.push_back(*bad);
            continue;
        }
        grid[c] = &r;
    }

    std::vector<double> roa(n_cells, kMissing), roe(n_cells, kMissing), nim(n_cells, kMissing),
        nplr(n_cells, kMissing), llpr(n_cells, kMissing), car(n_cells, kMissing), size(n_cells, kMissing),
        gdp(n_cells, kMissing), inf(n_cells, kMissing);

    const std::size_t T = out.panel.period_count();
    for (std::size_t e = 0; e < entities.size(); ++e) {
        for (std::size_t t = 0; t < T; ++t) {
            const std::size_t c = out.panel.cell(e, t);
            const auto& m = macro_by_period.at(out.panel.periods()[t]);
            gdp[c] = m.gdp_growth;
            inf[c] = m.inflation;
            const RawBankRecord* r = grid[c];
            if (!r) continue;
            nim[c] = r->net_interest_income / r->earning_assets * 100.0;
            nplr[c] = r->non_performing_loans / r->gross_loans * 100.0;
            llpr[c] = r->credit_loss_provision / r->gross_loans * 100.0;
            car[c] = (r->tier1_capital + r->tier2_capital) / r->risk_weighted_assets * 100.0;
            size[c] = std::log(r->total_assets);
            const RawBankRecord* prev = t > 0 ? grid[c - 1] : nullptr;
            if (prev) {
                roa[c] = r->net_profit_after_tax / ((prev->total_assets + r->total_assets) / 2.0) * 100.0;
                const double eq = (prev->total_equity + r->total_equity) / 2.0;
                if (eq != 0.0) roe[c] = r->net_profit_after_tax / eq * 100.0;
            }
        }
    }

    out.panel.set_series("roa", std::move(roa));
    out.panel.set_series("roe", std::move(roe));
    out.panel.set_series("nim", std::move(nim));
    out.panel.set_series("nplr", std::move(nplr));
    out.panel.set_series("llpr", std::move(llpr));
    out.panel.set_series("car", std::move(car));
    out.panel.set_series("size", std::move(size));
    out.panel.set_series("gdp", std::move(gdp));
    out.panel.set_series("inf", std::move(inf));
    out.warnings = regulatory_flags(out.panel);
    return out;
}

std::vector<std::string> regulatory_flags(const PanelDataset& panel) {
    std::vector<std::string> flags;
    for (std::size_t e = 0; e < panel.entity_count(); ++e) {
        for (std::size_t t = 0; t < panel.period_count(); ++t) {
            const std::string where = "entity " + panel.entities()[e] + " period " + std::to_string(panel.periods()[t]);
            if (panel.has_series("nplr")) {
                double v = panel.value("nplr", e, t);
                if (!is_missing(v) && v > kNplrRegulatoryLimit)
                    flags.push_back(where + ": NPLR " + fmt(v) + "% is higher than the regulatory requirement of 3%");
            }
            if (panel.has_series("car")) {
                double v = panel.value("car", e, t);
                if (!is_missing(v) && v < kCarRegulatoryMinimum)
                    flags.push_back(where + ": CAR " + fmt(v) + "% is lower than the regulatory requirement of 9%");
            }
        }
    }
    return flags;
}

// ---------------------------------------------------------------------------
// Screening statistics
// ---------------------------------------------------------------------------

std::vector<DescriptiveRow> describe(const PanelDataset& panel, const std::vector<std::string>& variables) {
    std::vector<DescriptiveRow> rows;
    for (const auto& name : variables) {
        std::vector<double> obs;
        for (double v : panel.series(name))
            if (!is_missing(v)) obs.push_back(v);
        DescriptiveRow row;
        row.variable = name;
        row.n_obs = obs.size();
        if (obs.empty()) {
            row.mean = row.std_dev = row.min = row.max = kMissing;
            rows.push_back(row);
            continue;
        }
        // Sorting makes the result independent of row order.
        std::sort(obs.begin(), obs.end());
        const double n = static_cast<double>(obs.size());
        row.mean = pairwise_sum(obs.data(), obs.size()) / n;
        std::vector<double> sq(obs.size());
        for (std::size_t i = 0; i < obs.size(); ++i) sq[i] = (obs[i] - row.mean) * (obs[i] - row.mean);
        row.std_dev = obs.size() > 1 ? std::sqrt(pairwise_sum(sq.data(), sq.size()) / (n - 1.0)) : 0.0;
        row.min = obs.front();
        row.max = obs.back();
        // Rounding can push a constant series' mean one ulp outside [min, max].
        row.mean = std::clamp(row.mean, row.min, row.max);
        if (row.min == row.max) {
            row.mean = row.min;
            row.std_dev = 0.0;
        }
        rows.push_back(row);
    }
    return rows;
}

CorrelationReport correlation_matrix(const PanelDataset& panel, const std::vector<std::string>& variables) {
    if (variables.size() < 2) throw ValidationError("correlation_matrix needs at least 2 variables");
    panel.require_series(variables);
    const auto k = static_cast<Eigen::Index>(variables.size());
    CorrelationReport rep;
    rep.variables = variables;
    rep.matrix = Eigen::MatrixXd::Identity(k, k);
    rep.pair_counts = Eigen::MatrixXi::Zero(k, k);

    std::vector<bool> degenerate(variables.size(), false);
    for (Eigen::Index a = 0; a < k; ++a) {
        const auto& xa = panel.series(variables[a]);
        double lo = 0.0, hi = 0.0;
        bool any = false;
        int count = 0;
        for (double v : xa) {
            if (is_missing(v)) continue;
            ++count;
            if (!any) lo = hi = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            any = true;
        }
        rep.pair_counts(a, a) = count;
        if (!any || lo == hi) {
            degenerate[a] = true;
            rep.zero_variance.push_back(variables[a]);
            rep.matrix(a, a) = kMissing;
        }
    }

    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = a + 1; b < k; ++b) {
            const auto& xa = panel.series(variables[a]);
            const auto& xb = panel.series(variables[b]);
            std::vector<double> va, vb;
            for (std::size_t i = 0; i < xa.size(); ++i) {
                if (is_missing(xa[i]) || is_missing(xb[i])) continue;
                va.push_back(xa[i]);
                vb.push_back(xb[i]);
            }
            rep.pair_counts(a, b) = rep.pair_counts(b, a) = static_cast<int>(va.size());
            double r = kMissing;
            if (!degenerate[a] && !degenerate[b] && va.size() >= 2) {
                const double n = static_cast<double>(va.size());
                const double ma = pairwise_sum(va.data(), va.size()) / n;
                const double mb = pairwise_sum(vb.data(), vb.size()) / n;
                double sab = 0.0, saa = 0.0, sbb = 0.0;
                for (std::size_t i = 0; i < va.size(); ++i) {
                    sab += (va[i] - ma) * (vb[i] - mb);
                    saa += (va[i] - ma) * (va[i] - ma);
                    sbb += (vb[i] - mb) * (vb[i] - mb);
                }
                if (saa > 0.0 && sbb > 0.0) r = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
            }
            rep.matrix(a, b) = rep.matrix(b, a) = r;
            if (!is_missing(r) && std::fabs(r) > kCorrelationScreen) rep.high_pairs.emplace_back(variables[a], variables[b]);
        }
    }
    return rep;
}

VifReport vif(const PanelDataset& panel, const std::vector<std::string>& regressors) {
    if (regressors.size() < 2) throw ValidationError("vif needs at least 2 regressors");
    panel.require_series(regressors);

    std::vector<std::size_t> rows;
    const std::size_t cells = panel.entity_count() * panel.period_count();
    for (std::size_t c = 0; c < cells; ++c) {
        bool ok = std::all_of(regressors.begin(), regressors.end(),
                              [&](const std::string& n) { return !is_missing(panel.series(n)[c]); });
        if (ok) rows.push_back(c);
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto k = static_cast<Eigen::Index>(regressors.size());
    if (n <= k) throw ValidationError("vif: not enough complete rows (" + std::to_string(n) + ")");

    Eigen::MatrixXd data(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        const auto& s = panel.series(regressors[j]);
        for (Eigen::Index i = 0; i < n; ++i) data(i, j) = s[rows[i]];
    }

    VifReport rep;
    rep.n_obs = rows.size();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
        Eigen::MatrixXd x(n, k);
        x.col(0).setOnes();
        Eigen::Index col = 1;
        for (Eigen::Index m = 0; m < k; ++m)
            if (m != j) x.col(col++) = data.col(m);
        const Eigen::VectorXd y = data.col(j);
        const double tss = (y.array() - y.mean()).square().sum();

        VifRow row;
        row.variable = regressors[j];
        double r2 = 1.0;
        if (tss > 0.0) {
            auto fit = least_squares(x, y, /*allow_drop=*/true);
            r2 = 1.0 - fit.ssr / tss;
        }
        if (r2 >= 1.0 - 1e-12) {
            row.vif = std::numeric_limits<double>::infinity();
            row.reciprocal = 0.0;
        } else {
            row.vif = 1.0 / (1.0 - r2);
            row.reciprocal = 1.0 - r2;
        }
        row.flagged = row.vif > kVifThreshold;
        rep.any_flagged = rep.any_flagged || row.flagged;
        sum += row.vif;
        rep.rows.push_back(row);
    }
    rep.mean_vif = sum / static_cast<double>(k);
    return rep;
}

}  // namespace panelgmm
