#include "panelgmm/model.hpp"

#include "panelgmm/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace panelgmm {

TermRef TermRef::parse(const std::string& text) {
    TermRef t;
    std::size_t pos = 0;
    if (text.size() > 1 && text[0] == 'L') {
        std::size_t i = 1;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        if (i < text.size() && text[i] == '.') {
            t.lag = i == 1 ? 1 : std::stoi(text.substr(1, i - 1));
            pos = i + 1;
        }
    }
    t.name = text.substr(pos);
    if (t.name.empty()) throw ValidationError("empty series name in term '" + text + "'");
    for (char c : t.name)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_'))
            throw ValidationError("invalid character in term '" + text + "'");
    return t;
}

std::string TermRef::str() const {
    if (lag == 0) return name;
    if (lag == 1) return "L." + name;
    return "L" + std::to_string(lag) + "." + name;
}

double term_value(const PanelDataset& panel, const TermRef& term, std::size_t entity, std::size_t period) {
    if (static_cast<std::size_t>(term.lag) > period) return kMissing;
    return panel.value(term.name, entity, period - static_cast<std::size_t>(term.lag));
}

std::vector<std::string> ModelSpec::slope_names() const {
    std::vector<std::string> names;
    for (int l = 1; l <= dep_lag_order; ++l) names.push_back(TermRef{dependent, l}.str());
    for (const auto& r : regressors) names.push_back(TermRef::parse(r).str());
    return names;
}

void ModelSpec::validate(const PanelDataset& panel) const {
    if (dependent.empty()) throw ValidationError("model has no dependent variable");
    if (dep_lag_order < 0) throw ValidationError("dependent lag order must be non-negative");
    (void)panel.series(dependent);
    for (const auto& r : regressors) {
        TermRef t = TermRef::parse(r);
        if (t.name == dependent && t.lag == 0)
            throw ValidationError("dependent variable '" + dependent + "' listed among regressors");
        (void)panel.series(t.name);
    }
    auto names = slope_names();
    std::vector<std::string> sorted = names;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw ValidationError("duplicate regressor in model specification");
}

std::string to_string(Method m) {
    switch (m) {
        case Method::pols: return "pols";
        case Method::fe: return "fe";
        case Method::re: return "re";
        case Method::fgls: return "fgls";
        case Method::diff_gmm: return "gmm";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    if (s == "pols") return Method::pols;
    if (s == "fe") return Method::fe;
    if (s == "re") return Method::re;
    if (s == "fgls") return Method::fgls;
    if (s == "gmm" || s == "diff_gmm") return Method::diff_gmm;
    throw ValidationError("unknown method '" + s + "' (expected pols, fe, re, fgls, gmm)");
}

TestResult make_test(std::string name, double statistic, DistributionRef dist, Tail tail, std::string h0,
                     double level, const std::string& reject_text, const std::string& accept_text) {
    TestResult t;
    t.name = std::move(name);
    t.statistic = statistic;
    t.distribution = dist;
    t.tail = tail;
    t.h0 = std::move(h0);
    t.level = level;
    double eval = statistic;
    // Chi-square and F statistics can come out marginally negative from
    // cancellation; their tail probability is then 1.
    if ((dist.family == Family::chi_square || dist.family == Family::f || dist.family == Family::chibar2_01) &&
        eval < 0.0)
        eval = 0.0;
    if (std::isinf(eval) && eval > 0.0)
        t.p_value = tail == Tail::lower ? 1.0 : 0.0;
    else
        t.p_value = tail_probability(dist, eval, tail);
    t.decision = t.p_value < level ? reject_text : accept_text;
    return t;
}

TestResult undefined_test(std::string name, DistributionRef dist, std::string h0, std::string note) {
    TestResult t;
    t.name = std::move(name);
    t.distribution = dist;
    t.h0 = std::move(h0);
    t.defined = false;
    t.statistic = kMissing;
    t.p_value = kMissing;
    t.decision = "undefined";
    t.note = std::move(note);
    return t;
}

std::optional<std::size_t> EstimationResult::index_of(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
}

double EstimationResult::coef(const std::string& name) const {
    auto i = index_of(name);
    if (!i) throw ValidationError("no coefficient named '" + name + "'");
    return coefficients(static_cast<Eigen::Index>(*i));
}

double EstimationResult::se(const std::string& name) const {
    auto i = index_of(name);
    if (!i) throw ValidationError("no coefficient named '" + name + "'");
    return std_errors(static_cast<Eigen::Index>(*i));
}

bool is_period_effect(const std::string& name) { return name.rfind(kPeriodEffectPrefix, 0) == 0; }

void finalize_inference(EstimationResult& r) {
    const Eigen::Index k = r.coefficients.size();
    r.covariance = 0.5 * (r.covariance + r.covariance.transpose()).eval();
    r.std_errors = r.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    r.stats.resize(k);
    r.p_values.resize(k);
    const DistributionRef ref =
        r.z_stats || r.fit.df_resid <= 0.0 ? DistributionRef::normal() : DistributionRef::student_t(r.fit.df_resid);
    for (Eigen::Index j = 0; j < k; ++j) {
        const double se = r.std_errors(j);
        if (se > 0.0) {
            r.stats(j) = r.coefficients(j) / se;
            r.p_values(j) = tail_probability(ref, r.stats(j), Tail::two_sided);
        } else {
            r.stats(j) = kMissing;
            r.p_values(j) = kMissing;
        }
    }
}

Design build_design(const PanelDataset& panel, const ModelSpec& spec, std::size_t min_obs_per_entity) {
    spec.validate(panel);
    std::vector<TermRef> terms;
    for (int l = 1; l <= spec.dep_lag_order; ++l) terms.push_back({spec.dependent, l});
    for (const auto& r : spec.regressors) terms.push_back(TermRef::parse(r));
    const TermRef dep{spec.dependent, 0};

    Design d;
    d.names = spec.slope_names();
    std::vector<double> ys;
    std::vector<std::vector<double>> xs;
    for (std::size_t e = 0; e < panel.entity_count(); ++e) {
        std::vector<Observation> rows;
        std::vector<double> ye;
        std::vector<std::vector<double>> xe;
        for (std::size_t t = 0; t < panel.period_count(); ++t) {
            double yv = term_value(panel, dep, e, t);
            if (is_missing(yv)) continue;
            std::vector<double> row;
            row.reserve(terms.size());
            bool ok = true;
            for (const auto& term : terms) {
                double v = term_value(panel, term, e, t);
                if (is_missing(v)) {
                    ok = false;
                    break;
                }
                row.push_back(v);
            }
            if (!ok) continue;
            rows.push_back({e, t});
            ye.push_back(yv);
            xe.push_back(std::move(row));
        }
        if (rows.empty()) continue;
        if (rows.size() < min_obs_per_entity) {
            d.dropped_entities.push_back(panel.entities()[e]);
            continue;
        }
        d.entity_start.push_back(d.rows.size());
        d.entity_ids.push_back(e);
        d.rows.insert(d.rows.end(), rows.begin(), rows.end());
        ys.insert(ys.end(), ye.begin(), ye.end());
        for (auto& r : xe) xs.push_back(std::move(r));
    }
    d.entity_start.push_back(d.rows.size());

    const auto n = static_cast<Eigen::Index>(d.rows.size());
    const auto k = static_cast<Eigen::Index>(terms.size());
    d.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
    d.x.resize(n, k);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < k; ++j) d.x(i, j) = xs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return d;
}

}  // namespace panelgmm
