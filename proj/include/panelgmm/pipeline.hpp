#pragma once

#include "panelgmm/diagnostics.hpp"
#include "panelgmm/diff_gmm.hpp"
#include "panelgmm/report.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace panelgmm {

struct ModelConfig {
    std::string name;
    ModelSpec spec;
    std::vector<Method> methods{Method::pols, Method::fe, Method::re, Method::fgls, Method::diff_gmm};
    std::vector<std::string> endogeneity_suspects;
    std::vector<std::string> endogeneity_instruments;
    // Directive indices (into the explicit directives) for difference-in-Sargan;
    // dis_iv selects every iv-style directive.
    std::vector<std::size_t> dis_subset;
    bool dis_iv = true;
};

// Stage names accepted in [tests] select.
inline const std::vector<std::string> kPipelineStages{"describe", "correlation", "vif", "unitroot",
                                                      "specification", "autocorrelation", "heteroskedasticity",
                                                      "endogeneity", "gmm_validity"};

struct PipelineConfig {
    std::string bank_csv, macro_csv, panel_csv;
    std::vector<ModelConfig> models;
    GmmOptions gmm{std::nullopt, false, true};
    std::set<std::string> tests{kPipelineStages.begin(), kPipelineStages.end()};
    UnitRootOptions unitroot;
    ReportFormat format = ReportFormat::text;
    std::string out;
    double level = 0.05;   // assumption tests; specification tests use kSpecificationLevel
    std::uint64_t seed = 1;
};

// INI text:
//   [input]   panel = f.csv | bank = b.csv, macro = m.csv
//   [output]  format = text|json|csv, out = path, level = 0.01|0.05|0.10
//   [gmm]     max_lag_depth = auto|N, collapse = bool, robust = bool
//   [tests]   select = comma list of stages (empty for none), unitroot_lags,
//             unitroot_trend, unitroot_policy = all_four|any|inverse_chi2, seed
//   [model.NAME] dependent, regressors, lags, methods (default all; static
//             models skip gmm), period_fixed, iv, gmm_iv,
//             endogeneity, endogeneity_instruments, dis_subset = iv|none|i,j
// Relative paths resolve against `base_dir`.
PipelineConfig parse_config(const std::string& text, const std::string& base_dir = ".");
PipelineConfig load_config(const std::string& path);

// Bank + macro through compute_ratios, or a prebuilt panel. Ratio rejections
// and regulatory flags are appended to `messages`.
PanelDataset load_panel(const PipelineConfig& config, std::vector<std::string>* messages = nullptr);

Report run_pipeline(const PipelineConfig& config);
Report run_pipeline(const PipelineConfig& config, const PanelDataset& panel);

// Table 6 arbitration: F and BP-LM decide against pooled OLS; when both reject
// Hausman picks between "Fixed Effect" and "Random Effect".
std::string specification_choice(const TestResult& f, const TestResult& bplm, const TestResult& hausman);

}  // namespace panelgmm
