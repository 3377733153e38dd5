#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "creditlift/datagen.hpp"
#include "creditlift/learners.hpp"
#include "creditlift/metalearners.hpp"

namespace creditlift {

struct PipelinePaths {
    std::string out_dir = ".";
    std::string portfolio;   // empty = out_dir/portfolio.csv
    std::string truth;       // empty = derived from the portfolio path
    std::string defaulters;  // optional CCF-estimation input
};

struct PipelineConfig {
    PipelinePaths paths;
    GenConfig gen;
    std::vector<double> cut_points;  // empty = gen.cut_points
    double trim_eps = 0.05;
    int folds = 5;
    int correction_order = 1;
    int bootstrap_b = 200;
    double cvar_p = 0.95;
    double holdout_frac = 0.2;
    double lgd = 0.75;
    double ccf = 0.35;  // fallback when estimation is off or yields nothing
    bool estimate_ccf = false;
    std::string policy = "all";  // cl | cl-cvar | cl-cvar-fl | predict-only | all
    LearnerSpec propensity = LearnerSpec::Logistic();
    LearnerSpec forward = LearnerSpec::Gbm(200, 0.1, 3);
    std::vector<CateMethodSpec> candidates;  // empty = default_candidates()
    std::optional<CateMethodSpec> risk_method;  // unset = bootstrap the selected method
    std::uint64_t seed = 1;
};

std::vector<CateMethodSpec> default_candidates();

PipelineConfig config_from_json(const std::string& text);
std::string config_to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::string& path);
void validate_config(const PipelineConfig& config);

// Flag values win over config-file values.
struct FlagOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> policy;
    std::optional<std::vector<double>> cut_points;
    std::optional<double> trim_eps;
    std::optional<double> cvar_p;
    std::optional<int> bootstrap_b;
    std::optional<std::string> out_dir;
};

void apply_overrides(PipelineConfig& config, const FlagOverrides& flags);

std::vector<double> parse_cut_points_csv(const std::string& text);

// Artifact locations inside the output directory.
std::string portfolio_path(const PipelineConfig& config);
std::string truth_path(const PipelineConfig& config);
std::string partition_path(const PipelineConfig& config);
std::string selection_path(const PipelineConfig& config);
std::string forward_path(const PipelineConfig& config);
std::string decisions_path(const PipelineConfig& config, const std::string& policy);
std::string backtest_path(const PipelineConfig& config, const std::string& policy, bool markdown);
std::string report_path(const PipelineConfig& config);

struct StageResult {
    std::vector<std::string> artifacts;
};

StageResult run_simulate(const PipelineConfig& config);
StageResult run_discretize(const PipelineConfig& config);
StageResult run_select(const PipelineConfig& config);
StageResult run_recommend(const PipelineConfig& config);
StageResult run_evaluate(const PipelineConfig& config);
StageResult run_report(const PipelineConfig& config);

}  // namespace creditlift
