#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "creditlift/metalearners.hpp"

namespace creditlift {

// Plug-in stand-in for the unknown truth, fitted on one validation fold:
// outcome surfaces mu0/mu1, propensity g, and the fold rows themselves as the
// empirical feature distribution.
struct PluginDistribution {
    RegressorPtr mu0;
    RegressorPtr mu1;
    ClassifierPtr g;

    double tau_tilde(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        return mu1->predict_one(x) - mu0->predict_one(x);
    }
};

PluginDistribution fit_plugin(const OverlapDataset& fold_data, std::uint64_t seed);

struct PeheEstimate {
    double mean = 0.0;             // mean of per-fold root-PEHE estimates
    double sd = 0.0;               // sample standard deviation across folds
    std::vector<double> per_fold;  // one root-PEHE estimate per fold
};

// Cross-validated root-PEHE: per fold, the candidate is refit on the
// complement and scored on the fold under the fold's plug-in distribution.
// correction_order 0 is the pure plug-in loss; order 1 subtracts the
// first-order influence-function bias term built from fold residuals.
PeheEstimate estimate_pehe(const CateMethodSpec& spec, const OverlapDataset& data,
                           const PropensityModel& gate, int folds, int correction_order,
                           std::uint64_t seed);

// Same fold assignment and per-fold refits as estimate_pehe, but scored
// against known effects (tau_true aligned with data rows) instead of a
// plug-in distribution. Yardstick for validating estimates on synthetic
// data where the effects are known.
PeheEstimate estimate_pehe_truth(const CateMethodSpec& spec, const OverlapDataset& data,
                                 const PropensityModel& gate, const Eigen::VectorXd& tau_true,
                                 int folds, std::uint64_t seed);

struct MethodScore {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
};

struct LevelSelection {
    int level = 0;
    double beta = 0.0;
    std::vector<MethodScore> scores;  // candidate order
    std::vector<int> ranking;         // candidate indices, best first
    int chosen = 0;                   // ranking.front()
};

// Candidates ranked ascending by estimated root-PEHE; ties broken by lower SD
// then candidate order.
LevelSelection select_model(const std::vector<CateMethodSpec>& candidates,
                            const OverlapDataset& data, const PropensityModel& gate, int folds,
                            int correction_order, std::uint64_t seed);

// One table across levels, mirroring the selection-report shape: one row per
// method, one column per level, cells "mean +/- SD".
struct SelectionReport {
    std::vector<std::string> methods;
    std::vector<LevelSelection> per_level;
};

std::string selection_report_json(const SelectionReport& report);
std::string selection_report_markdown(const SelectionReport& report);
SelectionReport selection_report_from_json(const std::string& text);

}  // namespace creditlift
