#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "creditlift/learners.hpp"
#include "creditlift/risk.hpp"
#include "creditlift/treatments.hpp"
#include "creditlift/types.hpp"

namespace creditlift {

enum class Criterion { cl, cl_cvar, cl_cvar_fl, predict_only };

std::string to_string(Criterion c);
Criterion criterion_from_string(const std::string& name);

struct PolicyDecision {
    std::int64_t id = 0;
    Criterion criterion = Criterion::cl;
    int chosen_level = 0;      // 0 = keep the current limit
    double chosen_dosage = 0.0;
    std::vector<std::optional<double>> per_level_value;  // slot j-1 = level j; nullopt = undefined
    std::optional<double> y_r;
    std::optional<double> y_p_hat;
};

// Shared argmax core: control is pinned at value 0, undefined levels are
// excluded, ties resolve to the smallest dosage.
PolicyDecision decide_from_values(const std::vector<std::optional<double>>& values,
                                  const DosagePartition& partition, std::int64_t id,
                                  Criterion criterion);

// Point-estimate policy: argmax over per-level ITE estimates.
PolicyDecision recommend_cl(const std::vector<std::optional<double>>& ite_values,
                            const DosagePartition& partition, std::int64_t id);

// Risk-averse policy: argmax over per-level CVaRs of the bootstrap ITE
// distributions.
PolicyDecision recommend_cl_cvar(const std::vector<std::optional<BootstrapDistribution>>& dists,
                                 double p, const DosagePartition& partition, std::int64_t id);

// Profit predictor Y_P(x, dosage): features with the treatment dosage
// appended, trained on observed six-month profits.
struct ForwardModel {
    RegressorPtr model;
    double holdout_rmse = 0.0;
    double holdout_sd = 0.0;  // SD of held-out targets, the rmse yardstick

    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x, double dosage) const;
};

ForwardModel fit_forward_model(const std::vector<CustomerRecord>& records,
                               const DosagePartition& partition, const LearnerSpec& spec,
                               double holdout_frac, std::uint64_t seed);

// Final-layer check on top of an upstream risk-averse decision: downgrade to
// control when the upstream keeps it, or when current profit y_r is at least
// the predicted profit at the proposed dosage.
PolicyDecision recommend_cl_cvar_fl(const PolicyDecision& upstream, double y_r,
                                    const ForwardModel& forward,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& x);

// Pure prediction baseline: argmax of predicted profit across all defined
// levels, but only if it strictly beats current profit y_r.
PolicyDecision recommend_prediction_only(const ForwardModel& forward,
                                         const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                         const DosagePartition& partition, double y_r,
                                         std::int64_t id);

// Decisions CSV: id,criterion,chosen_level,chosen_dosage,value_per_level_json,y_r,y_p_hat
void write_decisions(const std::vector<PolicyDecision>& decisions, const std::string& path);
std::vector<PolicyDecision> load_decisions(const std::string& path);

}  // namespace creditlift
