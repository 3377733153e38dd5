#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "creditlift/datagen.hpp"
#include "creditlift/policy.hpp"
#include "creditlift/treatments.hpp"
#include "creditlift/types.hpp"

namespace creditlift {

// Agreement between the recommended level (GS) and the historical policy's
// level (CPP) for one customer.
enum class Scenario { i, ii, iii, iv, v };

std::string to_string(Scenario s);

// I: both raise to the same level. II: both raise, different levels.
// III: only the recommendation raises. IV: only the historical policy raises.
// V: neither raises.
Scenario classify_scenario(int gs_level, int cpp_level);

struct ScenarioRow {
    std::int64_t size = 0;
    std::optional<double> avg_ep_p;            // mean six-month profit
    std::optional<double> avg_ep_p_ratio_pct;  // mean of per-customer ep_m6 / limit_m3, in percent
    std::optional<double> avg_ep_r;            // mean three-month profit
    std::optional<double> avg_ep_r_ratio_pct;  // mean of per-customer ep_m3 / limit_m3, in percent
};

struct ScenarioMetrics {
    std::array<ScenarioRow, 5> rows;  // indexed by Scenario
    ScenarioRow all;
};

// Decisions, historical levels, and records must be positionally aligned by
// customer id.
ScenarioMetrics evaluate(const std::vector<PolicyDecision>& decisions,
                         const std::vector<int>& cpp_levels,
                         const std::vector<CustomerRecord>& records);

// Sum of true potential outcomes at each customer's chosen level.
double oracle_policy_value(const GroundTruth& truth, const std::vector<PolicyDecision>& decisions);

std::string scenario_markdown(const ScenarioMetrics& metrics);
std::string scenario_json(const ScenarioMetrics& metrics);

// Count table of assigned levels (0..k) with shares; used for both the
// historical policy and recommended policies.
std::string level_distribution_markdown(const std::vector<int>& levels,
                                        const DosagePartition& partition,
                                        const std::string& caption);

}  // namespace creditlift
