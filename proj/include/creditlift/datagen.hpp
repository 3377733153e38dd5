#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "creditlift/types.hpp"

namespace creditlift {

enum class EffectShape { zero, constant, linear, nonlinear };

std::string to_string(EffectShape shape);
EffectShape effect_shape_from_string(const std::string& name);

// Treated dosages (factors of increase) live in [kDosageMin, kDosageMax].
inline constexpr double kDosageMin = 1.05;
inline constexpr double kDosageMax = 2.5;

struct GenConfig {
    int n_customers = 10000;
    int k_levels = 6;  // must equal cut_points.size() + 1
    std::vector<double> cut_points = {1.25, 1.5, 1.75, 2.0, 2.25};
    EffectShape effect_shape = EffectShape::nonlinear;
    double effect_scale = 5.0;  // delta for constant; amplitude otherwise
    double confounding_strength = 1.0;
    double overlap_violation_fraction = 0.0;  // top score quantile forced to control
    double noise_sd = 5.0;
    std::uint64_t seed = 1;
};

// Potential outcomes and assignment probabilities for every generated
// customer, aligned with the record vector by position (and by id).
struct GroundTruth {
    std::vector<std::int64_t> ids;
    Eigen::VectorXd y0;          // Y(0)
    Eigen::MatrixXd y_level;     // n x k, column j-1 holds Y(beta_j)
    Eigen::MatrixXd cate;        // n x k, column j-1 holds tau_j(x)
    Eigen::MatrixXd propensity;  // n x (k+1), column 0 is the control probability

    int k() const { return static_cast<int>(cate.cols()); }
};

std::pair<std::vector<CustomerRecord>, GroundTruth> generate_portfolio(const GenConfig& config);

// Level frequencies [P(control), P(level 1), ...] implied by the config at
// confounding_strength 0 and no overlap violation.
std::vector<double> theoretical_marginals(const GenConfig& config);

void write_ground_truth(const GroundTruth& truth, const std::string& path);
GroundTruth load_ground_truth(const std::string& path);

// portfolio.csv -> portfolio.truth.csv
std::string truth_path_for(const std::string& portfolio_path);

}  // namespace creditlift
