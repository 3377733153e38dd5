#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "creditlift/learners.hpp"
#include "creditlift/types.hpp"

namespace creditlift {

// Positive dosages are binned into (-inf,t1], (t1,t2], ..., (t_{k-1},inf);
// level j's representative dosage beta_j is the mean of its bin. Level 0 is
// reserved for the untreated (dosage exactly 0).
struct DosagePartition {
    std::vector<double> cut_points;    // strictly ascending
    std::vector<double> levels;        // beta_1..beta_k; NaN marks an empty bin
    std::vector<std::int64_t> counts;  // treated rows per bin

    int k() const { return static_cast<int>(levels.size()); }
    // Empty bins keep their index but are flagged undefined.
    bool defined(int level) const { return level >= 1 && level <= k() && counts[level - 1] > 0; }
    double dosage_of(int level) const { return level == 0 ? 0.0 : levels[level - 1]; }
};

DosagePartition discretize(const std::vector<double>& dosages, const std::vector<double>& cut_points);

// 0 iff dosage == 0; otherwise the 1-based bin index (upper bounds inclusive).
int assign_level(double dosage, const DosagePartition& partition);

std::string partition_to_json(const DosagePartition& partition);
DosagePartition partition_from_json(const std::string& text);

// Per-level propensity g_j(x) = P(T = beta_j | X = x) fitted on rows
// restricted to {control, level j}.
struct PropensityModel {
    int level = 0;
    double trim_eps = 0.05;
    ClassifierPtr model;

    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        return model->predict_proba_one(x);
    }
    bool in_band(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        const double g = predict(x);
        // Overlap proper is strict; the band adds symmetric trimming on top.
        return g > 0.0 && g < 1.0 && g >= trim_eps && g <= 1.0 - trim_eps;
    }
};

// Rows restricted to {control, level j}, before overlap trimming.
struct LevelSlice {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;  // post-treatment outcome EP_P
    Eigen::VectorXd t;  // 1 = level j, 0 = control
    std::vector<std::int64_t> ids;
    int level = 0;
    double beta = 0.0;
};

LevelSlice make_level_slice(const std::vector<CustomerRecord>& records,
                            const DosagePartition& partition, int level);

// The slice further restricted to trim_eps <= g(x) <= 1 - trim_eps.
struct OverlapDataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::VectorXd t;
    Eigen::VectorXd g;
    std::vector<std::int64_t> ids;
    int level = 0;
    double beta = 0.0;
    double trim_eps = 0.05;

    Eigen::Index n() const { return y.size(); }
};

PropensityModel fit_propensity(const LevelSlice& slice, const LearnerSpec& spec, double trim_eps);
OverlapDataset overlap_subset(const LevelSlice& slice, const PropensityModel& pm);
OverlapDataset overlap_subset(const OverlapDataset& data, const PropensityModel& pm);

}  // namespace creditlift
