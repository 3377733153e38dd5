#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "creditlift/learners.hpp"
#include "creditlift/treatments.hpp"

namespace creditlift {

// Effect estimators for one (beta_j vs control) contrast on overlap data.

enum class CateMethod { direct, two_model, causal_tree, x_learner, r_learner, causal_forest_dml };

std::string to_string(CateMethod method);
CateMethod cate_method_from_string(const std::string& name);

struct CateMethodSpec {
    CateMethod method = CateMethod::two_model;
    LearnerSpec outcome_base = LearnerSpec::Forest(20, 6, 25, 0.5);  // mu0/mu1, direct model, m-hat
    LearnerSpec effect_base = LearnerSpec::Forest(20, 5, 25, 0.5);  // tau0/tau1, pseudo-outcome stage
    LearnerSpec propensity_base = LearnerSpec::Logistic();      // internal g
    int cross_fit_folds = 5;
    std::uint64_t seed = 0;
    std::string name;  // report label; describe() falls back to the method name

    std::string describe() const { return name.empty() ? to_string(method) : name; }
};

// Canonical hyperparameters for each method, with a self-describing name.
CateMethodSpec default_method_spec(CateMethod method, std::uint64_t seed = 0);

struct CateModel {
    int level = 0;
    double beta = 0.0;
    CateMethodSpec spec;
    PropensityModel gate;  // Undefined exactly when the band check fails

    // Fitted internals; populated per method.
    RegressorPtr mu0, mu1;         // two_model, x_learner
    RegressorPtr direct_model;     // direct
    bool direct_interacted = false;
    RegressorPtr tau0, tau1;       // x_learner
    ClassifierPtr g;               // x_learner weighting
    RegressorPtr effect_model;     // causal_tree, r_learner, causal_forest_dml

    // Effect estimate ignoring the overlap gate.
    double predict_raw(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    Eigen::VectorXd predict_raw_all(const Eigen::Ref<const Eigen::MatrixXd>& X) const;

    // Gated estimate; nullopt means "Not defined" for this x at this level.
    std::optional<double> predict_cate(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

CateModel fit_cate(const CateMethodSpec& spec, const OverlapDataset& data, const PropensityModel& gate);

// Deterministic shuffled round-robin fold labels in [0, folds).
std::vector<int> fold_assignment(Eigen::Index n, int folds, std::uint64_t seed);

// Out-of-fold residuals y - m(x) and t - g(x) (g clamped to [0.01, 0.99])
// shared by the R-learner and the orthogonalized forest.
struct Residualized {
    Eigen::VectorXd y_resid;
    Eigen::VectorXd t_resid;
};
Residualized cross_fit_residuals(const CateMethodSpec& spec, const OverlapDataset& data);

// Empirical orthogonalized objective mean((y_resid - tau * t_resid)^2).
double r_objective(const Residualized& res, const Eigen::Ref<const Eigen::VectorXd>& tau);

}  // namespace creditlift
