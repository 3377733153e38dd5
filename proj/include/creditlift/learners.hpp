#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <string>

namespace creditlift {

// Self-contained base learners. Everything is deterministic under the spec
// seed; randomness inside forests flows through counter-derived streams.

enum class LearnerKind { linear, ridge, logistic, tree, forest, gbm };

struct LearnerSpec {
    LearnerKind kind = LearnerKind::linear;
    double lambda = 1e-3;        // ridge / logistic penalty
    int max_depth = 6;           // tree / forest / gbm
    int min_leaf = 5;            // tree / forest / gbm
    int n_trees = 20;            // forest
    double feature_frac = 1.0;   // forest, per-node feature subsampling
    bool bagging = true;         // forest, bootstrap resampling on/off
    int n_rounds = 50;           // gbm
    double learning_rate = 0.1;  // gbm
    std::uint64_t seed = 0;

    static LearnerSpec Linear();
    static LearnerSpec Ridge(double lambda);
    static LearnerSpec Logistic(double lambda = 1e-3);
    static LearnerSpec Tree(int max_depth, int min_leaf);
    static LearnerSpec Forest(int n_trees, int max_depth, int min_leaf, double feature_frac = 1.0,
                              bool bagging = true);
    static LearnerSpec Gbm(int n_rounds, double learning_rate, int max_depth);

    // Human-readable form, e.g. "forest(n=20,depth=6,leaf=5,frac=0.5)".
    std::string describe() const;
};

class Regressor {
public:
    virtual ~Regressor() = default;

    double predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    Eigen::VectorXd predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
    int n_features() const { return n_features_; }

protected:
    explicit Regressor(int n_features) : n_features_(n_features) {}

private:
    virtual double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const = 0;
    int n_features_;
};

class Classifier {
public:
    virtual ~Classifier() = default;

    // Probability of the positive class, always inside [0,1].
    double predict_proba_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    Eigen::VectorXd predict_proba(const Eigen::Ref<const Eigen::MatrixXd>& X) const;
    int n_features() const { return n_features_; }

protected:
    explicit Classifier(int n_features) : n_features_(n_features) {}

private:
    virtual double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const = 0;
    int n_features_;
};

using RegressorPtr = std::shared_ptr<const Regressor>;
using ClassifierPtr = std::shared_ptr<const Classifier>;

// Unweighted fit; rows(X) == len(y) >= 2 required.
RegressorPtr fit_regressor(const LearnerSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::VectorXd>& y);

// Weighted fit; weights nonnegative, at least two rows with positive weight.
RegressorPtr fit_regressor(const LearnerSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& w);

// Binary classifier on 0/1 labels; both classes must be present.
ClassifierPtr fit_classifier(const LearnerSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                             const Eigen::Ref<const Eigen::VectorXd>& y01);

double rmse(const Regressor& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
            const Eigen::Ref<const Eigen::VectorXd>& y);

}  // namespace creditlift
