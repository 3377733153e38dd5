#include "creditlift/learners.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "creditlift/csv.hpp"
#include "creditlift/rng.hpp"
#include "tree_internal.hpp"

namespace creditlift {

// ---------------------------------------------------------------------------
// LearnerSpec

LearnerSpec LearnerSpec::Linear() {
    LearnerSpec s;
    s.kind = LearnerKind::linear;
    return s;
}

LearnerSpec LearnerSpec::Ridge(double lambda) {
    LearnerSpec s;
    s.kind = LearnerKind::ridge;
    s.lambda = lambda;
    return s;
}

LearnerSpec LearnerSpec::Logistic(double lambda) {
    LearnerSpec s;
    s.kind = LearnerKind::logistic;
    s.lambda = lambda;
    return s;
}

LearnerSpec LearnerSpec::Tree(int max_depth, int min_leaf) {
    LearnerSpec s;
    s.kind = LearnerKind::tree;
    s.max_depth = max_depth;
    s.min_leaf = min_leaf;
    return s;
}

LearnerSpec LearnerSpec::Forest(int n_trees, int max_depth, int min_leaf, double feature_frac,
                                bool bagging) {
    LearnerSpec s;
    s.kind = LearnerKind::forest;
    s.n_trees = n_trees;
    s.max_depth = max_depth;
    s.min_leaf = min_leaf;
    s.feature_frac = feature_frac;
    s.bagging = bagging;
    return s;
}

LearnerSpec LearnerSpec::Gbm(int n_rounds, double learning_rate, int max_depth) {
    LearnerSpec s;
    s.kind = LearnerKind::gbm;
    s.n_rounds = n_rounds;
    s.learning_rate = learning_rate;
    s.max_depth = max_depth;
    return s;
}

std::string LearnerSpec::describe() const {
    using csv::format_double;
    switch (kind) {
        case LearnerKind::linear: return "linear";
        case LearnerKind::ridge: return "ridge(l=" + format_double(lambda) + ")";
        case LearnerKind::logistic: return "logistic(l=" + format_double(lambda) + ")";
        case LearnerKind::tree:
            return "tree(depth=" + std::to_string(max_depth) + ",leaf=" + std::to_string(min_leaf) + ")";
        case LearnerKind::forest:
            return "forest(n=" + std::to_string(n_trees) + ",depth=" + std::to_string(max_depth) +
                   ",leaf=" + std::to_string(min_leaf) + ",frac=" + format_double(feature_frac) +
                   ",bag=" + (bagging ? std::string("on") : std::string("off")) + ")";
        case LearnerKind::gbm:
            return "gbm(rounds=" + std::to_string(n_rounds) + ",lr=" + format_double(learning_rate) +
                   ",depth=" + std::to_string(max_depth) + ")";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Checked prediction wrappers

namespace {

void check_features(int expect, Eigen::Index got, const char* who) {
    if (got != expect)
        throw std::invalid_argument(std::string(who) + ": feature dimension mismatch, model expects " +
                                    std::to_string(expect) + ", got " + std::to_string(got));
}

}  // namespace

double Regressor::predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    check_features(n_features_, x.size(), "Regressor::predict");
    const double v = predict_row(x);
    if (!std::isfinite(v)) throw std::runtime_error("Regressor::predict: non-finite prediction");
    return v;
}

Eigen::VectorXd Regressor::predict(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    check_features(n_features_, X.cols(), "Regressor::predict");
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_one(X.row(i));
    return out;
}

double Classifier::predict_proba_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    check_features(n_features_, x.size(), "Classifier::predict_proba");
    const double v = predict_row(x);
    if (!std::isfinite(v)) throw std::runtime_error("Classifier::predict_proba: non-finite prediction");
    return std::clamp(v, 0.0, 1.0);
}

Eigen::VectorXd Classifier::predict_proba(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    check_features(n_features_, X.cols(), "Classifier::predict_proba");
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_proba_one(X.row(i));
    return out;
}

// ---------------------------------------------------------------------------
// Linear and ridge

namespace {

class LinearModel final : public Regressor {
public:
    LinearModel(Eigen::VectorXd coef, double intercept, int p)
        : Regressor(p), coef_(std::move(coef)), intercept_(intercept) {}

private:
    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const override {
        return coef_.dot(x) + intercept_;
    }
    Eigen::VectorXd coef_;
    double intercept_;
};

RegressorPtr fit_linear(const Eigen::Ref<const Eigen::MatrixXd>& X,
                        const Eigen::Ref<const Eigen::VectorXd>& y,
                        const Eigen::Ref<const Eigen::VectorXd>& w, double lambda) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    Eigen::MatrixXd A(n, p + 1);
    A.leftCols(p) = X;
    A.col(p).setOnes();
    const Eigen::ArrayXd scale = w.array().sqrt();
    A.array().colwise() *= scale;
    const Eigen::VectorXd ys = (y.array() * scale).matrix();
    Eigen::VectorXd beta;
    if (lambda > 0) {
        Eigen::MatrixXd gram = A.transpose() * A;
        for (Eigen::Index j = 0; j < p; ++j) gram(j, j) += lambda;  // intercept unpenalized
        beta = gram.ldlt().solve(A.transpose() * ys);
    } else {
        beta = A.colPivHouseholderQr().solve(ys);
    }
    return std::make_shared<LinearModel>(beta.head(p), beta(p), static_cast<int>(p));
}

// ---------------------------------------------------------------------------
// Logistic (damped Newton on standardized features)

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

class LogisticModel final : public Classifier {
public:
    LogisticModel(Eigen::VectorXd coef, double intercept, Eigen::VectorXd mu, Eigen::VectorXd sd, int p)
        : Classifier(p), coef_(std::move(coef)), intercept_(intercept), mu_(std::move(mu)),
          sd_(std::move(sd)) {}

private:
    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const override {
        double z = intercept_;
        for (Eigen::Index j = 0; j < coef_.size(); ++j) z += coef_(j) * (x(j) - mu_(j)) / sd_(j);
        return sigmoid(z);
    }
    Eigen::VectorXd coef_;
    double intercept_;
    Eigen::VectorXd mu_;
    Eigen::VectorXd sd_;
};

ClassifierPtr fit_logistic(const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::VectorXd>& y, double lambda) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    const Eigen::VectorXd mu = X.colwise().mean();
    Eigen::VectorXd sd(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double var = (X.col(j).array() - mu(j)).square().mean();
        sd(j) = var > 0 ? std::sqrt(var) : 1.0;
    }
    Eigen::MatrixXd Z(n, p + 1);
    for (Eigen::Index j = 0; j < p; ++j) Z.col(j) = (X.col(j).array() - mu(j)) / sd(j);
    Z.col(p).setOnes();

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
    const auto loss = [&](const Eigen::VectorXd& b) {
        const Eigen::VectorXd z = Z * b;
        double l = 0;
        for (Eigen::Index i = 0; i < n; ++i) l += softplus(z(i)) - y(i) * z(i);
        return l + 0.5 * lambda * b.head(p).squaredNorm();
    };
    double cur = loss(beta);
    const double grad_tol = 1e-8 * std::max(1.0, static_cast<double>(n));
    for (int iter = 0; iter < 200; ++iter) {
        const Eigen::VectorXd z = Z * beta;
        Eigen::VectorXd prob(n), s(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            prob(i) = sigmoid(z(i));
            s(i) = std::max(prob(i) * (1.0 - prob(i)), 1e-12);
        }
        Eigen::VectorXd grad = Z.transpose() * (prob - y);
        grad.head(p) += lambda * beta.head(p);
        if (grad.lpNorm<Eigen::Infinity>() <= grad_tol) break;
        Eigen::MatrixXd hess = Z.transpose() * s.asDiagonal() * Z;
        for (Eigen::Index j = 0; j < p; ++j) hess(j, j) += lambda;
        hess.diagonal().array() += 1e-12;
        const Eigen::VectorXd step = hess.ldlt().solve(grad);
        double t = 1.0;
        Eigen::VectorXd cand = beta - t * step;
        double cand_loss = loss(cand);
        while (cand_loss > cur && t > 1e-10) {
            t *= 0.5;
            cand = beta - t * step;
            cand_loss = loss(cand);
        }
        if (cand_loss > cur) break;  // no descent left at machine precision
        const double gain = cur - cand_loss;
        beta = cand;
        cur = cand_loss;
        if (gain <= 1e-12 * (std::abs(cur) + 1.0)) break;
    }
    return std::make_shared<LogisticModel>(beta.head(p), beta(p), mu, sd, static_cast<int>(p));
}

// ---------------------------------------------------------------------------
// Tree / forest / gbm

class TreeModel final : public Regressor {
public:
    TreeModel(detail::Tree tree, int p) : Regressor(p), tree_(std::move(tree)) {}

private:
    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const override {
        return tree_.predict(x);
    }
    detail::Tree tree_;
};

class ForestModel final : public Regressor {
public:
    ForestModel(std::vector<detail::Tree> trees, int p) : Regressor(p), trees_(std::move(trees)) {}

private:
    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const override {
        double sum = 0;
        for (const auto& t : trees_) sum += t.predict(x);
        return sum / static_cast<double>(trees_.size());
    }
    std::vector<detail::Tree> trees_;
};

class GbmModel final : public Regressor {
public:
    GbmModel(double f0, double lr, std::vector<detail::Tree> trees, int p)
        : Regressor(p), f0_(f0), lr_(lr), trees_(std::move(trees)) {}

private:
    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const override {
        double f = f0_;
        for (const auto& t : trees_) f += lr_ * t.predict(x);
        return f;
    }
    double f0_;
    double lr_;
    std::vector<detail::Tree> trees_;
};

const std::vector<int> kNoClasses;

detail::TreeParams tree_params(const LearnerSpec& spec, int mtry, std::uint64_t seed) {
    detail::TreeParams prm;
    prm.max_depth = spec.max_depth;
    prm.min_leaf = spec.min_leaf;
    prm.mtry = mtry;
    prm.seed = seed;
    prm.kind = detail::SplitKind::variance;
    return prm;
}

RegressorPtr fit_tree(const LearnerSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& w) {
    const auto order = detail::presort_features(X);
    detail::TreeBuilder builder(y, w, order, kNoClasses, tree_params(spec, 0, 0));
    return std::make_shared<TreeModel>(builder.build(), static_cast<int>(X.cols()));
}

int forest_mtry(double feature_frac, int p) {
    if (feature_frac >= 1.0) return 0;
    return std::max(1, static_cast<int>(std::lround(feature_frac * p)));
}

RegressorPtr fit_forest(const LearnerSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w) {
    const int n = static_cast<int>(X.rows());
    const int p = static_cast<int>(X.cols());
    const auto order = detail::presort_features(X);
    const int mtry = forest_mtry(spec.feature_frac, p);
    std::vector<detail::Tree> trees;
    trees.reserve(spec.n_trees);
    for (int t = 0; t < spec.n_trees; ++t) {
        const std::uint64_t base = derive_seed(spec.seed, static_cast<std::uint64_t>(t));
        Eigen::VectorXd wt = w;
        if (spec.bagging) {
            Rng bag(derive_seed(base, 1));
            Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
            for (int i = 0; i < n; ++i) counts(static_cast<Eigen::Index>(bag.uniform_int(n))) += 1.0;
            wt = w.cwiseProduct(counts);
        }
        detail::TreeBuilder builder(y, wt, order, kNoClasses, tree_params(spec, mtry, derive_seed(base, 2)));
        trees.push_back(builder.build());
    }
    return std::make_shared<ForestModel>(std::move(trees), p);
}

RegressorPtr fit_gbm(const LearnerSpec& spec, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& w) {
    const auto order = detail::presort_features(X);
    double wsum = 0, swy = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        wsum += w(i);
        swy += w(i) * y(i);
    }
    const double f0 = swy / wsum;
    Eigen::VectorXd f = Eigen::VectorXd::Constant(y.size(), f0);
    std::vector<detail::Tree> trees;
    trees.reserve(spec.n_rounds);
    for (int round = 0; round < spec.n_rounds; ++round) {
        const Eigen::VectorXd resid = y - f;
        detail::TreeBuilder builder(resid, w, order, kNoClasses, tree_params(spec, 0, 0));
        detail::Tree tree = builder.build();
        for (Eigen::Index i = 0; i < f.size(); ++i) f(i) += spec.learning_rate * tree.predict(X.row(i));
        trees.push_back(std::move(tree));
    }
    return std::make_shared<GbmModel>(f0, spec.learning_rate, std::move(trees), static_cast<int>(X.cols()));
}

// Probability view over a regressor fitted to 0/1 labels.
class ClampedClassifier final : public Classifier {
public:
    ClampedClassifier(RegressorPtr reg, int p) : Classifier(p), reg_(std::move(reg)) {}

private:
    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const override {
        return reg_->predict_one(x);
    }
    RegressorPtr reg_;
};

void check_fit_inputs(const Eigen::Ref<const Eigen::MatrixXd>& X,
                      const Eigen::Ref<const Eigen::VectorXd>& y,
                      const Eigen::Ref<const Eigen::VectorXd>& w) {
    if (X.rows() != y.size()) throw std::invalid_argument("fit: rows(features) != len(targets)");
    if (X.rows() != w.size()) throw std::invalid_argument("fit: rows(features) != len(weights)");
    if (X.rows() < 2) throw std::invalid_argument("fit: need at least 2 rows");
    int positive = 0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) < 0) throw std::invalid_argument("fit: negative weight");
        if (w(i) > 0) ++positive;
    }
    if (positive < 2) throw std::invalid_argument("fit: need at least 2 rows with positive weight");
}

}  // namespace

// ---------------------------------------------------------------------------
// Public fitting entry points

RegressorPtr fit_regressor(const LearnerSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& w) {
    check_fit_inputs(X, y, w);
    switch (spec.kind) {
        case LearnerKind::linear: return fit_linear(X, y, w, 0.0);
        case LearnerKind::ridge: return fit_linear(X, y, w, spec.lambda);
        case LearnerKind::tree: return fit_tree(spec, X, y, w);
        case LearnerKind::forest: return fit_forest(spec, X, y, w);
        case LearnerKind::gbm: return fit_gbm(spec, X, y, w);
        case LearnerKind::logistic:
            throw std::invalid_argument("fit_regressor: logistic is a classifier kind");
    }
    throw std::invalid_argument("fit_regressor: unknown learner kind");
}

RegressorPtr fit_regressor(const LearnerSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::VectorXd>& y) {
    return fit_regressor(spec, X, y, Eigen::VectorXd::Ones(X.rows()));
}

ClassifierPtr fit_classifier(const LearnerSpec& spec, const Eigen::Ref<const Eigen::MatrixXd>& X,
                             const Eigen::Ref<const Eigen::VectorXd>& y01) {
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(X.rows());
    check_fit_inputs(X, y01, w);
    int ones = 0;
    for (Eigen::Index i = 0; i < y01.size(); ++i) {
        if (y01(i) != 0.0 && y01(i) != 1.0)
            throw std::invalid_argument("fit_classifier: labels must be 0 or 1");
        ones += y01(i) == 1.0 ? 1 : 0;
    }
    if (ones == 0 || ones == y01.size())
        throw std::invalid_argument("fit_classifier: both classes must be present");
    if (spec.kind == LearnerKind::logistic) return fit_logistic(X, y01, spec.lambda);
    RegressorPtr reg = fit_regressor(spec, X, y01, w);
    return std::make_shared<ClampedClassifier>(std::move(reg), static_cast<int>(X.cols()));
}

double rmse(const Regressor& model, const Eigen::Ref<const Eigen::MatrixXd>& X,
            const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (X.rows() == 0) throw std::invalid_argument("rmse: empty input");
    if (X.rows() != y.size()) throw std::invalid_argument("rmse: rows(features) != len(targets)");
    const Eigen::VectorXd pred = model.predict(X);
    return std::sqrt((pred - y).squaredNorm() / static_cast<double>(y.size()));
}

}  // namespace creditlift
