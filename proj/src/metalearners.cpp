#include "creditlift/metalearners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "creditlift/errors.hpp"
#include "creditlift/rng.hpp"
#include "tree_internal.hpp"

namespace creditlift {

std::string to_string(CateMethod method) {
    switch (method) {
        case CateMethod::direct: return "direct";
        case CateMethod::two_model: return "two_model";
        case CateMethod::causal_tree: return "causal_tree";
        case CateMethod::x_learner: return "x_learner";
        case CateMethod::r_learner: return "r_learner";
        case CateMethod::causal_forest_dml: return "causal_forest_dml";
    }
    return "unknown";
}

CateMethod cate_method_from_string(const std::string& name) {
    if (name == "direct") return CateMethod::direct;
    if (name == "two_model") return CateMethod::two_model;
    if (name == "causal_tree") return CateMethod::causal_tree;
    if (name == "x_learner") return CateMethod::x_learner;
    if (name == "r_learner") return CateMethod::r_learner;
    if (name == "causal_forest_dml") return CateMethod::causal_forest_dml;
    throw ConfigError("unknown CATE method '" + name + "'");
}

CateMethodSpec default_method_spec(CateMethod method, std::uint64_t seed) {
    CateMethodSpec spec;
    spec.method = method;
    spec.seed = seed;
    spec.propensity_base = LearnerSpec::Logistic();
    switch (method) {
        case CateMethod::direct:
            spec.outcome_base = LearnerSpec::Ridge(1e-3);
            spec.name = "direct[ridge]";
            break;
        case CateMethod::two_model:
            spec.outcome_base = LearnerSpec::Forest(15, 5, 25, 0.5);
            spec.name = "two_model[forest]";
            break;
        case CateMethod::causal_tree:
            spec.effect_base = LearnerSpec::Tree(5, 25);
            spec.name = "causal_tree";
            break;
        case CateMethod::x_learner:
            spec.outcome_base = LearnerSpec::Forest(15, 5, 25, 0.5);
            spec.effect_base = LearnerSpec::Forest(20, 5, 25, 0.5);
            spec.name = "x_learner[forest]";
            break;
        case CateMethod::r_learner:
            spec.outcome_base = LearnerSpec::Forest(15, 5, 25, 0.5);
            spec.effect_base = LearnerSpec::Forest(20, 5, 25, 0.5, false);
            spec.name = "r_learner[forest]";
            break;
        case CateMethod::causal_forest_dml:
            spec.outcome_base = LearnerSpec::Forest(15, 5, 25, 0.5);
            spec.effect_base = LearnerSpec::Forest(20, 5, 25, 0.5, true);
            spec.name = "causal_forest_dml";
            break;
    }
    return spec;
}

namespace {

// Role tags deriving independent sub-seeds from the method seed.
enum SeedRole : std::uint64_t {
    kSeedMu0 = 1,
    kSeedMu1 = 2,
    kSeedDirect = 3,
    kSeedTau0 = 4,
    kSeedTau1 = 5,
    kSeedG = 6,
    kSeedFinal = 7,
    kSeedFolds = 8,
    kSeedMHat = 9,
};

LearnerSpec with_seed(LearnerSpec base, std::uint64_t method_seed, std::uint64_t role) {
    base.seed = derive_seed(method_seed, role);
    return base;
}

// Effect tree: leaves carry treated-minus-control means.
class EffectTreeModel final : public Regressor {
public:
    EffectTreeModel(detail::Tree tree, int p) : Regressor(p), tree_(std::move(tree)) {}

private:
    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const override {
        return tree_.predict(x);
    }
    detail::Tree tree_;
};

void split_by_class(const OverlapDataset& data, Eigen::MatrixXd& x0, Eigen::VectorXd& y0,
                    Eigen::MatrixXd& x1, Eigen::VectorXd& y1) {
    const Eigen::Index n = data.n();
    Eigen::Index n1 = 0;
    for (Eigen::Index i = 0; i < n; ++i) n1 += data.t(i) == 1.0 ? 1 : 0;
    x0.resize(n - n1, data.X.cols());
    y0.resize(n - n1);
    x1.resize(n1, data.X.cols());
    y1.resize(n1);
    Eigen::Index i0 = 0, i1 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (data.t(i) == 1.0) {
            x1.row(i1) = data.X.row(i);
            y1(i1++) = data.y(i);
        } else {
            x0.row(i0) = data.X.row(i);
            y0(i0++) = data.y(i);
        }
    }
}

Eigen::MatrixXd direct_design(const Eigen::Ref<const Eigen::MatrixXd>& X,
                              const Eigen::Ref<const Eigen::VectorXd>& t, bool interacted) {
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    Eigen::MatrixXd Z(n, interacted ? 2 * p + 1 : p + 1);
    Z.leftCols(p) = X;
    Z.col(p) = t;
    if (interacted) Z.rightCols(p) = X.array().colwise() * t.array();
    return Z;
}

Eigen::RowVectorXd direct_point(const Eigen::Ref<const Eigen::RowVectorXd>& x, double t, bool interacted) {
    const Eigen::Index p = x.size();
    Eigen::RowVectorXd z(interacted ? 2 * p + 1 : p + 1);
    z.head(p) = x;
    z(p) = t;
    if (interacted) z.tail(p) = x * t;
    return z;
}

}  // namespace

std::vector<int> fold_assignment(Eigen::Index n, int folds, std::uint64_t seed) {
    if (folds < 2) throw ConfigError("fold_assignment: folds must be >= 2");
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
        std::swap(idx[i - 1], idx[j]);
    }
    std::vector<int> fold(static_cast<std::size_t>(n));
    for (std::size_t r = 0; r < idx.size(); ++r) fold[static_cast<std::size_t>(idx[r])] = static_cast<int>(r % folds);
    return fold;
}

Residualized cross_fit_residuals(const CateMethodSpec& spec, const OverlapDataset& data) {
    const Eigen::Index n = data.n();
    const int folds = spec.cross_fit_folds;
    if (folds < 2) throw ConfigError("cross_fit_residuals: cross_fit_folds must be >= 2");
    const std::vector<int> fold = fold_assignment(n, folds, derive_seed(spec.seed, kSeedFolds));
    Residualized out;
    out.y_resid.resize(n);
    out.t_resid.resize(n);
    for (int f = 0; f < folds; ++f) {
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        if (train.size() < 50)
            throw NumericError("cross_fit_residuals: training complement too small");
        Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(train.size()), data.X.cols());
        Eigen::VectorXd ytr(static_cast<Eigen::Index>(train.size())), ttr(static_cast<Eigen::Index>(train.size()));
        for (std::size_t i = 0; i < train.size(); ++i) {
            Xtr.row(static_cast<Eigen::Index>(i)) = data.X.row(train[i]);
            ytr(static_cast<Eigen::Index>(i)) = data.y(train[i]);
            ttr(static_cast<Eigen::Index>(i)) = data.t(train[i]);
        }
        if (ttr.sum() == 0.0 || ttr.sum() == static_cast<double>(ttr.size()))
            throw NumericError("cross_fit_residuals: a training complement lost one class");
        const auto m_hat = fit_regressor(with_seed(spec.outcome_base, spec.seed, derive_seed(kSeedMHat, f)), Xtr, ytr);
        const auto g_hat = fit_classifier(with_seed(spec.propensity_base, spec.seed, derive_seed(kSeedG, f)), Xtr, ttr);
        for (Eigen::Index i : test) {
            const double m = m_hat->predict_one(data.X.row(i));
            const double g = std::clamp(g_hat->predict_proba_one(data.X.row(i)), 0.01, 0.99);
            out.y_resid(i) = data.y(i) - m;
            out.t_resid(i) = data.t(i) - g;
        }
    }
    return out;
}

double r_objective(const Residualized& res, const Eigen::Ref<const Eigen::VectorXd>& tau) {
    if (res.y_resid.size() != tau.size())
        throw std::invalid_argument("r_objective: size mismatch");
    return (res.y_resid - tau.cwiseProduct(res.t_resid)).squaredNorm() /
           static_cast<double>(tau.size());
}

CateModel fit_cate(const CateMethodSpec& spec, const OverlapDataset& data, const PropensityModel& gate) {
    const Eigen::Index n = data.n();
    if (n < 50) throw NumericError("fit_cate: need at least 50 overlap rows, got " + std::to_string(n));
    const double treated = data.t.sum();
    if (treated == 0.0 || treated == static_cast<double>(n))
        throw NumericError("fit_cate: overlap data contains a single class");
    if (gate.level != data.level)
        throw std::invalid_argument("fit_cate: gate propensity fitted for a different level");

    CateModel model;
    model.level = data.level;
    model.beta = data.beta;
    model.spec = spec;
    model.gate = gate;

    switch (spec.method) {
        case CateMethod::direct: {
            const auto kind = spec.outcome_base.kind;
            model.direct_interacted = kind == LearnerKind::linear || kind == LearnerKind::ridge;
            const Eigen::MatrixXd Z = direct_design(data.X, data.t, model.direct_interacted);
            model.direct_model = fit_regressor(with_seed(spec.outcome_base, spec.seed, kSeedDirect), Z, data.y);
            break;
        }
        case CateMethod::two_model: {
            Eigen::MatrixXd x0, x1;
            Eigen::VectorXd y0, y1;
            split_by_class(data, x0, y0, x1, y1);
            model.mu0 = fit_regressor(with_seed(spec.outcome_base, spec.seed, kSeedMu0), x0, y0);
            model.mu1 = fit_regressor(with_seed(spec.outcome_base, spec.seed, kSeedMu1), x1, y1);
            break;
        }
        case CateMethod::causal_tree: {
            detail::TreeParams prm;
            prm.max_depth = spec.effect_base.max_depth;
            prm.min_leaf = spec.effect_base.min_leaf;
            prm.mtry = 0;
            prm.seed = 0;
            prm.kind = detail::SplitKind::effect;
            std::vector<int> cls(static_cast<std::size_t>(n));
            for (Eigen::Index i = 0; i < n; ++i) cls[static_cast<std::size_t>(i)] = data.t(i) == 1.0 ? 1 : 0;
            const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
            const auto order = detail::presort_features(data.X);
            detail::TreeBuilder builder(data.y, w, order, cls, prm);
            model.effect_model = std::make_shared<EffectTreeModel>(builder.build(), static_cast<int>(data.X.cols()));
            break;
        }
        case CateMethod::x_learner: {
            Eigen::MatrixXd x0, x1;
            Eigen::VectorXd y0, y1;
            split_by_class(data, x0, y0, x1, y1);
            model.mu0 = fit_regressor(with_seed(spec.outcome_base, spec.seed, kSeedMu0), x0, y0);
            model.mu1 = fit_regressor(with_seed(spec.outcome_base, spec.seed, kSeedMu1), x1, y1);
            const Eigen::VectorXd d1 = y1 - model.mu0->predict(x1);
            const Eigen::VectorXd d0 = model.mu1->predict(x0) - y0;
            model.tau1 = fit_regressor(with_seed(spec.effect_base, spec.seed, kSeedTau1), x1, d1);
            model.tau0 = fit_regressor(with_seed(spec.effect_base, spec.seed, kSeedTau0), x0, d0);
            model.g = fit_classifier(with_seed(spec.propensity_base, spec.seed, kSeedG), data.X, data.t);
            break;
        }
        case CateMethod::r_learner:
        case CateMethod::causal_forest_dml: {
            const Residualized res = cross_fit_residuals(spec, data);
            Eigen::VectorXd pseudo(n), wts(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                pseudo(i) = res.y_resid(i) / res.t_resid(i);
                wts(i) = res.t_resid(i) * res.t_resid(i);
            }
            model.effect_model =
                fit_regressor(with_seed(spec.effect_base, spec.seed, kSeedFinal), data.X, pseudo, wts);
            break;
        }
    }
    return model;
}

double CateModel::predict_raw(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    switch (spec.method) {
        case CateMethod::direct:
            return direct_model->predict_one(direct_point(x, 1.0, direct_interacted)) -
                   direct_model->predict_one(direct_point(x, 0.0, direct_interacted));
        case CateMethod::two_model:
            return mu1->predict_one(x) - mu0->predict_one(x);
        case CateMethod::causal_tree:
        case CateMethod::r_learner:
        case CateMethod::causal_forest_dml:
            return effect_model->predict_one(x);
        case CateMethod::x_learner: {
            const double gx = g->predict_proba_one(x);
            return gx * tau0->predict_one(x) + (1.0 - gx) * tau1->predict_one(x);
        }
    }
    throw std::logic_error("predict_raw: unknown method");
}

Eigen::VectorXd CateModel::predict_raw_all(const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict_raw(X.row(i));
    return out;
}

std::optional<double> CateModel::predict_cate(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    if (!gate.in_band(x)) return std::nullopt;
    return predict_raw(x);
}

}  // namespace creditlift
