#include "creditlift/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "creditlift/csv.hpp"
#include "creditlift/errors.hpp"
#include "creditlift/rng.hpp"

namespace creditlift {
namespace {

constexpr std::uint64_t kSeedFolds = 0x5E11;
constexpr int kMinFoldClass = 30;

OverlapDataset subset(const OverlapDataset& data, const std::vector<int>& rows) {
    OverlapDataset out;
    out.level = data.level;
    out.beta = data.beta;
    out.trim_eps = data.trim_eps;
    const auto m = static_cast<Eigen::Index>(rows.size());
    out.X.resize(m, data.X.cols());
    out.y.resize(m);
    out.t.resize(m);
    out.g.resize(m);
    out.ids.reserve(rows.size());
    for (Eigen::Index i = 0; i < m; ++i) {
        const int r = rows[static_cast<std::size_t>(i)];
        out.X.row(i) = data.X.row(r);
        out.y(i) = data.y(r);
        out.t(i) = data.t(r);
        out.g(i) = data.g(r);
        out.ids.push_back(data.ids[static_cast<std::size_t>(r)]);
    }
    return out;
}

}  // namespace

PluginDistribution fit_plugin(const OverlapDataset& fold_data, std::uint64_t seed) {
    std::vector<int> ctrl;
    std::vector<int> treat;
    for (Eigen::Index i = 0; i < fold_data.n(); ++i) {
        (fold_data.t(i) > 0.5 ? treat : ctrl).push_back(static_cast<int>(i));
    }
    if (static_cast<int>(ctrl.size()) < kMinFoldClass || static_cast<int>(treat.size()) < kMinFoldClass) {
        throw NumericError("fit_plugin: fold has fewer than " + std::to_string(kMinFoldClass) +
                           " rows of one treatment class");
    }

    auto rows_matrix = [&](const std::vector<int>& rows, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
        X.resize(static_cast<Eigen::Index>(rows.size()), fold_data.X.cols());
        y.resize(static_cast<Eigen::Index>(rows.size()));
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            X.row(i) = fold_data.X.row(rows[static_cast<std::size_t>(i)]);
            y(i) = fold_data.y(rows[static_cast<std::size_t>(i)]);
        }
    };

    Eigen::MatrixXd x0, x1;
    Eigen::VectorXd y0, y1;
    rows_matrix(ctrl, x0, y0);
    rows_matrix(treat, x1, y1);

    LearnerSpec mu_spec = LearnerSpec::Forest(20, 6, 10, 0.5);
    PluginDistribution plugin;
    mu_spec.seed = derive_seed(seed, 0);
    plugin.mu0 = fit_regressor(mu_spec, x0, y0);
    mu_spec.seed = derive_seed(seed, 1);
    plugin.mu1 = fit_regressor(mu_spec, x1, y1);
    plugin.g = fit_classifier(LearnerSpec::Logistic(), fold_data.X, fold_data.t);
    return plugin;
}

PeheEstimate estimate_pehe(const CateMethodSpec& spec, const OverlapDataset& data,
                           const PropensityModel& gate, int folds, int correction_order,
                           std::uint64_t seed) {
    if (folds < 2) throw ConfigError("estimate_pehe: folds must be at least 2");
    if (correction_order != 0 && correction_order != 1) {
        throw ConfigError("estimate_pehe: correction_order must be 0 or 1");
    }
    const auto n = data.n();
    const std::vector<int> fold_of = fold_assignment(static_cast<int>(n), folds, derive_seed(seed, kSeedFolds));

    PeheEstimate est;
    est.per_fold.reserve(static_cast<std::size_t>(folds));
    for (int f = 0; f < folds; ++f) {
        std::vector<int> in_fold;
        std::vector<int> complement;
        for (Eigen::Index i = 0; i < n; ++i) {
            (fold_of[static_cast<std::size_t>(i)] == f ? in_fold : complement).push_back(static_cast<int>(i));
        }
        const OverlapDataset fold_data = subset(data, in_fold);
        const OverlapDataset train_data = subset(data, complement);

        CateMethodSpec fold_spec = spec;
        fold_spec.seed = derive_seed(spec.seed, 0xF01D, static_cast<std::uint64_t>(f));
        const CateModel model = fit_cate(fold_spec, train_data, gate);
        const PluginDistribution plugin = fit_plugin(fold_data, derive_seed(seed, 0x9106, static_cast<std::uint64_t>(f)));

        double loss_sum = 0.0;
        for (Eigen::Index i = 0; i < fold_data.n(); ++i) {
            const auto x = fold_data.X.row(i);
            const double diff = model.predict_raw(x) - plugin.tau_tilde(x);
            double loss = diff * diff;
            if (correction_order == 1) {
                const double gt = std::clamp(plugin.g->predict_proba_one(x), 0.01, 0.99);
                const double ti = fold_data.t(i);
                const double rho = ti * (fold_data.y(i) - plugin.mu1->predict_one(x)) / gt -
                                   (1.0 - ti) * (fold_data.y(i) - plugin.mu0->predict_one(x)) / (1.0 - gt);
                loss -= 2.0 * diff * rho;
            }
            loss_sum += loss;
        }
        const double mean_loss = loss_sum / static_cast<double>(fold_data.n());
        est.per_fold.push_back(std::sqrt(std::max(mean_loss, 0.0)));
    }

    est.mean = std::accumulate(est.per_fold.begin(), est.per_fold.end(), 0.0) /
               static_cast<double>(est.per_fold.size());
    double ss = 0.0;
    for (const double v : est.per_fold) ss += (v - est.mean) * (v - est.mean);
    est.sd = std::sqrt(ss / static_cast<double>(est.per_fold.size() - 1));
    return est;
}

PeheEstimate estimate_pehe_truth(const CateMethodSpec& spec, const OverlapDataset& data,
                                 const PropensityModel& gate, const Eigen::VectorXd& tau_true,
                                 int folds, std::uint64_t seed) {
    if (folds < 2) throw ConfigError("estimate_pehe_truth: folds must be at least 2");
    if (tau_true.size() != data.n()) {
        throw ConfigError("estimate_pehe_truth: tau_true length must match dataset rows");
    }
    const auto n = data.n();
    const std::vector<int> fold_of = fold_assignment(static_cast<int>(n), folds, derive_seed(seed, kSeedFolds));

    PeheEstimate est;
    est.per_fold.reserve(static_cast<std::size_t>(folds));
    for (int f = 0; f < folds; ++f) {
        std::vector<int> in_fold;
        std::vector<int> complement;
        for (Eigen::Index i = 0; i < n; ++i) {
            (fold_of[static_cast<std::size_t>(i)] == f ? in_fold : complement).push_back(static_cast<int>(i));
        }
        const OverlapDataset train_data = subset(data, complement);

        CateMethodSpec fold_spec = spec;
        fold_spec.seed = derive_seed(spec.seed, 0xF01D, static_cast<std::uint64_t>(f));
        const CateModel model = fit_cate(fold_spec, train_data, gate);

        double loss_sum = 0.0;
        for (const int r : in_fold) {
            const double diff = model.predict_raw(data.X.row(r)) - tau_true(r);
            loss_sum += diff * diff;
        }
        est.per_fold.push_back(std::sqrt(loss_sum / static_cast<double>(in_fold.size())));
    }

    est.mean = std::accumulate(est.per_fold.begin(), est.per_fold.end(), 0.0) /
               static_cast<double>(est.per_fold.size());
    double ss = 0.0;
    for (const double v : est.per_fold) ss += (v - est.mean) * (v - est.mean);
    est.sd = std::sqrt(ss / static_cast<double>(est.per_fold.size() - 1));
    return est;
}

LevelSelection select_model(const std::vector<CateMethodSpec>& candidates,
                            const OverlapDataset& data, const PropensityModel& gate, int folds,
                            int correction_order, std::uint64_t seed) {
    if (candidates.size() < 2) throw ConfigError("select_model: need at least two candidates");

    LevelSelection sel;
    sel.level = data.level;
    sel.beta = data.beta;
    for (const auto& spec : candidates) {
        const PeheEstimate est = estimate_pehe(spec, data, gate, folds, correction_order, seed);
        sel.scores.push_back({spec.describe(), est.mean, est.sd});
    }
    sel.ranking.resize(candidates.size());
    std::iota(sel.ranking.begin(), sel.ranking.end(), 0);
    std::stable_sort(sel.ranking.begin(), sel.ranking.end(), [&](int a, int b) {
        const auto& sa = sel.scores[static_cast<std::size_t>(a)];
        const auto& sb = sel.scores[static_cast<std::size_t>(b)];
        if (sa.mean != sb.mean) return sa.mean < sb.mean;
        if (sa.sd != sb.sd) return sa.sd < sb.sd;
        return a < b;
    });
    sel.chosen = sel.ranking.front();
    return sel;
}

std::string selection_report_json(const SelectionReport& report) {
    nlohmann::ordered_json j;
    j["methods"] = report.methods;
    j["levels"] = nlohmann::ordered_json::array();
    for (const auto& sel : report.per_level) {
        nlohmann::ordered_json lj;
        lj["level"] = sel.level;
        lj["beta"] = sel.beta;
        lj["scores"] = nlohmann::ordered_json::array();
        for (const auto& s : sel.scores) {
            lj["scores"].push_back({{"method", s.name}, {"mean", s.mean}, {"sd", s.sd}});
        }
        lj["ranking"] = sel.ranking;
        lj["chosen"] = sel.scores[static_cast<std::size_t>(sel.chosen)].name;
        j["levels"].push_back(lj);
    }
    return j.dump(2) + "\n";
}

std::string selection_report_markdown(const SelectionReport& report) {
    std::ostringstream out;
    out << "| method |";
    for (const auto& sel : report.per_level) {
        out << " level " << sel.level << " (beta=" << csv::format_double(sel.beta) << ") |";
    }
    out << "\n|---|";
    for (std::size_t i = 0; i < report.per_level.size(); ++i) out << "---|";
    out << "\n";
    for (std::size_t m = 0; m < report.methods.size(); ++m) {
        out << "| " << report.methods[m] << " |";
        for (const auto& sel : report.per_level) {
            const auto& s = sel.scores.at(m);
            out << " " << csv::format_double(s.mean) << " +/- " << csv::format_double(s.sd);
            if (static_cast<std::size_t>(sel.chosen) == m) out << " *";
            out << " |";
        }
        out << "\n";
    }
    out << "\nLowest estimated root-PEHE per level is marked with *.\n";
    return out.str();
}

SelectionReport selection_report_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("selection report: invalid JSON: ") + e.what());
    }
    SelectionReport report;
    try {
        report.methods = j.at("methods").get<std::vector<std::string>>();
        for (const auto& lj : j.at("levels")) {
            LevelSelection sel;
            sel.level = lj.at("level").get<int>();
            sel.beta = lj.at("beta").get<double>();
            for (const auto& sj : lj.at("scores")) {
                sel.scores.push_back({sj.at("method").get<std::string>(), sj.at("mean").get<double>(),
                                      sj.at("sd").get<double>()});
            }
            sel.ranking = lj.at("ranking").get<std::vector<int>>();
            if (sel.ranking.size() != sel.scores.size()) {
                throw DataError("selection report: ranking and scores length mismatch");
            }
            sel.chosen = sel.ranking.empty() ? 0 : sel.ranking.front();
            report.per_level.push_back(std::move(sel));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("selection report: unexpected shape: ") + e.what());
    }
    return report;
}

}  // namespace creditlift
