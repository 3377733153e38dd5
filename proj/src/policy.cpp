#include "creditlift/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "creditlift/csv.hpp"
#include "creditlift/errors.hpp"
#include "creditlift/rng.hpp"

namespace creditlift {
namespace {

const std::vector<std::string> kDecisionColumns = {
    "id", "criterion", "chosen_level", "chosen_dosage", "value_per_level_json", "y_r", "y_p_hat"};

std::string values_to_json(const std::vector<std::optional<double>>& values) {
    nlohmann::ordered_json j;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::string key = std::to_string(i + 1);
        if (values[i].has_value()) {
            j[key] = *values[i];
        } else {
            j[key] = nullptr;
        }
    }
    return j.dump();
}

std::vector<std::optional<double>> values_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("decisions file: invalid per-level JSON: ") + e.what());
    }
    if (!j.is_object()) throw DataError("decisions file: per-level JSON must be an object");
    std::vector<std::optional<double>> values(j.size());
    for (const auto& [key, val] : j.items()) {
        std::size_t level = 0;
        try {
            level = static_cast<std::size_t>(std::stoul(key));
        } catch (const std::exception&) {
            throw DataError("decisions file: per-level JSON key '" + key + "' is not a level");
        }
        if (level < 1 || level > values.size()) {
            throw DataError("decisions file: per-level JSON key '" + key + "' out of range");
        }
        if (!val.is_null()) values[level - 1] = val.get<double>();
    }
    return values;
}

}  // namespace

std::string to_string(Criterion c) {
    switch (c) {
        case Criterion::cl: return "cl";
        case Criterion::cl_cvar: return "cl-cvar";
        case Criterion::cl_cvar_fl: return "cl-cvar-fl";
        case Criterion::predict_only: return "predict-only";
    }
    throw std::invalid_argument("unknown criterion");
}

Criterion criterion_from_string(const std::string& name) {
    if (name == "cl") return Criterion::cl;
    if (name == "cl-cvar") return Criterion::cl_cvar;
    if (name == "cl-cvar-fl") return Criterion::cl_cvar_fl;
    if (name == "predict-only") return Criterion::predict_only;
    throw ConfigError("unknown policy '" + name +
                      "' (expected cl, cl-cvar, cl-cvar-fl, or predict-only)");
}

PolicyDecision decide_from_values(const std::vector<std::optional<double>>& values,
                                  const DosagePartition& partition, std::int64_t id,
                                  Criterion criterion) {
    if (static_cast<int>(values.size()) != partition.k()) {
        throw std::invalid_argument("decide_from_values: one value slot per level required");
    }
    PolicyDecision d;
    d.id = id;
    d.criterion = criterion;
    d.per_level_value = values;
    double best = 0.0;
    for (int level = 1; level <= partition.k(); ++level) {
        const auto& v = values[static_cast<std::size_t>(level - 1)];
        if (!partition.defined(level)) {
            if (v.has_value()) {
                throw std::invalid_argument("decide_from_values: value given for undefined level " +
                                            std::to_string(level));
            }
            continue;
        }
        if (v.has_value() && *v > best) {
            best = *v;
            d.chosen_level = level;
        }
    }
    d.chosen_dosage = partition.dosage_of(d.chosen_level);
    return d;
}

PolicyDecision recommend_cl(const std::vector<std::optional<double>>& ite_values,
                            const DosagePartition& partition, std::int64_t id) {
    return decide_from_values(ite_values, partition, id, Criterion::cl);
}

PolicyDecision recommend_cl_cvar(const std::vector<std::optional<BootstrapDistribution>>& dists,
                                 double p, const DosagePartition& partition, std::int64_t id) {
    if (static_cast<int>(dists.size()) != partition.k()) {
        throw std::invalid_argument("recommend_cl_cvar: one distribution slot per level required");
    }
    std::vector<std::optional<double>> values(dists.size());
    for (std::size_t i = 0; i < dists.size(); ++i) {
        if (dists[i].has_value()) values[i] = cvar(*dists[i], p);
    }
    return decide_from_values(values, partition, id, Criterion::cl_cvar);
}

double ForwardModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x, double dosage) const {
    Eigen::RowVectorXd row(x.cols() + 1);
    row << x, dosage;
    return model->predict_one(row);
}

ForwardModel fit_forward_model(const std::vector<CustomerRecord>& records,
                               const DosagePartition& partition, const LearnerSpec& spec,
                               double holdout_frac, std::uint64_t seed) {
    if (records.empty()) throw std::invalid_argument("fit_forward_model: no records");
    if (!(holdout_frac > 0.0 && holdout_frac < 1.0)) {
        throw ConfigError("fit_forward_model: holdout fraction must lie in (0, 1)");
    }

    const auto n = static_cast<Eigen::Index>(records.size());
    Eigen::MatrixXd X(n, feature_names().size() + 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        const int level = assign_level(r.observed_dosage, partition);
        if (level > 0 && !partition.defined(level)) {
            throw DataError("fit_forward_model: observed dosage of customer " + std::to_string(r.id) +
                            " falls in a level with no training mass");
        }
        X.row(i) << feature_row(r), partition.dosage_of(level);
        y(i) = r.ep_m6;
    }

    std::vector<int> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 0xF0));
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng.uniform_int(i)]);
    }
    auto n_test = static_cast<Eigen::Index>(std::lround(holdout_frac * static_cast<double>(n)));
    n_test = std::clamp<Eigen::Index>(n_test, 1, n - 2);

    Eigen::MatrixXd x_test(n_test, X.cols());
    Eigen::VectorXd y_test(n_test);
    Eigen::MatrixXd x_train(n - n_test, X.cols());
    Eigen::VectorXd y_train(n - n_test);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int src = order[static_cast<std::size_t>(i)];
        if (i < n_test) {
            x_test.row(i) = X.row(src);
            y_test(i) = y(src);
        } else {
            x_train.row(i - n_test) = X.row(src);
            y_train(i - n_test) = y(src);
        }
    }

    LearnerSpec holdout_spec = spec;
    holdout_spec.seed = derive_seed(seed, 1);
    const RegressorPtr probe = fit_regressor(holdout_spec, x_train, y_train);

    ForwardModel fm;
    fm.holdout_rmse = rmse(*probe, x_test, y_test);
    const double mean = y_test.mean();
    fm.holdout_sd = std::sqrt((y_test.array() - mean).square().mean());

    LearnerSpec final_spec = spec;
    final_spec.seed = derive_seed(seed, 2);
    fm.model = fit_regressor(final_spec, X, y);
    return fm;
}

PolicyDecision recommend_cl_cvar_fl(const PolicyDecision& upstream, double y_r,
                                    const ForwardModel& forward,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    if (upstream.criterion != Criterion::cl_cvar) {
        throw std::invalid_argument("recommend_cl_cvar_fl: upstream decision must be cl-cvar");
    }
    PolicyDecision d = upstream;
    d.criterion = Criterion::cl_cvar_fl;
    d.y_r = y_r;
    d.y_p_hat.reset();
    if (upstream.chosen_level == 0) return d;

    const double y_p = forward.predict(x, upstream.chosen_dosage);
    d.y_p_hat = y_p;
    if (y_r >= y_p) {
        d.chosen_level = 0;
        d.chosen_dosage = 0.0;
    }
    return d;
}

PolicyDecision recommend_prediction_only(const ForwardModel& forward,
                                         const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                         const DosagePartition& partition, double y_r,
                                         std::int64_t id) {
    PolicyDecision d;
    d.id = id;
    d.criterion = Criterion::predict_only;
    d.y_r = y_r;
    d.per_level_value.assign(static_cast<std::size_t>(partition.k()), std::nullopt);

    int best_level = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (int level = 1; level <= partition.k(); ++level) {
        if (!partition.defined(level)) continue;
        const double y_p = forward.predict(x, partition.dosage_of(level));
        d.per_level_value[static_cast<std::size_t>(level - 1)] = y_p;
        if (y_p > best) {
            best = y_p;
            best_level = level;
        }
    }
    if (best_level == 0) return d;

    d.y_p_hat = best;
    if (best > y_r) {
        d.chosen_level = best_level;
        d.chosen_dosage = partition.dosage_of(best_level);
    }
    return d;
}

void write_decisions(const std::vector<PolicyDecision>& decisions, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    for (std::size_t i = 0; i < kDecisionColumns.size(); ++i) {
        if (i > 0) out << ',';
        out << kDecisionColumns[i];
    }
    out << '\n';
    for (const auto& d : decisions) {
        out << csv::format_int(d.id) << ',' << to_string(d.criterion) << ','
            << csv::format_int(d.chosen_level) << ',' << csv::format_double(d.chosen_dosage) << ','
            << csv::quote_if_needed(values_to_json(d.per_level_value)) << ','
            << (d.y_r.has_value() ? csv::format_double(*d.y_r) : std::string()) << ','
            << (d.y_p_hat.has_value() ? csv::format_double(*d.y_p_hat) : std::string()) << '\n';
    }
    if (!out) throw DataError("failed while writing '" + path + "'");
}

std::vector<PolicyDecision> load_decisions(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open decisions file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("decisions file '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (csv::split_line(line) != kDecisionColumns) {
        throw DataError("decisions file '" + path + "': unexpected header");
    }

    std::vector<PolicyDecision> decisions;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const std::vector<std::string> cells = csv::split_line(line);
        if (cells.size() != kDecisionColumns.size()) {
            throw DataError("decisions file '" + path + "', row " + std::to_string(row) +
                            ": expected " + std::to_string(kDecisionColumns.size()) + " columns, got " +
                            std::to_string(cells.size()));
        }
        try {
            PolicyDecision d;
            d.id = csv::parse_int(cells[0]);
            d.criterion = criterion_from_string(cells[1]);
            d.chosen_level = static_cast<int>(csv::parse_int(cells[2]));
            d.chosen_dosage = csv::parse_double(cells[3]);
            d.per_level_value = values_from_json(cells[4]);
            if (!cells[5].empty()) d.y_r = csv::parse_double(cells[5]);
            if (!cells[6].empty()) d.y_p_hat = csv::parse_double(cells[6]);
            decisions.push_back(std::move(d));
        } catch (const DataError&) {
            throw;
        } catch (const std::exception& e) {
            throw DataError("decisions file '" + path + "', row " + std::to_string(row) + ": " +
                            e.what());
        }
    }
    return decisions;
}

}  // namespace creditlift
