#include "creditlift/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "creditlift/csv.hpp"
#include "creditlift/errors.hpp"

namespace creditlift {
namespace {

struct Accumulator {
    std::int64_t n = 0;
    double ep_p = 0.0;
    double ep_p_ratio = 0.0;
    double ep_r = 0.0;
    double ep_r_ratio = 0.0;

    void add(const CustomerRecord& r) {
        ++n;
        ep_p += r.ep_m6;
        ep_p_ratio += r.ep_m6 / r.limit_m3 * 100.0;
        ep_r += r.ep_m3;
        ep_r_ratio += r.ep_m3 / r.limit_m3 * 100.0;
    }

    ScenarioRow row() const {
        ScenarioRow out;
        out.size = n;
        if (n > 0) {
            const auto d = static_cast<double>(n);
            out.avg_ep_p = ep_p / d;
            out.avg_ep_p_ratio_pct = ep_p_ratio / d;
            out.avg_ep_r = ep_r / d;
            out.avg_ep_r_ratio_pct = ep_r_ratio / d;
        }
        return out;
    }
};

std::string cell(const std::optional<double>& v) {
    return v.has_value() ? csv::format_double(*v) : std::string("-");
}

nlohmann::ordered_json row_json(const ScenarioRow& row) {
    nlohmann::ordered_json j;
    j["size"] = row.size;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v.has_value()) {
            j[key] = *v;
        } else {
            j[key] = nullptr;
        }
    };
    put("avg_ep_p", row.avg_ep_p);
    put("avg_ep_p_ratio_pct", row.avg_ep_p_ratio_pct);
    put("avg_ep_r", row.avg_ep_r);
    put("avg_ep_r_ratio_pct", row.avg_ep_r_ratio_pct);
    return j;
}

}  // namespace

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::i: return "I";
        case Scenario::ii: return "II";
        case Scenario::iii: return "III";
        case Scenario::iv: return "IV";
        case Scenario::v: return "V";
    }
    throw std::invalid_argument("unknown scenario");
}

Scenario classify_scenario(int gs_level, int cpp_level) {
    if (gs_level < 0 || cpp_level < 0) throw std::domain_error("scenario levels must be non-negative");
    if (gs_level > 0 && cpp_level > 0) return gs_level == cpp_level ? Scenario::i : Scenario::ii;
    if (gs_level > 0) return Scenario::iii;
    if (cpp_level > 0) return Scenario::iv;
    return Scenario::v;
}

ScenarioMetrics evaluate(const std::vector<PolicyDecision>& decisions,
                         const std::vector<int>& cpp_levels,
                         const std::vector<CustomerRecord>& records) {
    if (decisions.size() != records.size() || cpp_levels.size() != records.size()) {
        throw DataError("evaluate: decisions, historical levels, and records differ in length");
    }
    std::array<Accumulator, 5> acc;
    Accumulator total;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (decisions[i].id != records[i].id) {
            throw DataError("evaluate: id mismatch at row " + std::to_string(i + 1) + " (decision " +
                            std::to_string(decisions[i].id) + ", record " +
                            std::to_string(records[i].id) + ")");
        }
        const Scenario s = classify_scenario(decisions[i].chosen_level, cpp_levels[i]);
        acc[static_cast<std::size_t>(s)].add(records[i]);
        total.add(records[i]);
    }
    ScenarioMetrics metrics;
    for (std::size_t s = 0; s < acc.size(); ++s) metrics.rows[s] = acc[s].row();
    metrics.all = total.row();
    return metrics;
}

double oracle_policy_value(const GroundTruth& truth, const std::vector<PolicyDecision>& decisions) {
    std::unordered_map<std::int64_t, Eigen::Index> index;
    index.reserve(truth.ids.size());
    for (std::size_t i = 0; i < truth.ids.size(); ++i) {
        index.emplace(truth.ids[i], static_cast<Eigen::Index>(i));
    }
    double value = 0.0;
    for (const auto& d : decisions) {
        const auto it = index.find(d.id);
        if (it == index.end()) {
            throw DataError("oracle_policy_value: customer " + std::to_string(d.id) +
                            " missing from ground truth");
        }
        if (d.chosen_level < 0 || d.chosen_level > truth.k()) {
            throw DataError("oracle_policy_value: customer " + std::to_string(d.id) +
                            " chose level " + std::to_string(d.chosen_level) +
                            " outside the ground truth's levels");
        }
        value += d.chosen_level == 0 ? truth.y0(it->second)
                                     : truth.y_level(it->second, d.chosen_level - 1);
    }
    return value;
}

std::string scenario_markdown(const ScenarioMetrics& metrics) {
    std::ostringstream out;
    out << "| scenario | size | avg EP_P | avg EP_P/L_R % | avg EP_R | avg EP_R/L_R % |\n";
    out << "|---|---|---|---|---|---|\n";
    const std::array<Scenario, 5> order = {Scenario::i, Scenario::ii, Scenario::iii, Scenario::iv,
                                           Scenario::v};
    auto emit = [&](const std::string& label, const ScenarioRow& row) {
        out << "| " << label << " | " << row.size << " | " << cell(row.avg_ep_p) << " | "
            << cell(row.avg_ep_p_ratio_pct) << " | " << cell(row.avg_ep_r) << " | "
            << cell(row.avg_ep_r_ratio_pct) << " |\n";
    };
    for (const Scenario s : order) emit(to_string(s), metrics.rows[static_cast<std::size_t>(s)]);
    emit("all", metrics.all);
    return out.str();
}

std::string scenario_json(const ScenarioMetrics& metrics) {
    nlohmann::ordered_json j;
    const std::array<Scenario, 5> order = {Scenario::i, Scenario::ii, Scenario::iii, Scenario::iv,
                                           Scenario::v};
    for (const Scenario s : order) {
        j[to_string(s)] = row_json(metrics.rows[static_cast<std::size_t>(s)]);
    }
    j["all"] = row_json(metrics.all);
    return j.dump(2) + "\n";
}

std::string level_distribution_markdown(const std::vector<int>& levels,
                                        const DosagePartition& partition,
                                        const std::string& caption) {
    std::vector<std::int64_t> counts(static_cast<std::size_t>(partition.k()) + 1, 0);
    for (const int level : levels) {
        if (level < 0 || level > partition.k()) {
            throw DataError("level distribution: level " + std::to_string(level) +
                            " outside 0.." + std::to_string(partition.k()));
        }
        ++counts[static_cast<std::size_t>(level)];
    }
    std::ostringstream out;
    out << caption << "\n\n";
    out << "| level | dosage | count | share % |\n|---|---|---|---|\n";
    const auto total = static_cast<double>(levels.size());
    for (std::size_t level = 0; level < counts.size(); ++level) {
        out << "| " << level << " | ";
        if (level == 0) {
            out << "1 (keep)";
        } else if (partition.defined(static_cast<int>(level))) {
            out << csv::format_double(partition.dosage_of(static_cast<int>(level)));
        } else {
            out << "-";
        }
        out << " | " << counts[level] << " | "
            << (levels.empty() ? std::string("-")
                               : csv::format_double(static_cast<double>(counts[level]) / total * 100.0))
            << " |\n";
    }
    return out.str();
}

}  // namespace creditlift
