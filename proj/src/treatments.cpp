#include "creditlift/treatments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "creditlift/errors.hpp"

namespace creditlift {

namespace {

void check_cut_points(const std::vector<double>& cut_points) {
    for (std::size_t i = 0; i + 1 < cut_points.size(); ++i) {
        if (!(cut_points[i] < cut_points[i + 1]))
            throw ConfigError("cut_points must be strictly ascending");
    }
    for (double c : cut_points) {
        if (!std::isfinite(c)) throw ConfigError("cut_points must be finite");
    }
}

// 1-based bin index for a positive dosage: count of cuts strictly below it,
// plus one. Upper bounds inclusive per the bin definition.
int bin_of(double dosage, const std::vector<double>& cut_points) {
    const auto it = std::lower_bound(cut_points.begin(), cut_points.end(), dosage);
    return static_cast<int>(it - cut_points.begin()) + 1;
}

}  // namespace

DosagePartition discretize(const std::vector<double>& dosages, const std::vector<double>& cut_points) {
    check_cut_points(cut_points);
    DosagePartition part;
    part.cut_points = cut_points;
    const int k = static_cast<int>(cut_points.size()) + 1;
    part.counts.assign(k, 0);
    std::vector<double> sums(k, 0.0);
    bool any = false;
    for (double d : dosages) {
        if (d < 0.0 || !std::isfinite(d)) throw DataError("discretize: dosages must be nonnegative and finite");
        if (d == 0.0) continue;
        any = true;
        const int j = bin_of(d, cut_points);
        ++part.counts[j - 1];
        sums[j - 1] += d;
    }
    if (!any) throw DataError("discretize: all dosages are zero, nothing to discretize");
    part.levels.resize(k);
    for (int j = 0; j < k; ++j) {
        part.levels[j] = part.counts[j] > 0 ? sums[j] / static_cast<double>(part.counts[j])
                                            : std::numeric_limits<double>::quiet_NaN();
    }
    return part;
}

int assign_level(double dosage, const DosagePartition& partition) {
    if (dosage < 0.0 || !std::isfinite(dosage)) throw std::domain_error("assign_level: negative or non-finite dosage");
    if (dosage == 0.0) return 0;
    return bin_of(dosage, partition.cut_points);
}

std::string partition_to_json(const DosagePartition& partition) {
    nlohmann::json j;
    j["cut_points"] = partition.cut_points;
    j["levels"] = nlohmann::json::array();
    for (double b : partition.levels) {
        if (std::isnan(b)) j["levels"].push_back(nullptr);
        else j["levels"].push_back(b);
    }
    j["counts"] = partition.counts;
    return j.dump(2) + "\n";
}

DosagePartition partition_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("partition JSON parse failure: ") + e.what());
    }
    DosagePartition part;
    try {
        part.cut_points = j.at("cut_points").get<std::vector<double>>();
        for (const auto& v : j.at("levels")) {
            part.levels.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                              : v.get<double>());
        }
        part.counts = j.at("counts").get<std::vector<std::int64_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("partition JSON shape invalid: ") + e.what());
    }
    if (part.levels.size() != part.cut_points.size() + 1 || part.counts.size() != part.levels.size())
        throw DataError("partition JSON shape invalid: levels/counts sizes do not match cut_points");
    check_cut_points(part.cut_points);
    return part;
}

LevelSlice make_level_slice(const std::vector<CustomerRecord>& records,
                            const DosagePartition& partition, int level) {
    if (level < 1 || level > partition.k())
        throw std::invalid_argument("make_level_slice: level out of range");
    std::vector<int> keep;
    std::vector<double> treated;
    keep.reserve(records.size());
    treated.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const int lv = assign_level(records[i].observed_dosage, partition);
        if (lv == 0 || lv == level) {
            keep.push_back(static_cast<int>(i));
            treated.push_back(lv == level ? 1.0 : 0.0);
        }
    }
    LevelSlice slice;
    slice.level = level;
    slice.beta = partition.dosage_of(level);
    slice.X.resize(static_cast<Eigen::Index>(keep.size()), feature_row(CustomerRecord{}).size());
    slice.y.resize(static_cast<Eigen::Index>(keep.size()));
    slice.t.resize(static_cast<Eigen::Index>(keep.size()));
    slice.ids.reserve(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        const auto& r = records[static_cast<std::size_t>(keep[i])];
        slice.X.row(static_cast<Eigen::Index>(i)) = feature_row(r);
        slice.y(static_cast<Eigen::Index>(i)) = r.ep_m6;
        slice.t(static_cast<Eigen::Index>(i)) = treated[i];
        slice.ids.push_back(r.id);
    }
    return slice;
}

PropensityModel fit_propensity(const LevelSlice& slice, const LearnerSpec& spec, double trim_eps) {
    if (trim_eps < 0.0 || trim_eps >= 0.5)
        throw ConfigError("fit_propensity: trim_eps must lie in [0, 0.5)");
    PropensityModel pm;
    pm.level = slice.level;
    pm.trim_eps = trim_eps;
    pm.model = fit_classifier(spec, slice.X, slice.t);
    return pm;
}

namespace {

template <typename Dataset>
OverlapDataset filter_band(const Dataset& d, const PropensityModel& pm) {
    const Eigen::VectorXd g = pm.model->predict_proba(d.X);
    std::vector<int> keep;
    keep.reserve(static_cast<std::size_t>(g.size()));
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        // Same predicate as PropensityModel::in_band: strict overlap plus trimming.
        if (g(i) > 0.0 && g(i) < 1.0 && g(i) >= pm.trim_eps && g(i) <= 1.0 - pm.trim_eps)
            keep.push_back(static_cast<int>(i));
    }
    OverlapDataset out;
    out.level = d.level;
    out.beta = d.beta;
    out.trim_eps = pm.trim_eps;
    out.X.resize(static_cast<Eigen::Index>(keep.size()), d.X.cols());
    out.y.resize(static_cast<Eigen::Index>(keep.size()));
    out.t.resize(static_cast<Eigen::Index>(keep.size()));
    out.g.resize(static_cast<Eigen::Index>(keep.size()));
    out.ids.reserve(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        const Eigen::Index src = keep[i];
        const Eigen::Index dst = static_cast<Eigen::Index>(i);
        out.X.row(dst) = d.X.row(src);
        out.y(dst) = d.y(src);
        out.t(dst) = d.t(src);
        out.g(dst) = g(src);
        out.ids.push_back(d.ids[static_cast<std::size_t>(src)]);
    }
    return out;
}

}  // namespace

OverlapDataset overlap_subset(const LevelSlice& slice, const PropensityModel& pm) {
    if (pm.level != slice.level)
        throw std::invalid_argument("overlap_subset: propensity model fitted for a different level");
    return filter_band(slice, pm);
}

OverlapDataset overlap_subset(const OverlapDataset& data, const PropensityModel& pm) {
    if (pm.level != data.level)
        throw std::invalid_argument("overlap_subset: propensity model fitted for a different level");
    return filter_band(data, pm);
}

}  // namespace creditlift
