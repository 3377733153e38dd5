#include "creditlift/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "creditlift/csv.hpp"
#include "creditlift/errors.hpp"
#include "creditlift/finance.hpp"
#include "creditlift/rng.hpp"
#include "creditlift/treatments.hpp"

namespace creditlift {

std::string to_string(EffectShape shape) {
    switch (shape) {
        case EffectShape::zero: return "zero";
        case EffectShape::constant: return "constant";
        case EffectShape::linear: return "linear";
        case EffectShape::nonlinear: return "nonlinear";
    }
    return "unknown";
}

EffectShape effect_shape_from_string(const std::string& name) {
    if (name == "zero") return EffectShape::zero;
    if (name == "constant") return EffectShape::constant;
    if (name == "linear") return EffectShape::linear;
    if (name == "nonlinear") return EffectShape::nonlinear;
    throw ConfigError("unknown effect_shape '" + name + "'");
}

namespace {

constexpr double kControlShare = 0.45;  // marginal P(control) at zero confounding
constexpr double kGenLgd = 0.75;
constexpr double kGenCcf = 0.35;

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

void validate(const GenConfig& c) {
    if (c.n_customers < 1) throw ConfigError("gen config: n_customers must be positive");
    if (c.k_levels != static_cast<int>(c.cut_points.size()) + 1)
        throw ConfigError("gen config: k_levels must equal cut_points.size() + 1");
    for (std::size_t i = 0; i + 1 < c.cut_points.size(); ++i) {
        if (!(c.cut_points[i] < c.cut_points[i + 1]))
            throw ConfigError("gen config: cut_points must be strictly ascending");
    }
    for (double t : c.cut_points) {
        if (!(t > kDosageMin && t < kDosageMax))
            throw ConfigError("gen config: cut_points must lie inside the dosage range (1.05, 2.5)");
    }
    if (c.confounding_strength < 0) throw ConfigError("gen config: confounding_strength must be nonnegative");
    if (c.overlap_violation_fraction < 0 || c.overlap_violation_fraction > 1)
        throw ConfigError("gen config: overlap_violation_fraction must lie in [0,1]");
    if (c.noise_sd < 0) throw ConfigError("gen config: noise_sd must be nonnegative");
    if (!std::isfinite(c.effect_scale)) throw ConfigError("gen config: effect_scale must be finite");
}

struct Latent {
    double zs = 0;   // standardized bureau score
    double zu = 0;   // standardized utilization
    double u_assign = 0;
    double u_dose = 0;
    double eps_pre = 0;
    double eps = 0;
};

// Confounding index: high score, high utilization customers were more likely
// to receive (larger) increases under the historical policy.
double confound_score(const Latent& l) { return 0.7 * l.zs + 0.5 * l.zu; }

double baseline_profit(const CustomerRecord& r) {
    const double ead = exposure_at_default_unchecked(r.avg_balance, r.limit_m3, kGenCcf);
    return expected_profit_unchecked(r.interest_rate, r.avg_balance, r.pd_m3, kGenLgd, ead);
}

// Per-level effect tau_j(x); u = eval_dosage / kDosageMax in (0, 1].
double effect_at(const GenConfig& c, const CustomerRecord& r, const Latent& l, double u) {
    switch (c.effect_shape) {
        case EffectShape::zero: return 0.0;
        case EffectShape::constant: return c.effect_scale;
        case EffectShape::linear: {
            // Linear in raw features so linear base learners can represent it.
            const double lin = 0.9 * l.zs - 0.5 * (r.avg_balance / 1000.0 - 1.1) +
                               0.4 * (r.est_income / 1000.0 - 2.8);
            return c.effect_scale * lin * (0.5 + 0.5 * u);
        }
        case EffectShape::nonlinear: {
            const double g1 = 1.3 * std::tanh(l.zs) + 0.6 * std::sin(r.avg_balance / 800.0) + 0.5;
            const double g2 = 0.9 * sigmoid(2.0 * l.zu) + 0.3;
            return c.effect_scale * (g1 * u - g2 * u * u);
        }
    }
    return 0.0;
}

// Bin bounds intersected with the dosage range, mapped to [0,1].
std::pair<double, double> bin_unit_bounds(const std::vector<double>& cuts, int j) {
    const double lo = j == 0 ? kDosageMin : std::clamp(cuts[j - 1], kDosageMin, kDosageMax);
    const double hi = j == static_cast<int>(cuts.size()) ? kDosageMax
                                                         : std::clamp(cuts[j], kDosageMin, kDosageMax);
    const double span = kDosageMax - kDosageMin;
    return {(lo - kDosageMin) / span, (hi - kDosageMin) / span};
}

// P(unit dosage <= w | tilt a) for the logistic-tilted uniform draw.
double tilted_cdf(double w, double a) {
    if (w <= 0.0) return 0.0;
    if (w >= 1.0) return 1.0;
    return sigmoid(logit(w) - a);
}

}  // namespace

std::vector<double> theoretical_marginals(const GenConfig& config) {
    validate(config);
    const int k = config.k_levels;
    std::vector<double> marg(static_cast<std::size_t>(k) + 1, 0.0);
    marg[0] = kControlShare;
    for (int j = 0; j < k; ++j) {
        const auto [wa, wb] = bin_unit_bounds(config.cut_points, j);
        marg[static_cast<std::size_t>(j) + 1] = (1.0 - kControlShare) * std::max(0.0, wb - wa);
    }
    return marg;
}

std::pair<std::vector<CustomerRecord>, GroundTruth> generate_portfolio(const GenConfig& config) {
    validate(config);
    const int n = config.n_customers;
    const int k = config.k_levels;

    std::vector<CustomerRecord> records(static_cast<std::size_t>(n));
    std::vector<Latent> latents(static_cast<std::size_t>(n));

    // Pass 1: features and latent draws; one stream per customer.
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_seed(config.seed, 0xC057, static_cast<std::uint64_t>(i)));
        CustomerRecord& r = records[static_cast<std::size_t>(i)];
        Latent& l = latents[static_cast<std::size_t>(i)];
        r.id = i + 1;

        do {
            r.bureau_score = rng.normal(650.0, 80.0);
        } while (r.bureau_score < 300.0 || r.bureau_score > 850.0);
        r.est_income = std::exp(rng.normal(std::log(2500.0), 0.5));
        r.interest_rate = rng.uniform(0.015, 0.045);
        r.months_on_book = 6 + rng.poisson(30.0);
        r.limit_m3 = std::exp(rng.normal(std::log(2000.0), 0.6));
        const double util = rng.uniform(0.05, 0.9);
        r.avg_balance = util * r.limit_m3;
        r.avg_consumption = r.est_income * (0.15 + 0.35 * rng.uniform());
        for (double* b : {&r.balance_m1, &r.balance_m2, &r.balance_m3})
            *b = r.avg_balance * (0.8 + 0.4 * rng.uniform());
        for (double* cin : {&r.cons_in_m1, &r.cons_in_m2, &r.cons_in_m3})
            *cin = r.avg_consumption * (0.4 + 0.4 * rng.uniform());
        for (double* cout : {&r.cons_out_m1, &r.cons_out_m2, &r.cons_out_m3})
            *cout = r.avg_consumption * (0.3 + 0.4 * rng.uniform());
        double* fees_avg[] = {&r.fees_avg_m1, &r.fees_avg_m2, &r.fees_avg_m3};
        double* fees_max[] = {&r.fees_max_m1, &r.fees_max_m2, &r.fees_max_m3};
        double* fees_min[] = {&r.fees_min_m1, &r.fees_min_m2, &r.fees_min_m3};
        for (int m = 0; m < 3; ++m) {
            *fees_avg[m] = rng.uniform(0.0, 3.0);
            *fees_max[m] = *fees_avg[m] + rng.uniform(0.0, 2.0);
            *fees_min[m] = std::max(0.0, *fees_avg[m] - rng.uniform(0.0, 1.5));
        }
        for (double* t : {&r.txn_m1, &r.txn_m2, &r.txn_m3}) *t = rng.poisson(20.0);
        r.max_unpaid_life = rng.poisson(0.8);
        r.unpaid_m1_m3 = rng.poisson(0.3);

        l.zs = (r.bureau_score - 650.0) / 80.0;
        l.zu = (util - 0.475) / 0.245;
        r.pd_m3 = sigmoid(-2.2 - 1.0 * l.zs + 0.5 * l.zu + 0.4 * rng.normal());
        r.pd_m6 = std::clamp(r.pd_m3 * rng.uniform(0.9, 1.1), 0.0, 1.0);

        l.u_assign = rng.uniform();
        l.u_dose = rng.uniform();
        l.eps_pre = rng.normal(0.0, config.noise_sd);
        l.eps = rng.normal(0.0, config.noise_sd);
    }

    // Pass 2: the overlap-violation region is the top score quantile; those
    // customers are forced to control deterministically.
    std::vector<char> forced(static_cast<std::size_t>(n), 0);
    if (config.overlap_violation_fraction > 0.0) {
        const int m = static_cast<int>(std::floor(config.overlap_violation_fraction * n));
        if (m > 0) {
            std::vector<double> scores(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) scores[static_cast<std::size_t>(i)] = records[static_cast<std::size_t>(i)].bureau_score;
            std::sort(scores.begin(), scores.end());
            const double threshold = scores[static_cast<std::size_t>(n - m)];
            for (int i = 0; i < n; ++i)
                forced[static_cast<std::size_t>(i)] = records[static_cast<std::size_t>(i)].bureau_score >= threshold ? 1 : 0;
        }
    }

    // Pass 3: treatment assignment (the synthetic historical policy).
    const double a0 = logit(kControlShare);
    std::vector<double> dosages(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const Latent& l = latents[static_cast<std::size_t>(i)];
        if (forced[static_cast<std::size_t>(i)]) continue;
        const double s = confound_score(l);
        const double p_control = sigmoid(a0 - config.confounding_strength * s);
        if (l.u_assign < p_control) continue;
        const double tilt = 0.8 * config.confounding_strength * s;
        const double v = sigmoid(logit(std::max(l.u_dose, 1e-12)) + tilt);
        dosages[static_cast<std::size_t>(i)] = kDosageMin + (kDosageMax - kDosageMin) * v;
    }
    for (int i = 0; i < n; ++i) records[static_cast<std::size_t>(i)].observed_dosage = dosages[static_cast<std::size_t>(i)];

    // Pass 4: realized level dosages. Bin means come from the sample so the
    // downstream discretization reproduces them exactly; empty bins fall back
    // to their midpoint so truth stays defined at every level.
    bool any_treated = false;
    for (double d : dosages) any_treated = any_treated || d > 0.0;
    if (!any_treated) throw NumericError("generate_portfolio: no customer was treated; nothing to discretize");
    const DosagePartition part = discretize(dosages, config.cut_points);
    std::vector<double> eval_dosage(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        if (part.counts[static_cast<std::size_t>(j)] > 0) {
            eval_dosage[static_cast<std::size_t>(j)] = part.levels[static_cast<std::size_t>(j)];
        } else {
            const auto [wa, wb] = bin_unit_bounds(config.cut_points, j);
            eval_dosage[static_cast<std::size_t>(j)] = kDosageMin + (kDosageMax - kDosageMin) * 0.5 * (wa + wb);
        }
    }

    // Pass 5: potential outcomes. One shared noise draw per customer makes
    // true_cate(level) exactly Y(beta_j) - Y(0) and ep_m6 bitwise equal to the
    // potential outcome of the assigned level.
    GroundTruth truth;
    truth.ids.resize(static_cast<std::size_t>(n));
    truth.y0.resize(n);
    truth.y_level.resize(n, k);
    truth.cate.resize(n, k);
    truth.propensity.resize(n, k + 1);
    for (int i = 0; i < n; ++i) {
        CustomerRecord& r = records[static_cast<std::size_t>(i)];
        const Latent& l = latents[static_cast<std::size_t>(i)];
        const double b = baseline_profit(r);
        r.ep_m3 = b + l.eps_pre;
        const double y0 = b + l.eps;
        truth.ids[static_cast<std::size_t>(i)] = r.id;
        truth.y0(i) = y0;
        for (int j = 0; j < k; ++j) {
            const double u = eval_dosage[static_cast<std::size_t>(j)] / kDosageMax;
            const double tau = effect_at(config, r, l, u);
            truth.cate(i, j) = tau;
            truth.y_level(i, j) = b + tau + l.eps;
        }
        if (forced[static_cast<std::size_t>(i)]) {
            truth.propensity(i, 0) = 1.0;
            for (int j = 1; j <= k; ++j) truth.propensity(i, j) = 0.0;
        } else {
            const double s = confound_score(l);
            const double p_control = sigmoid(a0 - config.confounding_strength * s);
            truth.propensity(i, 0) = p_control;
            const double tilt = 0.8 * config.confounding_strength * s;
            for (int j = 0; j < k; ++j) {
                const auto [wa, wb] = bin_unit_bounds(config.cut_points, j);
                truth.propensity(i, j + 1) = (1.0 - p_control) * (tilted_cdf(wb, tilt) - tilted_cdf(wa, tilt));
            }
        }

        const int level = r.observed_dosage == 0.0 ? 0 : assign_level(r.observed_dosage, part);
        r.limit_m6 = level == 0 ? r.limit_m3 : r.limit_m3 * r.observed_dosage;
        r.ep_m6 = level == 0 ? y0 : truth.y_level(i, level - 1);
    }
    return {std::move(records), std::move(truth)};
}

// ---------------------------------------------------------------------------
// Ground-truth file round trip

void write_ground_truth(const GroundTruth& truth, const std::string& path) {
    const int n = static_cast<int>(truth.y0.size());
    const int k = truth.k();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write ground-truth file '" + path + "'");
    out << "id,y0";
    for (int j = 1; j <= k; ++j) out << ",y_" << j;
    for (int j = 1; j <= k; ++j) out << ",cate_" << j;
    for (int j = 0; j <= k; ++j) out << ",prop_" << j;
    out << '\n';
    for (int i = 0; i < n; ++i) {
        out << csv::format_int(truth.ids[static_cast<std::size_t>(i)]) << ',' << csv::format_double(truth.y0(i));
        for (int j = 0; j < k; ++j) out << ',' << csv::format_double(truth.y_level(i, j));
        for (int j = 0; j < k; ++j) out << ',' << csv::format_double(truth.cate(i, j));
        for (int j = 0; j <= k; ++j) out << ',' << csv::format_double(truth.propensity(i, j));
        out << '\n';
    }
    if (!out) throw DataError("write to ground-truth file '" + path + "' failed");
}

GroundTruth load_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open ground-truth file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("ground-truth file '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = csv::split_line(line);
    // Shape: id, y0, k y columns, k cate columns, k+1 prop columns.
    if (header.size() < 5 || (header.size() - 2) % 3 != 1)
        throw DataError("ground-truth file '" + path + "': unrecognized header shape");
    const int k = static_cast<int>((header.size() - 3) / 3);
    std::vector<std::vector<double>> rows;
    std::vector<std::int64_t> ids;
    std::size_t rowno = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++rowno;
        const auto fields = csv::split_line(line);
        if (fields.size() != header.size())
            throw DataError("ground-truth file '" + path + "', row " +
                            csv::format_int(static_cast<long long>(rowno)) + ": wrong field count");
        try {
            ids.push_back(csv::parse_int(fields[0]));
            std::vector<double> vals;
            vals.reserve(fields.size() - 1);
            for (std::size_t c = 1; c < fields.size(); ++c) vals.push_back(csv::parse_double(fields[c]));
            rows.push_back(std::move(vals));
        } catch (const std::invalid_argument& e) {
            throw DataError("ground-truth file '" + path + "', row " +
                            csv::format_int(static_cast<long long>(rowno)) + ": " + e.what());
        }
    }
    const int n = static_cast<int>(rows.size());
    GroundTruth truth;
    truth.ids = std::move(ids);
    truth.y0.resize(n);
    truth.y_level.resize(n, k);
    truth.cate.resize(n, k);
    truth.propensity.resize(n, k + 1);
    for (int i = 0; i < n; ++i) {
        const auto& v = rows[static_cast<std::size_t>(i)];
        truth.y0(i) = v[0];
        for (int j = 0; j < k; ++j) truth.y_level(i, j) = v[static_cast<std::size_t>(1 + j)];
        for (int j = 0; j < k; ++j) truth.cate(i, j) = v[static_cast<std::size_t>(1 + k + j)];
        for (int j = 0; j <= k; ++j) truth.propensity(i, j) = v[static_cast<std::size_t>(1 + 2 * k + j)];
    }
    return truth;
}

std::string truth_path_for(const std::string& portfolio_path) {
    const std::string suffix = ".csv";
    if (portfolio_path.size() > suffix.size() &&
        portfolio_path.compare(portfolio_path.size() - suffix.size(), suffix.size(), suffix) == 0) {
        return portfolio_path.substr(0, portfolio_path.size() - suffix.size()) + ".truth.csv";
    }
    return portfolio_path + ".truth.csv";
}

}  // namespace creditlift
