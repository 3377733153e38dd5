// Acceptance gate: ten numbered criteria, one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "creditlift/backtest.hpp"
#include "creditlift/datagen.hpp"
#include "creditlift/finance.hpp"
#include "creditlift/metalearners.hpp"
#include "creditlift/pipeline.hpp"
#include "creditlift/policy.hpp"
#include "creditlift/risk.hpp"
#include "creditlift/rng.hpp"
#include "creditlift/selection.hpp"
#include "creditlift/treatments.hpp"
#include "creditlift/types.hpp"

namespace fs = std::filesystem;
using namespace creditlift;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 3) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(prec);
    os << v;
    return os.str();
}

std::string fmt_sci(double v) {
    std::ostringstream os;
    os.setf(std::ios::scientific);
    os.precision(2);
    os << v;
    return os.str();
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const Eigen::VectorXd& v) {
    const double m = v.mean();
    return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
}

// Average ranks (1-based); ties share the mean of their positions.
std::vector<double> ranks_of(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> out(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) out[idx[t]] = rank;
        i = j + 1;
    }
    return out;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const std::vector<double> ra = ranks_of(a);
    const std::vector<double> rb = ranks_of(b);
    const double ma = mean_of(ra);
    const double mb = mean_of(rb);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path("acceptance_tmp") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::optional<std::string> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

// Single-level synthetic estimation problem: all treated dosages share one
// bin, so the level slice covers the whole portfolio.
struct LevelData {
    std::vector<CustomerRecord> records;
    GroundTruth truth;
    DosagePartition partition;
    PropensityModel gate;
    OverlapDataset data;
};

LevelData build_single_level(const GenConfig& config) {
    LevelData ld;
    auto [records, truth] = generate_portfolio(config);
    ld.records = std::move(records);
    ld.truth = std::move(truth);
    std::vector<double> dosages;
    dosages.reserve(ld.records.size());
    for (const auto& r : ld.records) dosages.push_back(r.observed_dosage);
    ld.partition = discretize(dosages, config.cut_points);
    const LevelSlice slice = make_level_slice(ld.records, ld.partition, 1);
    ld.gate = fit_propensity(slice, LearnerSpec::Logistic(), 0.05);
    ld.data = overlap_subset(slice, ld.gate);
    return ld;
}

// True effects aligned with the overlap rows; generated ids are 1..n.
Eigen::VectorXd true_effects_for(const LevelData& ld) {
    Eigen::VectorXd tau(ld.data.n());
    for (Eigen::Index i = 0; i < ld.data.n(); ++i) {
        tau(i) = ld.truth.cate(static_cast<Eigen::Index>(ld.data.ids[static_cast<std::size_t>(i)] - 1), 0);
    }
    return tau;
}

std::vector<CateMethodSpec> cheap_candidates() {
    CateMethodSpec two_lin = default_method_spec(CateMethod::two_model);
    two_lin.outcome_base = LearnerSpec::Linear();
    two_lin.cross_fit_folds = 2;
    two_lin.name = "two_model[linear]";
    CateMethodSpec dir = default_method_spec(CateMethod::direct);
    dir.cross_fit_folds = 2;
    return {two_lin, dir};
}

double treated_fraction(const std::vector<PolicyDecision>& decisions) {
    std::size_t treated = 0;
    for (const auto& d : decisions) treated += d.chosen_level != 0 ? 1 : 0;
    return static_cast<double>(treated) / static_cast<double>(decisions.size());
}

// 1: expected_profit / exposure_at_default against expanded long-double
// arithmetic on 1000 random tuples, within 1e-9 relative, under 1 second.
Outcome criterion_1() {
    const auto t0 = Clock::now();
    Rng rng(101);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double interest = rng.uniform(0.005, 0.06);
        const double balance = rng.uniform(0.0, 20000.0);
        const double pd = rng.uniform();
        const double lgd = rng.uniform();
        const double limit = balance + rng.uniform(0.0, 30000.0);
        const double ccf = rng.uniform();

        const double ead = exposure_at_default(balance, limit, ccf);
        const long double ead_want = static_cast<long double>(balance) +
                                     static_cast<long double>(ccf) * limit -
                                     static_cast<long double>(ccf) * balance;
        worst = std::max(worst, static_cast<double>(fabsl(ead - ead_want) /
                                                    std::max<long double>(1.0L, fabsl(ead_want))));

        const double ep = expected_profit(interest, balance, pd, lgd, ead);
        const long double ep_want = static_cast<long double>(interest) * balance -
                                    static_cast<long double>(interest) * balance * pd -
                                    static_cast<long double>(pd) * lgd * ead;
        worst = std::max(worst, static_cast<double>(fabsl(ep - ep_want) /
                                                    std::max<long double>(1.0L, fabsl(ep_want))));
    }
    const double secs = seconds_since(t0);
    const bool pass = worst <= 1e-9 && secs < 1.0;
    return {pass, "1000 profit/EAD tuples vs long-double oracle, worst rel err " + fmt_sci(worst) +
                      ", " + fmt(secs, 2) + "s (bound 1s)"};
}

// 2: var/cvar against sorted brute force on 500 random distributions, plus
// tail-mean, monotonicity, and equivariance properties, under 10 seconds.
Outcome criterion_2() {
    const auto t0 = Clock::now();
    Rng rng(202);
    const std::array<double, 5> ps = {0.5, 0.8, 0.9, 0.95, 0.99};
    long checks = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const int b = 1 + static_cast<int>(rng.uniform_int(1000));
        BootstrapDistribution dist;
        dist.b = b;
        dist.values.reserve(static_cast<std::size_t>(b));
        const double scale = std::exp(rng.uniform(-1.0, 2.5));
        const double shift = rng.normal(0.0, 40.0);
        for (int j = 0; j < b; ++j) {
            double v = shift + scale * rng.normal();
            if (rng.uniform() < 0.3) v = std::round(v);  // force ties
            dist.values.push_back(v);
        }
        std::vector<double> sorted = dist.values;
        std::sort(sorted.begin(), sorted.end());
        const double mean_all = mean_of(dist.values);

        double prev_cvar = std::numeric_limits<double>::infinity();
        for (const double p : ps) {
            auto rank = static_cast<std::size_t>(std::ceil((1.0 - p) * b - 1e-9));
            rank = std::clamp<std::size_t>(rank, 1, sorted.size());
            const double v_want = sorted[rank - 1];
            const double v_got = var(dist, p);
            if (v_got != v_want)
                return {false, "var mismatch at trial " + std::to_string(trial) + ", p=" + fmt(p, 2)};
            double tail_sum = 0.0;
            std::size_t tail_n = 0;
            for (const double v : dist.values) {
                if (v <= v_want) {
                    tail_sum += v;
                    ++tail_n;
                }
            }
            const double c_want = tail_sum / static_cast<double>(tail_n);
            const double c_got = cvar(dist, p);
            if (c_got != c_want)
                return {false, "cvar mismatch at trial " + std::to_string(trial) + ", p=" + fmt(p, 2)};
            if (!(c_got <= v_got + 1e-12)) return {false, "CVaR <= VaR violated"};
            if (!(c_got <= mean_all + 1e-9 * std::max(1.0, std::abs(mean_all))))
                return {false, "CVaR <= mean violated"};
            if (!(c_got <= prev_cvar + 1e-12)) return {false, "CVaR not non-increasing in p"};
            prev_cvar = c_got;
            ++checks;
        }

        const double p = ps[static_cast<std::size_t>(trial) % ps.size()];
        const double c_shift = rng.normal(0.0, 20.0);
        const double s_scale = std::exp(rng.uniform(-1.0, 1.5));
        BootstrapDistribution shifted = dist, scaled = dist;
        for (auto& v : shifted.values) v += c_shift;
        for (auto& v : scaled.values) v *= s_scale;
        const auto near = [](double got, double want) {
            return std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want));
        };
        if (!near(var(shifted, p), var(dist, p) + c_shift) ||
            !near(cvar(shifted, p), cvar(dist, p) + c_shift))
            return {false, "translation equivariance violated at trial " + std::to_string(trial)};
        if (!near(var(scaled, p), s_scale * var(dist, p)) ||
            !near(cvar(scaled, p), s_scale * cvar(dist, p)))
            return {false, "positive-scale equivariance violated at trial " + std::to_string(trial)};
    }
    const double secs = seconds_since(t0);
    const bool pass = secs < 10.0;
    return {pass, "500 distributions, " + std::to_string(checks) +
                      " var/cvar oracle checks exact, properties hold, " + fmt(secs, 2) +
                      "s (bound 10s)"};
}

// 3: every method is near-unbiased on zero-effect data; a seed passes when
// all six methods keep |mean tau-hat| within 0.1*SD(Y) on a 1000-point grid.
Outcome criterion_3() {
    const auto t0 = Clock::now();
    GenConfig gc;
    gc.n_customers = 10000;  // one treated bin: ~5000 per arm
    gc.k_levels = 1;
    gc.cut_points.clear();
    gc.effect_shape = EffectShape::zero;
    gc.confounding_strength = 0.0;  // randomized arms: any recovered effect is hallucinated
    const std::array<CateMethod, 6> methods = {CateMethod::direct,    CateMethod::two_model,
                                               CateMethod::causal_tree, CateMethod::x_learner,
                                               CateMethod::r_learner, CateMethod::causal_forest_dml};
    int good_seeds = 0;
    double worst_ratio = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        gc.seed = seed;
        const LevelData ld = build_single_level(gc);
        const double sd_y = sd_of(ld.data.y);
        const Eigen::MatrixXd grid = ld.data.X.topRows(std::min<Eigen::Index>(1000, ld.data.n()));
        bool all_ok = true;
        for (std::size_t m = 0; m < methods.size(); ++m) {
            const CateMethodSpec spec = default_method_spec(methods[m], derive_seed(seed, 0xACC3, m));
            const CateModel model = fit_cate(spec, ld.data, ld.gate);
            const double ratio = std::abs(model.predict_raw_all(grid).mean()) / sd_y;
            worst_ratio = std::max(worst_ratio, ratio);
            if (!(ratio <= 0.1)) all_ok = false;
        }
        if (all_ok) ++good_seeds;
    }
    const double secs = seconds_since(t0);
    const bool pass = good_seeds >= 8 && secs < 300.0;
    return {pass, "all 6 methods |mean tau-hat| <= 0.1*SD(Y) in " + std::to_string(good_seeds) +
                      "/10 seeds (worst ratio " + fmt(worst_ratio) + "), " + fmt(secs, 1) +
                      "s (bound 300s)"};
}

// 4: linear effects are recovered by the linear-capable methods to within
// 15% of the effect dispersion, measured against the generator's truth.
Outcome criterion_4() {
    GenConfig gc;
    gc.n_customers = 5000;
    gc.k_levels = 1;
    gc.cut_points.clear();
    gc.effect_shape = EffectShape::linear;
    gc.effect_scale = 100.0;
    gc.confounding_strength = 0.0;  // randomized assignment isolates recovery error

    CateMethodSpec two_lin = default_method_spec(CateMethod::two_model);
    two_lin.outcome_base = LearnerSpec::Linear();
    two_lin.name = "two_model[linear]";
    const std::array<CateMethodSpec, 2> specs = {two_lin, default_method_spec(CateMethod::direct)};

    int good_seeds = 0;
    double worst_ratio = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        gc.seed = seed;
        const LevelData ld = build_single_level(gc);
        const Eigen::VectorXd tau = true_effects_for(ld);
        const double sd_tau = sd_of(tau);
        bool all_ok = true;
        for (std::size_t m = 0; m < specs.size(); ++m) {
            CateMethodSpec spec = specs[m];
            spec.seed = derive_seed(seed, 0xACC4, m);
            const CateModel model = fit_cate(spec, ld.data, ld.gate);
            const Eigen::VectorXd pred = model.predict_raw_all(ld.data.X);
            const double pehe = std::sqrt((pred - tau).squaredNorm() / static_cast<double>(tau.size()));
            const double ratio = pehe / sd_tau;
            worst_ratio = std::max(worst_ratio, ratio);
            if (!(ratio <= 0.15)) all_ok = false;
        }
        if (all_ok) ++good_seeds;
    }
    const bool pass = good_seeds >= 8;
    return {pass, "two_model[linear] and direct[ridge] true sqrt-PEHE <= 0.15*SD(tau) in " +
                      std::to_string(good_seeds) + "/10 seeds (worst ratio " + fmt(worst_ratio) + ")"};
}

// 5: cross-validated scores rank the 7 default candidates like their true
// errors do, and the first-order correction lands closer to the truth.
Outcome criterion_5() {
    GenConfig gc;
    gc.n_customers = 2500;
    gc.k_levels = 1;
    gc.cut_points.clear();
    gc.effect_shape = EffectShape::nonlinear;
    const std::vector<CateMethodSpec> candidates = default_candidates();
    const int folds = 5;

    int rank_ok = 0, order_ok = 0;
    double rho_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        gc.seed = seed;
        const LevelData ld = build_single_level(gc);
        const Eigen::VectorXd tau = true_effects_for(ld);
        std::vector<double> est1, est0, tru;
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            CateMethodSpec spec = candidates[c];
            spec.seed = derive_seed(seed, 0xACC5, c);
            est1.push_back(estimate_pehe(spec, ld.data, ld.gate, folds, 1, seed).mean);
            est0.push_back(estimate_pehe(spec, ld.data, ld.gate, folds, 0, seed).mean);
            tru.push_back(estimate_pehe_truth(spec, ld.data, ld.gate, tau, folds, seed).mean);
        }
        const double rho = spearman(est1, tru);
        rho_sum += rho;
        const std::size_t top1 =
            static_cast<std::size_t>(std::min_element(est1.begin(), est1.end()) - est1.begin());
        std::vector<std::size_t> order(tru.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return tru[a] < tru[b]; });
        const bool in_top3 = top1 == order[0] || top1 == order[1] || top1 == order[2];
        if (rho >= 0.5 && in_top3) ++rank_ok;

        double err1 = 0.0, err0 = 0.0;
        for (std::size_t c = 0; c < tru.size(); ++c) {
            err1 += std::abs(est1[c] - tru[c]);
            err0 += std::abs(est0[c] - tru[c]);
        }
        if (err1 < err0) ++order_ok;
    }
    const bool pass = rank_ok >= 6 && order_ok >= 6;
    return {pass, "7 candidates: Spearman >= 0.5 and top-1 in true top-3 in " +
                      std::to_string(rank_ok) + "/10 seeds (mean rho " + fmt(rho_sum / 10.0, 2) +
                      "); order-1 closer to truth than order-0 in " + std::to_string(order_ok) +
                      "/10 seeds"};
}

// 6: the forward-looking layer only ever keeps or downgrades the upstream
// risk-averse decision; exact containment over 10 seeds x 10000 customers.
Outcome criterion_6() {
    GenConfig gc;
    gc.n_customers = 600;
    gc.k_levels = 3;
    gc.cut_points = {1.4, 1.9};
    long violations = 0, upstream_treated = 0, fl_treated = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        gc.seed = 60 + seed;
        auto [records, truth] = generate_portfolio(gc);
        std::vector<double> dosages;
        for (const auto& r : records) dosages.push_back(r.observed_dosage);
        const DosagePartition part = discretize(dosages, gc.cut_points);
        const ForwardModel forward = fit_forward_model(records, part, LearnerSpec::Linear(), 0.25, seed);
        Rng rng(derive_seed(seed, 0xC6));
        for (int i = 0; i < 10000; ++i) {
            const CustomerRecord& r = records[static_cast<std::size_t>(i) % records.size()];
            const Eigen::RowVectorXd x = feature_row(r);
            std::vector<std::optional<BootstrapDistribution>> dists(static_cast<std::size_t>(part.k()));
            for (int j = 1; j <= part.k(); ++j) {
                if (!part.defined(j) || rng.uniform() < 0.15) continue;
                BootstrapDistribution d;
                d.b = 25;
                const double center = rng.uniform(0.0, 8.0);
                for (int rep = 0; rep < 25; ++rep) d.values.push_back(center + rng.normal(0.0, 2.0));
                dists[static_cast<std::size_t>(j - 1)] = std::move(d);
            }
            const PolicyDecision up = recommend_cl_cvar(dists, 0.95, part, r.id);
            const double y_hat = forward.predict(x, part.dosage_of(up.chosen_level));
            const double y_r = y_hat + rng.normal(0.0, 1.0);
            const PolicyDecision fl = recommend_cl_cvar_fl(up, y_r, forward, x);
            if (up.chosen_level != 0) ++upstream_treated;
            if (fl.chosen_level != 0) {
                ++fl_treated;
                if (fl.chosen_level != up.chosen_level) ++violations;
            }
        }
    }
    const bool exercised = upstream_treated > 1000 && fl_treated > 0 && fl_treated < upstream_treated;
    const bool pass = violations == 0 && exercised;
    return {pass, std::to_string(violations) + " containment violations over 100000 decisions (" +
                      std::to_string(upstream_treated) + " upstream increases, " +
                      std::to_string(fl_treated) + " confirmed by the forward check)"};
}

// 7: the full-pipeline forward-looking policy beats uniform-random and
// always-control on true potential outcomes; treated fractions reported.
Outcome criterion_7() {
    const std::vector<std::string> policies = {"cl", "cl-cvar", "cl-cvar-fl", "predict-only"};
    int fl_wins = 0;
    std::map<std::string, double> frac_sum;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        PipelineConfig pc;
        pc.paths.out_dir = fresh_dir("c7_seed" + std::to_string(seed)).string();
        pc.gen.seed = seed;  // default generator: 10000 customers, 6 levels
        pc.seed = seed;
        pc.folds = 2;
        pc.bootstrap_b = 40;
        pc.forward = LearnerSpec::Forest(40, 6, 25, 0.5);
        pc.candidates = cheap_candidates();
        run_simulate(pc);
        run_discretize(pc);
        run_select(pc);
        run_recommend(pc);

        const GroundTruth truth = load_ground_truth(truth_path(pc));
        std::map<std::string, std::vector<PolicyDecision>> decisions;
        for (const auto& p : policies) {
            decisions[p] = load_decisions(decisions_path(pc, p));
            frac_sum[p] += treated_fraction(decisions[p]);
        }
        const double v_fl = oracle_policy_value(truth, decisions["cl-cvar-fl"]);

        const std::size_t n = truth.ids.size();
        std::vector<PolicyDecision> control(n), random_policy(n);
        Rng rng(derive_seed(seed, 0x7A11));
        for (std::size_t i = 0; i < n; ++i) {
            control[i].id = truth.ids[i];
            control[i].chosen_level = 0;
            random_policy[i].id = truth.ids[i];
            random_policy[i].chosen_level = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(truth.k()) + 1));
        }
        if (v_fl > oracle_policy_value(truth, random_policy) &&
            v_fl > oracle_policy_value(truth, control))
            ++fl_wins;
        fs::remove_all(pc.paths.out_dir);
    }
    const bool ordering = frac_sum["cl"] >= frac_sum["cl-cvar-fl"];
    const bool pass = fl_wins >= 8 && ordering;
    return {pass, "forward-looking policy beats uniform-random and always-control in " +
                      std::to_string(fl_wins) + "/10 seeds; mean treated fractions cl=" +
                      fmt(frac_sum["cl"] / 10.0, 2) + " cl-cvar=" + fmt(frac_sum["cl-cvar"] / 10.0, 2) +
                      " cl-cvar-fl=" + fmt(frac_sum["cl-cvar-fl"] / 10.0, 2) + " predict-only=" +
                      fmt(frac_sum["predict-only"] / 10.0, 2) +
                      (ordering ? " (cl >= cl-cvar-fl holds)" : " (cl >= cl-cvar-fl VIOLATED)")};
}

// 8: the profit predictor's held-out rmse stays within 60% of the held-out
// target SD on default synthetic data.
Outcome criterion_8() {
    GenConfig gc;
    gc.seed = 88;
    auto [records, truth] = generate_portfolio(gc);
    std::vector<double> dosages;
    for (const auto& r : records) dosages.push_back(r.observed_dosage);
    const DosagePartition part = discretize(dosages, gc.cut_points);
    const ForwardModel forward = fit_forward_model(records, part, LearnerSpec::Gbm(200, 0.1, 3), 0.2, 88);
    const double ratio = forward.holdout_rmse / forward.holdout_sd;
    const bool pass = ratio <= 0.60;
    return {pass, "profit model held-out rmse/SD = " + fmt(ratio, 3) + " (bound 0.60, rmse " +
                      fmt(forward.holdout_rmse, 2) + ", SD " + fmt(forward.holdout_sd, 2) + ")"};
}

// 9: scenario classification partitions 10000 fuzzed (gs, cpp) pairs, and
// evaluate's scenario sizes sum back to the population.
Outcome criterion_9() {
    Rng rng(909);
    std::array<long, 5> counts{};
    long mismatches = 0;
    for (int i = 0; i < 10000; ++i) {
        const int gs = static_cast<int>(rng.uniform_int(7));
        const int cpp = static_cast<int>(rng.uniform_int(7));
        const Scenario got = classify_scenario(gs, cpp);
        const Scenario want = gs > 0 && cpp > 0 ? (gs == cpp ? Scenario::i : Scenario::ii)
                              : gs > 0          ? Scenario::iii
                              : cpp > 0         ? Scenario::iv
                                                : Scenario::v;
        if (got != want) ++mismatches;
        ++counts[static_cast<std::size_t>(got)];
    }
    const long total = std::accumulate(counts.begin(), counts.end(), 0L);

    GenConfig gc;
    gc.seed = 99;
    auto [records, truth] = generate_portfolio(gc);
    std::vector<double> dosages;
    for (const auto& r : records) dosages.push_back(r.observed_dosage);
    const DosagePartition part = discretize(dosages, gc.cut_points);
    std::vector<int> cpp_levels;
    std::vector<PolicyDecision> decisions;
    for (const auto& r : records) {
        cpp_levels.push_back(assign_level(r.observed_dosage, part));
        PolicyDecision d;
        d.id = r.id;
        d.chosen_level = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(part.k()) + 1));
        if (d.chosen_level > 0 && !part.defined(d.chosen_level)) d.chosen_level = 0;
        d.chosen_dosage = part.dosage_of(d.chosen_level);
        decisions.push_back(d);
    }
    const ScenarioMetrics metrics = evaluate(decisions, cpp_levels, records);
    std::int64_t size_sum = 0;
    for (const auto& row : metrics.rows) size_sum += row.size;
    const auto n = static_cast<std::int64_t>(records.size());

    const bool pass = mismatches == 0 && total == 10000 && size_sum == n && metrics.all.size == n;
    return {pass, "10000 fuzzed pairs, " + std::to_string(mismatches) +
                      " mismatches vs table oracle, counts sum " + std::to_string(total) +
                      "; evaluate scenario sizes sum " + std::to_string(size_sum) + "/" +
                      std::to_string(n)};
}

// 10: the full pipeline at production scale finishes inside 10 minutes and
// reruns to byte-identical artifacts in a fresh directory.
Outcome criterion_10() {
    PipelineConfig base;
    base.gen.n_customers = 20000;  // default generator otherwise: 6 levels
    base.gen.seed = 7;
    base.seed = 7;
    base.folds = 5;
    base.bootstrap_b = 100;

    const auto run_into = [&](const std::string& name, PipelineConfig& pc) {
        pc = base;
        pc.paths.out_dir = fresh_dir(name).string();
        const auto t0 = Clock::now();
        run_simulate(pc);
        run_discretize(pc);
        run_select(pc);
        run_recommend(pc);
        run_evaluate(pc);
        run_report(pc);
        return seconds_since(t0);
    };
    PipelineConfig pa, pb;
    const double t_first = run_into("c10_a", pa);
    const double t_second = run_into("c10_b", pb);

    std::vector<std::pair<std::string, std::string>> pairs = {
        {portfolio_path(pa), portfolio_path(pb)},   {truth_path(pa), truth_path(pb)},
        {partition_path(pa), partition_path(pb)},   {selection_path(pa), selection_path(pb)},
        {forward_path(pa), forward_path(pb)},       {report_path(pa), report_path(pb)},
    };
    for (const std::string policy : {"cl", "cl-cvar", "cl-cvar-fl", "predict-only"}) {
        pairs.emplace_back(decisions_path(pa, policy), decisions_path(pb, policy));
        pairs.emplace_back(backtest_path(pa, policy, false), backtest_path(pb, policy, false));
        pairs.emplace_back(backtest_path(pa, policy, true), backtest_path(pb, policy, true));
    }
    std::size_t identical = 0;
    std::string first_diff;
    for (const auto& [a, b] : pairs) {
        const auto ba = read_bytes(a);
        const auto bb = read_bytes(b);
        if (ba && bb && *ba == *bb) {
            ++identical;
        } else if (first_diff.empty()) {
            first_diff = fs::path(a).filename().string();
        }
    }
    fs::remove_all(pa.paths.out_dir);
    fs::remove_all(pb.paths.out_dir);

    const bool pass = t_first < 600.0 && identical == pairs.size();
    std::string detail = "20000 customers, 6 levels, 5 folds, B=100: first run " + fmt(t_first, 1) +
                         "s (bound 600s), rerun " + fmt(t_second, 1) + "s, " +
                         std::to_string(identical) + "/" + std::to_string(pairs.size()) +
                         " artifacts byte-identical";
    if (!first_diff.empty()) detail += " (first diff: " + first_diff + ")";
    return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
    using CriterionFn = Outcome (*)();
    const std::vector<std::pair<int, CriterionFn>> criteria = {
        {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4},
        {5, criterion_5}, {6, criterion_6}, {7, criterion_7}, {8, criterion_8},
        {9, criterion_9}, {10, criterion_10},
    };
    std::set<int> wanted;
    for (int a = 1; a < argc; ++a) wanted.insert(std::atoi(argv[a]));
    int failures = 0;
    for (const auto& [number, fn] : criteria) {
        if (!wanted.empty() && wanted.count(number) == 0) continue;
        const auto t0 = Clock::now();
        Outcome out;
        try {
            out = fn();
        } catch (const std::exception& e) {
            out = {false, std::string("unexpected exception: ") + e.what()};
        }
        if (!out.pass) ++failures;
        std::cout << "criterion " << number << ": " << (out.pass ? "PASS" : "FAIL") << " ("
                  << fmt(seconds_since(t0), 1) << "s) - " << out.detail << std::endl;
    }
    std::cout << "acceptance: " << (10 - failures) << "/10 criteria passed" << std::endl;
    return failures;
}
