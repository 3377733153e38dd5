#include "creditlift/risk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "creditlift/errors.hpp"
#include "creditlift/rng.hpp"

namespace creditlift {
namespace {

constexpr int kMaxResampleRetries = 10;

OverlapDataset resample(const OverlapDataset& data, std::uint64_t seed) {
    const auto n = data.n();
    for (int retry = 0; retry <= kMaxResampleRetries; ++retry) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(retry)));
        std::vector<int> rows(static_cast<std::size_t>(n));
        bool has_ctrl = false;
        bool has_treat = false;
        for (auto& r : rows) {
            r = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
            (data.t(r) > 0.5 ? has_treat : has_ctrl) = true;
        }
        if (!has_ctrl || !has_treat) continue;

        OverlapDataset out;
        out.level = data.level;
        out.beta = data.beta;
        out.trim_eps = data.trim_eps;
        out.X.resize(n, data.X.cols());
        out.y.resize(n);
        out.t.resize(n);
        out.g.resize(n);
        out.ids.reserve(rows.size());
        for (Eigen::Index i = 0; i < n; ++i) {
            const int r = rows[static_cast<std::size_t>(i)];
            out.X.row(i) = data.X.row(r);
            out.y(i) = data.y(r);
            out.t(i) = data.t(r);
            out.g(i) = data.g(r);
            out.ids.push_back(data.ids[static_cast<std::size_t>(r)]);
        }
        return out;
    }
    throw NumericError("bootstrap resample produced a single treatment class " +
                       std::to_string(kMaxResampleRetries + 1) + " times in a row");
}

}  // namespace

BootstrapEnsemble fit_bootstrap_ensemble(const CateMethodSpec& spec, const OverlapDataset& data,
                                         const PropensityModel& gate, int b, std::uint64_t seed) {
    if (b < 1) throw ConfigError("bootstrap: replicate count must be positive");
    BootstrapEnsemble ensemble;
    ensemble.level = data.level;
    ensemble.beta = data.beta;
    ensemble.seed = seed;
    ensemble.replicates.reserve(static_cast<std::size_t>(b));
    for (int rep = 0; rep < b; ++rep) {
        const OverlapDataset boot = resample(data, derive_seed(seed, static_cast<std::uint64_t>(rep)));
        CateMethodSpec rep_spec = spec;
        rep_spec.seed = derive_seed(spec.seed, 0xB007, static_cast<std::uint64_t>(rep));
        ensemble.replicates.push_back(fit_cate(rep_spec, boot, gate));
    }
    return ensemble;
}

BootstrapDistribution distribution_at(const BootstrapEnsemble& ensemble,
                                      const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    BootstrapDistribution dist;
    dist.seed = ensemble.seed;
    dist.b = static_cast<int>(ensemble.replicates.size());
    dist.values.reserve(ensemble.replicates.size());
    for (const auto& model : ensemble.replicates) {
        dist.values.push_back(model.predict_raw(x));
    }
    return dist;
}

BootstrapDistribution bootstrap_ite(const CateMethodSpec& spec, const OverlapDataset& data,
                                    const PropensityModel& gate,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& x, int b,
                                    std::uint64_t seed) {
    if (!gate.in_band(x)) {
        throw NumericError("bootstrap_ite: point lies outside the overlap gate for level " +
                           std::to_string(data.level));
    }
    return distribution_at(fit_bootstrap_ensemble(spec, data, gate, b, seed), x);
}

double var(const BootstrapDistribution& dist, double p) {
    if (dist.values.empty()) throw std::invalid_argument("var: empty distribution");
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("var: p must lie in (0, 1)");
    std::vector<double> sorted = dist.values;
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    // Guard against the product landing epsilon above an integer.
    auto idx = static_cast<std::size_t>(std::ceil((1.0 - p) * n - 1e-9));
    idx = std::clamp<std::size_t>(idx, 1, sorted.size());
    return sorted[idx - 1];
}

double cvar(const BootstrapDistribution& dist, double p) {
    const double threshold = var(dist, p);
    double sum = 0.0;
    std::size_t count = 0;
    for (const double v : dist.values) {
        if (v <= threshold) {
            sum += v;
            ++count;
        }
    }
    return sum / static_cast<double>(count);
}

}  // namespace creditlift
