#pragma once

#include <cstdint>
#include <vector>

#include "creditlift/metalearners.hpp"

namespace creditlift {

// Bootstrap sample of one customer's individual treatment effect.
struct BootstrapDistribution {
    std::vector<double> values;  // one per replicate, fit order
    std::uint64_t seed = 0;
    int b = 0;
};

// B models refit on resamples-with-replacement of the level's training data;
// evaluating all of them at a point yields that point's ITE distribution.
struct BootstrapEnsemble {
    std::vector<CateModel> replicates;
    int level = 0;
    double beta = 0.0;
    std::uint64_t seed = 0;
};

BootstrapEnsemble fit_bootstrap_ensemble(const CateMethodSpec& spec, const OverlapDataset& data,
                                         const PropensityModel& gate, int b, std::uint64_t seed);

BootstrapDistribution distribution_at(const BootstrapEnsemble& ensemble,
                                      const Eigen::Ref<const Eigen::RowVectorXd>& x);

// Single-point convenience wrapper; identical values to fitting the ensemble
// and evaluating it at x.
BootstrapDistribution bootstrap_ite(const CateMethodSpec& spec, const OverlapDataset& data,
                                    const PropensityModel& gate,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& x, int b,
                                    std::uint64_t seed);

// Empirical value-at-risk at confidence p: the ceil((1-p)*B)-th smallest value.
double var(const BootstrapDistribution& dist, double p);

// Conditional value-at-risk: mean of all values at or below var(dist, p).
double cvar(const BootstrapDistribution& dist, double p);

}  // namespace creditlift
