#pragma once

#include <stdexcept>
#include <vector>

namespace creditlift {

// Loss given default and credit conversion factor, constant across customers.
struct ProfitParams {
    double lgd = 0.75;
    double ccf = 0.35;
};

// One defaulted account: balances at the reference month and at default.
struct DefaulterRecord {
    double balance_ref = 0;
    double limit_ref = 0;
    double balance_at_default = 0;
};

// Expected revenue minus provisions: interest*balance*(1-pd) - pd*lgd*ead.
template <typename Scalar>
Scalar expected_profit_unchecked(Scalar interest, Scalar balance, Scalar pd, Scalar lgd, Scalar ead) {
    return interest * balance * (Scalar(1) - pd) - pd * lgd * ead;
}

double expected_profit(double interest, double balance, double pd, double lgd, double ead);

// Balance plus CCF-weighted undrawn limit; lands in [balance, limit].
template <typename Scalar>
Scalar exposure_at_default_unchecked(Scalar balance, Scalar limit, Scalar ccf) {
    return balance + ccf * (limit - balance);
}

double exposure_at_default(double balance, double limit, double ccf);

// Median of per-defaulter drawdown ratios, each clipped to [0,1]. Records
// with no remaining limit are excluded (ratio undefined).
double estimate_ccf(const std::vector<DefaulterRecord>& defaulters);

}  // namespace creditlift
