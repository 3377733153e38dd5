#include "creditlift/finance.hpp"

#include <algorithm>
#include <cmath>

namespace creditlift {

double expected_profit(double interest, double balance, double pd, double lgd, double ead) {
    if (!(pd >= 0.0 && pd <= 1.0)) throw std::domain_error("expected_profit: pd outside [0,1]");
    if (!(lgd >= 0.0 && lgd <= 1.0)) throw std::domain_error("expected_profit: lgd outside [0,1]");
    if (!(balance >= 0.0)) throw std::domain_error("expected_profit: negative balance");
    if (!(ead >= 0.0)) throw std::domain_error("expected_profit: negative ead");
    return expected_profit_unchecked(interest, balance, pd, lgd, ead);
}

double exposure_at_default(double balance, double limit, double ccf) {
    if (!(balance >= 0.0)) throw std::domain_error("exposure_at_default: negative balance");
    if (balance > limit) throw std::domain_error("exposure_at_default: balance exceeds limit");
    if (!(ccf >= 0.0 && ccf <= 1.0)) throw std::domain_error("exposure_at_default: ccf outside [0,1]");
    return exposure_at_default_unchecked(balance, limit, ccf);
}

double estimate_ccf(const std::vector<DefaulterRecord>& defaulters) {
    std::vector<double> ratios;
    ratios.reserve(defaulters.size());
    for (const auto& d : defaulters) {
        const double remaining = d.limit_ref - d.balance_ref;
        if (!(remaining > 0.0)) continue;  // no undrawn limit, ratio undefined
        const double raw = (d.balance_at_default - d.balance_ref) / remaining;
        ratios.push_back(std::clamp(raw, 0.0, 1.0));
    }
    if (ratios.empty())
        throw std::invalid_argument(
            "estimate_ccf: no defaulter has remaining limit; use the configured fallback CCF");
    std::sort(ratios.begin(), ratios.end());
    const std::size_t n = ratios.size();
    if (n % 2 == 1) return ratios[n / 2];
    return 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);
}

}  // namespace creditlift
