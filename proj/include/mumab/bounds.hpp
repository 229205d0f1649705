#pragma once

#include <cmath>
#include <numbers>

namespace mumab {

// Static-population regret envelope:
//   K^2 M N / (2 delta^2) * ln T + 2 K^2 M N / (e - 2).
inline double static_regret_bound(int users, int channels, int max_occupancy, double delta, double horizon)
{
    const double kmn = static_cast<double>(users) * users * channels * max_occupancy;
    const double log_t = horizon > 1.0 ? std::log(horizon) : 0.0;
    return kmn / (2.0 * delta * delta) * log_t + 2.0 * kmn / (std::numbers::e - 2.0);
}

// Dynamic-population envelope for horizon T with super-epoch base tau and
// cumulative churn kappa_T:
//   (MN)^3 [sqrt(2T) C + (sqrt(2T) + 1) ln(2T) / (4 delta^2)] + MN kappa_T sqrt(2T),
//   C = ln(tau) / (2 delta^2) + 1.4.
inline double dynamic_regret_bound(int channels, int max_occupancy, double delta, double horizon, double tau,
                                   double kappa)
{
    const double mn = static_cast<double>(channels) * max_occupancy;
    const double root = std::sqrt(2.0 * horizon);
    const double c = std::log(tau) / (2.0 * delta * delta) + 1.4;
    return mn * mn * mn * (root * c + (root + 1.0) * std::log(2.0 * horizon) / (4.0 * delta * delta))
           + mn * kappa * root;
}

} // namespace mumab
