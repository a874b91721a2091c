#pragma once

#include <cmath>
#include <stdexcept>

namespace huberboot {

// Huber loss with robustification parameter tau: quadratic inside
// [-tau, tau], linear outside, C1 at the junction.
inline double huber_loss(double u, double tau) {
    double a = std::abs(u);
    if (a <= tau) return 0.5 * u * u;
    return tau * a - 0.5 * tau * tau;
}

// Derivative of the Huber loss: clips u to [-tau, tau].
inline double huber_score(double u, double tau) {
    if (u > tau) return tau;
    if (u < -tau) return -tau;
    return u;
}

// Catoni-style smoothed loss. Quartic correction inside |u| <= sqrt(2)*tau,
// linear outside; C2 everywhere, score bounded by (2*sqrt(2)/3)*tau.
inline double catoni_loss(double u, double tau) {
    const double cut = std::sqrt(2.0) * tau;
    double a = std::abs(u);
    if (a <= cut) return 0.5 * u * u - u * u * u * u / (24.0 * tau * tau);
    return (2.0 * std::sqrt(2.0) / 3.0) * tau * a - 0.5 * tau * tau;
}

inline double catoni_score(double u, double tau) {
    const double cut = std::sqrt(2.0) * tau;
    const double slope = 2.0 * std::sqrt(2.0) / 3.0 * tau;
    if (u > cut) return slope;
    if (u < -cut) return -slope;
    return u - u * u * u / (6.0 * tau * tau);
}

inline void check_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw std::invalid_argument("tau must be a positive finite number");
}

}  // namespace huberboot
