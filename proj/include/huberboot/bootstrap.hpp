#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "huberboot/calibration.hpp"
#include "huberboot/dataset.hpp"
#include "huberboot/solver.hpp"

namespace huberboot {

enum class WeightKind { Gaussian, Bernoulli, BerGaussMix };

// Multiplier-weight law. Every variant has population mean 1 and variance 1:
//   Gaussian:    W = 1 + N(0,1)
//   Bernoulli:   W = 2 * Ber(1/2), support {0, 2}
//   BerGaussMix: W = 1 + z + u,  z ~ N(0, sigma_z^2),  u = (Ber(b) - b) * spread
struct WeightScheme {
    WeightKind kind = WeightKind::Gaussian;

    // Mixture constants.
    static constexpr double mix_b = 0.276;
    static constexpr double mix_sigma_u = 0.235;
    static constexpr double mix_sigma_z_sq = 0.038;

    // Spread actually applied to the centered Bernoulli component. The
    // nominal mix_sigma_u above would leave the mixture with variance far
    // below 1, breaking the mean-1/variance-1 contract the bootstrap rests
    // on, so the spread is solved from Var(W) = sigma_z^2 + b(1-b)*s^2 = 1.
    static double mix_spread() {
        return std::sqrt((1.0 - mix_sigma_z_sq) / (mix_b * (1.0 - mix_b)));
    }
};

// Appends n weights drawn sequentially from the stream into out (resized).
void draw_weights(const WeightScheme& scheme, Eigen::Index n,
                  std::mt19937_64& stream, Eigen::VectorXd& out);

struct BootstrapConfig {
    int B = 2000;
    WeightScheme scheme;
    double alpha = 0.1;
    std::uint64_t seed = 0;
    double tau = 1.0;   // robustification parameter the whole run uses
    int threads = 1;    // replication-level parallelism; results identical at any value
};

enum class LossKind { Huber, Quadratic };

struct ConfidenceSet {
    LossKind loss = LossKind::Huber;
    Eigen::VectorXd theta_hat;
    double tau = 0.0;       // meaningful for the Huber loss only
    double alpha = 0.0;
    double threshold = 0.0; // empirical upper-alpha quantile of the excesses
    std::vector<double> excess_samples;  // one per retained replication
    int failed_replications = 0;
    std::uint64_t seed = 0;
};

// Replication b (0-based) draws its weight vector from substream(seed, b);
// that keying is part of the contract so results can be recomputed
// independently. Each replication minimizes the reweighted Huber objective
// warm-started at theta_hat and records
//   excess_b = L_b(theta_hat) - L_b(theta_b),
// which is nonnegative up to solver tolerance. Replications whose solve
// fails to converge are dropped and counted through *failures; more than 1%
// of B failing raises replication_budget_error.
std::vector<double> bootstrap_excess_samples(const Dataset& data,
                                             const Eigen::VectorXd& theta_hat,
                                             const BootstrapConfig& config,
                                             int* failures = nullptr);

// Quadratic-loss counterpart: replication b reweights the squared residuals
// with the same substream(seed, b) weights and minimizes in closed form
// (weighted normal equations). Draws whose weighted normal matrix is not
// positive definite are dropped under the same 1% budget.
std::vector<double> ols_bootstrap_excess_samples(const Dataset& data,
                                                 const Eigen::VectorXd& theta_hat,
                                                 const BootstrapConfig& config,
                                                 int* failures = nullptr);

// Smallest sample value z with #{samples > z} <= alpha * count, i.e. the
// ceil((1-alpha)*count)-th order statistic, clamped below at 0.
double bootstrap_threshold(const std::vector<double>& samples, double alpha);

// Membership test: loss(theta) - loss(theta_hat) <= threshold, with the
// loss matching how the set was built.
bool confidence_set_contains(const ConfidenceSet& cset, const Eigen::VectorXd& theta,
                             const Dataset& data);

// Full pipeline at a fixed tau: point fit, weighted replications, threshold.
ConfidenceSet run_ci(const Dataset& data, const BootstrapConfig& config);

// Least-squares analogue: the point fit is OLS, replications minimize the
// weighted quadratic loss in closed form, and membership uses the plain
// residual sum of squares. config.tau is ignored.
ConfidenceSet run_ci_ols(const Dataset& data, const BootstrapConfig& config);

// Sample-split procedure: data-driven tau on the first sample (pilot grid
// plus Lepski selection), then the bootstrap confidence set at that tau on
// the second sample.
struct TwoStepResult {
    PilotTau pilot;
    ConfidenceSet ci;
};
TwoStepResult two_step_ci(const Dataset& sample1, const Dataset& sample2,
                          int grid_levels, double a, const BootstrapConfig& config);

}  // namespace huberboot
