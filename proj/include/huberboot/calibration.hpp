#pragma once

#include <Eigen/Dense>
#include <vector>

#include "huberboot/dataset.hpp"
#include "huberboot/solver.hpp"

namespace huberboot {

struct TauSolution {
    double tau = 0.0;
    bool solvable = false;
};

// Solves sum_i min(|v_i|^order, tau^order) / tau^order = t for tau > 0,
// order 2 or 4. The left side decreases from #{v_i != 0} (as tau -> 0) to 0,
// so a root exists and is unique exactly when 0 < t < #{v_i != 0}; otherwise
// solvable is false. The root is located exactly by scanning the sorted
// magnitudes, with a bisection fallback if ties defeat the scan.
TauSolution solve_censored_equation(const Eigen::VectorXd& values, double t,
                                    int order = 2);

// The left side above at a given tau, for diagnostics and tests.
double censored_equation_sum(const Eigen::VectorXd& values, double tau,
                             int order = 2);

// Robust mean: (1/n) sum sign(v_i) * min(|v_i|, tau_t), with tau_t solving
// the order-2 censored equation at level t. Throws degenerate_data_error
// when the equation has no root.
double truncated_mean(const Eigen::VectorXd& values, double t);

// Alternates a fixed-tau Huber location step with a censored-equation tau
// step until both estimating equations hold simultaneously.
struct Proposal2Result {
    double mu = 0.0;
    double tau = 0.0;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;  // residuals vanished; tau is meaningless
};
Proposal2Result huber_proposal2(const Eigen::VectorXd& values, double t,
                                double tol = 1e-10, int max_iter = 200);

// Iteratively reweighted least squares with a tau that is re-solved from the
// current residuals each pass. The calibration equation targets (d + t)/n;
// order picks the residual power (2 or 4, the latter for bootstrap use).
struct IrlsConfig {
    double t = 0.0;
    int order = 2;
    double tol = 1e-8;  // relative sup-norm change in theta
    int max_iter = 50;
};
struct IrlsResult {
    Eigen::VectorXd theta;
    double tau = 0.0;
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;   // residuals vanished or the equation lost its root
    Eigen::VectorXd weights;   // final reweighting diagonal, entries in (0, 1]
};
IrlsResult irls_fit(const Dataset& data, const IrlsConfig& config);

// Closed-form tau from least-squares residual moments. Bootstrap flavor
// inflates the fourth-root-moment rule by 1.2; estimation flavor uses the
// residual standard deviation with a square-root rate. Returns 0 when the
// residuals vanish (degenerate data).
enum class TauPurpose { Bootstrap, Estimation };
double simple_tau_rule(const Dataset& data, TauPurpose purpose);

// Lepski-style selection over a geometric scale grid v_j = v_min * a^j,
// fitting at tau_j = v_j * (n / (d + t))^exponent and picking the smallest
// index whose estimate stays within c0 * v_k * sqrt((d + t)/n) of every
// later candidate.
struct LepskiConfig {
    double v_min = 0.0;
    double v_max = 0.0;
    double a = 2.0;
    double c0 = 2.0;
    double exponent = 0.5;
    double t = 0.0;
};
struct LepskiResult {
    Eigen::VectorXd theta;
    double tau = 0.0;
    int index = 0;
    bool fallback = false;  // only the last, vacuously admissible index qualified
    std::vector<double> v_grid;
    std::vector<double> tau_grid;
    std::vector<Eigen::VectorXd> candidates;
};
// The selection rule alone, usable on synthetic candidate sequences.
int lepski_choose(const std::vector<Eigen::VectorXd>& estimates,
                  const std::vector<double>& v_grid, double c0,
                  double dim_plus_t, Eigen::Index n, bool* fallback = nullptr);
LepskiResult lepski_select(const Dataset& data, const LepskiConfig& config);

// Median-of-means estimate of the central fourth moment: sequential blocks
// of size floor(n/m) (remainder dropped), per-block central fourth moment,
// median across blocks.
double mom_fourth_moment(const Eigen::VectorXd& values, int m_blocks);
int default_mom_blocks(Eigen::Index n);  // floor(8 log n) + 1, clamped to [1, n]

// Pilot stage of the sample-split procedure: grid limits from the
// median-of-means fourth moment of the response, Lepski selection at
// exponent 1/4 with t = log n. Throws degenerate_data_error when the pilot
// fit interpolates the sample.
struct PilotTau {
    Eigen::VectorXd theta;
    double tau = 0.0;
    double v_max = 0.0;
    LepskiResult selection;
};
PilotTau pilot_tau(const Dataset& sample1, int grid_levels, double a = 2.0,
                   double c0 = 2.0);

}  // namespace huberboot
