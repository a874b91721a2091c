#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "huberboot/bootstrap.hpp"
#include "huberboot/dataset.hpp"

namespace huberboot {

// m response columns sharing one covariate block; the tested parameter is
// each column's intercept, so x carries no intercept column itself.
struct PanelData {
    Eigen::MatrixXd y;  // n x m
    Eigen::MatrixXd x;  // n x s, s may be 0

    Eigen::Index n() const { return y.rows(); }
    Eigen::Index m() const { return y.cols(); }
    Eigen::Index s() const { return x.cols(); }

    void validate() const {
        if (y.rows() == 0 || y.cols() == 0)
            throw std::invalid_argument("panel: empty response matrix");
        if (x.rows() != y.rows())
            throw std::invalid_argument("panel: covariate rows do not match responses");
        if (y.rows() < x.cols() + 2)
            throw std::invalid_argument("panel: need n >= s + 2");
        if (!y.allFinite() || !x.allFinite())
            throw std::invalid_argument("panel: non-finite entries");
    }
};

// Per-column robustification parameters tau_k = v_k * (n/(s + 2 log(nm)))^{1/3}.
Eigen::VectorXd tau_rule_cube_root(Eigen::Index n, Eigen::Index m, Eigen::Index s,
                                   const Eigen::VectorXd& v);

// Data-driven scale for the rule above: per-column fourth-root moment of the
// least-squares residuals (summed over n and divided by the residual degrees
// of freedom n - s - 1), optionally inflated by 1.2.
Eigen::VectorXd default_column_scales(const PanelData& panel, bool inflate = false);

enum class MTestTauRule { CubeRoot, Simple, Fixed };

struct MTestConfig {
    int B = 500;
    double alpha = 0.1;
    WeightScheme scheme;
    std::uint64_t seed = 0;
    MTestTauRule tau_rule = MTestTauRule::CubeRoot;
    Eigen::VectorXd fixed_taus;   // consulted only when tau_rule == Fixed
    bool inflate_scales = false;  // 1.2 factor on the data-driven scales
    int threads = 1;
};

struct ColumnFits {
    Eigen::VectorXd mu_hat;    // intercept estimates, length m
    Eigen::MatrixXd beta_hat;  // m x s slope estimates
    Eigen::VectorXd taus;
};

// Fits every column's intercept-augmented Huber regression at its tau.
// Throws convergence_error if any column fails.
ColumnFits fit_all(const PanelData& panel, const Eigen::VectorXd& taus);

// Bootstrap p-values: for column k and replication b, weights come from
// substream(seed, k, b); the reweighted fit starts at the column's point
// estimate, and
//   p_k = #{b : |mu_b - mu_hat_k| >= |mu_hat_k|} / (B + 1).
// Failed replications are dropped per column under a 1% budget (the
// denominator shrinks with them).
std::vector<double> bootstrap_pvalues(const PanelData& panel, const ColumnFits& fits,
                                      const MTestConfig& config);

struct BhSelection {
    int k_threshold = 0;  // largest admissible sorted index, 0 when none
    double p_cut = 0.0;   // the p-value at that index; nothing rejected if k = 0
    std::vector<bool> rejected;
};

// Step-up rule: sort p ascending, find the largest k with p_(k) <= alpha*k/m,
// reject everything at or below p_(k).
BhSelection bh_threshold(const std::vector<double>& p_values, double alpha);

// Sup-based threshold t = max{alpha*j/m : t <= alpha*max(#{p <= t},1)/m},
// evaluated exactly over the finite candidate grid. Its rejection set always
// coincides with the step-up rule's.
double storey_threshold(const std::vector<double>& p_values, double alpha);

// False discovery proportion V / max(R, 1).
double fdp(const std::vector<bool>& rejected, const std::vector<bool>& is_null);

struct MTestResult {
    Eigen::VectorXd mu_hat;
    Eigen::MatrixXd beta_hat;
    Eigen::VectorXd taus;
    std::vector<double> p_values;
    std::vector<bool> rejected;
    int k_threshold = 0;
    double p_cut = 0.0;
    std::uint64_t seed = 0;
};

MTestResult run_mtest(const PanelData& panel, const MTestConfig& config);

}  // namespace huberboot
