#include "huberboot/bootstrap.hpp"

#include <algorithm>
#include <cmath>

#include "huberboot/errors.hpp"
#include "huberboot/losses.hpp"
#include "huberboot/parallel.hpp"
#include "huberboot/rng.hpp"

namespace huberboot {

namespace {

void check_config(const BootstrapConfig& config) {
    if (config.B < 1) throw std::invalid_argument("bootstrap: B must be >= 1");
    if (!(config.alpha > 0.0) || !(config.alpha < 1.0))
        throw std::invalid_argument("bootstrap: alpha must lie in (0,1)");
}

// Shared failure bookkeeping: retain successes in replication order, enforce
// the 1% budget.
std::vector<double> collect(const std::vector<double>& values,
                            const std::vector<char>& ok, int B, int* failures) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(B));
    int failed = 0;
    for (int b = 0; b < B; ++b) {
        if (ok[static_cast<std::size_t>(b)])
            out.push_back(values[static_cast<std::size_t>(b)]);
        else
            ++failed;
    }
    if (failures) *failures = failed;
    if (failed > 0.01 * B)
        throw replication_budget_error(
            "bootstrap: " + std::to_string(failed) + " of " + std::to_string(B) +
            " replications failed to converge (budget is 1%)");
    return out;
}

}  // namespace

void draw_weights(const WeightScheme& scheme, Eigen::Index n,
                  std::mt19937_64& stream, Eigen::VectorXd& out) {
    if (n < 1) throw std::invalid_argument("draw_weights: n must be >= 1");
    out.resize(n);
    switch (scheme.kind) {
        case WeightKind::Gaussian: {
            std::normal_distribution<double> normal(0.0, 1.0);
            for (Eigen::Index i = 0; i < n; ++i) out(i) = 1.0 + normal(stream);
            break;
        }
        case WeightKind::Bernoulli: {
            std::bernoulli_distribution coin(0.5);
            for (Eigen::Index i = 0; i < n; ++i) out(i) = coin(stream) ? 2.0 : 0.0;
            break;
        }
        case WeightKind::BerGaussMix: {
            std::normal_distribution<double> z(0.0, std::sqrt(WeightScheme::mix_sigma_z_sq));
            std::bernoulli_distribution coin(WeightScheme::mix_b);
            const double spread = WeightScheme::mix_spread();
            for (Eigen::Index i = 0; i < n; ++i) {
                double u = ((coin(stream) ? 1.0 : 0.0) - WeightScheme::mix_b) * spread;
                out(i) = 1.0 + z(stream) + u;
            }
            break;
        }
    }
}

std::vector<double> bootstrap_excess_samples(const Dataset& data,
                                             const Eigen::VectorXd& theta_hat,
                                             const BootstrapConfig& config,
                                             int* failures) {
    data.validate();
    check_config(config);
    check_tau(config.tau);
    if (theta_hat.size() != data.d())
        throw std::invalid_argument("bootstrap: theta_hat length does not match design");

    const int B = config.B;
    std::vector<double> excess(static_cast<std::size_t>(B), 0.0);
    std::vector<char> ok(static_cast<std::size_t>(B), 0);

    parallel_for(B, config.threads, [&](std::int64_t b) {
        std::mt19937_64 stream = substream(config.seed, static_cast<std::uint64_t>(b));
        Eigen::VectorXd w;
        draw_weights(config.scheme, data.n(), stream, w);

        FitResult fit = fit_huber(data, config.tau, {}, &w, &theta_hat);
        if (!fit.converged) return;

        double at_hat = 0.0;
        const Eigen::VectorXd r_hat = data.y - data.x * theta_hat;
        for (Eigen::Index i = 0; i < r_hat.size(); ++i)
            at_hat += w(i) * huber_loss(r_hat(i), config.tau);

        excess[static_cast<std::size_t>(b)] = at_hat - fit.objective;
        ok[static_cast<std::size_t>(b)] = 1;
    });

    return collect(excess, ok, B, failures);
}

double bootstrap_threshold(const std::vector<double>& samples, double alpha) {
    if (samples.empty()) throw std::invalid_argument("bootstrap_threshold: empty sample");
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw std::invalid_argument("bootstrap_threshold: alpha must lie in (0,1)");
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const double budget = alpha * static_cast<double>(sorted.size());
    // Smallest order statistic whose exceedance count fits the budget.
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        auto above = static_cast<double>(
            sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), sorted[i]));
        if (above <= budget) return std::max(sorted[i], 0.0);
    }
    return std::max(sorted.back(), 0.0);  // unreachable: the max always qualifies
}

bool confidence_set_contains(const ConfidenceSet& cset, const Eigen::VectorXd& theta,
                             const Dataset& data) {
    data.validate();
    if (theta.size() != data.d() || cset.theta_hat.size() != data.d())
        throw std::invalid_argument("confidence_set_contains: dimension mismatch");
    double excess;
    if (cset.loss == LossKind::Huber) {
        excess = huber_objective(data, theta, cset.tau) -
                 huber_objective(data, cset.theta_hat, cset.tau);
    } else {
        // Half the squared norm, the large-tau limit of the Huber objective.
        excess = 0.5 * ((data.y - data.x * theta).squaredNorm() -
                        (data.y - data.x * cset.theta_hat).squaredNorm());
    }
    return excess <= cset.threshold;
}

ConfidenceSet run_ci(const Dataset& data, const BootstrapConfig& config) {
    data.validate();
    check_config(config);
    check_tau(config.tau);

    FitResult fit = fit_huber(data, config.tau);
    if (!fit.converged)
        throw convergence_error("run_ci: point fit did not converge");

    ConfidenceSet out;
    out.loss = LossKind::Huber;
    out.theta_hat = std::move(fit.theta);
    out.tau = config.tau;
    out.alpha = config.alpha;
    out.seed = config.seed;
    out.excess_samples =
        bootstrap_excess_samples(data, out.theta_hat, config, &out.failed_replications);
    out.threshold = bootstrap_threshold(out.excess_samples, config.alpha);
    return out;
}

std::vector<double> ols_bootstrap_excess_samples(const Dataset& data,
                                                 const Eigen::VectorXd& theta_hat,
                                                 const BootstrapConfig& config,
                                                 int* failures) {
    data.validate();
    check_config(config);
    if (theta_hat.size() != data.d())
        throw std::invalid_argument("bootstrap: theta_hat length does not match design");

    const int B = config.B;
    const Eigen::Index n = data.n();
    std::vector<double> excess(static_cast<std::size_t>(B), 0.0);
    std::vector<char> ok(static_cast<std::size_t>(B), 0);
    const Eigen::VectorXd r_hat = data.y - data.x * theta_hat;

    parallel_for(B, config.threads, [&](std::int64_t b) {
        std::mt19937_64 stream = substream(config.seed, static_cast<std::uint64_t>(b));
        Eigen::VectorXd w;
        draw_weights(config.scheme, n, stream, w);

        Eigen::MatrixXd xtwx = data.x.transpose() * w.asDiagonal() * data.x;
        Eigen::LLT<Eigen::MatrixXd> llt(xtwx);
        if (llt.info() != Eigen::Success) return;  // indefinite draw; drop it
        Eigen::VectorXd theta_b =
            llt.solve(data.x.transpose() * (w.asDiagonal() * data.y));
        if (!theta_b.allFinite()) return;

        const Eigen::VectorXd r_b = data.y - data.x * theta_b;
        double at_hat = 0.0, at_b = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            at_hat += 0.5 * w(i) * r_hat(i) * r_hat(i);
            at_b += 0.5 * w(i) * r_b(i) * r_b(i);
        }
        excess[static_cast<std::size_t>(b)] = at_hat - at_b;
        ok[static_cast<std::size_t>(b)] = 1;
    });

    return collect(excess, ok, B, failures);
}

ConfidenceSet run_ci_ols(const Dataset& data, const BootstrapConfig& config) {
    data.validate();
    check_config(config);

    ConfidenceSet out;
    out.loss = LossKind::Quadratic;
    out.theta_hat = fit_ols(data);
    out.alpha = config.alpha;
    out.seed = config.seed;
    out.excess_samples = ols_bootstrap_excess_samples(data, out.theta_hat, config,
                                                      &out.failed_replications);
    out.threshold = bootstrap_threshold(out.excess_samples, config.alpha);
    return out;
}

TwoStepResult two_step_ci(const Dataset& sample1, const Dataset& sample2,
                          int grid_levels, double a, const BootstrapConfig& config) {
    sample1.validate();
    sample2.validate();
    if (sample1.d() != sample2.d())
        throw std::invalid_argument("two_step_ci: samples have different dimensions");

    TwoStepResult out;
    out.pilot = pilot_tau(sample1, grid_levels, a);
    BootstrapConfig step2 = config;
    step2.tau = out.pilot.tau;
    out.ci = run_ci(sample2, step2);
    return out;
}

}  // namespace huberboot
