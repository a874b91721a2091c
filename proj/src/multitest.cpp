#include "huberboot/multitest.hpp"

#include <algorithm>
#include <cmath>

#include "huberboot/errors.hpp"
#include "huberboot/parallel.hpp"
#include "huberboot/rng.hpp"

namespace huberboot {

namespace {

Dataset column_dataset(const PanelData& panel, Eigen::Index k) {
    Dataset data;
    data.x.resize(panel.n(), panel.s() + 1);
    data.x.col(0).setOnes();
    if (panel.s() > 0) data.x.rightCols(panel.s()) = panel.x;
    data.y = panel.y.col(k);
    return data;
}

void check_pvalues(const std::vector<double>& p) {
    for (double v : p)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::invalid_argument("p-values must lie in [0,1]");
}

}  // namespace

Eigen::VectorXd tau_rule_cube_root(Eigen::Index n, Eigen::Index m, Eigen::Index s,
                                   const Eigen::VectorXd& v) {
    if (n < 1 || m < 1 || s < 0) throw std::invalid_argument("tau rule: bad dimensions");
    if (v.size() != m) throw std::invalid_argument("tau rule: need one scale per column");
    if (!(v.array() > 0.0).all()) throw std::invalid_argument("tau rule: scales must be positive");
    double rate = static_cast<double>(n) /
                  (static_cast<double>(s) + 2.0 * std::log(static_cast<double>(n) *
                                                           static_cast<double>(m)));
    return v * std::cbrt(rate);
}

Eigen::VectorXd default_column_scales(const PanelData& panel, bool inflate) {
    panel.validate();
    const Eigen::Index m = panel.m();
    const double dof = static_cast<double>(panel.n() - (panel.s() + 1));
    Eigen::VectorXd v(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        Dataset data = column_dataset(panel, k);
        Eigen::VectorXd r = data.y - data.x * fit_ols(data);
        v(k) = std::pow(r.array().pow(4).sum() / dof, 0.25);
    }
    if (inflate) v *= 1.2;
    return v;
}

ColumnFits fit_all(const PanelData& panel, const Eigen::VectorXd& taus) {
    panel.validate();
    const Eigen::Index m = panel.m(), s = panel.s();
    if (taus.size() != m) throw std::invalid_argument("fit_all: need one tau per column");

    ColumnFits out;
    out.mu_hat.resize(m);
    out.beta_hat.resize(m, s);
    out.taus = taus;
    std::vector<char> converged(static_cast<std::size_t>(m), 0);

    for (Eigen::Index k = 0; k < m; ++k) {
        Dataset data = column_dataset(panel, k);
        FitResult fit = fit_huber(data, taus(k));
        converged[static_cast<std::size_t>(k)] = fit.converged ? 1 : 0;
        out.mu_hat(k) = fit.theta(0);
        if (s > 0) out.beta_hat.row(k) = fit.theta.tail(s).transpose();
    }
    for (Eigen::Index k = 0; k < m; ++k)
        if (!converged[static_cast<std::size_t>(k)])
            throw convergence_error("fit_all: column " + std::to_string(k) +
                                    " did not converge");
    return out;
}

std::vector<double> bootstrap_pvalues(const PanelData& panel, const ColumnFits& fits,
                                      const MTestConfig& config) {
    panel.validate();
    if (config.B < 1) throw std::invalid_argument("bootstrap_pvalues: B must be >= 1");
    const Eigen::Index m = panel.m(), s = panel.s();
    if (fits.mu_hat.size() != m || fits.taus.size() != m)
        throw std::invalid_argument("bootstrap_pvalues: fits do not match the panel");

    std::vector<double> p(static_cast<std::size_t>(m), 0.0);
    std::vector<int> failures(static_cast<std::size_t>(m), 0);

    parallel_for(m, config.threads, [&](std::int64_t k) {
        Dataset data = column_dataset(panel, k);
        Eigen::VectorXd theta_k(s + 1);
        theta_k(0) = fits.mu_hat(k);
        if (s > 0) theta_k.tail(s) = fits.beta_hat.row(k).transpose();

        const double mu_k = fits.mu_hat(k);
        int fired = 0, failed = 0;
        Eigen::VectorXd w;
        for (int b = 0; b < config.B; ++b) {
            std::mt19937_64 stream = substream(config.seed, static_cast<std::uint64_t>(k),
                                               static_cast<std::uint64_t>(b));
            draw_weights(config.scheme, panel.n(), stream, w);
            FitResult fit = fit_huber(data, fits.taus(k), {}, &w, &theta_k);
            if (!fit.converged) {
                ++failed;
                continue;
            }
            if (std::abs(fit.theta(0) - mu_k) >= std::abs(mu_k)) ++fired;
        }
        failures[static_cast<std::size_t>(k)] = failed;
        int retained = config.B - failed;
        p[static_cast<std::size_t>(k)] =
            static_cast<double>(fired) / static_cast<double>(retained + 1);
    });

    for (Eigen::Index k = 0; k < m; ++k) {
        if (failures[static_cast<std::size_t>(k)] > 0.01 * config.B)
            throw replication_budget_error(
                "bootstrap_pvalues: column " + std::to_string(k) + " lost " +
                std::to_string(failures[static_cast<std::size_t>(k)]) +
                " of " + std::to_string(config.B) + " replications (budget is 1%)");
    }
    return p;
}

BhSelection bh_threshold(const std::vector<double>& p_values, double alpha) {
    check_pvalues(p_values);
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw std::invalid_argument("bh_threshold: alpha must lie in (0,1)");

    const auto m = p_values.size();
    BhSelection out;
    out.rejected.assign(m, false);
    if (m == 0) return out;

    std::vector<double> sorted = p_values;
    std::sort(sorted.begin(), sorted.end());
    const double md = static_cast<double>(m);
    for (std::size_t k = m; k >= 1; --k) {
        if (sorted[k - 1] <= alpha * static_cast<double>(k) / md) {
            out.k_threshold = static_cast<int>(k);
            out.p_cut = sorted[k - 1];
            break;
        }
    }
    if (out.k_threshold > 0)
        for (std::size_t i = 0; i < m; ++i) out.rejected[i] = p_values[i] <= out.p_cut;
    return out;
}

double storey_threshold(const std::vector<double>& p_values, double alpha) {
    check_pvalues(p_values);
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw std::invalid_argument("storey_threshold: alpha must lie in (0,1)");
    const auto m = p_values.size();
    if (m == 0) return 0.0;
    const double md = static_cast<double>(m);
    // Candidates alpha*j/m, largest first. j = 1 always qualifies because of
    // the max(..., 1) floor, so the sup is attained on the grid.
    for (std::size_t j = m; j >= 1; --j) {
        double t = alpha * static_cast<double>(j) / md;
        double reach = static_cast<double>(
            std::count_if(p_values.begin(), p_values.end(), [&](double p) { return p <= t; }));
        if (t <= alpha * std::max(reach, 1.0) / md) return t;
    }
    return alpha / md;  // unreachable
}

double fdp(const std::vector<bool>& rejected, const std::vector<bool>& is_null) {
    if (rejected.size() != is_null.size())
        throw std::invalid_argument("fdp: vectors must have equal length");
    int r = 0, v = 0;
    for (std::size_t i = 0; i < rejected.size(); ++i) {
        if (!rejected[i]) continue;
        ++r;
        if (is_null[i]) ++v;
    }
    return static_cast<double>(v) / std::max(static_cast<double>(r), 1.0);
}

MTestResult run_mtest(const PanelData& panel, const MTestConfig& config) {
    panel.validate();
    if (!(config.alpha > 0.0) || !(config.alpha < 1.0))
        throw std::invalid_argument("run_mtest: alpha must lie in (0,1)");

    Eigen::VectorXd taus;
    switch (config.tau_rule) {
        case MTestTauRule::CubeRoot:
            taus = tau_rule_cube_root(panel.n(), panel.m(), panel.s(),
                                      default_column_scales(panel, config.inflate_scales));
            break;
        case MTestTauRule::Simple: {
            taus.resize(panel.m());
            for (Eigen::Index k = 0; k < panel.m(); ++k)
                taus(k) = simple_tau_rule(column_dataset(panel, k), TauPurpose::Bootstrap);
            if (!(taus.array() > 0.0).all())
                throw degenerate_data_error("run_mtest: a column has zero residuals");
            break;
        }
        case MTestTauRule::Fixed:
            if (config.fixed_taus.size() != panel.m())
                throw std::invalid_argument("run_mtest: fixed taus must have length m");
            taus = config.fixed_taus;
            break;
    }

    MTestResult out;
    ColumnFits fits = fit_all(panel, taus);
    out.p_values = bootstrap_pvalues(panel, fits, config);
    out.mu_hat = std::move(fits.mu_hat);
    out.beta_hat = std::move(fits.beta_hat);
    out.taus = std::move(fits.taus);
    out.seed = config.seed;

    BhSelection bh = bh_threshold(out.p_values, config.alpha);
    out.rejected = std::move(bh.rejected);
    out.k_threshold = bh.k_threshold;
    out.p_cut = bh.p_cut;
    return out;
}

}  // namespace huberboot
