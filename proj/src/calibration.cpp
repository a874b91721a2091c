#include "huberboot/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "huberboot/errors.hpp"
#include "huberboot/losses.hpp"

namespace huberboot {

namespace {

void check_order(int order) {
    if (order != 2 && order != 4)
        throw std::invalid_argument("order must be 2 or 4");
}

void check_level(double t) {
    if (!(t > 0.0) || !std::isfinite(t))
        throw std::invalid_argument("calibration level t must be positive and finite");
}

double power_ord(double a, int order) {
    double a2 = a * a;
    return order == 2 ? a2 : a2 * a2;
}

}  // namespace

double censored_equation_sum(const Eigen::VectorXd& values, double tau, int order) {
    check_order(order);
    check_tau(tau);
    double s = 0.0, tp = power_ord(tau, order);
    for (Eigen::Index i = 0; i < values.size(); ++i)
        s += std::min(power_ord(values(i), order), tp) / tp;
    return s;
}

TauSolution solve_censored_equation(const Eigen::VectorXd& values, double t, int order) {
    check_order(order);
    check_level(t);
    const Eigen::Index n = values.size();
    if (n == 0) throw std::invalid_argument("empty sample");
    if (!values.allFinite()) throw std::invalid_argument("non-finite values");

    std::vector<double> a(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) a[static_cast<std::size_t>(i)] = power_ord(values(i), order);
    std::sort(a.begin(), a.end());

    const auto n_nonzero = static_cast<double>(
        std::count_if(a.begin(), a.end(), [](double v) { return v > 0.0; }));
    if (t >= n_nonzero) return {0.0, false};

    // In s = tau^order the equation reads sum_i min(a_i, s) / s = t. On the
    // interval between consecutive sorted a's with j values committed below s
    // the left side is prefix_j / s + (n - j), so each interval yields one
    // closed-form candidate; the true root is the one its interval contains.
    std::vector<double> prefix(a.size() + 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) prefix[i + 1] = prefix[i] + a[i];

    const double nn = static_cast<double>(n);
    for (std::size_t j = 0; j <= a.size(); ++j) {
        double denom = t - (nn - static_cast<double>(j));
        if (denom <= 0.0) continue;
        double s = prefix[j] / denom;
        if (s <= 0.0) continue;
        double lo = j == 0 ? 0.0 : a[j - 1];
        bool in_interval = s >= lo && (j == a.size() || s <= a[j]);
        if (in_interval) return {std::pow(s, 1.0 / order), true};
    }

    // Ties can make every half-open interval reject its candidate; the left
    // side is still continuous and strictly decreasing past the smallest
    // nonzero magnitude, so bisection settles it.
    double lo_s = *std::find_if(a.begin(), a.end(), [](double v) { return v > 0.0; }) / 2.0;
    double hi_s = prefix[a.size()] / t;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo_s + hi_s);
        double lhs = 0.0;
        for (double ai : a) lhs += std::min(ai, mid) / mid;
        (lhs > t ? lo_s : hi_s) = mid;
    }
    return {std::pow(0.5 * (lo_s + hi_s), 1.0 / order), true};
}

double truncated_mean(const Eigen::VectorXd& values, double t) {
    TauSolution sol = solve_censored_equation(values, t, 2);
    if (!sol.solvable)
        throw degenerate_data_error(
            "truncated mean: censored equation has no root (t >= number of nonzero values)");
    double s = 0.0;
    for (Eigen::Index i = 0; i < values.size(); ++i)
        s += huber_score(values(i), sol.tau);
    return s / static_cast<double>(values.size());
}

Proposal2Result huber_proposal2(const Eigen::VectorXd& values, double t,
                                double tol, int max_iter) {
    check_level(t);
    if (values.size() < 2) throw std::invalid_argument("need at least two values");
    if (!values.allFinite()) throw std::invalid_argument("non-finite values");

    const auto n = static_cast<double>(values.size());
    const double loc_scale = 1.0 + values.cwiseAbs().mean();

    Proposal2Result out;
    // Start from the median; the first tau step then sees robust residuals.
    Eigen::VectorXd sorted = values;
    std::sort(sorted.data(), sorted.data() + sorted.size());
    out.mu = values.size() % 2 == 1
                 ? sorted(values.size() / 2)
                 : 0.5 * (sorted(values.size() / 2 - 1) + sorted(values.size() / 2));

    SolverConfig location_cfg;
    location_cfg.grad_tol = std::min(1e-10, tol);

    Eigen::VectorXd r(values.size());
    for (int iter = 1; iter <= max_iter; ++iter) {
        r = values.array() - out.mu;
        TauSolution sol = solve_censored_equation(r, t, 2);
        if (!sol.solvable) {
            out.degenerate = true;
            out.iterations = iter;
            return out;
        }
        out.tau = sol.tau;
        out.mu = huber_location(values, out.tau, location_cfg);
        out.iterations = iter;

        r = values.array() - out.mu;
        double score_sum = 0.0;
        for (Eigen::Index i = 0; i < r.size(); ++i) score_sum += huber_score(r(i), out.tau);
        double eq_location = std::abs(score_sum) / n;
        double eq_calibration = std::abs(censored_equation_sum(r, out.tau, 2) - t) / n;
        if (eq_location <= tol * loc_scale && eq_calibration <= tol) {
            out.converged = true;
            break;
        }
    }
    return out;
}

IrlsResult irls_fit(const Dataset& data, const IrlsConfig& config) {
    data.validate();
    check_order(config.order);
    check_level(config.t);
    const Eigen::Index n = data.n(), d = data.d();
    if (n <= d) throw std::invalid_argument("irls_fit: need n > d");
    if (config.t + static_cast<double>(d) >= static_cast<double>(n))
        throw std::invalid_argument("irls_fit: need t + d < n");

    const double level = static_cast<double>(d) + config.t;
    const double resid_floor = 1e-12 * (1.0 + data.y.cwiseAbs().maxCoeff());

    IrlsResult out;
    out.theta = fit_ols(data);
    out.weights = Eigen::VectorXd::Ones(n);

    Eigen::VectorXd r(n), w(n);
    Eigen::MatrixXd xtwx(d, d);
    Eigen::VectorXd xtwy(d);

    auto calibrate = [&](const Eigen::VectorXd& resid) -> bool {
        out.tau = 0.0;
        if (resid.cwiseAbs().maxCoeff() <= resid_floor) return false;
        TauSolution sol = solve_censored_equation(resid, level, config.order);
        if (!sol.solvable) return false;
        out.tau = sol.tau;
        return true;
    };

    for (int iter = 1; iter <= config.max_iter; ++iter) {
        r = data.y - data.x * out.theta;
        if (!calibrate(r)) {
            out.degenerate = true;
            return out;
        }
        // Reciprocal-form weights: residuals beyond tau are damped by
        // tau/|r|, those inside keep full weight.
        for (Eigen::Index i = 0; i < n; ++i)
            w(i) = std::min(1.0, out.tau / std::abs(r(i)));

        xtwx.noalias() = data.x.transpose() * w.asDiagonal() * data.x;
        xtwy.noalias() = data.x.transpose() * (w.asDiagonal() * data.y);
        Eigen::LLT<Eigen::MatrixXd> llt(xtwx);
        if (llt.info() != Eigen::Success)
            throw singular_matrix_error("irls_fit: weighted normal equations are singular");
        Eigen::VectorXd theta_next = llt.solve(xtwy);

        double delta = (theta_next - out.theta).cwiseAbs().maxCoeff();
        out.theta = theta_next;
        out.iterations = iter;
        if (delta <= config.tol * (1.0 + out.theta.cwiseAbs().maxCoeff())) {
            out.converged = true;
            break;
        }
    }

    // Re-solve the calibration on the final residuals so the reported
    // (theta, tau, weights) triple is mutually consistent.
    r = data.y - data.x * out.theta;
    if (!calibrate(r)) {
        out.degenerate = true;
        return out;
    }
    for (Eigen::Index i = 0; i < n; ++i)
        w(i) = std::min(1.0, out.tau / std::abs(r(i)));
    out.weights = w;
    return out;
}

double simple_tau_rule(const Dataset& data, TauPurpose purpose) {
    data.validate();
    const Eigen::Index n = data.n(), d = data.d();
    if (n <= d) throw std::invalid_argument("simple_tau_rule: need n > d");

    Eigen::VectorXd r = data.y - data.x * fit_ols(data);
    if (r.cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + data.y.cwiseAbs().maxCoeff()))
        return 0.0;  // degenerate: nothing to calibrate on

    const double dof = static_cast<double>(n - d);
    const double rate = static_cast<double>(n) /
                        (static_cast<double>(d) + std::log(static_cast<double>(n)));
    if (purpose == TauPurpose::Bootstrap) {
        double nu4 = r.array().pow(4).sum() / dof;
        return 1.2 * std::pow(nu4 * rate, 0.25);
    }
    double s2 = r.squaredNorm() / dof;
    return std::sqrt(s2 * rate);
}

int lepski_choose(const std::vector<Eigen::VectorXd>& estimates,
                  const std::vector<double>& v_grid, double c0,
                  double dim_plus_t, Eigen::Index n, bool* fallback) {
    if (estimates.empty() || estimates.size() != v_grid.size())
        throw std::invalid_argument("lepski_choose: grid and estimates must match and be nonempty");
    const double rate = std::sqrt(dim_plus_t / static_cast<double>(n));
    const int count = static_cast<int>(estimates.size());
    for (int j = 0; j < count; ++j) {
        bool admissible = true;
        for (int k = j + 1; k < count; ++k) {
            if ((estimates[static_cast<std::size_t>(k)] - estimates[static_cast<std::size_t>(j)])
                    .norm() > c0 * v_grid[static_cast<std::size_t>(k)] * rate) {
                admissible = false;
                break;
            }
        }
        if (admissible) {
            // The largest index passes vacuously; selecting it with a larger
            // grid means every testable candidate failed its distance tests.
            if (fallback) *fallback = (j == count - 1 && count > 1);
            return j;
        }
    }
    if (fallback) *fallback = true;
    return count - 1;
}

LepskiResult lepski_select(const Dataset& data, const LepskiConfig& config) {
    data.validate();
    check_level(config.t);
    if (!(config.v_min > 0.0) || !(config.v_max >= config.v_min))
        throw std::invalid_argument("lepski_select: need 0 < v_min <= v_max");
    if (!(config.a > 1.0)) throw std::invalid_argument("lepski_select: need a > 1");
    if (!(config.c0 > 0.0)) throw std::invalid_argument("lepski_select: need c0 > 0");

    LepskiResult out;
    for (int j = 0;; ++j) {
        double v = config.v_min * std::pow(config.a, j);
        if (v >= config.a * config.v_max * (1.0 - 1e-12)) break;
        out.v_grid.push_back(v);
    }
    if (out.v_grid.empty()) throw std::invalid_argument("lepski_select: empty grid");

    const double dim_plus_t = static_cast<double>(data.d()) + config.t;
    const double tau_factor =
        std::pow(static_cast<double>(data.n()) / dim_plus_t, config.exponent);

    const Eigen::VectorXd* warm = nullptr;
    out.candidates.reserve(out.v_grid.size());  // keeps the warm pointer stable
    for (double v : out.v_grid) {
        double tau = v * tau_factor;
        out.tau_grid.push_back(tau);
        FitResult fit = fit_huber(data, tau, {}, nullptr, warm);
        out.candidates.push_back(std::move(fit.theta));
        warm = &out.candidates.back();
    }

    out.index = lepski_choose(out.candidates, out.v_grid, config.c0, dim_plus_t,
                              data.n(), &out.fallback);
    out.theta = out.candidates[static_cast<std::size_t>(out.index)];
    out.tau = out.tau_grid[static_cast<std::size_t>(out.index)];
    return out;
}

int default_mom_blocks(Eigen::Index n) {
    if (n < 1) throw std::invalid_argument("empty sample");
    auto m = static_cast<Eigen::Index>(std::floor(8.0 * std::log(static_cast<double>(n)))) + 1;
    return static_cast<int>(std::clamp<Eigen::Index>(m, 1, n));
}

double mom_fourth_moment(const Eigen::VectorXd& values, int m_blocks) {
    const Eigen::Index n = values.size();
    if (m_blocks < 1) throw std::invalid_argument("m_blocks must be >= 1");
    if (m_blocks > n) throw std::invalid_argument("m_blocks exceeds sample size");

    const Eigen::Index block = n / m_blocks;  // remainder at the end is dropped
    std::vector<double> stats(static_cast<std::size_t>(m_blocks));
    for (int j = 0; j < m_blocks; ++j) {
        auto seg = values.segment(static_cast<Eigen::Index>(j) * block, block);
        double mean = seg.mean();
        stats[static_cast<std::size_t>(j)] =
            (seg.array() - mean).pow(4).mean();
    }
    std::sort(stats.begin(), stats.end());
    std::size_t mid = stats.size() / 2;
    return stats.size() % 2 == 1 ? stats[mid] : 0.5 * (stats[mid - 1] + stats[mid]);
}

PilotTau pilot_tau(const Dataset& sample1, int grid_levels, double a, double c0) {
    sample1.validate();
    if (grid_levels < 1) throw std::invalid_argument("pilot_tau: need at least one grid level");
    if (!(a > 1.0)) throw std::invalid_argument("pilot_tau: need a > 1");

    const auto n = sample1.n();
    double upsilon = mom_fourth_moment(sample1.y, default_mom_blocks(n));
    if (!(upsilon > 0.0) || !std::isfinite(upsilon))
        throw degenerate_data_error("pilot_tau: fourth-moment estimate vanished");

    PilotTau out;
    out.v_max = std::pow(2.0 * upsilon, 0.25);

    LepskiConfig cfg;
    cfg.v_max = out.v_max;
    cfg.v_min = std::pow(a, -grid_levels) * out.v_max;
    cfg.a = a;
    cfg.c0 = c0;
    cfg.exponent = 0.25;
    cfg.t = std::log(static_cast<double>(n));
    out.selection = lepski_select(sample1, cfg);
    out.theta = out.selection.theta;
    out.tau = out.selection.tau;

    Eigen::VectorXd resid = sample1.y - sample1.x * out.theta;
    if (resid.cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + sample1.y.cwiseAbs().maxCoeff()))
        throw degenerate_data_error("pilot_tau: pilot fit interpolates the sample");
    return out;
}

}  // namespace huberboot
