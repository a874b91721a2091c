#include "huberboot/solver.hpp"

#include <algorithm>
#include <cmath>

#include "huberboot/errors.hpp"
#include "huberboot/losses.hpp"

namespace huberboot {

namespace {

void check_weights(const Dataset& data, const Eigen::VectorXd* weights) {
    if (!weights) return;
    if (weights->size() != data.n())
        throw std::invalid_argument("weights length does not match sample size");
    if (!weights->allFinite())
        throw std::invalid_argument("weights contain non-finite entries");
}

double objective_from_residuals(const Eigen::VectorXd& r, double tau,
                                const Eigen::VectorXd* weights) {
    double s = 0.0;
    if (weights) {
        for (Eigen::Index i = 0; i < r.size(); ++i)
            s += (*weights)(i) * huber_loss(r(i), tau);
    } else {
        for (Eigen::Index i = 0; i < r.size(); ++i) s += huber_loss(r(i), tau);
    }
    return s;
}

double median_of(Eigen::VectorXd v) {
    std::sort(v.data(), v.data() + v.size());
    Eigen::Index n = v.size();
    if (n % 2 == 1) return v(n / 2);
    return 0.5 * (v(n / 2 - 1) + v(n / 2));
}

// Least-squares starting point; rank-deficient designs fall back to a
// median-based intercept guess instead of failing, since the solver only
// needs somewhere reasonable to start.
Eigen::VectorXd default_init(const Dataset& data) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.x);
    if (qr.rank() == data.d()) return qr.solve(data.y);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(data.d());
    double c = data.x(0, 0);
    if (c != 0.0 && (data.x.col(0).array() == c).all()) theta(0) = median_of(data.y) / c;
    return theta;
}

}  // namespace

double huber_objective(const Dataset& data, const Eigen::VectorXd& theta,
                       double tau, const Eigen::VectorXd* weights) {
    data.validate();
    check_tau(tau);
    check_weights(data, weights);
    if (theta.size() != data.d())
        throw std::invalid_argument("theta length does not match design columns");
    Eigen::VectorXd r = data.y - data.x * theta;
    return objective_from_residuals(r, tau, weights);
}

Eigen::VectorXd huber_gradient(const Dataset& data, const Eigen::VectorXd& theta,
                               double tau, const Eigen::VectorXd* weights) {
    data.validate();
    check_tau(tau);
    check_weights(data, weights);
    if (theta.size() != data.d())
        throw std::invalid_argument("theta length does not match design columns");
    Eigen::VectorXd r = data.y - data.x * theta;
    Eigen::VectorXd s(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        s(i) = -huber_score(r(i), tau);
        if (weights) s(i) *= (*weights)(i);
    }
    return data.x.transpose() * s;
}

Eigen::MatrixXd huber_hessian(const Dataset& data, const Eigen::VectorXd& theta,
                              double tau, const Eigen::VectorXd* weights) {
    data.validate();
    check_tau(tau);
    check_weights(data, weights);
    Eigen::VectorXd r = data.y - data.x * theta;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(data.d(), data.d());
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (std::abs(r(i)) > tau) continue;
        double w = weights ? (*weights)(i) : 1.0;
        h.noalias() += w * data.x.row(i).transpose() * data.x.row(i);
    }
    return h;
}

FitResult fit_huber(const Dataset& data, double tau, const SolverConfig& config,
                    const Eigen::VectorXd* weights, const Eigen::VectorXd* init) {
    data.validate();
    check_tau(tau);
    check_weights(data, weights);
    if (init && init->size() != data.d())
        throw std::invalid_argument("init length does not match design columns");

    const Eigen::Index n = data.n(), d = data.d();
    // Gradient tolerance is relative to the natural size of X^T y.
    const double scale = 1.0 + (data.x.transpose() * data.y.cwiseAbs()).cwiseAbs().maxCoeff();
    const double tol = config.grad_tol * scale;

    FitResult out;
    out.theta = init ? *init : default_init(data);

    Eigen::VectorXd r = data.y - data.x * out.theta;
    double f = objective_from_residuals(r, tau, weights);
    if (config.record_trace) out.trace.push_back(f);

    Eigen::VectorXd score(n), g(d), p(d), xp(n), r_try(n);
    Eigen::MatrixXd h(d, d);

    for (int iter = 0; iter < config.max_iter; ++iter) {
        for (Eigen::Index i = 0; i < n; ++i) {
            score(i) = -huber_score(r(i), tau);
            if (weights) score(i) *= (*weights)(i);
        }
        g.noalias() = data.x.transpose() * score;
        out.grad_norm = g.cwiseAbs().maxCoeff();
        if (out.grad_norm <= tol) {
            out.converged = true;
            break;
        }

        // Directions in order of preference: semismooth Newton from the
        // generalized Hessian, the always-positive-definite reweighted
        // least-squares step with row weights min(1, tau/|r|), steepest
        // descent. A nearly singular active set can pass LLT yet solve to a
        // wild vector, so each candidate must reproduce g through its own
        // matrix and actually descend; if its line search still fails, the
        // next candidate gets a turn. Small tau leaves most rows outside the
        // Huber band and leans on the second and third options.
        bool accepted = false;
        for (int attempt = 0; attempt < 3 && !accepted; ++attempt) {
            if (attempt < 2) {
                h.setZero();
                for (Eigen::Index i = 0; i < n; ++i) {
                    double w = weights ? (*weights)(i) : 1.0;
                    double a = std::abs(r(i));
                    if (a > tau) {
                        if (attempt == 0) continue;
                        w *= tau / a;
                    }
                    h.noalias() += w * data.x.row(i).transpose() * data.x.row(i);
                }
                Eigen::LLT<Eigen::MatrixXd> llt(h);
                if (llt.info() != Eigen::Success) continue;
                p = llt.solve(g);
                if (!p.allFinite() || g.dot(p) <= 0.0) continue;
                if ((h * p - g).cwiseAbs().maxCoeff() > 1e-6 * (1.0 + out.grad_norm))
                    continue;
            } else {
                p = g;
            }
            const double slope = g.dot(p);  // directional decrease along -p
            xp.noalias() = data.x * p;
            double eta = 1.0;
            while (eta >= config.min_step) {
                r_try = r + eta * xp;
                double f_try = objective_from_residuals(r_try, tau, weights);
                if (f_try <= f - config.armijo_c * eta * slope) {
                    out.theta -= eta * p;
                    r.swap(r_try);
                    f = f_try;
                    accepted = true;
                    break;
                }
                eta *= config.backtrack;
            }
        }
        out.iterations = iter + 1;
        if (!accepted) break;  // even steepest descent stalled; report as is
        if (config.record_trace) out.trace.push_back(f);
    }

    if (!out.converged) {
        for (Eigen::Index i = 0; i < n; ++i) {
            score(i) = -huber_score(r(i), tau);
            if (weights) score(i) *= (*weights)(i);
        }
        g.noalias() = data.x.transpose() * score;
        out.grad_norm = g.cwiseAbs().maxCoeff();
        out.converged = out.grad_norm <= tol;
    }
    out.residuals.noalias() = data.y - data.x * out.theta;
    out.objective = objective_from_residuals(out.residuals, tau, weights);
    return out;
}

Eigen::VectorXd fit_ols(const Dataset& data) {
    data.validate();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.x);
    if (qr.rank() < data.d())
        throw singular_matrix_error("least squares: design matrix is rank deficient");
    return qr.solve(data.y);
}

double huber_location(const Eigen::VectorXd& values, double tau,
                      const SolverConfig& config) {
    if (values.size() == 0)
        throw std::invalid_argument("huber_location: empty sample");
    Dataset loc;
    loc.x = Eigen::MatrixXd::Ones(values.size(), 1);
    loc.y = values;
    Eigen::VectorXd start(1);
    start(0) = median_of(values);
    return fit_huber(loc, tau, config, nullptr, &start).theta(0);
}

}  // namespace huberboot
