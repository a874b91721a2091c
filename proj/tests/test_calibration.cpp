#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "huberboot/calibration.hpp"
#include "huberboot/errors.hpp"
#include "huberboot/losses.hpp"
#include "huberboot/solver.hpp"

using namespace huberboot;

namespace {

// Bisection oracle for the censored equation, independent of the
// sorted-interval solver. Solves sum_i min(|v_i|^r, tau^r)/tau^r = t.
double bisect_censored(const Eigen::VectorXd& values, double t, int order) {
    auto lhs = [&](double tau) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < values.size(); ++i)
            s += std::min(std::pow(std::abs(values(i)), order), std::pow(tau, order)) /
                 std::pow(tau, order);
        return s;
    };
    double lo = 1e-12;
    for (Eigen::Index i = 0; i < values.size(); ++i)
        if (values(i) != 0.0) lo = std::min(lo == 1e-12 ? 1e300 : lo, std::abs(values(i)) / 2);
    double hi = std::pow(values.array().abs().pow(order).sum(), 1.0 / order) *
                std::pow(values.size() / t, 1.0 / order);
    for (int it = 0; it < 400; ++it) {
        double mid = 0.5 * (lo + hi);
        (lhs(mid) > t ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Dataset gaussian_instance(std::uint64_t seed, Eigen::Index n, Eigen::Index d) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Dataset data;
    data.x.resize(n, d);
    data.y.resize(n);
    Eigen::VectorXd theta(d);
    for (Eigen::Index j = 0; j < d; ++j) theta(j) = normal(rng);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) data.x(i, j) = normal(rng);
        data.y(i) = data.x.row(i) * theta + normal(rng);
    }
    return data;
}

}  // namespace

TEST_CASE("censored equation closed forms") {
    Eigen::VectorXd v(2);
    v << 3.0, 4.0;
    TauSolution sol = solve_censored_equation(v, 1.0, 2);
    REQUIRE(sol.solvable);
    CHECK(sol.tau == doctest::Approx(5.0).epsilon(1e-12));

    // Constant magnitudes: tau must exceed them all, so c^2/tau^2 = t/n.
    Eigen::VectorXd c = Eigen::VectorXd::Constant(10, 2.0);
    c(3) = -2.0;
    sol = solve_censored_equation(c, 4.0, 2);
    REQUIRE(sol.solvable);
    CHECK(sol.tau == doctest::Approx(2.0 * std::sqrt(10.0 / 4.0)).epsilon(1e-12));
}

TEST_CASE("t=1 order=2 closed form on random vectors") {
    std::mt19937_64 rng(311);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd v(20);
        for (int i = 0; i < 20; ++i) v(i) = normal(rng);
        TauSolution sol = solve_censored_equation(v, 1.0, 2);
        REQUIRE(sol.solvable);
        CHECK(sol.tau == doctest::Approx(std::sqrt(v.squaredNorm())).epsilon(1e-12));
    }
}

TEST_CASE("censored equation agrees with bisection") {
    std::mt19937_64 rng(313);
    std::normal_distribution<double> normal;
    for (int order : {2, 4}) {
        for (int trial = 0; trial < 30; ++trial) {
            Eigen::VectorXd v(50);
            for (int i = 0; i < 50; ++i) v(i) = normal(rng);
            double t = std::log(50.0);
            TauSolution sol = solve_censored_equation(v, t, order);
            REQUIRE(sol.solvable);
            double oracle = bisect_censored(v, t, order);
            CHECK(std::abs(sol.tau - oracle) < 1e-10 * (1.0 + oracle));
        }
    }
}

TEST_CASE("censored equation root certification and monotone left side") {
    std::mt19937_64 rng(317);
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(40);
    for (int i = 0; i < 40; ++i) v(i) = 2.0 * normal(rng);

    double t = 5.0;
    TauSolution sol = solve_censored_equation(v, t, 2);
    REQUIRE(sol.solvable);
    CHECK(std::abs(censored_equation_sum(v, sol.tau, 2) - t) / 40.0 < 1e-10);

    // q_n(tau) never increases in tau.
    double prev = std::numeric_limits<double>::infinity();
    for (double tau = 0.05; tau < 12.0; tau *= 1.3) {
        double q = censored_equation_sum(v, tau, 2);
        CHECK(q <= prev + 1e-12);
        prev = q;
    }
}

TEST_CASE("censored equation scale equivariance") {
    std::mt19937_64 rng(319);
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(25);
    for (int i = 0; i < 25; ++i) v(i) = normal(rng);
    for (double c : {2.0, -0.3, 17.0}) {
        for (int order : {2, 4}) {
            TauSolution base = solve_censored_equation(v, 3.0, order);
            TauSolution scaled = solve_censored_equation((c * v.array()).matrix(), 3.0, order);
            REQUIRE(base.solvable);
            REQUIRE(scaled.solvable);
            CHECK(scaled.tau == doctest::Approx(std::abs(c) * base.tau).epsilon(1e-10));
        }
    }
}

TEST_CASE("censored equation unsolvable when t too large") {
    Eigen::VectorXd v(4);
    v << 1.0, -2.0, 0.0, 0.0;
    // Two nonzero entries: the left side is strictly below 2 for tau > 0.
    CHECK_FALSE(solve_censored_equation(v, 2.0, 2).solvable);
    CHECK_FALSE(solve_censored_equation(v, 3.5, 2).solvable);
    CHECK(solve_censored_equation(v, 1.9, 2).solvable);

    Eigen::VectorXd zeros = Eigen::VectorXd::Zero(5);
    CHECK_FALSE(solve_censored_equation(zeros, 1.0, 2).solvable);
}

TEST_CASE("truncated mean examples") {
    Eigen::VectorXd pm(2);
    pm << -1.0, 1.0;
    CHECK(truncated_mean(pm, 1.0) == doctest::Approx(0.0).epsilon(1e-14));

    Eigen::VectorXd ab(2);
    ab << 3.0, 4.0;
    // tau_1 = 5 truncates nothing, so this is the plain mean.
    CHECK(truncated_mean(ab, 1.0) == doctest::Approx(3.5).epsilon(1e-12));

    Eigen::VectorXd mix(4);
    mix << 0.1, -0.2, 0.3, 100.0;
    double tau = bisect_censored(mix, 2.0, 2);
    double clipped = 0.0;
    for (int i = 0; i < 4; ++i) clipped += huber_score(mix(i), tau);
    CHECK(truncated_mean(mix, 2.0) == doctest::Approx(clipped / 4.0).epsilon(1e-9));

    Eigen::VectorXd sparse(3);
    sparse << 0.0, 0.0, 1.0;
    CHECK_THROWS_AS(truncated_mean(sparse, 1.0), degenerate_data_error);
}

TEST_CASE("proposal2 symmetric two-point solution") {
    const double a = 1.7;
    Eigen::VectorXd v(2);
    v << -a, a;
    Proposal2Result res = huber_proposal2(v, 1.0);
    CHECK(res.converged);
    CHECK(res.mu == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(res.tau == doctest::Approx(a * std::sqrt(2.0)).epsilon(1e-8));
}

TEST_CASE("proposal2 degenerate on constant input") {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(6, 3.14);
    Proposal2Result res = huber_proposal2(v, 2.0);
    CHECK(res.degenerate);
}

TEST_CASE("proposal2 fixed point satisfies both equations") {
    std::mt19937_64 rng(431);
    std::student_t_distribution<double> t3(3.0);
    Eigen::VectorXd v(20);
    for (int i = 0; i < 20; ++i) v(i) = 1.0 + t3(rng);
    const double t = std::log(20.0);
    Proposal2Result res = huber_proposal2(v, t, 1e-10);
    REQUIRE(res.converged);

    double score = 0.0;
    for (int i = 0; i < 20; ++i) score += huber_score(v(i) - res.mu, res.tau);
    CHECK(std::abs(score) / 20.0 < 1e-8);
    Eigen::VectorXd r = v.array() - res.mu;
    CHECK(std::abs(censored_equation_sum(r, res.tau, 2) - t) / 20.0 < 1e-8);
}

TEST_CASE("irls flags interpolating data") {
    Dataset data;
    data.x.resize(6, 1);
    data.y.resize(6);
    for (int i = 0; i < 6; ++i) {
        data.x(i, 0) = i + 1.0;
        data.y(i) = 2.0 * (i + 1.0);
    }
    IrlsConfig cfg;
    cfg.t = 1.0;
    IrlsResult res = irls_fit(data, cfg);
    CHECK(res.degenerate);
    CHECK(res.theta(0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("irls fixed point is huber-stationary") {
    Dataset data = gaussian_instance(521, 50, 2);
    IrlsConfig cfg;
    cfg.t = std::log(50.0);
    cfg.order = 2;
    IrlsResult res = irls_fit(data, cfg);
    REQUIRE(res.converged);
    REQUIRE_FALSE(res.degenerate);

    double scale = 1.0 + (data.x.transpose() * data.y.cwiseAbs()).cwiseAbs().maxCoeff();
    Eigen::VectorXd grad = huber_gradient(data, res.theta, res.tau);
    CHECK(grad.cwiseAbs().maxCoeff() <= 1e-6 * scale);
}

TEST_CASE("irls order-4 calibration equation holds at the fixed point") {
    Dataset data = gaussian_instance(523, 50, 2);
    IrlsConfig cfg;
    cfg.t = std::log(50.0);
    cfg.order = 4;
    IrlsResult res = irls_fit(data, cfg);
    REQUIRE(res.converged);
    const double level = (2.0 + cfg.t) / 50.0;
    Eigen::VectorXd r = data.y - data.x * res.theta;
    CHECK(std::abs(censored_equation_sum(r, res.tau, 4) / 50.0 - level) < 1e-10);
}

TEST_CASE("lepski selection rule on injected candidates") {
    const double dim_plus_t = 2.0 + std::log(100.0);
    const Eigen::Index n = 100;
    const double c0 = 2.0;
    std::vector<double> v_grid = {0.5, 1.0, 2.0, 4.0};
    const double rate = std::sqrt(dim_plus_t / static_cast<double>(n));

    Eigen::VectorXd common(2);
    common << 1.0, -1.0;
    std::vector<Eigen::VectorXd> estimates(4, common);
    estimates[0] = common + Eigen::VectorXd::Constant(2, 10.0 * c0 * 4.0 * rate);

    bool fallback = false;
    int pick = lepski_choose(estimates, v_grid, c0, dim_plus_t, n, &fallback);
    CHECK(pick == 1);
    CHECK_FALSE(fallback);

    // A single candidate satisfies the pairwise condition vacuously.
    std::vector<Eigen::VectorXd> lone(1, common);
    std::vector<double> lone_grid = {1.0};
    pick = lepski_choose(lone, lone_grid, c0, dim_plus_t, n, &fallback);
    CHECK(pick == 0);
    CHECK_FALSE(fallback);

    // Mutually distant candidates force the fallback to the largest index.
    std::vector<Eigen::VectorXd> spread;
    for (int j = 0; j < 4; ++j)
        spread.push_back(Eigen::VectorXd::Constant(2, j * 1e6));
    pick = lepski_choose(spread, v_grid, c0, dim_plus_t, n, &fallback);
    CHECK(pick == 3);
    CHECK(fallback);
}

TEST_CASE("lepski select recovers the truth on gaussian data") {
    Dataset data = gaussian_instance(541, 200, 2);
    LepskiConfig cfg;
    cfg.v_min = 0.25;
    cfg.v_max = 4.0;
    cfg.a = 2.0;
    cfg.c0 = 2.0;
    cfg.exponent = 0.5;
    cfg.t = std::log(200.0);
    LepskiResult res = lepski_select(data, cfg);

    // theta* for seed 541 comes from the same generator as the instance.
    std::mt19937_64 rng(541);
    std::normal_distribution<double> normal;
    Eigen::VectorXd theta_star(2);
    theta_star << normal(rng), normal(rng);
    CHECK((res.theta - theta_star).norm() < 0.5);
    CHECK(res.tau > 0.0);
    CHECK_FALSE(res.fallback);
}

TEST_CASE("lepski rejects an empty grid") {
    Dataset data = gaussian_instance(543, 30, 2);
    LepskiConfig cfg;
    cfg.v_min = 2.0;
    cfg.v_max = 1.0;  // inverted bounds leave no candidates
    cfg.t = 1.0;
    CHECK_THROWS_AS(lepski_select(data, cfg), std::invalid_argument);
}

TEST_CASE("mom fourth moment") {
    Eigen::VectorXd c = Eigen::VectorXd::Constant(12, 5.0);
    CHECK(mom_fourth_moment(c, 3) == 0.0);

    std::mt19937_64 rng(617);
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(100);
    for (int i = 0; i < 100; ++i) v(i) = normal(rng);

    // One block is the plain central fourth moment.
    double mean = v.mean();
    double plain = (v.array() - mean).pow(4).mean();
    CHECK(mom_fourth_moment(v, 1) == doctest::Approx(plain).epsilon(1e-12));

    CHECK_THROWS_AS(mom_fourth_moment(v, 101), std::invalid_argument);

    Eigen::VectorXd big(100000);
    for (int i = 0; i < 100000; ++i) big(i) = normal(rng);
    double est = mom_fourth_moment(big, default_mom_blocks(100000));
    CHECK(est > 3.0 * 0.85);
    CHECK(est < 3.0 * 1.15);
}

TEST_CASE("pilot tau stays on the grid and flags interpolation") {
    Dataset data = gaussian_instance(621, 150, 3);
    const int K = 6;
    PilotTau pilot = pilot_tau(data, K, 2.0, 2.0);
    const double rate = std::pow(150.0 / (3.0 + std::log(150.0)), 0.25);
    CHECK(pilot.tau >= pilot.selection.v_grid.front() * rate * (1.0 - 1e-12));
    CHECK(pilot.tau <= 2.0 * pilot.v_max * rate * (1.0 + 1e-12));

    Dataset exact;
    exact.x.resize(8, 1);
    exact.y.resize(8);
    for (int i = 0; i < 8; ++i) {
        exact.x(i, 0) = i + 1.0;
        exact.y(i) = 3.0 * (i + 1.0);
    }
    CHECK_THROWS_AS(pilot_tau(exact, K, 2.0, 2.0), degenerate_data_error);
}

TEST_CASE("simple tau rule formula and degenerate case") {
    // Scale a seeded instance so the OLS fourth-moment estimate is exactly 1;
    // the rule then reduces to the bare rate factor.
    Dataset data = gaussian_instance(711, 100, 5);
    Eigen::VectorXd ols = fit_ols(data);
    Eigen::VectorXd r = data.y - data.x * ols;
    double nu4 = r.array().pow(4).sum() / (100.0 - 5.0);
    double c = std::pow(nu4, -0.25);
    data.y *= c;
    data.x *= c;

    double tau = simple_tau_rule(data, TauPurpose::Bootstrap);
    double expect = 1.2 * std::pow(100.0 / (5.0 + std::log(100.0)), 0.25);
    CHECK(tau == doctest::Approx(expect).epsilon(1e-10));
    CHECK(expect == doctest::Approx(2.1556).epsilon(1e-4));

    // Estimation variant uses the residual variance and a square-root rate.
    Dataset est = gaussian_instance(713, 80, 3);
    Eigen::VectorXd beta =
        (est.x.transpose() * est.x).inverse() * (est.x.transpose() * est.y);
    Eigen::VectorXd res = est.y - est.x * beta;
    double sigma2 = res.squaredNorm() / (80.0 - 3.0);
    double expect_est = std::sqrt(sigma2 * 80.0 / (3.0 + std::log(80.0)));
    CHECK(simple_tau_rule(est, TauPurpose::Estimation) ==
          doctest::Approx(expect_est).epsilon(1e-8));

    // Interpolating data: zero residuals, zero tau.
    Dataset flat;
    flat.x.resize(10, 1);
    flat.y.resize(10);
    for (int i = 0; i < 10; ++i) {
        flat.x(i, 0) = i + 1.0;
        flat.y(i) = 4.0 * (i + 1.0);
    }
    CHECK(simple_tau_rule(flat, TauPurpose::Bootstrap) == 0.0);
}

TEST_CASE("simple tau rule matches a two-pass recomputation") {
    Dataset data = gaussian_instance(715, 100, 4);
    Eigen::VectorXd beta =
        (data.x.transpose() * data.x).inverse() * (data.x.transpose() * data.y);
    double nu4 = 0.0;
    for (int i = 0; i < 100; ++i)
        nu4 += std::pow(data.y(i) - data.x.row(i) * beta, 4);
    nu4 /= (100.0 - 4.0);
    double expect = 1.2 * std::pow(nu4 * 100.0 / (4.0 + std::log(100.0)), 0.25);
    CHECK(simple_tau_rule(data, TauPurpose::Bootstrap) ==
          doctest::Approx(expect).epsilon(1e-9));
}
