#include <cmath>
#include <random>

#include "doctest.h"
#include "huberboot/losses.hpp"

using namespace huberboot;

namespace {

double fd_derivative(double (*f)(double, double), double u, double tau) {
    const double h = 1e-6;
    return (f(u + h, tau) - f(u - h, tau)) / (2.0 * h);
}

}  // namespace

TEST_CASE("huber loss piecewise values") {
    const double tau = 1.5;
    CHECK(huber_loss(0.0, tau) == 0.0);
    CHECK(huber_loss(1.0, tau) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(huber_loss(-1.0, tau) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(huber_loss(1.5, tau) == doctest::Approx(1.125).epsilon(1e-15));
    CHECK(huber_loss(3.0, tau) == doctest::Approx(3.375).epsilon(1e-15));
    CHECK(huber_loss(-3.0, tau) == doctest::Approx(3.375).epsilon(1e-15));
}

TEST_CASE("huber score clips") {
    const double tau = 2.0;
    CHECK(huber_score(0.7, tau) == 0.7);
    CHECK(huber_score(-0.7, tau) == -0.7);
    CHECK(huber_score(5.0, tau) == tau);
    CHECK(huber_score(-5.0, tau) == -tau);
    CHECK(huber_score(tau, tau) == tau);
}

TEST_CASE("huber score is the loss derivative away from the kink") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> unif(-4.0, 4.0);
    const double tau = 1.3;
    for (int i = 0; i < 200; ++i) {
        double u = unif(rng);
        if (std::abs(std::abs(u) - tau) < 1e-4) continue;
        CHECK(huber_score(u, tau) ==
              doctest::Approx(fd_derivative(&huber_loss, u, tau)).epsilon(1e-6));
    }
}

TEST_CASE("huber loss is convex and continuous at the junction") {
    std::mt19937_64 rng(72);
    std::uniform_real_distribution<double> unif(-6.0, 6.0);
    const double tau = 0.8;
    for (int i = 0; i < 500; ++i) {
        double a = unif(rng), b = unif(rng);
        double mid = huber_loss(0.5 * (a + b), tau);
        CHECK(mid <= 0.5 * huber_loss(a, tau) + 0.5 * huber_loss(b, tau) + 1e-12);
    }
    const double eps = 1e-9;
    CHECK(huber_loss(tau - eps, tau) == doctest::Approx(huber_loss(tau + eps, tau)).epsilon(1e-7));
}

TEST_CASE("catoni loss values and junction") {
    const double tau = 1.1;
    const double cut = std::sqrt(2.0) * tau;
    CHECK(catoni_loss(0.0, tau) == 0.0);
    // Inside the cut the quartic correction applies.
    double u = 0.5;
    CHECK(catoni_loss(u, tau) ==
          doctest::Approx(0.5 * u * u - std::pow(u, 4) / (24.0 * tau * tau)).epsilon(1e-15));
    // Value at the junction from both sides: (5/6) tau^2.
    CHECK(catoni_loss(cut, tau) == doctest::Approx(5.0 / 6.0 * tau * tau).epsilon(1e-12));
    CHECK(catoni_loss(cut + 1e-9, tau) == doctest::Approx(5.0 / 6.0 * tau * tau).epsilon(1e-7));
}

TEST_CASE("catoni score bound and smoothness") {
    const double tau = 0.9;
    const double bound = 2.0 * std::sqrt(2.0) / 3.0 * tau;
    std::mt19937_64 rng(73);
    std::uniform_real_distribution<double> unif(-5.0, 5.0);
    for (int i = 0; i < 300; ++i) {
        double u = unif(rng);
        CHECK(std::abs(catoni_score(u, tau)) <= bound + 1e-15);
        CHECK(catoni_score(u, tau) ==
              doctest::Approx(fd_derivative(&catoni_loss, u, tau)).epsilon(2e-5));
    }
    // The score itself is continuous with continuous derivative at the cut,
    // so a finite difference of the score across the cut stays bounded.
    const double cut = std::sqrt(2.0) * tau;
    double left = (catoni_score(cut - 1e-7, tau) - catoni_score(cut - 2e-7, tau)) / 1e-7;
    double right = (catoni_score(cut + 2e-7, tau) - catoni_score(cut + 1e-7, tau)) / 1e-7;
    CHECK(std::abs(left) < 1e-4);   // derivative of the score tends to 0 at the cut
    CHECK(std::abs(right) < 1e-4);  // flat on the linear side
}

TEST_CASE("check_tau rejects bad values") {
    CHECK_THROWS_AS(check_tau(0.0), std::invalid_argument);
    CHECK_THROWS_AS(check_tau(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(check_tau(std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(check_tau(std::numeric_limits<double>::infinity()), std::invalid_argument);
    CHECK_NOTHROW(check_tau(1e-8));
}
