#include <doctest.h>

#include <cmath>

#include "ctrlmv/oracles.hpp"
#include "helpers.hpp"

using namespace ctrlmv;
using testing_fixtures::two_stock_market;

namespace {

// independent 2x2 linear solve via the adjugate formula
Vec solve2x2(const Mat& A, const Vec& b) {
    const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    Vec x(2);
    x << (A(1, 1) * b[0] - A(0, 1) * b[1]) / det, (-A(1, 0) * b[0] + A(0, 0) * b[1]) / det;
    return x;
}

// RK4 integration of the second-moment ODE
//   k'(t) = (-2A+B) k + 2w(A-B) g(t) + w^2 B + <Sigma, C(t)>,  g(t) = E[x(t)]
// used as the independent route against the closed-form solution
double terminal_variance_ode(const MarketModel& m, const Vec& phi1, const Mat& phi2, double phi3,
                             double w, double x0, double T, int steps = 4000) {
    const double A = m.excess().dot(phi1);
    const double B = phi1.dot(m.Sigma * phi1);
    const double trS2 = (m.Sigma.cwiseProduct(phi2)).sum();
    const auto g = [&](double t) { return w + (x0 - w) * std::exp(-A * t); };
    const auto f = [&](double t, double k) {
        return (-2.0 * A + B) * k + 2.0 * w * (A - B) * g(t) + w * w * B +
               trS2 * std::exp(phi3 * (T - t));
    };
    double k = x0 * x0;
    const double h = T / steps;
    for (int i = 0; i < steps; ++i) {
        const double t = i * h;
        const double k1 = f(t, k);
        const double k2 = f(t + 0.5 * h, k + 0.5 * h * k1);
        const double k3 = f(t + 0.5 * h, k + 0.5 * h * k2);
        const double k4 = f(t + h, k + h * k3);
        k += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    const double mean = g(T);
    return k - mean * mean;
}

Mat random_spd(RandomStream& rng, int d, double ridge) {
    Mat A = Mat::NullaryExpr(d, d, [&](Eigen::Index, Eigen::Index) { return rng.uniform() - 0.5; });
    return A * A.transpose() + ridge * Mat::Identity(d, d);
}

}  // namespace

TEST_CASE("optimal parameters on the two-stock market match the 2x2 oracle") {
    const MarketModel m = two_stock_market();
    const OracleSet o = optimal_params(m, 0.1, 1.4, 1.0, 1.0);
    const Vec expected = solve2x2(m.Sigma, m.excess());
    CHECK((o.phi1_star - expected).norm() < 1e-12);
    CHECK(o.phi1_star[0] == doctest::Approx(1.7845).epsilon(2e-4));
    CHECK(o.phi1_star[1] == doctest::Approx(1.6162).epsilon(2e-4));
    CHECK(o.w_star == doctest::Approx(1.7425).epsilon(2e-4));
    CHECK(o.k == doctest::Approx(0.7738).epsilon(2e-4));
    CHECK(o.sr_star == doctest::Approx(std::sqrt(std::expm1(o.k))).epsilon(1e-12));
    // phi2* = (gamma/2) Sigma^{-1} via the same oracle, column by column
    for (int c = 0; c < 2; ++c) {
        Vec e = Vec::Zero(2);
        e[c] = 0.05;
        CHECK((o.phi2_star.col(c) - solve2x2(m.Sigma, e)).norm() < 1e-12);
    }
}

TEST_CASE("degenerate market: mu = r") {
    Vec mu = Vec::Constant(2, 0.02), vols(2);
    vols << 0.2, 0.3;
    const MarketModel m = MarketModel::from_vols(mu, vols, 0.0, 0.02);
    const OracleSet o = optimal_params(m, 0.2, 1.4, 1.0, 1.0);
    CHECK(o.phi1_star.norm() < 1e-14);
    CHECK(o.degenerate);
    CHECK(std::isnan(o.w_star));
    CHECK(o.k == doctest::Approx(0.0));
}

TEST_CASE("phi2* under identity covariance is a scalar matrix") {
    Vec mu(2);
    mu << 0.1, 0.2;
    Mat sigma = Mat::Identity(2, 2);
    const MarketModel m(mu, sigma, 0.0);
    const OracleSet o = optimal_params(m, 0.2, 1.4, 1.0, 1.0);
    CHECK((o.phi2_star - 0.1 * Mat::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("h functions vanish exactly at the optimum") {
    const MarketModel m = two_stock_market();
    const OracleSet o = optimal_params(m, 0.1, 1.4, 1.0, 1.0);
    CHECK(h1(o.phi1_star, o.phi2_star, o.w_star, m, 1.0, 1.0, 1.0).norm() < 1e-12);
    CHECK(h2(o.phi2_star, m, 0.1, 1.0).norm() < 1e-14);
    CHECK(std::abs(hw(o.phi1_star, o.w_star, m, 1.0, 1.4, 1.0)) < 1e-12);
}

TEST_CASE("hw is linear in w with slope 1 - e^{-A T}") {
    const MarketModel m = two_stock_market();
    Vec phi1(2);
    phi1 << 1.2, 0.7;
    const double A = m.excess().dot(phi1);
    const double slope = (hw(phi1, 2.0, m, 1.0, 1.4, 1.0) - hw(phi1, 1.0, m, 1.0, 1.4, 1.0));
    CHECK(slope == doctest::Approx(1.0 - std::exp(-A)).epsilon(1e-12));
}

TEST_CASE("R has the quadrature representation 2 int G(t) E[(x-w)^2] dt") {
    const MarketModel m = two_stock_market();
    Vec phi1(2);
    phi1 << 0.9, 0.4;
    Mat phi2 = 0.15 * Mat::Identity(2, 2);
    const double w = 1.3, x0 = 1.0, T = 1.0, phi3 = 1.0;
    // Simpson quadrature over the closed-form second moment
    const int n = 2000;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = T * i / n;
        const double wgt = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const auto [mean, second] = exploratory_moments(m, phi1, phi2, phi3, w, x0, t, T);
        acc += wgt * std::exp(-phi3 * (T - t)) * second;
    }
    acc *= T / n / 3.0 * 2.0;
    CHECK(oracle_R(m, phi1, phi2, w, phi3, x0, T) == doctest::Approx(acc).epsilon(1e-9));
}

TEST_CASE("Q limit branch is smooth near zero") {
    const MarketModel m = two_stock_market();
    // engineer Q ~ 0: phi3 = 2A - B at some phi1
    Vec phi1(2);
    phi1 << 1.0, 0.5;
    const double A = m.excess().dot(phi1);
    const double B = phi1.dot(m.Sigma * phi1);
    const double phi3 = 2.0 * A - B;  // Q = 0 exactly
    const Mat phi2 = 0.1 * Mat::Identity(2, 2);
    const double exact = oracle_R(m, phi1, phi2, 1.3, phi3, 1.0, 1.0);
    const double nearby = oracle_R(m, phi1, phi2, 1.3, phi3 + 1e-9, 1.0, 1.0);
    CHECK(std::isfinite(exact));
    CHECK(exact == doctest::Approx(nearby).epsilon(1e-6));
}

TEST_CASE("closed-form Sharpe ratio") {
    const MarketModel m = two_stock_market();
    const OracleSet o = optimal_params(m, 0.1, 1.4, 1.0, 1.0);
    CHECK(sharpe_closed_form(o.phi1_star, m, 1.0) == doctest::Approx(1.0807).epsilon(2e-4));
    CHECK(sharpe_closed_form(Vec::Zero(2), m, 1.0) == 0.0);

    // mu = r: SR identically zero
    Vec mu = Vec::Constant(2, 0.05), vols(2);
    vols << 0.2, 0.3;
    const MarketModel flat = MarketModel::from_vols(mu, vols, 0.1, 0.05);
    RandomStream rng(9, 0, 0);
    for (int i = 0; i < 50; ++i) {
        Vec phi1(2);
        phi1 << 4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0;
        CHECK(std::abs(sharpe_closed_form(phi1, flat, 1.0)) < 1e-12);
    }

    // global optimality: SR(phi1*) >= SR(phi1) over a random sweep
    for (int i = 0; i < 1000; ++i) {
        Vec phi1(2);
        phi1 << 8.0 * rng.uniform() - 4.0, 8.0 * rng.uniform() - 4.0;
        CHECK(sharpe_closed_form(phi1, m, 1.0) <= o.sr_star + 1e-12);
    }
}

TEST_CASE("fit_loglog_slope on exact power laws") {
    std::vector<std::pair<double, double>> inv, sq;
    for (long n = 1; n <= 5000; ++n) {
        inv.emplace_back(n, 3.7 / n);
        sq.emplace_back(n, 0.2 * std::sqrt(static_cast<double>(n)));
    }
    CHECK(fit_loglog_slope(inv, 1).first == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(fit_loglog_slope(sq, 1).first == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(fit_loglog_slope(inv, 200).first == doctest::Approx(-1.0).epsilon(1e-10));

    std::vector<std::pair<double, double>> bad{{1, 1}, {2, -1}};
    CHECK_THROWS_AS(fit_loglog_slope(bad, 1), invalid_input);
    std::vector<std::pair<double, double>> few{{1, 1}, {2, 1}, {3, 1}};
    CHECK_THROWS_AS(fit_loglog_slope(few, 1), invalid_input);
}

TEST_CASE("cumulative regret of trivial histories") {
    const MarketModel m = two_stock_market();
    const OracleSet o = optimal_params(m, 0.1, 1.4, 1.0, 1.0);
    std::vector<Vec> at_opt(50, o.phi1_star);
    const auto zero = cumulative_regret(at_opt, o, m, 1.0);
    CHECK(std::abs(zero.back()) < 1e-10);

    Vec sub(2);
    sub << 0.5, 0.5;
    std::vector<Vec> constant(400, sub);
    const auto lin = cumulative_regret(constant, o, m, 1.0);
    const double gap = o.sr_star - sharpe_closed_form(sub, m, 1.0);
    CHECK(lin[99] == doctest::Approx(100.0 * gap).epsilon(1e-10));
    CHECK(lin[399] == doctest::Approx(400.0 * gap).epsilon(1e-10));
}

TEST_CASE("variance dominance: closed-form variances are ordered, ODE oracle agrees") {
    const MarketModel m = two_stock_market();
    RandomStream rng(31, 0, 0);
    for (int trial = 0; trial < 50; ++trial) {
        Vec phi1(2);
        phi1 << 2.0 * rng.uniform() - 0.5, 2.0 * rng.uniform() - 0.5;
        const double w = 1.0 + rng.uniform();
        const double phi3 = 0.8 + rng.uniform();
        // C = Chat + gap with both SPD, so C - Chat is positive semidefinite
        const Mat Chat = random_spd(rng, 2, 0.02);
        const Mat C = Chat + random_spd(rng, 2, 0.01);
        const double var_c = exploratory_terminal_variance(m, phi1, C, phi3, w, 1.0, 1.0);
        const double var_h = exploratory_terminal_variance(m, phi1, Chat, phi3, w, 1.0, 1.0);
        CHECK(var_c >= var_h - 1e-12);
        // the RK4 route reproduces the closed form
        const double ode = terminal_variance_ode(m, phi1, C, phi3, w, 1.0, 1.0);
        CHECK(var_c == doctest::Approx(ode).epsilon(1e-7));
    }
}
