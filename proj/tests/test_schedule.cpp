#include <doctest.h>

#include <cmath>

#include "ctrlmv/rng.hpp"
#include "ctrlmv/schedule.hpp"

using namespace ctrlmv;

TEST_CASE("project_box on vectors and scalars") {
    Vec v(2);
    v << 3.0, 4.0;
    const Vec p = project_box(v, 1.0);
    CHECK(p[0] == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-14));
    // inside stays put, idempotent
    Vec small(2);
    small << 0.1, -0.2;
    CHECK((project_box(small, 1.0) - small).norm() == 0.0);
    CHECK((project_box(p, 1.0) - p).norm() < 1e-15);
    CHECK(project_box(2.5, 1.0) == 1.0);
    CHECK(project_box(-2.5, 1.0) == -1.0);
    CHECK(project_box(0.3, 1.0) == 0.3);
}

TEST_CASE("project_psd_band clamps eigenvalues and caps the norm") {
    // already inside: unchanged
    CHECK((project_psd_band(Mat::Identity(2, 2), 0.5, 10.0) - Mat::Identity(2, 2)).norm() < 1e-12);
    // eigenvalue clamp
    Mat D = Mat::Zero(2, 2);
    D(0, 0) = 0.1;
    D(1, 1) = 2.0;
    const Mat clamped = project_psd_band(D, 0.5, 10.0);
    CHECK(clamped(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(clamped(1, 1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(clamped(0, 1)) < 1e-14);
    // empty feasible set
    CHECK_THROWS_AS(project_psd_band(Mat::Identity(3, 3), 1.0, 1.0), invalid_input);
}

TEST_CASE("project_psd_band satisfies both constraints on random matrices") {
    RandomStream rng(101, 0, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 2 + static_cast<int>(rng.uniform_below(3));
        Mat A = Mat::NullaryExpr(d, d, [&](Eigen::Index, Eigen::Index) {
            return 4.0 * rng.uniform() - 2.0;
        });
        const double floor_ = 0.05 + 0.2 * rng.uniform();
        const double cap = floor_ * std::sqrt(static_cast<double>(d)) + 0.2 + 2.0 * rng.uniform();
        const Mat P = project_psd_band(A, floor_, cap);
        CHECK((P - P.transpose()).norm() < 1e-12);
        Eigen::SelfAdjointEigenSolver<Mat> es(P);
        CHECK(es.eigenvalues().minCoeff() >= floor_ - 1e-10);
        CHECK(P.norm() <= cap + 1e-9);
        // projections are idempotent
        CHECK((project_psd_band(P, floor_, cap) - P).norm() < 1e-9);
    }
}

TEST_CASE("schedule shapes follow the stated families") {
    Schedule s;
    s.alpha = 2.0;
    s.beta = 3.0;
    CHECK(s.a(1) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s.a_w(1) == s.a(1));
    s.alpha_w = 4.0;
    CHECK(s.a_w(1) == doctest::Approx(1.0).epsilon(1e-14));
    // decreasing rates, non-decreasing radii
    for (long n = 1; n < 2000; n += 7) {
        CHECK(s.a(n + 1) <= s.a(n));
        CHECK(s.c1(n + 1) >= s.c1(n));
        CHECK(s.c2(n + 1) >= s.c2(n));
        CHECK(s.cw(n + 1) >= s.cw(n));
        CHECK(s.phi2_floor(n + 1) <= s.phi2_floor(n));
    }
    // the loglog growth kicks in above e^e
    CHECK(Schedule::grow8(10) == 1.0);
    CHECK(Schedule::grow8(100000) ==
          doctest::Approx(std::pow(std::log(std::log(1e5)), 0.125)).epsilon(1e-12));
    CHECK(Schedule::grow16(100000) ==
          doctest::Approx(std::pow(std::log(std::log(1e5)), 0.0625)).epsilon(1e-12));
    CHECK(s.validate().empty());
    Schedule bad;
    bad.alpha = -1.0;
    CHECK(!bad.validate().empty());
    Schedule constant;
    constant.constant_rates = true;
    constant.alpha = 0.005;
    CHECK(!constant.validate().empty());  // decay condition warning
}
