#include <doctest.h>

#include <cmath>
#include <vector>

#include "ctrlmv/metrics.hpp"
#include "ctrlmv/rng.hpp"

using namespace ctrlmv;

TEST_CASE("annualize hand examples") {
    // constant daily return 0.001 over 252 days
    std::vector<double> w{1.0};
    for (int i = 0; i < 252; ++i) w.push_back(w.back() * 1.001);
    auto [ret, vol] = annualize(w);
    CHECK(ret == doctest::Approx(std::pow(1.001, 252) - 1.0).epsilon(1e-12));
    CHECK(ret == doctest::Approx(0.2865).epsilon(1e-3));
    CHECK(vol == doctest::Approx(0.0).epsilon(1e-12));

    // flat wealth
    auto [r0, v0] = annualize(std::vector<double>{1.0, 1.0, 1.0});
    CHECK(r0 == 0.0);
    CHECK(v0 == 0.0);

    // bankruptcy rule
    auto [rb, vb] = annualize(std::vector<double>{1.0, 0.4, 0.0, 0.0});
    CHECK(rb == -1.0);
    (void)vb;

    CHECK_THROWS_AS(annualize(std::vector<double>{1.0}), invalid_input);
}

TEST_CASE("ratios report sentinels on zero denominators") {
    CHECK(sharpe_ratio(0.1, 0.2, 0.0) == doctest::Approx(0.5));
    CHECK(sharpe_ratio(0.05, 0.2, 0.05) == doctest::Approx(0.0));  // mu_p = r
    CHECK_THROWS_AS(sharpe_ratio(0.1, 0.0, 0.0), metric_undefined);
    CHECK_THROWS_AS(sortino_ratio(0.1, 0.0, 0.0), metric_undefined);
    CHECK_THROWS_AS(calmar_ratio(0.1, 0.0, 0.0), metric_undefined);

    // strictly increasing wealth: no downside, sortino is the NaN sentinel
    std::vector<double> up{1.0};
    for (int i = 0; i < 30; ++i) up.push_back(up.back() * 1.002);
    const MetricReport m = compute_metrics(up, 0.0);
    CHECK(std::isnan(m.sortino));
    CHECK(std::isnan(m.calmar));  // MDD = 0
    CHECK(m.mdd == 0.0);
    CHECK(m.rt == 0.0);
}

TEST_CASE("max drawdown and recovery time hand examples") {
    CHECK(max_drawdown({1.0, 1.1, 1.2}) == 0.0);
    CHECK(recovery_time({1.0, 1.1, 1.2}) == 0.0);

    CHECK(max_drawdown({1.0, 0.5, 0.75}) == doctest::Approx(0.5));
    CHECK(recovery_time({1.0, 0.5, 0.75}) == kNotRecovered);

    CHECK(max_drawdown({1.0, 0.5, 1.0}) == doctest::Approx(0.5));
    CHECK(recovery_time({1.0, 0.5, 1.0}) == 1.0);

    // earliest trough of equal drawdowns
    CHECK(recovery_time({1.0, 0.5, 1.0, 0.5, 1.0}) == 1.0);
}

TEST_CASE("MDD is invariant under positive rescaling; RT = 0 iff MDD = 0") {
    RandomStream rng(64, 0, 0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> w{1.0};
        for (int i = 0; i < 100; ++i)
            w.push_back(std::max(1e-6, w.back() * (1.0 + 0.02 * rng.normal())));
        const double c = 0.5 + 4.0 * rng.uniform();
        std::vector<double> wc = w;
        for (double& x : wc) x *= c;
        CHECK(max_drawdown(w) == doctest::Approx(max_drawdown(wc)).epsilon(1e-12));
        const bool zero_dd = max_drawdown(w) == 0.0;
        CHECK((recovery_time(w) == 0.0) == zero_dd);
    }
}

TEST_CASE("metrics of a deterministic exponential path are exact") {
    const double g = 0.0005;
    std::vector<double> w{1.0};
    for (int i = 0; i < 504; ++i) w.push_back(w.back() * (1.0 + g));
    const MetricReport m = compute_metrics(w, 0.0);
    CHECK(m.ann_return == doctest::Approx(std::pow(1.0 + g, 252.0) - 1.0).epsilon(1e-10));
    CHECK(m.ann_vol == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m.mdd == 0.0);
    CHECK(m.rt == 0.0);
}

TEST_CASE("wilcoxon: identical samples give one half") {
    std::vector<double> a(20, 1.0), b(20, 1.0);
    CHECK(wilcoxon_paired(a, b) == 0.5);
}

TEST_CASE("wilcoxon: a dominant sample is detected") {
    std::vector<double> a(100), b(100);
    RandomStream rng(5, 0, 0);
    for (int i = 0; i < 100; ++i) {
        b[i] = rng.normal();
        a[i] = b[i] + 5.0 + rng.uniform();
    }
    CHECK(wilcoxon_paired(a, b) < 1e-6);
    CHECK(wilcoxon_paired(b, a) > 1.0 - 1e-6);
}

TEST_CASE("wilcoxon: antisymmetry up to the continuity correction") {
    RandomStream rng(6, 0, 0);
    std::vector<double> a(60), b(60);
    for (int i = 0; i < 60; ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal() + 0.2;
    }
    const double p1 = wilcoxon_paired(a, b);
    const double p2 = wilcoxon_paired(b, a);
    CHECK(std::abs(p1 + p2 - 1.0) < 0.02);
    CHECK_THROWS_AS(wilcoxon_paired(std::vector<double>(5, 0.0), std::vector<double>(5, 1.0)),
                    invalid_input);
}
