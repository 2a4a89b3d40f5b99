#pragma once

// shared fixtures for the test suites

#include <cmath>
#include <vector>

#include "ctrlmv/market.hpp"
#include "ctrlmv/oracles.hpp"

namespace testing_fixtures {

using namespace ctrlmv;

// the two-stock simulation-study market: mu = (0.2, 0.3), vols 0.3/0.4,
// correlation 0.1, r = 0.02
inline MarketModel two_stock_market() {
    Vec mu(2);
    mu << 0.2, 0.3;
    Vec vols(2);
    vols << 0.3, 0.4;
    return MarketModel::from_vols(mu, vols, 0.1, 0.02);
}

struct RunningStats {
    double n = 0, mean = 0, m2 = 0;
    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    double var() const { return m2 / (n - 1); }
    double sd() const { return std::sqrt(var()); }
    double se() const { return sd() / std::sqrt(n); }
};

}  // namespace testing_fixtures
