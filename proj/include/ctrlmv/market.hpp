#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "ctrlmv/common.hpp"
#include "ctrlmv/rng.hpp"

namespace ctrlmv {

// d-asset Black-Scholes market: annualized drift vector mu, volatility
// loadings sigma (d x m), risk-free rate r. Sigma = sigma * sigma^T is cached
// together with its lower Cholesky factor used to correlate shocks.
struct MarketModel {
    Vec mu;
    Mat sigma;
    double r = 0.0;
    Mat Sigma;      // sigma * sigma^T
    Mat chol;       // lower triangular L, L L^T = Sigma

    MarketModel(Vec mu_, Mat sigma_, double r_);

    // marginal vols + constant pairwise correlation, m = d drivers
    static MarketModel from_vols(const Vec& mu_, const Vec& vols, double corr, double r_);

    int dim() const { return static_cast<int>(mu.size()); }
    Vec excess() const { return mu.array() - r; }
};

struct SimConfig {
    double x0 = 1.0;
    double T = 1.0;
    double dt = 0.004;
    std::uint64_t seed = 0;
    // Truncate paths at zero wealth (the empirical-study convention). The
    // closed-form moment oracles describe the unconstrained process, so
    // oracle-comparison runs switch this off.
    bool absorb_at_zero = true;

    int steps() const { return static_cast<int>(std::floor(T / dt + 0.5)); }
    void validate() const;
};

// Wealth path sampled on the episode grid. `wealth` has one more entry than
// `actions`; entries after the first non-positive wealth are exactly 0 and the
// corresponding actions are zero vectors (absorption).
struct Trajectory {
    std::vector<double> times;
    std::vector<double> wealth;
    std::vector<Vec> actions;
};

// maps (t, x) to a portfolio, drawing any randomness from the stream
using PolicyFn = std::function<Vec(double t, double x, RandomStream& rng)>;

// Discrete self-financing update of discounted wealth given observed per-step
// asset log-returns: x + sum_i u_i (e^{lr_i} - 1) - (sum_i u_i)(e^{r dt} - 1).
double step_wealth(double x, const Vec& u, const Vec& asset_log_returns, double dt, double r);

// Exact log-normal per-step asset log-returns: (mu_i - Sigma_ii/2) dt + (sigma dW)_i.
void sample_log_returns(const MarketModel& model, double dt, RandomStream& rng, Vec& out, Vec& z_work);
Vec sample_log_returns(const MarketModel& model, double dt, RandomStream& rng);

// Simulates one episode under `policy`, absorbing wealth at zero. The stream
// for episode k of a run should be RandomStream(cfg.seed, k, sample).
Trajectory simulate_episode(const MarketModel& model, const SimConfig& cfg, const PolicyFn& policy,
                            RandomStream& rng);
Trajectory simulate_episode(const MarketModel& model, const SimConfig& cfg, const PolicyFn& policy);

// Closed-form mean E[x(t) - w] and second moment E[(x(t) - w)^2] of the wealth
// under the Gaussian policy N(-phi1 (x - w), phi2 e^{phi3 (T - t)}).
std::pair<double, double> exploratory_moments(const MarketModel& model, const Vec& phi1,
                                              const Mat& phi2, double phi3, double w, double x0,
                                              double t, double T);

}  // namespace ctrlmv
