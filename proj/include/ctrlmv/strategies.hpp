#pragma once

#include <optional>
#include <string>

#include "ctrlmv/common.hpp"

namespace ctrlmv {

// Sample mean and covariance over a rolling window of M periodic returns.
struct MomentEstimate {
    Vec mu_hat;
    Mat sigma_hat;
    int window = 0;
};

// rows = periods (oldest first), cols = assets
MomentEstimate estimate_sample_moments(const Mat& window);

// Explicit solution of min w'Sigma w s.t. mu'w = mu_star, 1'w = 1.
Vec solve_mv(const Vec& mu, const Mat& Sigma, double mu_star);

// Sigma^{-1} 1 / (1' Sigma^{-1} 1)
Vec solve_min_variance(const Mat& Sigma);

// James-Stein shrinkage of the mean toward the minimum-variance-implied
// common mean; requires window > d + 2.
Vec shrink_mean_js(const MomentEstimate& moments);

// Ledoit-Wolf shrinkage toward the single-index covariance target; blend
// weights are clamped to [0, 1] entrywise.
Mat shrink_cov_lw(const Mat& window, const Vec& market_returns);

// CAPM-implied means: gamma_hat * Sigma_all * cap_weights with
// gamma_hat = market_mean / market_var.
Vec infer_mu_bl(const Mat& Sigma_all, const Vec& cap_weights, double market_mean,
                double market_var);

// Three-factor regression moments: mu = intercepts, Sigma = B Sigma_F B' + D.
std::pair<Vec, Mat> fit_ff_moments(const Mat& window, const Mat& factors);

// Equal-risk-contribution weights by damped multiplicative fixed point.
Vec solve_risk_parity(const Mat& Sigma);

// Distributionally robust MV: min sqrt(w'Sigma w) + sqrt(delta) |w|
//                             s.t. mu'w - sqrt(delta) |w| >= mu_star, 1'w = 1.
Vec solve_drmv(const Vec& mu_hat, const Mat& Sigma_hat, double mu_star, double delta);

// Plug-in continuous-time MV dollar policy normalized to full risky
// allocation; equal weights when the action degenerates at x = w_star.
Vec ctmv_weights(const Vec& mu_hat, const Mat& Sigma_hat, double r, double x, double x0, double z,
                 double T);

// Reversal/momentum predictive regression with sign clamps; returns the
// point prediction of next-period returns.
Vec pmv_predict(const Mat& window, const Vec& rev, const Vec& mom);

struct StrategyRequest {
    std::string id;                      // ew mv min_v js lw bl ff rp drmv ctmv pmv
    Mat window;                          // rolling periodic returns (rows = periods)
    std::optional<Vec> market_returns;   // aligned market series (lw)
    std::optional<Mat> factors;          // aligned 3-column factor series (ff)
    std::optional<Vec> cap_weights;      // market-cap weights (bl)
    std::optional<double> market_mean;   // market sample mean (bl)
    std::optional<double> market_var;    // market sample variance (bl)
    double mu_star = 0.0117;             // periodic target return (mv family)
    double z = 1.15;                     // annual wealth target (ctmv)
    double delta = -1.0;                 // drmv radius; < 0 selects the default heuristic
    double T = 1.0;                      // ctmv horizon
    double r = 0.0;
    double x = 1.0;                      // current wealth (ctmv)
    double x0 = 1.0;
    double periods_per_year = 12.0;      // annualizes window moments for ctmv
};

// Dispatch over the strategy table; every result sums to 1.
Vec allocate(const StrategyRequest& req);

// default drmv radius heuristic: trace(Sigma_hat) / (d * M)
double default_drmv_delta(const Mat& sigma_hat, int window);

}  // namespace ctrlmv
