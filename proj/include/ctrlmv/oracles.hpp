#pragma once

#include <utility>
#include <vector>

#include "ctrlmv/common.hpp"
#include "ctrlmv/market.hpp"

namespace ctrlmv {

// Closed-form optimum of the exploratory mean-variance problem on a known
// Black-Scholes market.
struct OracleSet {
    Vec phi1_star;     // Sigma^{-1} (mu - r)
    Mat phi2_star;     // (gamma / 2) Sigma^{-1}
    double w_star;     // (z e^k - x0) / (e^k - 1)
    double k;          // (mu - r)^T Sigma^{-1} (mu - r) T
    double sr_star;    // sqrt(e^k - 1)
    bool degenerate;   // k == 0 (mu == r): w_star undefined
};

OracleSet optimal_params(const MarketModel& model, double gamma, double z, double x0, double T);

// Q(phi1) = -2 (mu-r)^T phi1 + <Sigma, phi1 phi1^T> + phi3
double oracle_Q(const MarketModel& model, const Vec& phi1, double phi3);

// R(phi1, phi2, w) = 2 [ (x0-w)^2 e^{-phi3 T} (e^{QT}-1)/Q
//                        + <Sigma, phi2> (e^{QT}-1-QT)/Q^2 ]
double oracle_R(const MarketModel& model, const Vec& phi1, const Mat& phi2, double w, double phi3,
                double x0, double T);

// Conditional means of the episode update increments at fixed parameters:
// h1 = E[Z1(T)], h2 = E[Z2(T)], hw = E[x(T) - z].
Vec h1(const Vec& phi1, const Mat& phi2, double w, const MarketModel& model, double phi3,
       double x0, double T);
Mat h2(const Mat& phi2, const MarketModel& model, double gamma, double T);
double hw(const Vec& phi1, double w, const MarketModel& model, double x0, double z, double T);

// SR(phi1) = (e^{AT} - 1) / sqrt(e^{BT} - 1); returns 0 at phi1 = 0 by the
// documented convention.
double sharpe_closed_form(const Vec& phi1, const MarketModel& model, double T);

// Least-squares line through (log n, log value) for n >= burn_in.
std::pair<double, double> fit_loglog_slope(const std::vector<std::pair<double, double>>& series,
                                           long burn_in);

// Running sums of SR(phi1*) - SR(phi1_n) over an iterate history.
std::vector<double> cumulative_regret(const std::vector<Vec>& phi1_history, const OracleSet& oracle,
                                      const MarketModel& model, double T);

// Terminal variance of the exploratory wealth under covariance phi2 e^{phi3 (T-t)}
// (closed-form ODE solution; the variance-dominance checks run on this).
double exploratory_terminal_variance(const MarketModel& model, const Vec& phi1, const Mat& phi2,
                                     double phi3, double w, double x0, double T);

}  // namespace ctrlmv
