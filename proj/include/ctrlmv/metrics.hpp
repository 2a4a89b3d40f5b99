#pragma once

#include <vector>

#include "ctrlmv/common.hpp"

namespace ctrlmv {

// 252 trading days per year, 21 per month; fixed conversion constants.
inline constexpr double kTradingDaysPerYear = 252.0;
inline constexpr int kTradingDaysPerMonth = 21;

// Per-strategy performance summary. Ratios are NaN when their denominator
// vanishes (undefined-metric sentinel); rt is kNotRecovered when the wealth
// path never regains its pre-trough peak.
struct MetricReport {
    double ann_return = 0.0;
    double ann_vol = 0.0;
    double sharpe = 0.0;
    double sortino = 0.0;
    double calmar = 0.0;
    double mdd = 0.0;
    double rt = 0.0;  // trading days, or kNotRecovered
};

// (x_end/x_start)^{252/n_days} - 1 and sqrt(252) * std of daily returns.
// A path that hits zero is a bankruptcy: annualized return is -100%.
std::pair<double, double> annualize(const std::vector<double>& daily_wealth);

// (mu_p - r) / denominator; throws metric_undefined on a zero denominator.
double sharpe_ratio(double ann_return, double ann_vol, double r);
double sortino_ratio(double ann_return, double downside_dev, double r);
double calmar_ratio(double ann_return, double mdd, double r);

// Annualized downside semi-deviation: deviations of daily returns below their
// own mean (not below zero).
double downside_deviation(const std::vector<double>& daily_wealth);

double max_drawdown(const std::vector<double>& wealth);
// Trading days from the (earliest) maximum-drawdown trough back to the
// pre-trough peak; kNotRecovered if never, 0 when there is no drawdown.
double recovery_time(const std::vector<double>& wealth);

MetricReport compute_metrics(const std::vector<double>& daily_wealth, double r);

// One-sided paired Wilcoxon signed-rank p-value (normal approximation with
// tie correction): small values are evidence that a > b. Returns 0.5 when all
// differences vanish.
double wilcoxon_paired(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace ctrlmv
