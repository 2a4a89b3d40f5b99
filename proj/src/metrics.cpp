#include "ctrlmv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ctrlmv {

namespace {

std::vector<double> daily_returns(const std::vector<double>& wealth) {
    std::vector<double> r;
    r.reserve(wealth.size() - 1);
    for (std::size_t i = 0; i + 1 < wealth.size(); ++i) {
        if (wealth[i] <= 0.0) break;  // absorbed; later entries are all zero
        r.push_back(wealth[i + 1] / wealth[i] - 1.0);
    }
    return r;
}

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

std::pair<double, double> annualize(const std::vector<double>& daily_wealth) {
    require(daily_wealth.size() >= 2, "annualize: need at least two points");
    const bool bankrupt =
        std::any_of(daily_wealth.begin(), daily_wealth.end(), [](double x) { return x <= 0.0; });
    const auto rets = daily_returns(daily_wealth);
    double vol = 0.0;
    if (rets.size() >= 2) {
        const double mean = std::accumulate(rets.begin(), rets.end(), 0.0) / rets.size();
        double ss = 0.0;
        for (double r : rets) ss += (r - mean) * (r - mean);
        vol = std::sqrt(ss / (rets.size() - 1)) * std::sqrt(kTradingDaysPerYear);
    }
    if (bankrupt) return {-1.0, vol};
    const double n_days = static_cast<double>(daily_wealth.size() - 1);
    const double gross = daily_wealth.back() / daily_wealth.front();
    const double ann_ret = std::pow(gross, kTradingDaysPerYear / n_days) - 1.0;
    return {ann_ret, vol};
}

double sharpe_ratio(double ann_return, double ann_vol, double r) {
    if (!(ann_vol > 0.0)) throw metric_undefined("sharpe: zero volatility");
    return (ann_return - r) / ann_vol;
}

double sortino_ratio(double ann_return, double downside_dev, double r) {
    if (!(downside_dev > 0.0)) throw metric_undefined("sortino: zero downside deviation");
    return (ann_return - r) / downside_dev;
}

double calmar_ratio(double ann_return, double mdd, double r) {
    if (!(mdd > 0.0)) throw metric_undefined("calmar: zero maximum drawdown");
    return (ann_return - r) / mdd;
}

double downside_deviation(const std::vector<double>& daily_wealth) {
    const auto rets = daily_returns(daily_wealth);
    if (rets.empty()) return 0.0;
    const double mean = std::accumulate(rets.begin(), rets.end(), 0.0) / rets.size();
    double ss = 0.0;
    for (double r : rets) {
        const double below = std::min(r - mean, 0.0);
        ss += below * below;
    }
    return std::sqrt(ss / rets.size()) * std::sqrt(kTradingDaysPerYear);
}

double max_drawdown(const std::vector<double>& wealth) {
    require(!wealth.empty(), "max_drawdown: empty series");
    double peak = wealth.front();
    double mdd = 0.0;
    for (double x : wealth) {
        peak = std::max(peak, x);
        if (peak > 0.0) mdd = std::max(mdd, (peak - x) / peak);
    }
    return mdd;
}

double recovery_time(const std::vector<double>& wealth) {
    require(!wealth.empty(), "recovery_time: empty series");
    const double mdd = max_drawdown(wealth);
    if (mdd == 0.0) return 0.0;
    // earliest trough attaining the maximum drawdown
    double peak = wealth.front();
    std::size_t trough = 0;
    double trough_peak = peak;
    for (std::size_t i = 0; i < wealth.size(); ++i) {
        peak = std::max(peak, wealth[i]);
        if (peak > 0.0 && (peak - wealth[i]) / peak >= mdd - 1e-15) {
            trough = i;
            trough_peak = peak;
            break;
        }
    }
    for (std::size_t j = trough + 1; j < wealth.size(); ++j)
        if (wealth[j] >= trough_peak) return static_cast<double>(j - trough);
    return kNotRecovered;
}

MetricReport compute_metrics(const std::vector<double>& daily_wealth, double r) {
    MetricReport m;
    auto [ann_ret, ann_vol] = annualize(daily_wealth);
    m.ann_return = ann_ret;
    m.ann_vol = ann_vol;
    m.mdd = max_drawdown(daily_wealth);
    m.rt = recovery_time(daily_wealth);
    const double dd = downside_deviation(daily_wealth);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    try {
        m.sharpe = sharpe_ratio(ann_ret, ann_vol, r);
    } catch (const metric_undefined&) {
        m.sharpe = nan;
    }
    try {
        m.sortino = sortino_ratio(ann_ret, dd, r);
    } catch (const metric_undefined&) {
        m.sortino = nan;
    }
    try {
        m.calmar = calmar_ratio(ann_ret, m.mdd, r);
    } catch (const metric_undefined&) {
        m.calmar = nan;
    }
    return m;
}

double wilcoxon_paired(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size(), "wilcoxon: length mismatch");
    require(a.size() >= 10, "wilcoxon: need at least 10 pairs");
    std::vector<double> d;
    d.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) d.push_back(a[i] - b[i]);
    if (d.empty()) return 0.5;  // symmetric null; also covers a == b exactly

    const std::size_t n = d.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });

    std::vector<double> rank(n);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(d[idx[j + 1]]) == std::abs(d[idx[i]])) ++j;
        const double avg_rank = 0.5 * (i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = avg_rank;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }

    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] > 0.0) w_plus += rank[i];

    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (!(var > 0.0)) return 0.5;
    const double cc = w_plus > mean ? -0.5 : (w_plus < mean ? 0.5 : 0.0);  // continuity correction
    const double zstat = (w_plus - mean + cc) / std::sqrt(var);
    return 1.0 - norm_cdf(zstat);
}

}  // namespace ctrlmv
