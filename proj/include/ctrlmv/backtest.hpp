#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctrlmv/common.hpp"
#include "ctrlmv/metrics.hpp"
#include "ctrlmv/online.hpp"

namespace ctrlmv {

struct Date {
    int y = 1970, m = 1, d = 1;

    auto operator<=>(const Date&) const = default;
    int month_key() const { return y * 12 + (m - 1); }
    std::string iso() const;
    static Date parse(const std::string& s);  // ISO-8601 YYYY-MM-DD
    int weekday() const;                      // 0 = Sunday
    Date next_day() const;
};

// Dated panel of per-asset simple net returns plus optional market, factor
// and market-cap columns.
struct ReturnPanel {
    std::vector<Date> dates;
    std::vector<std::string> tickers;
    Mat returns;                 // dates x assets
    std::optional<Vec> market;   // MKT column
    std::optional<Mat> factors;  // MKTRF, SMB, HML (dates x 3)
    std::optional<Mat> caps;     // CAP_<ticker> columns, dates x assets

    int days() const { return static_cast<int>(dates.size()); }
    int assets() const { return static_cast<int>(tickers.size()); }
    void validate() const;
    ReturnPanel subset(const std::vector<int>& columns) const;
};

ReturnPanel load_panel(const std::string& path);
void save_panel(const std::string& path, const ReturnPanel& panel);

// Contiguous index ranges [begin, end) grouped by calendar month.
std::vector<std::pair<int, int>> month_boundaries(const std::vector<Date>& dates);

struct BacktestConfig {
    int window_months = 120;
    double z = 1.15;        // gross annual wealth target
    double mu_star = -1.0;  // monthly target; < 0 derives z^{1/12} - 1
    double r = 0.0;
    double drmv_delta = -1.0;  // < 0 selects the per-window heuristic
    std::optional<Date> test_start;  // default: first month with a full window
    std::vector<std::string> strategies{"ew"};  // may include "market" and "ctrl"

    // CTRL online learner settings
    OnlineConfig online;
    Schedule online_schedule;
    ValueParams ctrl_value;
    PolicyParams ctrl_policy;  // phi1/phi2 sized on first use when empty
    double ctrl_phi3 = 1.0;    // phi3 = theta3 used when sizing default params
    bool pretrain = false;
    long pretrain_iterations = 2000;

    // replication management
    int replications = 1;
    int subset_size = 0;  // 0 = all assets
    std::uint64_t seed = 0;

    double monthly_target() const;
};

struct WeightsLogRow {
    Date date;
    std::string strategy;
    std::string ticker;
    double weight;
};

// CTRL actor state recorded at each rebalance date
struct CtrlSnapshot {
    Date date;
    Vec phi1;
    double w;
};

struct BacktestRun {
    std::vector<Date> dates;  // test days
    std::map<std::string, std::vector<double>> wealth;
    std::map<std::string, MetricReport> metrics;
    std::vector<WeightsLogRow> weights_log;
    std::vector<CtrlSnapshot> ctrl_history;
    long ctrl_fallbacks = 0;
};

BacktestRun run_backtest(const ReturnPanel& panel, const BacktestConfig& cfg);

struct ReplicateSummary {
    std::vector<std::string> strategies;
    // per strategy, per replication
    std::map<std::string, std::vector<MetricReport>> reports;
    std::map<std::string, MetricReport> mean;
    std::map<std::string, MetricReport> stddev;
};

// Seeded subset draws + repeated backtests; recovery times that never happen
// are substituted with the highest observed RT across the other replications
// of the same strategy at aggregation.
ReplicateSummary replicate(const ReturnPanel& panel, const BacktestConfig& cfg);

// Offline pre-training of the baseline algorithm on historical daily returns:
// each iteration draws `batch` random contiguous K-day windows and applies the
// projected episodic updates at constant learning rates.
std::pair<ValueParams, PolicyParams> pretrain_on_returns(const Mat& daily_returns, int K,
                                                         const TrainConfig& cfg,
                                                         const Schedule& sched,
                                                         const ValueParams& init_v,
                                                         const PolicyParams& init_p,
                                                         std::uint64_t seed);

struct SyntheticPanelConfig {
    int n_assets = 10;
    int years = 5;
    Date start{2000, 1, 3};
    Vec mu;    // defaults to 0.06 + 0.01 i when empty
    Vec vols;  // defaults to 0.18 + 0.01 i when empty
    double corr = 0.3;
    double rf = 0.0;
    std::uint64_t seed = 0;
    bool with_market = true;
    bool with_factors = true;
    bool with_caps = true;
    int regime_shift_year = -1;  // index of the year a drift shift kicks in
    double regime_mu_scale = 1.0;
};

// Business-day GBM panel (exact log-normal steps) with a cap-weighted market
// column and synthetic factor columns.
ReturnPanel make_synthetic_panel(const SyntheticPanelConfig& cfg);

}  // namespace ctrlmv
