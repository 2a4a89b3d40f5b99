#include "ctrlmv/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>

#include "ctrlmv/strategies.hpp"
#include "episode_kernel.hpp"

namespace ctrlmv {

namespace {

// Howard Hinnant's civil date algorithms
long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

Date civil_from_days(long z) {
    z += 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long y = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

bool is_reserved_column(const std::string& name) {
    return name == "MKT" || name == "SMB" || name == "HML" || name == "MKTRF" ||
           name.rfind("CAP_", 0) == 0;
}

}  // namespace

std::string Date::iso() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

Date Date::parse(const std::string& s) {
    Date out;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-')
        throw data_error("date: expected YYYY-MM-DD, got '" + s + "'");
    try {
        out.y = std::stoi(s.substr(0, 4));
        out.m = std::stoi(s.substr(5, 2));
        out.d = std::stoi(s.substr(8, 2));
    } catch (const std::exception&) {
        throw data_error("date: cannot parse '" + s + "'");
    }
    if (out.m < 1 || out.m > 12 || out.d < 1 || out.d > 31)
        throw data_error("date: out of range '" + s + "'");
    return out;
}

int Date::weekday() const { return static_cast<int>((days_from_civil(y, m, d) % 7 + 11) % 7); }

Date Date::next_day() const { return civil_from_days(days_from_civil(y, m, d) + 1); }

void ReturnPanel::validate() const {
    require(!dates.empty(), "panel: no rows");
    require(returns.rows() == days() && returns.cols() == assets(), "panel: shape mismatch");
    for (int i = 1; i < days(); ++i)
        if (!(dates[i - 1] < dates[i]))
            throw data_error("panel: dates not strictly increasing at row " + std::to_string(i + 1));
    for (int i = 0; i < days(); ++i)
        for (int j = 0; j < assets(); ++j) {
            if (!std::isfinite(returns(i, j)))
                throw data_error("panel: missing cell at row " + std::to_string(i + 1) +
                                 " ticker " + tickers[j]);
            if (returns(i, j) <= -1.0)
                throw data_error("panel: return <= -100% at row " + std::to_string(i + 1) +
                                 " ticker " + tickers[j]);
        }
    if (market) require(market->size() == days(), "panel: market column length mismatch");
    if (factors) require(factors->rows() == days() && factors->cols() == 3,
                         "panel: factor block shape mismatch");
    if (caps) require(caps->rows() == days() && caps->cols() == assets(),
                      "panel: cap block shape mismatch");
}

ReturnPanel ReturnPanel::subset(const std::vector<int>& columns) const {
    ReturnPanel out;
    out.dates = dates;
    out.market = market;
    out.factors = factors;
    out.returns.resize(days(), static_cast<int>(columns.size()));
    if (caps) out.caps = Mat(days(), static_cast<int>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        require(columns[j] >= 0 && columns[j] < assets(), "panel: subset column out of range");
        out.tickers.push_back(tickers[columns[j]]);
        out.returns.col(static_cast<int>(j)) = returns.col(columns[j]);
        if (caps) out.caps->col(static_cast<int>(j)) = caps->col(columns[j]);
    }
    return out;
}

ReturnPanel load_panel(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("load_panel: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw data_error("load_panel: empty file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    require(!header.empty() && header[0] == "date", "load_panel: first column must be 'date'");

    std::vector<int> ticker_cols, cap_cols;
    std::vector<std::string> cap_names;
    int mkt_col = -1, smb_col = -1, hml_col = -1, mktrf_col = -1;
    ReturnPanel p;
    for (int c = 1; c < static_cast<int>(header.size()); ++c) {
        const std::string& name = header[c];
        if (name == "MKT")
            mkt_col = c;
        else if (name == "SMB")
            smb_col = c;
        else if (name == "HML")
            hml_col = c;
        else if (name == "MKTRF")
            mktrf_col = c;
        else if (name.rfind("CAP_", 0) == 0) {
            cap_cols.push_back(c);
            cap_names.push_back(name.substr(4));
        } else {
            ticker_cols.push_back(c);
            p.tickers.push_back(name);
        }
    }
    require(!ticker_cols.empty(), "load_panel: no ticker columns");

    std::vector<std::vector<double>> rows;
    std::vector<Date> dates;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw data_error("load_panel: row " + std::to_string(lineno) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(header.size()));
        dates.push_back(Date::parse(fields[0]));
        std::vector<double> row(header.size() - 1);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            if (fields[c].empty())
                throw data_error("load_panel: missing cell at row " + std::to_string(lineno) +
                                 " column " + header[c]);
            try {
                std::size_t pos = 0;
                row[c - 1] = std::stod(fields[c], &pos);
                if (pos != fields[c].size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw data_error("load_panel: cannot parse '" + fields[c] + "' at row " +
                                 std::to_string(lineno) + " column " + header[c]);
            }
        }
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), "load_panel: no data rows");

    const int n = static_cast<int>(rows.size());
    const int d = static_cast<int>(ticker_cols.size());
    p.dates = std::move(dates);
    p.returns.resize(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) p.returns(i, j) = rows[i][ticker_cols[j] - 1];
    if (mkt_col >= 0) {
        Vec m(n);
        for (int i = 0; i < n; ++i) m[i] = rows[i][mkt_col - 1];
        p.market = std::move(m);
    }
    if (mktrf_col >= 0 && smb_col >= 0 && hml_col >= 0) {
        Mat f(n, 3);
        for (int i = 0; i < n; ++i) {
            f(i, 0) = rows[i][mktrf_col - 1];
            f(i, 1) = rows[i][smb_col - 1];
            f(i, 2) = rows[i][hml_col - 1];
        }
        p.factors = std::move(f);
    }
    if (!cap_cols.empty()) {
        require(cap_cols.size() == static_cast<std::size_t>(d),
                "load_panel: need one CAP_ column per ticker");
        Mat cp(n, d);
        for (int j = 0; j < d; ++j) {
            const auto it = std::find(cap_names.begin(), cap_names.end(), p.tickers[j]);
            if (it == cap_names.end())
                throw data_error("load_panel: missing CAP_ column for ticker " + p.tickers[j]);
            const int c = cap_cols[it - cap_names.begin()];
            for (int i = 0; i < n; ++i) cp(i, j) = rows[i][c - 1];
        }
        p.caps = std::move(cp);
    }
    p.validate();
    return p;
}

void save_panel(const std::string& path, const ReturnPanel& panel) {
    panel.validate();
    std::ofstream out(path);
    if (!out) throw data_error("save_panel: cannot open " + path);
    out.precision(17);
    out << "date";
    for (const auto& t : panel.tickers) out << ',' << t;
    if (panel.market) out << ",MKT";
    if (panel.factors) out << ",MKTRF,SMB,HML";
    if (panel.caps)
        for (const auto& t : panel.tickers) out << ",CAP_" << t;
    out << '\n';
    for (int i = 0; i < panel.days(); ++i) {
        out << panel.dates[i].iso();
        for (int j = 0; j < panel.assets(); ++j) out << ',' << panel.returns(i, j);
        if (panel.market) out << ',' << (*panel.market)[i];
        if (panel.factors)
            out << ',' << (*panel.factors)(i, 0) << ',' << (*panel.factors)(i, 1) << ','
                << (*panel.factors)(i, 2);
        if (panel.caps)
            for (int j = 0; j < panel.assets(); ++j) out << ',' << (*panel.caps)(i, j);
        out << '\n';
    }
}

std::vector<std::pair<int, int>> month_boundaries(const std::vector<Date>& dates) {
    require(!dates.empty(), "month_boundaries: empty dates");
    std::vector<std::pair<int, int>> out;
    int begin = 0;
    for (int i = 1; i <= static_cast<int>(dates.size()); ++i) {
        if (i == static_cast<int>(dates.size()) ||
            dates[i].month_key() != dates[begin].month_key()) {
            out.emplace_back(begin, i);
            begin = i;
        }
    }
    return out;
}

double BacktestConfig::monthly_target() const {
    if (mu_star >= 0.0) return mu_star;
    require(z > 0.0, "backtest: z must be positive");
    return std::pow(z, 1.0 / 12.0) - 1.0;
}

namespace {

// compound a column over a day range into one periodic return
double compound(const Vec& series, int begin, int end) {
    double g = 1.0;
    for (int i = begin; i < end; ++i) g *= 1.0 + series[i];
    return g - 1.0;
}

struct Book {
    double x = 1.0;
    Vec holdings;
    bool bankrupt = false;

    void rebalance(const Vec& weights) {
        if (bankrupt) return;
        holdings = weights * x;
    }
    void daily(const Vec& r, double rf_step) {
        if (bankrupt) return;
        x = x + holdings.dot(r) - holdings.sum() * rf_step;
        holdings = holdings.cwiseProduct((1.0 + r.array()).matrix()) / (1.0 + rf_step);
        if (x <= 0.0) {
            x = 0.0;
            bankrupt = true;
            holdings.setZero();
        }
    }
};

}  // namespace

std::pair<ValueParams, PolicyParams> pretrain_on_returns(const Mat& daily_returns, int K,
                                                         const TrainConfig& cfg,
                                                         const Schedule& sched,
                                                         const ValueParams& init_v,
                                                         const PolicyParams& init_p,
                                                         std::uint64_t seed) {
    cfg.validate();
    init_p.validate();
    const int d = static_cast<int>(daily_returns.cols());
    require(init_p.dim() == d, "pretrain: phi1 dimension mismatch");
    require(daily_returns.rows() >= K, "pretrain: not enough history for one episode window");
    const long n_starts = daily_returns.rows() - K + 1;

    const detail::EpisodeGrid grid(K, cfg.dt, cfg.T, init_p.phi3);
    detail::EpisodeWorkspace ws(d);
    ValueParams v = init_v;
    PolicyParams p = init_p;

    Eigen::Vector2d g_theta;
    Vec z1(d);
    Mat z2(d, d);
    double gap_acc = 0.0;
    int gap_count = 0;

    for (long n = 1; n <= cfg.episodes; ++n) {
        Eigen::LLT<Mat> llt(p.phi2);
        if (llt.info() != Eigen::Success)
            throw numerical_error("pretrain: phi2 lost positive definiteness at iteration " +
                                  std::to_string(n));
        const Mat chol = llt.matrixL();
        const Mat phi2_inv = llt.solve(Mat::Identity(d, d));
        double logdet = 0.0;
        for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(chol(i, i));

        g_theta.setZero();
        z1.setZero();
        z2.setZero();
        double gap = 0.0;
        for (int j = 0; j < cfg.batch_size; ++j) {
            RandomStream rng(seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(j));
            const long start = static_cast<long>(rng.uniform_below(n_starts));
            const auto row_step = [&](int k, RandomStream&, Vec& out) {
                out = daily_returns.row(start + k);
            };
            const double xT = detail::run_episode_kernel(d, grid, cfg.x0, 0.0, v, p, chol,
                                                         phi2_inv, logdet, rng, ws, row_step,
                                                         g_theta, z1, z2, cfg.absorb_at_zero);
            gap += xT - cfg.z;
        }
        const double inv_b = 1.0 / cfg.batch_size;
        g_theta *= inv_b;
        z1 *= inv_b;
        z2 *= inv_b;
        gap *= inv_b;

        const double a = sched.a(n);
        v.theta1 = project_box(v.theta1 + a * g_theta[0], sched.c_theta1);
        v.theta2 = project_box(v.theta2 + a * g_theta[1], sched.c_theta2);
        p.phi1 = project_box(Vec(p.phi1 - a * z1), sched.c1(n));
        p.phi2 = project_psd_band(p.phi2 + a * z2, sched.phi2_floor(n), sched.c2(n));
        gap_acc += gap;
        ++gap_count;
        if (n % cfg.multiplier_period == 0) {
            p.w = project_box(p.w - sched.a_w(n) * (gap_acc / gap_count), sched.cw(n));
            gap_acc = 0.0;
            gap_count = 0;
        }
        if (!std::isfinite(v.theta1) || !std::isfinite(p.w) || !p.phi1.allFinite() ||
            !p.phi2.allFinite())
            throw numerical_error("pretrain: numerical overflow at iteration " + std::to_string(n));
    }
    return {v, p};
}

BacktestRun run_backtest(const ReturnPanel& panel, const BacktestConfig& cfg) {
    panel.validate();
    const int d = panel.assets();
    const auto months = month_boundaries(panel.dates);
    const int n_months = static_cast<int>(months.size());
    require(cfg.window_months >= 2, "backtest: window must be at least two months");

    int first_test_month = cfg.window_months;
    if (cfg.test_start) {
        first_test_month = -1;
        for (int mi = 0; mi < n_months; ++mi)
            if (panel.dates[months[mi].first] >= *cfg.test_start) {
                first_test_month = mi;
                break;
            }
        require(first_test_month >= 0, "backtest: test start after the panel ends");
    }
    require(first_test_month >= cfg.window_months,
            "backtest: insufficient history before the test start");
    require(first_test_month < n_months, "backtest: no test months");

    // monthly compounded panels
    Mat monthly(n_months, d);
    Vec monthly_mkt;
    Mat monthly_fct;
    for (int mi = 0; mi < n_months; ++mi)
        for (int j = 0; j < d; ++j)
            monthly(mi, j) = compound(panel.returns.col(j), months[mi].first, months[mi].second);
    if (panel.market) {
        monthly_mkt.resize(n_months);
        for (int mi = 0; mi < n_months; ++mi)
            monthly_mkt[mi] = compound(*panel.market, months[mi].first, months[mi].second);
    }
    if (panel.factors) {
        monthly_fct.resize(n_months, 3);
        for (int c = 0; c < 3; ++c)
            for (int mi = 0; mi < n_months; ++mi)
                monthly_fct(mi, c) = compound(panel.factors->col(c), months[mi].first,
                                              months[mi].second);
    }

    const double mu_star = cfg.monthly_target();
    const double rf_step = std::expm1(cfg.r / kTradingDaysPerYear);
    const int t0 = months[first_test_month].first;

    // CTRL online learner
    const bool want_ctrl =
        std::find(cfg.strategies.begin(), cfg.strategies.end(), "ctrl") != cfg.strategies.end();
    std::unique_ptr<OnlineTrader> trader;
    if (want_ctrl) {
        ValueParams v = cfg.ctrl_value;
        PolicyParams p = cfg.ctrl_policy;
        if (p.phi1.size() == 0) {  // B.3 defaults: everything initialized to 1
            p.phi1 = Vec::Ones(d);
            p.phi2 = Mat::Identity(d, d);
            p.phi3 = cfg.ctrl_phi3;
            p.w = 1.0;
            v = ValueParams{1.0, 1.0, cfg.ctrl_phi3};
        }
        p.gamma = cfg.online.gamma;
        if (cfg.pretrain) {
            TrainConfig pre;
            pre.z = cfg.online.z;
            pre.gamma = cfg.online.gamma;
            pre.episodes = cfg.pretrain_iterations;
            pre.dt = cfg.online.dt;
            pre.T = cfg.online.T;
            pre.batch_size = 16;
            pre.multiplier_period = 10;
            Schedule pre_sched;
            pre_sched.constant_rates = true;
            pre_sched.alpha = 0.005;
            pre_sched.alpha_w = 0.05;
            pre_sched.c1_scale = cfg.online_schedule.c1_scale;
            pre_sched.c2_scale = cfg.online_schedule.c2_scale;
            pre_sched.cw_scale = cfg.online_schedule.cw_scale;
            pre_sched.b_scale = cfg.online_schedule.b_scale;
            const int K = static_cast<int>(std::floor(pre.T / pre.dt + 0.5));
            require(t0 >= K, "backtest: pre-training window shorter than one episode");
            const Mat history = panel.returns.topRows(t0);
            std::tie(v, p) = pretrain_on_returns(history, K, pre, pre_sched, v, p,
                                                 mix_seed(cfg.seed, 0xC0FFEE));
        }
        OnlineConfig oc = cfg.online;
        oc.episodes = 1;  // episodes roll internally
        const int K = static_cast<int>(std::floor(oc.T / oc.dt + 0.5));
        trader = std::make_unique<OnlineTrader>(d, K, oc, cfg.online_schedule, v, p,
                                                mix_seed(cfg.seed, 0xAB1E), 0);
    }

    BacktestRun run;
    std::map<std::string, Book> books;
    for (const auto& s : cfg.strategies) {
        if (s == "market")
            require(panel.market.has_value(), "backtest: market strategy needs an MKT column");
        run.wealth[s] = {1.0};
        books[s] = Book{1.0, Vec::Zero(d), false};
    }
    long mv_fallbacks = 0;

    for (int mi = first_test_month; mi < n_months; ++mi) {
        const auto [b, e] = months[mi];
        const int w0 = mi - cfg.window_months;
        const Mat window = monthly.middleRows(w0, cfg.window_months);
        const Date rebalance_date = panel.dates[b];

        // weights from data strictly before this month
        std::map<std::string, Vec> weights;
        for (const auto& s : cfg.strategies) {
            if (s == "market") continue;
            Vec w;
            if (s == "ctrl") {
                w = trader->target_weights();
                run.ctrl_history.push_back({rebalance_date, trader->policy().phi1,
                                            trader->policy().w});
            } else {
                StrategyRequest req;
                req.id = s;
                req.window = window;
                req.mu_star = mu_star;
                req.z = cfg.z;
                req.r = 0.0;  // window returns are treated as excess (r = 0 default)
                req.delta = cfg.drmv_delta;
                if (monthly_mkt.size() > 0) {
                    req.market_returns = Vec(monthly_mkt.segment(w0, cfg.window_months));
                    const Vec& m = *req.market_returns;
                    req.market_mean = m.mean();
                    req.market_var =
                        (m.array() - m.mean()).square().sum() / (cfg.window_months - 1);
                }
                if (monthly_fct.size() > 0)
                    req.factors = Mat(monthly_fct.middleRows(w0, cfg.window_months));
                if (panel.caps) {
                    Vec cw = panel.caps->row(b - 1);  // most recent caps before the month
                    req.cap_weights = Vec(cw / cw.sum());
                }
                try {
                    w = allocate(req);
                } catch (const std::runtime_error&) {
                    // degenerate estimation window: stay invested, equal weights
                    w = Vec::Constant(d, 1.0 / d);
                    ++mv_fallbacks;
                }
            }
            weights[s] = w;
            books[s].rebalance(w);
            for (int j = 0; j < d; ++j)
                run.weights_log.push_back({rebalance_date, s, panel.tickers[j], w[j]});
        }

        for (int t = b; t < e; ++t) {
            const Vec r = panel.returns.row(t);
            for (const auto& s : cfg.strategies) {
                if (s == "market") {
                    auto& wl = run.wealth[s];
                    const double prev = wl.back();
                    wl.push_back(prev <= 0.0 ? 0.0 : prev * (1.0 + (*panel.market)[t]));
                    continue;
                }
                books[s].daily(r, rf_step);
                run.wealth[s].push_back(books[s].x);
            }
            if (trader) trader->step(r, rf_step, t == b);
            run.dates.push_back(panel.dates[t]);
        }
    }

    for (const auto& s : cfg.strategies) run.metrics[s] = compute_metrics(run.wealth[s], cfg.r);
    run.ctrl_fallbacks = (trader ? trader->fallbacks() : 0) + mv_fallbacks;
    return run;
}

namespace {

MetricReport nan_report() {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return MetricReport{nan, nan, nan, nan, nan, nan, nan};
}

void accumulate_stats(const std::vector<double>& xs, double& mean, double& sd) {
    std::vector<double> v;
    for (double x : xs)
        if (std::isfinite(x)) v.push_back(x);
    if (v.empty()) {
        mean = sd = std::numeric_limits<double>::quiet_NaN();
        return;
    }
    mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(ss / (v.size() - 1)) : 0.0;
}

}  // namespace

ReplicateSummary replicate(const ReturnPanel& panel, const BacktestConfig& cfg) {
    panel.validate();
    require(cfg.replications >= 1, "replicate: need at least one replication");
    const int d = panel.assets();
    const int pick = cfg.subset_size > 0 ? cfg.subset_size : d;
    require(pick <= d, "replicate: subset size exceeds the universe");

    ReplicateSummary sum;
    sum.strategies = cfg.strategies;
    for (const auto& s : cfg.strategies) sum.reports[s] = {};

    for (int rep = 0; rep < cfg.replications; ++rep) {
        std::vector<int> cols(d);
        std::iota(cols.begin(), cols.end(), 0);
        if (pick < d) {
            RandomStream rng(cfg.seed, static_cast<std::uint64_t>(rep), 0x5E1Ec7);
            for (int i = 0; i < pick; ++i) {
                const int j = i + static_cast<int>(rng.uniform_below(d - i));
                std::swap(cols[i], cols[j]);
            }
            cols.resize(pick);
            std::sort(cols.begin(), cols.end());
        }
        BacktestConfig rc = cfg;
        rc.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(rep));
        const BacktestRun run = run_backtest(pick < d ? panel.subset(cols) : panel, rc);
        for (const auto& s : cfg.strategies) sum.reports[s].push_back(run.metrics.at(s));
    }

    for (const auto& s : cfg.strategies) {
        const auto& reps = sum.reports[s];
        // recovery-time substitution: unrecovered paths take the highest
        // observed RT among the other replications
        double max_rt = kNotRecovered;
        for (const auto& m : reps)
            if (m.rt >= 0.0) max_rt = std::max(max_rt, m.rt);
        std::vector<double> ret, vol, sharpe, sortino, calmar, mdd, rt;
        for (const auto& m : reps) {
            ret.push_back(m.ann_return);
            vol.push_back(m.ann_vol);
            sharpe.push_back(m.sharpe);
            sortino.push_back(m.sortino);
            calmar.push_back(m.calmar);
            mdd.push_back(m.mdd);
            if (m.rt >= 0.0)
                rt.push_back(m.rt);
            else if (max_rt >= 0.0)
                rt.push_back(max_rt);
            else
                rt.push_back(std::numeric_limits<double>::quiet_NaN());
        }
        MetricReport mean = nan_report(), sd = nan_report();
        accumulate_stats(ret, mean.ann_return, sd.ann_return);
        accumulate_stats(vol, mean.ann_vol, sd.ann_vol);
        accumulate_stats(sharpe, mean.sharpe, sd.sharpe);
        accumulate_stats(sortino, mean.sortino, sd.sortino);
        accumulate_stats(calmar, mean.calmar, sd.calmar);
        accumulate_stats(mdd, mean.mdd, sd.mdd);
        accumulate_stats(rt, mean.rt, sd.rt);
        sum.mean[s] = mean;
        sum.stddev[s] = sd;
    }
    return sum;
}

ReturnPanel make_synthetic_panel(const SyntheticPanelConfig& cfg) {
    require(cfg.n_assets >= 1 && cfg.years >= 1, "synthetic panel: bad dimensions");
    const int d = cfg.n_assets;
    Vec mu = cfg.mu.size() == d ? cfg.mu : Vec::NullaryExpr(d, [](Eigen::Index i) {
        return 0.06 + 0.01 * static_cast<double>(i);
    });
    Vec vols = cfg.vols.size() == d ? cfg.vols : Vec::NullaryExpr(d, [](Eigen::Index i) {
        return 0.18 + 0.01 * static_cast<double>(i);
    });
    const MarketModel model = MarketModel::from_vols(mu, vols, cfg.corr, cfg.rf);
    const double dt = 1.0 / kTradingDaysPerYear;
    const int n_days = cfg.years * static_cast<int>(kTradingDaysPerYear);

    ReturnPanel p;
    p.tickers.reserve(d);
    for (int j = 0; j < d; ++j) p.tickers.push_back("A" + std::to_string(j));
    p.returns.resize(n_days, d);
    p.dates.reserve(n_days);

    RandomStream rng(cfg.seed, 0xFEEDu, 0);
    Vec caps(d);
    for (int j = 0; j < d; ++j) caps[j] = 0.5 + rng.uniform();
    caps /= caps.sum();

    std::unique_ptr<MarketModel> shifted;
    if (cfg.regime_shift_year >= 0)
        shifted = std::make_unique<MarketModel>(
            MarketModel::from_vols(mu * cfg.regime_mu_scale, vols, cfg.corr, cfg.rf));

    Date day = cfg.start;
    while (day.weekday() == 0 || day.weekday() == 6) day = day.next_day();
    Vec lr(d), z(d);
    for (int i = 0; i < n_days; ++i) {
        p.dates.push_back(day);
        do {
            day = day.next_day();
        } while (day.weekday() == 0 || day.weekday() == 6);

        const int year = i / static_cast<int>(kTradingDaysPerYear);
        const MarketModel& m =
            (shifted && year >= cfg.regime_shift_year) ? *shifted : model;
        sample_log_returns(m, dt, rng, lr, z);
        p.returns.row(i) = (lr.array().exp() - 1.0).matrix().transpose();
    }

    if (cfg.with_market) {
        Vec mkt(n_days);
        for (int i = 0; i < n_days; ++i) mkt[i] = p.returns.row(i).dot(caps);
        p.market = std::move(mkt);
    }
    if (cfg.with_factors) {
        Mat f(n_days, 3);
        for (int i = 0; i < n_days; ++i) {
            f(i, 0) = p.market ? (*p.market)[i] - cfg.rf * dt : rng.normal() * 0.01;
            f(i, 1) = rng.normal() * 0.004;
            f(i, 2) = rng.normal() * 0.004;
        }
        p.factors = std::move(f);
    }
    if (cfg.with_caps) {
        Mat cp(n_days, d);
        for (int i = 0; i < n_days; ++i) cp.row(i) = caps.transpose();
        p.caps = std::move(cp);
    }
    p.validate();
    return p;
}

}  // namespace ctrlmv
