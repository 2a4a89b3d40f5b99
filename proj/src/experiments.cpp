#include "ctrlmv/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "ctrlmv/metrics.hpp"
#include "ctrlmv/online.hpp"
#include "episode_kernel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ctrlmv {

namespace {

// Tracks files written by a command; anything already written is removed if
// the command aborts before commit().
class OutputSet {
  public:
    explicit OutputSet(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

    ~OutputSet() {
        if (!committed_)
            for (const auto& f : files_) {
                std::error_code ec;
                fs::remove(fs::path(dir_) / f, ec);
            }
    }

    std::ofstream open(const std::string& name) {
        files_.push_back(name);
        std::ofstream out(fs::path(dir_) / name);
        if (!out) throw data_error("cannot open output file " + name);
        out.precision(12);
        return out;
    }

    // register a file that a helper writes on its own
    std::string track(const std::string& name) {
        files_.push_back(name);
        return (fs::path(dir_) / name).string();
    }
    const std::vector<std::string>& files() const { return files_; }

    void commit(const json& manifest) {
        auto out = open("run_manifest.json");
        out << manifest.dump(2) << '\n';
        committed_ = true;
    }

  private:
    std::string dir_;
    std::vector<std::string> files_;
    bool committed_ = false;
};

json config_echo(const ExperimentConfig& c) {
    return json{{"command", c.command},
                {"seed", c.seed},
                {"episodes", c.episodes},
                {"replications", c.replications},
                {"out", c.out_dir},
                {"workers", c.workers},
                {"mu", c.mu},
                {"vols", c.vols},
                {"corr", c.corr},
                {"r", c.r},
                {"x0", c.x0},
                {"T", c.T},
                {"dt", c.dt},
                {"z", c.z},
                {"gamma", c.gamma},
                {"phi3", c.phi3},
                {"alpha", c.alpha},
                {"beta", c.beta},
                {"alpha_w", c.alpha_w},
                {"c_theta", c.c_theta},
                {"c1_scale", c.c1_scale},
                {"c2_scale", c.c2_scale},
                {"cw_scale", c.cw_scale},
                {"b_scale", c.b_scale},
                {"init_w", c.init_w},
                {"init_theta", c.init_theta},
                {"init_phi1", c.init_phi1},
                {"init_phi2", c.init_phi2},
                {"burn_in", c.burn_in},
                {"batch_size", c.batch_size},
                {"multiplier_period", c.multiplier_period},
                {"lr_factors", c.lr_factors},
                {"gamma_factors", c.gamma_factors},
                {"phi3_factors", c.phi3_factors},
                {"grid_points", c.grid_points},
                {"grid_lo", c.grid_lo},
                {"grid_hi", c.grid_hi},
                {"panel", c.panel_path},
                {"strategies", c.strategies},
                {"window_months", c.window_months},
                {"z_annual", c.z_annual},
                {"backtest_r", c.backtest_r},
                {"subset_size", c.subset_size},
                {"pretrain", c.pretrain},
                {"pretrain_iterations", c.pretrain_iterations},
                {"params_path", c.params_path},
                {"online_batch", c.online_batch},
                {"online_multiplier_period", c.online_multiplier_period},
                {"online_lambda", c.online_lambda},
                {"panel_assets", c.panel_assets},
                {"panel_years", c.panel_years},
                {"panel_corr", c.panel_corr},
                {"panel_mu_base", c.panel_mu_base},
                {"panel_vol_base", c.panel_vol_base},
                {"regime_shift_year", c.regime_shift_year},
                {"regime_mu_scale", c.regime_mu_scale}};
}

json manifest_for(const ExperimentConfig& cfg, const OutputSet& out,
                  const std::vector<std::pair<std::string, std::uint64_t>>& inputs) {
    json m;
    m["command"] = cfg.command;
    m["config"] = config_echo(cfg);
    json in = json::object();
    for (const auto& [p, h] : inputs) {
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        in[p] = std::string("fnv1a:") + buf;
    }
    m["inputs"] = in;
    m["outputs"] = out.files();
    return m;
}

std::vector<long> log_grid(long n, long dense_until = 100, int points = 300) {
    std::vector<long> g;
    for (long i = 1; i <= std::min(dense_until, n); ++i) g.push_back(i);
    if (n > dense_until) {
        const double lo = std::log(static_cast<double>(dense_until));
        const double hi = std::log(static_cast<double>(n));
        for (int i = 1; i <= points; ++i) {
            const long v = static_cast<long>(std::lround(std::exp(lo + (hi - lo) * i / points)));
            if (v > g.back() && v <= n) g.push_back(v);
        }
        if (g.back() != n) g.push_back(n);
    }
    return g;
}

std::pair<double, double> percentile_band(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    const auto at = [&](double q) {
        const double idx = q * (v.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(idx);
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        const double frac = idx - lo;
        return v[lo] * (1.0 - frac) + v[hi] * frac;
    };
    return {at(0.025), at(0.975)};
}

struct CurveStats {
    std::vector<double> mean_sum;            // per episode, summed across reps
    std::vector<long> grid;                  // snapshot indices (1-based)
    std::vector<std::vector<double>> snaps;  // [grid][rep]
};

void write_params_json(std::ofstream out, const ValueParams& v, const PolicyParams& p) {
    json j;
    j["theta1"] = v.theta1;
    j["theta2"] = v.theta2;
    j["theta3"] = v.theta3;
    j["phi3"] = p.phi3;
    j["gamma"] = p.gamma;
    j["w"] = p.w;
    j["phi1"] = std::vector<double>(p.phi1.data(), p.phi1.data() + p.phi1.size());
    std::vector<std::vector<double>> phi2(p.phi2.rows());
    for (int i = 0; i < p.phi2.rows(); ++i)
        phi2[i].assign(p.phi2.row(i).begin(), p.phi2.row(i).end());
    j["phi2"] = phi2;
    out << j.dump(2) << '\n';
}

void load_params_json(const std::string& path, ValueParams& v, PolicyParams& p) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open params file " + path);
    json j;
    in >> j;
    v.theta1 = j.at("theta1");
    v.theta2 = j.at("theta2");
    v.theta3 = j.at("theta3");
    p.phi3 = j.at("phi3");
    p.gamma = j.at("gamma");
    p.w = j.at("w");
    const auto phi1 = j.at("phi1").get<std::vector<double>>();
    p.phi1 = Eigen::Map<const Vec>(phi1.data(), static_cast<Eigen::Index>(phi1.size()));
    const auto phi2 = j.at("phi2").get<std::vector<std::vector<double>>>();
    p.phi2.resize(phi2.size(), phi2.size());
    for (std::size_t i = 0; i < phi2.size(); ++i)
        for (std::size_t k = 0; k < phi2.size(); ++k) p.phi2(i, k) = phi2[i][k];
}

ValueParams initial_value(const ExperimentConfig& cfg) {
    return ValueParams{cfg.init_theta, cfg.init_theta, cfg.phi3};
}

PolicyParams initial_policy(const ExperimentConfig& cfg, int d) {
    PolicyParams p;
    p.phi1 = Vec::Constant(d, cfg.init_phi1);
    p.phi2 = cfg.init_phi2 * Mat::Identity(d, d);
    p.phi3 = cfg.phi3;
    p.w = cfg.init_w;
    p.gamma = cfg.gamma;
    return p;
}

void require_phi3_condition(const ExperimentConfig& cfg, const MarketModel& model) {
    const OracleSet o = optimal_params(model, cfg.gamma, cfg.z, cfg.x0, cfg.T);
    if (!(cfg.phi3 > o.k / cfg.T))
        throw invalid_input("phi3 must exceed (mu-r)' Sigma^{-1} (mu-r) = " +
                            std::to_string(o.k / cfg.T) + " for the known model");
}

ReturnPanel panel_for(const ExperimentConfig& cfg,
                      std::vector<std::pair<std::string, std::uint64_t>>& inputs) {
    if (!cfg.panel_path.empty()) {
        inputs.emplace_back(cfg.panel_path, fnv1a_file(cfg.panel_path));
        return load_panel(cfg.panel_path);
    }
    SyntheticPanelConfig sp;
    sp.n_assets = cfg.panel_assets;
    sp.years = cfg.panel_years;
    sp.corr = cfg.panel_corr;
    sp.seed = mix_seed(cfg.seed, 0x9A9EL);
    sp.mu = Vec::NullaryExpr(cfg.panel_assets, [&](Eigen::Index i) {
        return cfg.panel_mu_base + 0.01 * static_cast<double>(i);
    });
    sp.vols = Vec::NullaryExpr(cfg.panel_assets, [&](Eigen::Index i) {
        return cfg.panel_vol_base + 0.01 * static_cast<double>(i);
    });
    sp.regime_shift_year = cfg.regime_shift_year;
    sp.regime_mu_scale = cfg.regime_mu_scale;
    return make_synthetic_panel(sp);
}

BacktestConfig backtest_config_for(const ExperimentConfig& cfg) {
    BacktestConfig bc;
    bc.window_months = cfg.window_months;
    bc.z = cfg.z_annual;
    bc.r = cfg.backtest_r;
    bc.strategies = cfg.strategies;
    bc.seed = cfg.seed;
    bc.replications = cfg.replications > 0 ? cfg.replications : 10;
    bc.subset_size = cfg.subset_size;
    bc.pretrain = cfg.pretrain;
    bc.pretrain_iterations = cfg.pretrain_iterations;

    bc.online.dt = 1.0 / kTradingDaysPerYear;
    bc.online.T = 1.0;
    bc.online.z = cfg.z_annual;
    bc.online.gamma = cfg.gamma;
    bc.online.batch = cfg.online_batch;
    bc.online.multiplier_period = cfg.online_multiplier_period;
    bc.online.w_prev = cfg.online_lambda;
    bc.online.w_curr = 1.0;
    bc.online.rebalance_every = kTradingDaysPerMonth;  // engine passes calendar flags anyway

    bc.online_schedule.constant_rates = true;  // B.3 rates during online trading
    bc.online_schedule.alpha = cfg.alpha > 0 ? cfg.alpha : 0.005;
    bc.online_schedule.alpha_w = cfg.alpha_w > 0 ? cfg.alpha_w : 0.05;
    bc.online_schedule.c_theta1 = bc.online_schedule.c_theta2 = cfg.c_theta;
    if (cfg.c1_scale > 0) bc.online_schedule.c1_scale = cfg.c1_scale;
    if (cfg.c2_scale > 0) bc.online_schedule.c2_scale = cfg.c2_scale;
    if (cfg.cw_scale > 0) bc.online_schedule.cw_scale = cfg.cw_scale;
    if (cfg.b_scale > 0) bc.online_schedule.b_scale = cfg.b_scale;
    bc.ctrl_phi3 = cfg.phi3;

    if (!cfg.params_path.empty()) {
        ValueParams v;
        PolicyParams p;
        load_params_json(cfg.params_path, v, p);
        p.gamma = cfg.gamma;
        bc.ctrl_value = v;
        bc.ctrl_policy = p;
    }
    return bc;
}

const char* kMetricHeader = "return,volatility,sharpe,sortino,calmar,mdd,rt";

void write_metric_row(std::ofstream& out, const MetricReport& m) {
    out << m.ann_return << ',' << m.ann_vol << ',' << m.sharpe << ',' << m.sortino << ','
        << m.calmar << ',' << m.mdd << ',' << m.rt;
}

}  // namespace

void ExperimentConfig::validate() const {
    require(!mu.empty() && mu.size() == vols.size(), "config: mu and vols must align");
    require(dt > 0.0 && dt <= T, "config: need 0 < dt <= T");
    require(gamma >= 0.0, "config: gamma must be non-negative");
    require(x0 > 0.0, "config: x0 must be positive");
    for (double f : lr_factors) require(f > 0.0, "config: scale factors must be positive");
    for (double f : gamma_factors) require(f > 0.0, "config: scale factors must be positive");
    for (double f : phi3_factors) require(f > 0.0, "config: scale factors must be positive");
    require(grid_points >= 3, "config: need at least 3 grid points");
    require(grid_lo > 0.0 && grid_hi > grid_lo, "config: bad sweep range");
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw data_error(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig c;
    const auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("seed", c.seed);
    get("episodes", c.episodes);
    get("replications", c.replications);
    get("out", c.out_dir);
    get("workers", c.workers);
    get("mu", c.mu);
    get("vols", c.vols);
    get("corr", c.corr);
    get("r", c.r);
    get("x0", c.x0);
    get("T", c.T);
    get("dt", c.dt);
    get("z", c.z);
    get("gamma", c.gamma);
    get("phi3", c.phi3);
    get("alpha", c.alpha);
    get("beta", c.beta);
    get("alpha_w", c.alpha_w);
    get("c_theta", c.c_theta);
    get("c1_scale", c.c1_scale);
    get("c2_scale", c.c2_scale);
    get("cw_scale", c.cw_scale);
    get("b_scale", c.b_scale);
    get("init_w", c.init_w);
    get("init_theta", c.init_theta);
    get("init_phi1", c.init_phi1);
    get("init_phi2", c.init_phi2);
    get("burn_in", c.burn_in);
    get("batch_size", c.batch_size);
    get("multiplier_period", c.multiplier_period);
    get("lr_factors", c.lr_factors);
    get("gamma_factors", c.gamma_factors);
    get("phi3_factors", c.phi3_factors);
    get("grid_points", c.grid_points);
    get("grid_lo", c.grid_lo);
    get("grid_hi", c.grid_hi);
    get("panel", c.panel_path);
    get("strategies", c.strategies);
    get("window_months", c.window_months);
    get("z_annual", c.z_annual);
    get("backtest_r", c.backtest_r);
    get("subset_size", c.subset_size);
    get("pretrain", c.pretrain);
    get("pretrain_iterations", c.pretrain_iterations);
    get("params_path", c.params_path);
    get("online_batch", c.online_batch);
    get("online_multiplier_period", c.online_multiplier_period);
    get("online_lambda", c.online_lambda);
    get("panel_assets", c.panel_assets);
    get("panel_years", c.panel_years);
    get("panel_corr", c.panel_corr);
    get("panel_mu_base", c.panel_mu_base);
    get("panel_vol_base", c.panel_vol_base);
    get("regime_shift_year", c.regime_shift_year);
    get("regime_mu_scale", c.regime_mu_scale);
    return c;
}

MarketModel make_model(const ExperimentConfig& cfg) {
    const Vec mu = Eigen::Map<const Vec>(cfg.mu.data(), static_cast<Eigen::Index>(cfg.mu.size()));
    const Vec vols =
        Eigen::Map<const Vec>(cfg.vols.data(), static_cast<Eigen::Index>(cfg.vols.size()));
    return MarketModel::from_vols(mu, vols, cfg.corr, cfg.r);
}

Schedule make_schedule(const ExperimentConfig& cfg, const ScheduleDefaults& defaults) {
    Schedule s;
    s.alpha = cfg.alpha > 0 ? cfg.alpha : defaults.alpha;
    s.beta = cfg.beta > 0 ? cfg.beta : defaults.beta;
    s.alpha_w = cfg.alpha_w > 0 ? cfg.alpha_w : defaults.alpha_w;
    s.c_theta1 = s.c_theta2 = cfg.c_theta;
    s.c1_scale = cfg.c1_scale > 0 ? cfg.c1_scale : defaults.c1_scale;
    s.c2_scale = cfg.c2_scale > 0 ? cfg.c2_scale : defaults.c2_scale;
    s.cw_scale = cfg.cw_scale > 0 ? cfg.cw_scale : defaults.cw_scale;
    s.b_scale = cfg.b_scale > 0 ? cfg.b_scale : defaults.b_scale;
    return s;
}

void parallel_for_replications(int replications, int workers,
                               const std::function<void(int rep)>& body) {
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, replications));
    if (workers == 1) {
        for (int rep = 0; rep < replications; ++rep) body(rep);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mu;
    for (int wkr = 0; wkr < workers; ++wkr)
        pool.emplace_back([&] {
            for (;;) {
                const int rep = next.fetch_add(1);
                if (rep >= replications) return;
                try {
                    body(rep);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot hash missing input " + path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (!in) break;
    }
    return h;
}

// ---------------------------------------------------------------------------
// convergence: per-episode MSE curves with percentile bands and fitted slopes
// ---------------------------------------------------------------------------

std::vector<std::string> cmd_convergence(const ExperimentConfig& cfg) {
    ExperimentConfig c = cfg;
    if (c.episodes < 0) c.episodes = 10000;
    if (c.replications < 0) c.replications = 100;
    c.validate();
    const MarketModel model = make_model(c);
    require_phi3_condition(c, model);
    const Schedule sched = make_schedule(c, kConvergenceSchedule);
    const OracleSet oracle = optimal_params(model, c.gamma, c.z, c.x0, c.T);

    TrainConfig tc;
    tc.z = c.z;
    tc.gamma = c.gamma;
    tc.episodes = c.episodes;
    tc.dt = c.dt;
    tc.x0 = c.x0;
    tc.T = c.T;
    tc.batch_size = c.batch_size;
    tc.multiplier_period = c.multiplier_period;

    const long N = c.episodes;
    const int R = c.replications;
    const auto grid = log_grid(N);
    std::vector<double> sum1(N, 0.0), sum2(N, 0.0), sumw(N, 0.0);
    std::vector<std::vector<double>> snap1(grid.size(), std::vector<double>(R));
    std::vector<std::vector<double>> snap2(grid.size(), std::vector<double>(R));
    std::vector<std::vector<double>> snapw(grid.size(), std::vector<double>(R));

    // replications run in parallel within fixed-size windows; reductions
    // happen in replication order so results are bit-deterministic for any
    // worker count
    const int chunk = 16;
    std::vector<std::vector<double>> ce1(chunk), ce2(chunk), cew(chunk);
    for (int base = 0; base < R; base += chunk) {
        const int width = std::min(chunk, R - base);
        parallel_for_replications(width, c.workers, [&](int slot) {
            const int rep = base + slot;
            std::vector<double> e1(N), e2(N), ew(N);
            const auto obs = [&](long n, const ValueParams&, const PolicyParams& p) {
                e1[n - 1] = (p.phi1 - oracle.phi1_star).squaredNorm();
                e2[n - 1] = (p.phi2 - oracle.phi2_star).squaredNorm();
                ew[n - 1] = (p.w - oracle.w_star) * (p.w - oracle.w_star);
            };
            train_baseline(model, tc, sched, initial_value(c), initial_policy(c, model.dim()),
                           mix_seed(c.seed, rep), obs, false);
            ce1[slot] = std::move(e1);
            ce2[slot] = std::move(e2);
            cew[slot] = std::move(ew);
        });
        for (int slot = 0; slot < width; ++slot) {
            const int rep = base + slot;
            for (long n = 0; n < N; ++n) {
                sum1[n] += ce1[slot][n];
                sum2[n] += ce2[slot][n];
                sumw[n] += cew[slot][n];
            }
            for (std::size_t g = 0; g < grid.size(); ++g) {
                snap1[g][rep] = ce1[slot][grid[g] - 1];
                snap2[g][rep] = ce2[slot][grid[g] - 1];
                snapw[g][rep] = cew[slot][grid[g] - 1];
            }
        }
    }

    OutputSet out(c.out_dir);
    {
        auto f = out.open("convergence_mse.csv");
        f << "n,mse_phi1,phi1_p2_5,phi1_p97_5,mse_phi2,phi2_p2_5,phi2_p97_5,mse_w,w_p2_5,w_p97_"
             "5\n";
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const long n = grid[g];
            auto [lo1, hi1] = percentile_band(snap1[g]);
            auto [lo2, hi2] = percentile_band(snap2[g]);
            auto [low, hiw] = percentile_band(snapw[g]);
            f << n << ',' << sum1[n - 1] / R << ',' << lo1 << ',' << hi1 << ',' << sum2[n - 1] / R
              << ',' << lo2 << ',' << hi2 << ',' << sumw[n - 1] / R << ',' << low << ',' << hiw
              << '\n';
        }
    }

    std::vector<std::pair<double, double>> s1, s2, sw;
    for (long n = 1; n <= N; ++n) {
        s1.emplace_back(n, sum1[n - 1] / R);
        s2.emplace_back(n, sum2[n - 1] / R);
        sw.emplace_back(n, sumw[n - 1] / R);
    }
    const auto [slope1, int1] = fit_loglog_slope(s1, c.burn_in);
    const auto [slope2, int2] = fit_loglog_slope(s2, c.burn_in);
    const auto [slopew, intw] = fit_loglog_slope(sw, c.burn_in);
    {
        auto f = out.open("slopes.csv");
        f << "parameter,slope,intercept,burn_in\n";
        f << "phi1," << slope1 << ',' << int1 << ',' << c.burn_in << '\n';
        f << "phi2," << slope2 << ',' << int2 << ',' << c.burn_in << '\n';
        f << "w," << slopew << ',' << intw << ',' << c.burn_in << '\n';
    }

    // replication-0 iterate history per the trainer's external interface
    {
        TrainConfig tc0 = tc;
        const TrainResult rep0 =
            train_baseline(model, tc0, sched, initial_value(c), initial_policy(c, model.dim()),
                           mix_seed(c.seed, 0), {}, true);
        write_history_csv(out.track("history_rep0.csv"), rep0, &oracle.phi1_star,
                          &oracle.phi2_star, &oracle.w_star);
    }

    json m = manifest_for(c, out, {});
    m["results"] = {{"slope_phi1", slope1}, {"slope_phi2", slope2}, {"slope_w", slopew}};
    out.commit(m);
    return out.files();
}

// ---------------------------------------------------------------------------
// regret: cumulative Sharpe-ratio regret curve and fitted slope
// ---------------------------------------------------------------------------

std::vector<std::string> cmd_regret(const ExperimentConfig& cfg) {
    ExperimentConfig c = cfg;
    if (c.episodes < 0) c.episodes = 10000;
    if (c.replications < 0) c.replications = 100;
    c.validate();
    const MarketModel model = make_model(c);
    require_phi3_condition(c, model);
    const Schedule sched = make_schedule(c, kRegretSchedule);
    const OracleSet oracle = optimal_params(model, c.gamma, c.z, c.x0, c.T);

    TrainConfig tc;
    tc.z = c.z;
    tc.gamma = c.gamma;
    tc.episodes = c.episodes;
    tc.dt = c.dt;
    tc.x0 = c.x0;
    tc.T = c.T;

    const long N = c.episodes;
    const int R = c.replications;
    const auto grid = log_grid(N);
    std::vector<double> sum_regret(N, 0.0);
    std::vector<std::vector<double>> snaps(grid.size(), std::vector<double>(R));

    const int chunk = 16;
    std::vector<std::vector<double>> curves(chunk);
    for (int base = 0; base < R; base += chunk) {
        const int width = std::min(chunk, R - base);
        parallel_for_replications(width, c.workers, [&](int slot) {
            const int rep = base + slot;
            std::vector<double> curve(N);
            double acc = 0.0;
            const auto obs = [&](long n, const ValueParams&, const PolicyParams& p) {
                acc += oracle.sr_star - sharpe_closed_form(p.phi1, model, c.T);
                curve[n - 1] = acc;
            };
            train_baseline(model, tc, sched, initial_value(c), initial_policy(c, model.dim()),
                           mix_seed(c.seed, rep), obs, false);
            curves[slot] = std::move(curve);
        });
        for (int slot = 0; slot < width; ++slot) {
            const int rep = base + slot;
            for (long n = 0; n < N; ++n) sum_regret[n] += curves[slot][n];
            for (std::size_t g = 0; g < grid.size(); ++g)
                snaps[g][rep] = curves[slot][grid[g] - 1];
        }
    }

    OutputSet out(c.out_dir);
    {
        auto f = out.open("regret_curve.csv");
        f << "n,regret,regret_p2_5,regret_p97_5\n";
        for (std::size_t g = 0; g < grid.size(); ++g) {
            auto [lo, hi] = percentile_band(snaps[g]);
            f << grid[g] << ',' << sum_regret[grid[g] - 1] / R << ',' << lo << ',' << hi << '\n';
        }
    }
    std::vector<std::pair<double, double>> series;
    for (long n = 1; n <= N; ++n) series.emplace_back(n, sum_regret[n - 1] / R);
    const auto [slope, intercept] = fit_loglog_slope(series, c.burn_in);
    {
        auto f = out.open("regret_slope.csv");
        f << "slope,intercept,burn_in\n" << slope << ',' << intercept << ',' << c.burn_in << '\n';
    }
    json m = manifest_for(c, out, {});
    m["results"] = {{"regret_slope", slope}};
    out.commit(m);
    return out.files();
}

// ---------------------------------------------------------------------------
// tradeoff: Var(Z1) across exploration levels |phi2|
// ---------------------------------------------------------------------------

std::vector<std::string> cmd_tradeoff(const ExperimentConfig& cfg) {
    ExperimentConfig c = cfg;
    if (c.episodes < 0) c.episodes = 4000;
    c.validate();
    const MarketModel model = make_model(c);
    require_phi3_condition(c, model);
    const int d = model.dim();
    const long E = c.episodes;
    const int G = c.grid_points;

    std::vector<double> scales(G), norms(G), variances(G), ci_lo(G), ci_hi(G);
    for (int g = 0; g < G; ++g)
        scales[g] = c.grid_lo * std::pow(c.grid_hi / c.grid_lo, static_cast<double>(g) / (G - 1));

    parallel_for_replications(G, c.workers, [&](int g) {
        PolicyParams p = initial_policy(c, d);
        p.phi2 = scales[g] * Mat::Identity(d, d);
        const ValueParams v = initial_value(c);
        const detail::EpisodeGrid grid(static_cast<int>(std::floor(c.T / c.dt + 0.5)), c.dt, c.T,
                                       p.phi3);
        detail::EpisodeWorkspace ws(d);
        Eigen::LLT<Mat> llt(p.phi2);
        const Mat chol = llt.matrixL();
        const Mat phi2_inv = llt.solve(Mat::Identity(d, d));
        double logdet = 0.0;
        for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(chol(i, i));
        const double rf_step = std::expm1(model.r * c.dt);
        const Vec drift_dt = (model.mu - 0.5 * model.Sigma.diagonal()) * c.dt;
        const double sqdt = std::sqrt(c.dt);
        Vec lr(d);

        Mat z1s(E, d);
        Eigen::Vector2d g_theta;
        Vec z1(d);
        Mat z2(d, d);
        for (long e = 0; e < E; ++e) {
            g_theta.setZero();
            z1.setZero();
            z2.setZero();
            RandomStream rng(mix_seed(c.seed, 7700 + g), static_cast<std::uint64_t>(e + 1), 0);
            const auto market_step = [&](int, RandomStream& r, Vec& outv) {
                r.fill_normal(ws.z);
                lr.noalias() = model.chol * ws.z;
                lr = drift_dt + sqdt * lr;
                outv = lr.array().exp() - 1.0;
            };
            detail::run_episode_kernel(d, grid, c.x0, rf_step, v, p, chol, phi2_inv, logdet, rng,
                                       ws, market_step, g_theta, z1, z2);
            z1s.row(e) = z1.transpose();
        }
        // total variance = sum of per-component variances
        const Vec mean = z1s.colwise().mean();
        double var = 0.0;
        for (int i = 0; i < d; ++i) var += (z1s.col(i).array() - mean[i]).square().sum() / (E - 1);
        // block-based spread for an approximate confidence band
        const int B = 20;
        const long blk = E / B;
        std::vector<double> block_vars(B);
        for (int b = 0; b < B; ++b) {
            const Mat slice = z1s.middleRows(b * blk, blk);
            const Vec bm = slice.colwise().mean();
            double bv = 0.0;
            for (int i = 0; i < d; ++i)
                bv += (slice.col(i).array() - bm[i]).square().sum() / (blk - 1);
            block_vars[b] = bv;
        }
        const double bmean = std::accumulate(block_vars.begin(), block_vars.end(), 0.0) / B;
        double bss = 0.0;
        for (double bv : block_vars) bss += (bv - bmean) * (bv - bmean);
        const double se = std::sqrt(bss / (B - 1)) / std::sqrt(static_cast<double>(B));
        norms[g] = p.phi2.norm();
        variances[g] = var;
        ci_lo[g] = var - 2.0 * se;
        ci_hi[g] = var + 2.0 * se;
    });

    OutputSet out(c.out_dir);
    {
        auto f = out.open("tradeoff.csv");
        f << "phi2_scale,phi2_norm,var_z1,ci_lo,ci_hi\n";
        for (int g = 0; g < G; ++g)
            f << scales[g] << ',' << norms[g] << ',' << variances[g] << ',' << ci_lo[g] << ','
              << ci_hi[g] << '\n';
    }
    const auto min_it = std::min_element(variances.begin(), variances.end());
    const long min_idx = min_it - variances.begin();
    json m = manifest_for(c, out, {});
    m["results"] = {{"min_index", min_idx},
                    {"interior_minimum", min_idx > 0 && min_idx < G - 1}};
    out.commit(m);
    return out.files();
}

// ---------------------------------------------------------------------------
// backtest: strategy comparison tables on a panel
// ---------------------------------------------------------------------------

std::vector<std::string> cmd_backtest(const ExperimentConfig& cfg) {
    ExperimentConfig c = cfg;
    c.validate();
    std::vector<std::pair<std::string, std::uint64_t>> inputs;
    const ReturnPanel panel = panel_for(c, inputs);
    if (!c.params_path.empty()) inputs.emplace_back(c.params_path, fnv1a_file(c.params_path));
    BacktestConfig bc = backtest_config_for(c);

    const ReplicateSummary sum = replicate(panel, bc);

    OutputSet out(c.out_dir);
    {
        auto f = out.open("metrics.csv");
        f << "strategy,stat," << kMetricHeader << '\n';
        for (const auto& s : sum.strategies) {
            f << s << ",mean,";
            write_metric_row(f, sum.mean.at(s));
            f << '\n' << s << ",std,";
            write_metric_row(f, sum.stddev.at(s));
            f << '\n';
        }
    }

    // representative single run for wealth curves and the weights log
    BacktestConfig rep0 = bc;
    rep0.replications = 1;
    ReturnPanel rep_panel = panel;
    if (bc.subset_size > 0 && bc.subset_size < panel.assets()) {
        std::vector<int> cols(panel.assets());
        std::iota(cols.begin(), cols.end(), 0);
        RandomStream rng(bc.seed, 0, 0x5E1Ec7);
        for (int i = 0; i < bc.subset_size; ++i) {
            const int j = i + static_cast<int>(rng.uniform_below(panel.assets() - i));
            std::swap(cols[i], cols[j]);
        }
        cols.resize(bc.subset_size);
        std::sort(cols.begin(), cols.end());
        rep_panel = panel.subset(cols);
    }
    rep0.seed = mix_seed(bc.seed, 0);
    const BacktestRun run = run_backtest(rep_panel, rep0);
    {
        auto f = out.open("wealth_curves.csv");
        f << "date";
        for (const auto& s : sum.strategies) f << ',' << s;
        f << '\n';
        for (std::size_t i = 0; i < run.dates.size(); ++i) {
            f << run.dates[i].iso();
            for (const auto& s : sum.strategies) f << ',' << run.wealth.at(s)[i + 1];
            f << '\n';
        }
    }
    {
        auto f = out.open("weights_log.csv");
        f << "date,strategy,ticker,weight\n";
        for (const auto& row : run.weights_log)
            f << row.date.iso() << ',' << row.strategy << ',' << row.ticker << ',' << row.weight
              << '\n';
    }
    if (!run.ctrl_history.empty()) {
        auto f = out.open("ctrl_history.csv");
        const int d = static_cast<int>(run.ctrl_history.front().phi1.size());
        f << "date";
        for (int i = 0; i < d; ++i) f << ",phi1_" << i;
        f << ",w\n";
        for (const auto& snap : run.ctrl_history) {
            f << snap.date.iso();
            for (int i = 0; i < d; ++i) f << ',' << snap.phi1[i];
            f << ',' << snap.w << '\n';
        }
    }

    if (bc.replications >= 10) {
        auto f = out.open("wilcoxon_sharpe.csv");
        f << "strategy";
        for (const auto& s : sum.strategies) f << ',' << s;
        f << '\n';
        for (const auto& a : sum.strategies) {
            f << a;
            for (const auto& b : sum.strategies) {
                if (a == b) {
                    f << ",";
                    continue;
                }
                std::vector<double> sa, sb;
                for (int rep = 0; rep < bc.replications; ++rep) {
                    const double va = sum.reports.at(a)[rep].sharpe;
                    const double vb = sum.reports.at(b)[rep].sharpe;
                    if (std::isfinite(va) && std::isfinite(vb)) {
                        sa.push_back(va);
                        sb.push_back(vb);
                    }
                }
                if (sa.size() >= 10)
                    f << ',' << wilcoxon_paired(sa, sb);
                else
                    f << ",nan";
            }
            f << '\n';
        }
    }

    json m = manifest_for(c, out, inputs);
    m["results"] = {{"ctrl_fallbacks", run.ctrl_fallbacks}};
    out.commit(m);
    return out.files();
}

// ---------------------------------------------------------------------------
// sensitivity: hyperparameter scaling grid (learning rates, gamma, phi3)
// ---------------------------------------------------------------------------

std::vector<std::string> cmd_sensitivity(const ExperimentConfig& cfg) {
    ExperimentConfig c = cfg;
    if (c.replications < 0) c.replications = 5;
    c.validate();
    std::vector<std::pair<std::string, std::uint64_t>> inputs;
    const ReturnPanel panel = panel_for(c, inputs);

    struct Row {
        std::string group;
        double factor;
        MetricReport mean, sd;
    };
    std::vector<Row> rows;
    const auto run_variant = [&](const std::string& group, double factor) {
        ExperimentConfig vc = c;
        vc.strategies = {"ctrl"};
        if (group == "lr") {
            vc.alpha = (c.alpha > 0 ? c.alpha : 0.005) * factor;
            vc.alpha_w = (c.alpha_w > 0 ? c.alpha_w : 0.05) * factor;
        } else if (group == "gamma") {
            vc.gamma = c.gamma * factor;
        } else if (group == "phi3") {
            vc.phi3 = c.phi3 * factor;
        }
        BacktestConfig bc = backtest_config_for(vc);
        const ReplicateSummary sum = replicate(panel, bc);
        rows.push_back({group, factor, sum.mean.at("ctrl"), sum.stddev.at("ctrl")});
    };

    run_variant("baseline", 1.0);
    for (double f : c.lr_factors) run_variant("lr", f);
    for (double f : c.gamma_factors) run_variant("gamma", f);
    for (double f : c.phi3_factors) run_variant("phi3", f);

    OutputSet out(c.out_dir);
    {
        auto f = out.open("sensitivity.csv");
        f << "group,factor,stat," << kMetricHeader << '\n';
        for (const auto& row : rows) {
            f << row.group << ',' << row.factor << ",mean,";
            write_metric_row(f, row.mean);
            f << '\n' << row.group << ',' << row.factor << ",std,";
            write_metric_row(f, row.sd);
            f << '\n';
        }
    }
    out.commit(manifest_for(c, out, inputs));
    return out.files();
}

// ---------------------------------------------------------------------------
// pretrain: offline baseline training, parameters written as JSON
// ---------------------------------------------------------------------------

std::vector<std::string> cmd_pretrain(const ExperimentConfig& cfg) {
    ExperimentConfig c = cfg;
    if (c.episodes < 0) c.episodes = 20000;
    c.validate();

    TrainConfig tc;
    tc.z = c.panel_path.empty() ? c.z : c.z_annual;
    tc.gamma = c.gamma;
    tc.episodes = c.episodes;
    tc.dt = 1.0 / kTradingDaysPerYear;
    tc.T = 1.0;
    tc.batch_size = 16;
    tc.multiplier_period = 10;

    Schedule sched;
    sched.constant_rates = true;
    sched.alpha = c.alpha > 0 ? c.alpha : 0.005;
    sched.alpha_w = c.alpha_w > 0 ? c.alpha_w : 0.05;
    sched.c_theta1 = sched.c_theta2 = c.c_theta;
    if (c.c1_scale > 0) sched.c1_scale = c.c1_scale;
    if (c.c2_scale > 0) sched.c2_scale = c.c2_scale;
    if (c.cw_scale > 0) sched.cw_scale = c.cw_scale;
    if (c.b_scale > 0) sched.b_scale = c.b_scale;

    ValueParams v{1.0, 1.0, c.phi3};
    std::vector<std::pair<std::string, std::uint64_t>> inputs;
    OutputSet out(c.out_dir);
    PolicyParams p;
    if (!c.panel_path.empty()) {
        inputs.emplace_back(c.panel_path, fnv1a_file(c.panel_path));
        const ReturnPanel panel = load_panel(c.panel_path);
        const int d = panel.assets();
        p.phi1 = Vec::Ones(d);
        p.phi2 = Mat::Identity(d, d);
        p.phi3 = c.phi3;
        p.w = 1.0;
        p.gamma = c.gamma;
        const int K = static_cast<int>(kTradingDaysPerYear);
        std::tie(v, p) = pretrain_on_returns(panel.returns, K, tc, sched, v, p, c.seed);
    } else {
        const MarketModel model = make_model(c);
        require_phi3_condition(c, model);
        const int d = model.dim();
        p.phi1 = Vec::Ones(d);
        p.phi2 = Mat::Identity(d, d);
        p.phi3 = c.phi3;
        p.w = 1.0;
        p.gamma = c.gamma;
        const TrainResult res = train_baseline(model, tc, sched, v, p, c.seed, {}, false);
        v = res.value;
        p = res.policy;
    }
    write_params_json(out.open("pretrained_params.json"), v, p);
    out.commit(manifest_for(c, out, inputs));
    return out.files();
}

}  // namespace ctrlmv
