#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ctrlmv/backtest.hpp"
#include "ctrlmv/market.hpp"
#include "ctrlmv/oracles.hpp"
#include "ctrlmv/schedule.hpp"
#include "ctrlmv/train.hpp"

namespace ctrlmv {

// Flat experiment configuration mirrored by the JSON config file; CLI flags
// override file values. Negative sentinel values select per-command defaults.
struct ExperimentConfig {
    std::string command;
    std::uint64_t seed = 0;
    long episodes = -1;
    int replications = -1;
    std::string out_dir = "out";
    int workers = 0;  // 0 = hardware concurrency

    // market (simulation-study defaults)
    std::vector<double> mu{0.2, 0.3};
    std::vector<double> vols{0.3, 0.4};
    double corr = 0.1;
    double r = 0.02;
    double x0 = 1.0;
    double T = 1.0;
    double dt = 0.004;
    double z = 1.4;
    double gamma = 0.1;
    double phi3 = 1.0;

    // schedule (negative = per-command default)
    double alpha = -1.0;
    double beta = -1.0;
    double alpha_w = -1.0;
    double c_theta = 100.0;
    double c1_scale = -1.0;
    double c2_scale = -1.0;
    double cw_scale = -1.0;
    double b_scale = -1.0;

    // initial iterates
    double init_w = 1.5;
    double init_theta = 0.0;
    double init_phi1 = 0.0;
    double init_phi2 = 1.0;  // multiple of the identity

    long burn_in = 200;
    int batch_size = 1;
    int multiplier_period = 1;

    // hyperparameter scale factors (sensitivity)
    std::vector<double> lr_factors{0.2, 0.5, 2.0, 5.0};
    std::vector<double> gamma_factors{0.2, 0.5, 2.0, 5.0};
    std::vector<double> phi3_factors{2.0, 5.0, 8.0};

    // exploration-variance sweep
    int grid_points = 9;
    double grid_lo = 3e-3;
    double grid_hi = 30.0;

    // backtest
    std::string panel_path;  // empty = synthetic panel
    std::vector<std::string> strategies{"market", "ew",   "mv",   "min_v", "js",  "lw", "bl",
                                        "ff",     "rp",   "drmv", "ctmv",  "pmv", "ctrl"};
    int window_months = 24;
    double z_annual = 1.15;
    double backtest_r = 0.0;
    int subset_size = 0;
    bool pretrain = false;
    long pretrain_iterations = 2000;
    std::string params_path;  // pretrained parameter JSON (pretrain writes, backtest reads)
    int online_batch = 16;
    int online_multiplier_period = 1;
    double online_lambda = 0.5;
    // synthetic panel knobs
    int panel_assets = 6;
    int panel_years = 8;
    double panel_corr = 0.3;
    double panel_mu_base = 0.06;
    double panel_vol_base = 0.18;
    int regime_shift_year = -1;
    double regime_mu_scale = 1.0;

    void validate() const;
};

ExperimentConfig load_config_file(const std::string& path);

MarketModel make_model(const ExperimentConfig& cfg);

// per-command schedule defaults, overridden by any non-negative config value
struct ScheduleDefaults {
    double alpha, beta;
    double alpha_w = -1.0;
    double c1_scale = 4.0;
    double c2_scale = 1.5;
    double cw_scale = 4.0;
    double b_scale = 4.0;
};
Schedule make_schedule(const ExperimentConfig& cfg, const ScheduleDefaults& defaults);

// Experiment entry points; each writes plot-ready CSVs plus run_manifest.json
// into cfg.out_dir and returns the list of files written.
std::vector<std::string> cmd_convergence(const ExperimentConfig& cfg);
std::vector<std::string> cmd_regret(const ExperimentConfig& cfg);
std::vector<std::string> cmd_tradeoff(const ExperimentConfig& cfg);
std::vector<std::string> cmd_backtest(const ExperimentConfig& cfg);
std::vector<std::string> cmd_sensitivity(const ExperimentConfig& cfg);
std::vector<std::string> cmd_pretrain(const ExperimentConfig& cfg);

// deterministic replication-level parallelism with fixed-order reduction
void parallel_for_replications(int replications, int workers,
                               const std::function<void(int rep)>& body);

std::uint64_t fnv1a_file(const std::string& path);

// Tuned experiment defaults (learning-rate constants and radius scales are
// free knobs; see the configuration notes in the README).
inline constexpr ScheduleDefaults kConvergenceSchedule{8.0, 100.0};
inline constexpr ScheduleDefaults kRegretSchedule{5.0, 40.0, -1.0, 2.45, 1.5, 2.0, 4.0};
inline constexpr ScheduleDefaults kLimitSchedule{22.0, 300.0, -1.0, 2.45, 1.5, 2.0, 4.0};

}  // namespace ctrlmv
