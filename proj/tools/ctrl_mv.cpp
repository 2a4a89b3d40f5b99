// ctrl_mv: experiment runner for the continuous-time RL mean-variance toolkit.
//
//   ctrl_mv <convergence|regret|tradeoff|backtest|sensitivity|pretrain>
//           [--config cfg.json] [--seed N] [--episodes N] [--replications N]
//           [--out DIR] [--workers N] [command-specific flags]
//
// CLI flags override config-file values; CTRL_MV_OUT overrides --out.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "ctrlmv/experiments.hpp"

using namespace ctrlmv;

int main(int argc, char** argv) {
    CLI::App app{"Continuous-time RL mean-variance portfolio experiments"};
    app.require_subcommand(1);

    std::string config_path;
    ExperimentConfig overrides;
    // flag presence is tracked through CLI11 counts; values land here
    long episodes = -1;
    int replications = -1, workers = -1, subset = -1, window = -1, grid_points = -1;
    std::uint64_t seed = 0;
    double alpha = -1, beta = -1, alpha_w = -1, gamma = -1, phi3 = -1, z = -1, dt = -1;
    double z_annual = -1, grid_lo = -1, grid_hi = -1, lambda = -1;
    long burn_in = -1, pretrain_iters = -1;
    std::string out_dir, panel, params_path, strategies_csv;
    bool pretrain = false;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--seed", seed, "RNG seed");
        cmd->add_option("--episodes", episodes, "episodes / iterations");
        cmd->add_option("--replications", replications, "independent replications");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--workers", workers, "worker threads (0 = all cores)");
        cmd->add_option("--alpha", alpha, "learning-rate numerator");
        cmd->add_option("--beta", beta, "learning-rate shift");
        cmd->add_option("--alpha-w", alpha_w, "multiplier learning rate");
        cmd->add_option("--gamma", gamma, "exploration temperature");
        cmd->add_option("--phi3", phi3, "fixed phi3 = theta3 hyperparameter");
        cmd->add_option("--z", z, "target terminal wealth (synthetic experiments)");
        cmd->add_option("--dt", dt, "time step");
        cmd->add_option("--burn-in", burn_in, "slope-fit burn-in episode");
    };

    auto* conv = app.add_subcommand("convergence", "per-episode MSE curves and fitted slopes");
    add_common(conv);
    auto* regr = app.add_subcommand("regret", "cumulative Sharpe regret curve and slope");
    add_common(regr);
    auto* trade = app.add_subcommand("tradeoff", "Var(Z1) across exploration levels");
    add_common(trade);
    trade->add_option("--grid-points", grid_points, "sweep size");
    trade->add_option("--grid-lo", grid_lo, "lowest phi2 scale");
    trade->add_option("--grid-hi", grid_hi, "highest phi2 scale");
    auto* back = app.add_subcommand("backtest", "strategy comparison on a return panel");
    add_common(back);
    back->add_option("--panel", panel, "CSV return panel (synthetic when omitted)");
    back->add_option("--strategies", strategies_csv, "comma-separated strategy ids");
    back->add_option("--window-months", window, "rolling estimation window");
    back->add_option("--z-annual", z_annual, "gross annual wealth target");
    back->add_option("--subset-size", subset, "assets sampled per replication");
    back->add_flag("--pretrain", pretrain, "pre-train CTRL on pre-test history");
    back->add_option("--pretrain-iterations", pretrain_iters, "pre-training iterations");
    back->add_option("--params", params_path, "pretrained parameter JSON");
    back->add_option("--lambda", lambda, "online blend weight w_prev");
    auto* sens = app.add_subcommand("sensitivity", "hyperparameter scaling grid");
    add_common(sens);
    sens->add_option("--panel", panel, "CSV return panel (synthetic when omitted)");
    sens->add_option("--window-months", window, "rolling estimation window");
    auto* pre = app.add_subcommand("pretrain", "offline baseline training, params to JSON");
    add_common(pre);
    pre->add_option("--panel", panel, "CSV return panel (synthetic model when omitted)");

    CLI11_PARSE(app, argc, argv);
    CLI::App* cmd = app.get_subcommands().front();

    try {
        ExperimentConfig cfg =
            config_path.empty() ? ExperimentConfig{} : load_config_file(config_path);
        cfg.command = cmd->get_name();
        const auto passed = [&](const char* flag) {
            const CLI::Option* opt = cmd->get_option_no_throw(flag);
            return opt != nullptr && opt->count() > 0;
        };
        if (passed("--seed")) cfg.seed = seed;
        if (passed("--episodes")) cfg.episodes = episodes;
        if (passed("--replications")) cfg.replications = replications;
        if (passed("--out")) cfg.out_dir = out_dir;
        if (passed("--workers")) cfg.workers = workers;
        if (passed("--alpha")) cfg.alpha = alpha;
        if (passed("--beta")) cfg.beta = beta;
        if (passed("--alpha-w")) cfg.alpha_w = alpha_w;
        if (passed("--gamma")) cfg.gamma = gamma;
        if (passed("--phi3")) cfg.phi3 = phi3;
        if (passed("--z")) cfg.z = z;
        if (passed("--dt")) cfg.dt = dt;
        if (passed("--burn-in")) cfg.burn_in = burn_in;
        if (passed("--grid-points")) cfg.grid_points = grid_points;
        if (passed("--grid-lo")) cfg.grid_lo = grid_lo;
        if (passed("--grid-hi")) cfg.grid_hi = grid_hi;
        if (passed("--panel")) cfg.panel_path = panel;
        if (passed("--window-months")) cfg.window_months = window;
        if (passed("--z-annual")) cfg.z_annual = z_annual;
        if (passed("--subset-size")) cfg.subset_size = subset;
        if (passed("--pretrain")) cfg.pretrain = pretrain;
        if (passed("--pretrain-iterations")) cfg.pretrain_iterations = pretrain_iters;
        if (passed("--params")) cfg.params_path = params_path;
        if (passed("--lambda")) cfg.online_lambda = lambda;
        if (passed("--strategies")) {
            cfg.strategies.clear();
            std::stringstream ss(strategies_csv);
            std::string item;
            while (std::getline(ss, item, ','))
                if (!item.empty()) cfg.strategies.push_back(item);
        }
        if (const char* env_out = std::getenv("CTRL_MV_OUT")) cfg.out_dir = env_out;

        std::vector<std::string> files;
        const std::string name = cmd->get_name();
        if (name == "convergence")
            files = cmd_convergence(cfg);
        else if (name == "regret")
            files = cmd_regret(cfg);
        else if (name == "tradeoff")
            files = cmd_tradeoff(cfg);
        else if (name == "backtest")
            files = cmd_backtest(cfg);
        else if (name == "sensitivity")
            files = cmd_sensitivity(cfg);
        else if (name == "pretrain")
            files = cmd_pretrain(cfg);

        std::cout << "wrote " << cfg.out_dir << ":";
        for (const auto& f : files) std::cout << ' ' << f;
        std::cout << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
