#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ctrlmv/actor_critic.hpp"
#include "ctrlmv/market.hpp"
#include "ctrlmv/schedule.hpp"
#include "ctrlmv/train.hpp"

namespace ctrlmv {

enum class ExecutionMode {
    greedy,     // deterministic mean action
    behaviour,  // execute the first behaviour sample (degenerate test config)
};

struct OnlineConfig {
    int rebalance_every = 1;     // f: execute at steps k = 0 mod f, hold otherwise
    double w_prev = 0.5;         // two-term blend weights (lambda, 1) with lambda = 0.5
    double w_curr = 1.0;
    int batch = 16;              // n behaviour samples per step
    int multiplier_period = 10;  // M: w updated every M episodes
    bool risky_only = true;      // project executed action to full risky allocation
    bool absorb_at_zero = true;  // truncate the executed path at zero wealth
    ExecutionMode execution = ExecutionMode::greedy;
    double z = 1.4;
    double gamma = 0.1;
    long episodes = 1;
    double dt = 1.0 / 252.0;
    double x0 = 1.0;
    double T = 1.0;

    void validate() const;
};

// One-step TD terms of the online update rules.
struct StepGradients {
    Eigen::Vector2d g_theta;
    Vec g_phi1;
    Mat g_phi2inv;
};

StepGradients step_gradients(double t_k, double x_k, const Vec& u_k, double x_k1,
                             const ValueParams& v, const PolicyParams& p, double dt, double z,
                             double T);

// w_prev * prev + w_curr * curr
template <typename T>
T blend_update(const T& prev, const T& curr, double w_prev, double w_curr) {
    return w_prev * prev + w_curr * curr;
}

// Full-risky normalization u / (sum_i u_i) * x. Throws on a near-zero sum;
// callers fall back to equal weights.
struct degenerate_action : numerical_error {
    using numerical_error::numerical_error;
};
Vec project_risky_only(const Vec& u, double x);

// Stateful online learner (Algorithm-level core shared by the synthetic runner
// and the backtest engine). Consumes one net-return vector per step, updates
// the actor-critic parameters incrementally from a mini-batch of behaviour
// counterfactuals, and exposes the greedy projected target weights.
class OnlineTrader {
  public:
    OnlineTrader(int d, int K, const OnlineConfig& cfg, const Schedule& sched,
                 const ValueParams& v, const PolicyParams& p, std::uint64_t seed,
                 long episode_offset = 0);

    const ValueParams& value() const { return v_; }
    const PolicyParams& policy() const { return p_; }
    double learn_wealth() const { return x_; }
    int step_index() const { return k_; }
    long episode_index() const { return episode_; }
    long fallbacks() const { return fallbacks_; }

    // Greedy weights at the current learn state (sum to 1); equal weights on a
    // degenerate normalization.
    Vec target_weights();

    // Advance one step. `rebalance` selects execute-vs-hold for the learn
    // portfolio; the synthetic runner passes k % f == 0, the backtest passes
    // its calendar rule. Rolls into the next episode after K steps.
    void step(const Vec& net_returns, double rf_step, bool rebalance);

    // Record the current (just-started) episode's executed path into `traj`.
    // Recording detaches automatically when the episode ends.
    void attach_trajectory(Trajectory* traj);

    std::vector<double> terminal_wealth;  // per completed episode

  private:
    struct StepContext {
        Mat phi2_inv;
        Mat chol;
        double logdet_phi2 = 0.0;
        void refresh(const Mat& phi2);
    };

    double t() const { return k_ * cfg_.dt; }
    std::uint64_t sample_id(int j) const;
    void begin_episode();
    void end_episode();
    void update_parameters(double t_k, double x_k, const Vec& net_returns, double rf_step);

    int d_, K_;
    OnlineConfig cfg_;
    Schedule sched_;
    ValueParams v_;
    PolicyParams p_;
    std::uint64_t seed_;
    long episode_;
    double x_ = 1.0;
    int k_ = 0;
    bool absorbed_ = false;
    Vec holdings_;
    bool have_prev_ = false;
    Eigen::Vector2d prev_theta_ = Eigen::Vector2d::Zero();
    Vec prev_phi1_;
    Mat prev_phi2_;
    StepContext ctx_;
    Trajectory* executed_ = nullptr;
    long fallbacks_ = 0;
};

// Per-step net asset returns consumed by the online loop; the synthetic feed
// draws from a MarketModel, the panel feed replays historical rows.
using ReturnFeed = std::function<Vec(long episode, int step, RandomStream& market_rng)>;

struct OnlineResult {
    ValueParams value;
    PolicyParams policy;
    Trajectory executed;                  // last episode's executed path
    std::vector<double> terminal_wealth;  // per episode
    std::vector<Vec> phi1_by_episode;     // post-episode iterates
    std::vector<double> w_by_episode;
    long equal_weight_fallbacks = 0;
};

OnlineResult run_online(const MarketModel& model, const OnlineConfig& cfg, const Schedule& sched,
                        const ValueParams& init_v, const PolicyParams& init_p, std::uint64_t seed);

// Generic variant: per-step simple net returns supplied by `feed`, risk-free
// net rate per step `rf_step`, episode length K steps.
OnlineResult run_online_feed(int d, int K, const ReturnFeed& feed, double rf_step,
                             const OnlineConfig& cfg, const Schedule& sched,
                             const ValueParams& init_v, const PolicyParams& init_p,
                             std::uint64_t seed, long episode_offset = 0);

}  // namespace ctrlmv
