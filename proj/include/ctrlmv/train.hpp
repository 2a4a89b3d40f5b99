#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ctrlmv/actor_critic.hpp"
#include "ctrlmv/market.hpp"
#include "ctrlmv/schedule.hpp"

namespace ctrlmv {

struct TrainConfig {
    double z = 1.4;
    double gamma = 0.1;
    long episodes = 10000;
    double dt = 0.004;
    int multiplier_period = 1;  // w updated every M iterations (batch-mean gap)
    int batch_size = 1;         // episodes averaged per iteration
    double x0 = 1.0;
    double T = 1.0;
    // Training episodes follow the unconstrained wealth process by default:
    // the update-increment means then equal the closed-form h functions and
    // the iterates converge to the closed-form optimum. Zero-truncation is an
    // execution-side convention, not part of the learning dynamics.
    bool absorb_at_zero = false;

    void validate() const;
};

// Discrete episode sums behind the four update rules:
//   g_theta = sum_k dJ/dtheta [dJ_k + gamma p_hat dt]
//   z1      = sum_k dlogpi/dphi1 [dJ_k + gamma p_hat dt]
//   z2      = sum_k dlogpi/dphi2inv [dJ_k + gamma p_hat dt] + gamma (phi2/2) dt
//   terminal_gap = x(T) - z
// Steps after wealth absorption contribute nothing.
struct EpisodeIncrements {
    Eigen::Vector2d g_theta;
    Vec z1;
    Mat z2;
    double terminal_gap = 0.0;
};

EpisodeIncrements episode_increments(const Trajectory& traj, const ValueParams& v,
                                     const PolicyParams& p, double dt, double z, double T);

// called after each iteration's updates with the new parameters
using IterObserver = std::function<void(long n, const ValueParams&, const PolicyParams&)>;

struct TrainResult {
    ValueParams value;
    PolicyParams policy;
    // post-update iterates, filled when record_history is set
    std::vector<double> theta1, theta2, w;
    std::vector<Vec> phi1;
    std::vector<Mat> phi2;
};

// Episodic baseline trainer: for n = 1..N simulate one mini-batch of episodes
// under the current policy, then apply the projected updates
//   theta <- Pi(theta + a_n g_theta),  phi1 <- Pi(phi1 - a_n z1),
//   phi2 <- Pi(phi2 + a_n z2),         w <- Pi(w - a_{w,n} mean_gap).
TrainResult train_baseline(const MarketModel& model, const TrainConfig& cfg, const Schedule& sched,
                           const ValueParams& init_v, const PolicyParams& init_p,
                           std::uint64_t seed, const IterObserver& observer = {},
                           bool record_history = true);

// Iterate-history CSV per the module interface; oracle errors are filled when
// an oracle is supplied (columns left empty otherwise).
void write_history_csv(const std::string& path, const TrainResult& result,
                       const Vec* phi1_star = nullptr, const Mat* phi2_star = nullptr,
                       const double* w_star = nullptr);

}  // namespace ctrlmv
