#pragma once

// Internal fused episode loop shared by the model-driven baseline trainer and
// the panel-driven pre-trainer. Simulates one behaviour-policy episode and
// accumulates the discrete update sums in a single pass.

#include <cmath>
#include <vector>

#include "ctrlmv/actor_critic.hpp"
#include "ctrlmv/rng.hpp"

namespace ctrlmv::detail {

constexpr double kLog2PiE = 2.8378770664093453;

// time-grid quantities shared by every episode of a run (phi3 is fixed)
struct EpisodeGrid {
    int K;
    double dt, T;
    std::vector<double> t;      // t_k, k = 0..K
    std::vector<double> decay;  // e^{-phi3 (T - t_k)}
    std::vector<double> scale;  // e^{phi3 (T - t_k) / 2}
    std::vector<double> gj1, gj2;

    EpisodeGrid(int K_, double dt_, double T_, double phi3) : K(K_), dt(dt_), T(T_) {
        t.resize(K + 1);
        decay.resize(K + 1);
        scale.resize(K);
        gj1.resize(K);
        gj2.resize(K);
        for (int k = 0; k <= K; ++k) {
            t[k] = k * dt;
            decay[k] = std::exp(-phi3 * (T - t[k]));
        }
        for (int k = 0; k < K; ++k) {
            scale[k] = std::exp(0.5 * phi3 * (T - t[k]));
            gj1[k] = t[k] - T;
            gj2[k] = t[k] * t[k] - T * T;
        }
    }
};

struct EpisodeWorkspace {
    Vec u, dev, ret, z, tmp;
    explicit EpisodeWorkspace(int d) : u(d), dev(d), ret(d), z(d), tmp(d) {}
};

// ReturnFn: void(int k, RandomStream&, Vec& net_returns). Returns terminal
// wealth. With `absorb` set, paths truncate at zero wealth and accumulation
// stops after the crossing step; the trainers run unconstrained so their
// increment means coincide with the closed-form h functions.
template <class ReturnFn>
double run_episode_kernel(int d, const EpisodeGrid& grid, double x0, double rf_step,
                          const ValueParams& v, const PolicyParams& p, const Mat& phi2_chol,
                          const Mat& phi2_inv, double logdet_phi2, RandomStream& rng,
                          EpisodeWorkspace& ws, ReturnFn&& next_returns,
                          Eigen::Vector2d& g_theta, Vec& z1, Mat& z2, bool absorb = false) {
    const double gamma = p.gamma;
    const double H = -0.5 * d * kLog2PiE - 0.5 * logdet_phi2;

    double x = x0;
    for (int k = 0; k < grid.K; ++k) {
        const double D = x - p.w;
        rng.fill_normal(ws.z);
        ws.u.noalias() = phi2_chol * ws.z;
        ws.u = -p.phi1 * D + grid.scale[k] * ws.u;
        next_returns(k, rng, ws.ret);
        double xn = x + ws.u.dot(ws.ret) - ws.u.sum() * rf_step;
        const bool absorbed = absorb && xn <= 0.0;
        if (absorbed) xn = 0.0;

        const double Dn = xn - p.w;
        const double dJ = Dn * Dn * grid.decay[k + 1] - D * D * grid.decay[k] +
                          v.theta2 * (grid.t[k + 1] * grid.t[k + 1] - grid.t[k] * grid.t[k]) +
                          v.theta1 * (grid.t[k + 1] - grid.t[k]);
        const double p_hat = H - 0.5 * d * p.phi3 * (grid.T - grid.t[k]);
        const double delta = dJ + gamma * p_hat * grid.dt;

        g_theta[0] += grid.gj1[k] * delta;
        g_theta[1] += grid.gj2[k] * delta;

        ws.dev = ws.u + p.phi1 * D;
        ws.tmp.noalias() = phi2_inv * ws.dev;
        const double Gk = grid.decay[k];
        z1 += (-Gk * D * delta) * ws.tmp;
        z2 += (0.5 * delta) * p.phi2 - (0.5 * Gk * delta) * (ws.dev * ws.dev.transpose());
        z2 += (0.5 * gamma * grid.dt) * p.phi2;

        x = xn;
        if (absorbed) break;
    }
    return x;
}

}  // namespace ctrlmv::detail
