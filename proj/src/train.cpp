#include "ctrlmv/train.hpp"

#include <cmath>
#include <fstream>

#include "episode_kernel.hpp"

namespace ctrlmv {

void TrainConfig::validate() const {
    require(episodes >= 1, "train: need at least one episode");
    require(multiplier_period >= 1, "train: multiplier period must be >= 1");
    require(batch_size >= 1, "train: batch size must be >= 1");
    require(dt > 0.0 && dt <= T, "train: need 0 < dt <= T");
    require(x0 > 0.0, "train: x0 must be positive");
}

EpisodeIncrements episode_increments(const Trajectory& traj, const ValueParams& v,
                                     const PolicyParams& p, double dt, double z, double T) {
    const int d = p.dim();
    require(!traj.actions.empty() && traj.wealth.size() == traj.actions.size() + 1,
            "episode_increments: malformed trajectory");
    for (const auto& u : traj.actions)
        require(u.size() == d, "episode_increments: action dimension mismatch");

    Eigen::LLT<Mat> llt(p.phi2);
    if (llt.info() != Eigen::Success)
        throw invalid_input("episode_increments: phi2 not positive definite");
    double logdet = 0.0;
    for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    const double H = -0.5 * d * detail::kLog2PiE - 0.5 * logdet;

    EpisodeIncrements inc;
    inc.g_theta.setZero();
    inc.z1 = Vec::Zero(d);
    inc.z2 = Mat::Zero(d, d);
    const int K = static_cast<int>(traj.actions.size());
    for (int k = 0; k < K; ++k) {
        const double x = traj.wealth[k];
        if (x == 0.0) break;  // absorbed
        const double t0 = k * dt, t1 = (k + 1) * dt;
        const double J0 = value_J(t0, x, v, p.w, z, T);
        const double J1 = value_J(t1, traj.wealth[k + 1], v, p.w, z, T);
        const double p_hat = H - 0.5 * d * p.phi3 * (T - t0);
        const double delta = (J1 - J0) + p.gamma * p_hat * dt;

        inc.g_theta += grad_J_theta(t0, T) * delta;
        const double D = x - p.w;
        const double Gk = std::exp(-p.phi3 * (T - t0));
        const Vec dev = traj.actions[k] + p.phi1 * D;
        inc.z1 += (-Gk * D * delta) * llt.solve(dev);
        inc.z2 += delta * (0.5 * p.phi2 - 0.5 * Gk * (dev * dev.transpose()));
        inc.z2 += (0.5 * p.gamma * dt) * p.phi2;
    }
    inc.terminal_gap = traj.wealth.back() - z;
    return inc;
}

TrainResult train_baseline(const MarketModel& model, const TrainConfig& cfg, const Schedule& sched,
                           const ValueParams& init_v, const PolicyParams& init_p,
                           std::uint64_t seed, const IterObserver& observer, bool record_history) {
    cfg.validate();
    init_p.validate();
    require(init_p.dim() == model.dim(), "train: phi1 dimension mismatch");

    const int d = model.dim();
    const int K = static_cast<int>(std::floor(cfg.T / cfg.dt + 0.5));
    const detail::EpisodeGrid grid(K, cfg.dt, cfg.T, init_p.phi3);
    detail::EpisodeWorkspace ws(d);
    const double rf_step = std::expm1(model.r * cfg.dt);
    const Vec drift_dt = (model.mu - 0.5 * model.Sigma.diagonal()) * cfg.dt;
    const double sqdt = std::sqrt(cfg.dt);
    Vec lr(d);

    ValueParams v = init_v;
    PolicyParams p = init_p;
    TrainResult res;
    if (record_history) {
        res.theta1.reserve(cfg.episodes);
        res.theta2.reserve(cfg.episodes);
        res.w.reserve(cfg.episodes);
        res.phi1.reserve(cfg.episodes);
        res.phi2.reserve(cfg.episodes);
    }

    Eigen::Vector2d g_theta;
    Vec z1(d);
    Mat z2(d, d);
    double gap_acc = 0.0;
    int gap_count = 0;

    for (long n = 1; n <= cfg.episodes; ++n) {
        Eigen::LLT<Mat> llt(p.phi2);
        if (llt.info() != Eigen::Success)
            throw numerical_error("train: phi2 lost positive definiteness at iteration " +
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
            const auto market_step = [&](int /*k*/, RandomStream& r, Vec& out) {
                r.fill_normal(ws.z);
                lr.noalias() = model.chol * ws.z;
                lr = drift_dt + sqdt * lr;
                out = lr.array().exp() - 1.0;
            };
            const double xT = detail::run_episode_kernel(d, grid, cfg.x0, rf_step, v, p, chol,
                                                         phi2_inv, logdet, rng, ws, market_step,
                                                         g_theta, z1, z2,
                                                         cfg.absorb_at_zero);
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

        if (!std::isfinite(v.theta1) || !std::isfinite(v.theta2) || !std::isfinite(p.w) ||
            !p.phi1.allFinite() || !p.phi2.allFinite())
            throw numerical_error("train: numerical overflow at iteration " + std::to_string(n));

        if (record_history) {
            res.theta1.push_back(v.theta1);
            res.theta2.push_back(v.theta2);
            res.w.push_back(p.w);
            res.phi1.push_back(p.phi1);
            res.phi2.push_back(p.phi2);
        }
        if (observer) observer(n, v, p);
    }
    res.value = v;
    res.policy = p;
    return res;
}

void write_history_csv(const std::string& path, const TrainResult& result, const Vec* phi1_star,
                       const Mat* phi2_star, const double* w_star) {
    std::ofstream out(path);
    if (!out) throw data_error("write_history_csv: cannot open " + path);
    const long N = static_cast<long>(result.theta1.size());
    const int d = N > 0 ? static_cast<int>(result.phi1[0].size()) : 0;
    out << "n,theta1,theta2";
    for (int i = 0; i < d; ++i) out << ",phi1_" << i;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) out << ",phi2_" << i << j;
    out << ",w,mse_phi1,mse_phi2,mse_w\n";
    out.precision(12);
    for (long n = 0; n < N; ++n) {
        out << (n + 1) << ',' << result.theta1[n] << ',' << result.theta2[n];
        for (int i = 0; i < d; ++i) out << ',' << result.phi1[n][i];
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) out << ',' << result.phi2[n](i, j);
        out << ',' << result.w[n] << ',';
        if (phi1_star) out << (result.phi1[n] - *phi1_star).squaredNorm();
        out << ',';
        if (phi2_star) out << (result.phi2[n] - *phi2_star).squaredNorm();
        out << ',';
        if (w_star) out << (result.w[n] - *w_star) * (result.w[n] - *w_star);
        out << '\n';
    }
}

}  // namespace ctrlmv
