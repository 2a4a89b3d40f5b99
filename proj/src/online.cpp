#include "ctrlmv/online.hpp"

#include <cmath>

namespace ctrlmv {

namespace {
constexpr double kLog2PiE = 2.8378770664093453;
}

void OnlineConfig::validate() const {
    require(rebalance_every >= 1, "online: rebalance frequency must be >= 1");
    require(batch >= 1, "online: batch must be >= 1");
    require(multiplier_period >= 1, "online: multiplier period must be >= 1");
    require(episodes >= 1, "online: need at least one episode");
    require(dt > 0.0 && dt <= T, "online: need 0 < dt <= T");
    require(std::isfinite(w_prev) && std::isfinite(w_curr), "online: blend weights must be finite");
}

StepGradients step_gradients(double t_k, double x_k, const Vec& u_k, double x_k1,
                             const ValueParams& v, const PolicyParams& p, double dt, double z,
                             double T) {
    require(u_k.size() == p.dim(), "step_gradients: dimension mismatch");
    const double t_k1 = t_k + dt;
    const double delta = value_J(t_k1, x_k1, v, p.w, z, T) - value_J(t_k, x_k, v, p.w, z, T) +
                         p.gamma * entropy_hat(t_k, p, T) * dt;
    StepGradients g;
    g.g_theta = grad_J_theta(t_k, T) * delta;
    g.g_phi1 = grad_log_pi_phi1(u_k, t_k, x_k, p, T) * delta;
    g.g_phi2inv = grad_log_pi_phi2inv(u_k, t_k, x_k, p, T) * delta + 0.5 * p.gamma * dt * p.phi2;
    return g;
}

Vec project_risky_only(const Vec& u, double x) {
    const double s = u.sum();
    if (std::abs(s) < 1e-10 * std::max(1.0, std::abs(x)))
        throw degenerate_action("project_risky_only: portfolio sums to ~0");
    return u * (x / s);
}

void OnlineTrader::StepContext::refresh(const Mat& phi2) {
    Eigen::LLT<Mat> llt(phi2);
    if (llt.info() != Eigen::Success)
        throw numerical_error("online: phi2 lost positive definiteness");
    chol = llt.matrixL();
    const int d = static_cast<int>(phi2.rows());
    phi2_inv = llt.solve(Mat::Identity(d, d));
    logdet_phi2 = 0.0;
    for (int i = 0; i < d; ++i) logdet_phi2 += 2.0 * std::log(chol(i, i));
}

OnlineTrader::OnlineTrader(int d, int K, const OnlineConfig& cfg, const Schedule& sched,
                           const ValueParams& v, const PolicyParams& p, std::uint64_t seed,
                           long episode_offset)
    : d_(d), K_(K), cfg_(cfg), sched_(sched), v_(v), p_(p), seed_(seed),
      episode_(episode_offset + 1) {
    cfg_.validate();
    p_.validate();
    require(p_.dim() == d, "online: phi1 dimension mismatch");
    require(K >= 1, "online: need at least one step per episode");
    begin_episode();
}

Vec OnlineTrader::target_weights() {
    if (x_ <= 0.0) {  // learn episode absorbed; stay neutral until it resets
        ++fallbacks_;
        return Vec::Constant(d_, 1.0 / d_);
    }
    Vec u = execute_deterministic(t(), x_, p_);
    try {
        return project_risky_only(u, x_) / x_;
    } catch (const degenerate_action&) {
        ++fallbacks_;
        return Vec::Constant(d_, 1.0 / d_);
    }
}

std::uint64_t OnlineTrader::sample_id(int j) const {
    return 1 + static_cast<std::uint64_t>(k_) * static_cast<std::uint64_t>(cfg_.batch) +
           static_cast<std::uint64_t>(j);
}

void OnlineTrader::begin_episode() {
    x_ = cfg_.x0;
    k_ = 0;
    absorbed_ = false;
    have_prev_ = false;
    holdings_ = Vec::Zero(d_);
}

void OnlineTrader::attach_trajectory(Trajectory* traj) {
    executed_ = traj;
    if (traj != nullptr) {
        traj->times.assign(K_ + 1, 0.0);
        for (int k = 0; k <= K_; ++k) traj->times[k] = k * cfg_.dt;
        traj->wealth.assign(K_ + 1, 0.0);
        traj->wealth[0] = x_;
        traj->actions.assign(K_, Vec::Zero(d_));
    }
}

void OnlineTrader::end_episode() {
    terminal_wealth.push_back(x_);
    if (episode_ % cfg_.multiplier_period == 0) {
        const auto n_terms =
            std::min<std::size_t>(static_cast<std::size_t>(cfg_.multiplier_period),
                                  terminal_wealth.size());
        double mean = 0.0;
        for (std::size_t i = terminal_wealth.size() - n_terms; i < terminal_wealth.size(); ++i)
            mean += terminal_wealth[i];
        mean /= static_cast<double>(n_terms);
        p_.w = project_box(p_.w - sched_.a_w(episode_) * (mean - cfg_.z), sched_.cw(episode_));
    }
    executed_ = nullptr;  // recording is one episode at a time
    ++episode_;
    begin_episode();
}

void OnlineTrader::step(const Vec& net_returns, double rf_step, bool rebalance) {
    require(net_returns.size() == d_, "online: return vector dimension mismatch");
    const double t_k = t();
    const double x_k = x_;

    if (!absorbed_) {
        if (rebalance) {
            Vec u;
            if (cfg_.execution == ExecutionMode::behaviour) {
                RandomStream rng(seed_, static_cast<std::uint64_t>(episode_), sample_id(0));
                u = sample_action(t_k, x_, p_, cfg_.T, rng);
            } else {
                u = execute_deterministic(t_k, x_, p_);
                if (cfg_.risky_only) {
                    try {
                        u = project_risky_only(u, x_);
                    } catch (const degenerate_action&) {
                        ++fallbacks_;
                        u = Vec::Constant(d_, x_ / d_);
                    }
                }
            }
            holdings_ = u;
        }
        if (executed_ != nullptr) executed_->actions[k_] = holdings_;
        double xn = x_ + holdings_.dot(net_returns) - holdings_.sum() * rf_step;
        holdings_ = holdings_.cwiseProduct((1.0 + net_returns.array()).matrix()) / (1.0 + rf_step);
        if (cfg_.absorb_at_zero && xn <= 0.0) {
            xn = 0.0;
            absorbed_ = true;
            holdings_.setZero();
        }
        update_parameters(t_k, x_k, net_returns, rf_step);
        x_ = xn;
    } else if (executed_ != nullptr) {
        executed_->actions[k_] = Vec::Zero(d_);
    }
    if (executed_ != nullptr) executed_->wealth[k_ + 1] = x_;

    if (++k_ == K_) end_episode();
}

void OnlineTrader::update_parameters(double t_k, double x_k, const Vec& net_returns,
                                     double rf_step) {
    ctx_.refresh(p_.phi2);
    const double H = -0.5 * d_ * kLog2PiE - 0.5 * ctx_.logdet_phi2;
    const double tau = cfg_.T - t_k;
    const double p_hat = H - 0.5 * d_ * p_.phi3 * tau;
    const double Gk = std::exp(-p_.phi3 * tau);
    const double scale = std::exp(0.5 * p_.phi3 * tau);
    const double t_k1 = t_k + cfg_.dt;
    const double Gk1 = std::exp(-p_.phi3 * (cfg_.T - t_k1));
    const double D = x_k - p_.w;

    Eigen::Vector2d g_theta = Eigen::Vector2d::Zero();
    Vec g_phi1 = Vec::Zero(d_);
    Mat g_phi2inv = Mat::Zero(d_, d_);
    Vec zvec(d_), u(d_), dev(d_);
    for (int j = 0; j < cfg_.batch; ++j) {
        RandomStream rng(seed_, static_cast<std::uint64_t>(episode_), sample_id(j));
        rng.fill_normal(zvec);
        u.noalias() = ctx_.chol * zvec;
        u = -p_.phi1 * D + scale * u;
        // counterfactual wealth for u from the same realized returns
        const double xj = x_k + u.dot(net_returns) - u.sum() * rf_step;
        const double Dj = xj - p_.w;
        const double dJ = Dj * Dj * Gk1 - D * D * Gk + v_.theta2 * (t_k1 * t_k1 - t_k * t_k) +
                          v_.theta1 * (t_k1 - t_k);
        const double delta = dJ + cfg_.gamma * p_hat * cfg_.dt;
        g_theta[0] += (t_k - cfg_.T) * delta;
        g_theta[1] += (t_k * t_k - cfg_.T * cfg_.T) * delta;
        dev = u + p_.phi1 * D;
        g_phi1 += (-Gk * D * delta) * (ctx_.phi2_inv * dev);
        g_phi2inv += delta * (0.5 * p_.phi2 - 0.5 * Gk * (dev * dev.transpose()));
        g_phi2inv += (0.5 * cfg_.gamma * cfg_.dt) * p_.phi2;
    }
    const double inv_b = 1.0 / cfg_.batch;
    g_theta *= inv_b;
    g_phi1 *= inv_b;
    g_phi2inv *= inv_b;

    Eigen::Vector2d dir_theta = g_theta;
    Vec dir_phi1 = g_phi1;
    Mat dir_phi2 = g_phi2inv;
    if (have_prev_) {
        dir_theta = blend_update(prev_theta_, g_theta, cfg_.w_prev, cfg_.w_curr);
        dir_phi1 = blend_update(prev_phi1_, g_phi1, cfg_.w_prev, cfg_.w_curr);
        dir_phi2 = blend_update(prev_phi2_, g_phi2inv, cfg_.w_prev, cfg_.w_curr);
    }
    prev_theta_ = g_theta;
    prev_phi1_ = g_phi1;
    prev_phi2_ = g_phi2inv;
    have_prev_ = true;

    const double a = sched_.a(episode_);
    v_.theta1 = project_box(v_.theta1 + a * dir_theta[0], sched_.c_theta1);
    v_.theta2 = project_box(v_.theta2 + a * dir_theta[1], sched_.c_theta2);
    p_.phi1 = project_box(Vec(p_.phi1 - a * dir_phi1), sched_.c1(episode_));
    p_.phi2 =
        project_psd_band(p_.phi2 + a * dir_phi2, sched_.phi2_floor(episode_), sched_.c2(episode_));
    if (!std::isfinite(v_.theta1) || !std::isfinite(p_.w) || !p_.phi1.allFinite() ||
        !p_.phi2.allFinite())
        throw numerical_error("online: numerical overflow at episode " + std::to_string(episode_));
}

OnlineResult run_online_feed(int d, int K, const ReturnFeed& feed, double rf_step,
                             const OnlineConfig& cfg, const Schedule& sched,
                             const ValueParams& init_v, const PolicyParams& init_p,
                             std::uint64_t seed, long episode_offset) {
    OnlineTrader trader(d, K, cfg, sched, init_v, init_p, seed, episode_offset);
    OnlineResult res;
    Trajectory last;
    res.phi1_by_episode.reserve(cfg.episodes);
    res.w_by_episode.reserve(cfg.episodes);
    for (long e = 0; e < cfg.episodes; ++e) {
        const long episode_id = episode_offset + 1 + e;
        if (e == cfg.episodes - 1) trader.attach_trajectory(&last);
        RandomStream market_rng(seed, static_cast<std::uint64_t>(episode_id), 0);
        for (int k = 0; k < K; ++k) {
            const Vec r = feed(episode_id, k, market_rng);
            trader.step(r, rf_step, k % cfg.rebalance_every == 0);
        }
        res.phi1_by_episode.push_back(trader.policy().phi1);
        res.w_by_episode.push_back(trader.policy().w);
    }
    res.value = trader.value();
    res.policy = trader.policy();
    res.executed = std::move(last);
    res.terminal_wealth = std::move(trader.terminal_wealth);
    res.equal_weight_fallbacks = trader.fallbacks();
    return res;
}

OnlineResult run_online(const MarketModel& model, const OnlineConfig& cfg, const Schedule& sched,
                        const ValueParams& init_v, const PolicyParams& init_p,
                        std::uint64_t seed) {
    const int K = static_cast<int>(std::floor(cfg.T / cfg.dt + 0.5));
    const double rf_step = std::expm1(model.r * cfg.dt);
    ReturnFeed feed = [&model, &cfg](long /*episode*/, int /*step*/, RandomStream& rng) {
        Vec lr = sample_log_returns(model, cfg.dt, rng);
        return Vec(lr.array().exp() - 1.0);
    };
    return run_online_feed(model.dim(), K, feed, rf_step, cfg, sched, init_v, init_p, seed);
}

}  // namespace ctrlmv
