#include "ctrlmv/market.hpp"

#include <cmath>

namespace ctrlmv {

MarketModel::MarketModel(Vec mu_, Mat sigma_, double r_)
    : mu(std::move(mu_)), sigma(std::move(sigma_)), r(r_) {
    const auto d = mu.size();
    require(d >= 1, "market: need at least one asset");
    require(sigma.rows() == d, "market: sigma must have d rows");
    require(sigma.cols() >= d, "market: need m >= d Brownian drivers");
    Sigma = sigma * sigma.transpose();
    Sigma = 0.5 * (Sigma + Sigma.transpose());  // kill rounding asymmetry
    Eigen::SelfAdjointEigenSolver<Mat> es(Sigma);
    const double lmax = es.eigenvalues().maxCoeff();
    require(es.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, lmax),
            "market: Sigma must be strictly positive definite");
    chol = Sigma.llt().matrixL();
}

MarketModel MarketModel::from_vols(const Vec& mu_, const Vec& vols, double corr, double r_) {
    const auto d = mu_.size();
    require(vols.size() == d, "market: vols size mismatch");
    Mat C = Mat::Constant(d, d, corr);
    C.diagonal().setOnes();
    Mat S = vols.asDiagonal() * C * vols.asDiagonal();
    // factor S so that sigma sigma^T reproduces it exactly
    Eigen::LLT<Mat> llt(S);
    require(llt.info() == Eigen::Success, "market: vol/correlation matrix not positive definite");
    return MarketModel(mu_, llt.matrixL(), r_);
}

void SimConfig::validate() const {
    require(x0 > 0.0, "sim: x0 must be positive");
    require(dt > 0.0 && dt <= T, "sim: need 0 < dt <= T");
}

double step_wealth(double x, const Vec& u, const Vec& asset_log_returns, double dt, double r) {
    require(dt > 0.0, "step_wealth: dt must be positive");
    if (!std::isfinite(x)) throw numerical_error("step_wealth: non-finite wealth");
    if (!u.allFinite() || !asset_log_returns.allFinite())
        throw numerical_error("step_wealth: non-finite inputs");
    double gain = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) gain += u[i] * std::expm1(asset_log_returns[i]);
    gain -= u.sum() * std::expm1(r * dt);
    return x + gain;
}

void sample_log_returns(const MarketModel& model, double dt, RandomStream& rng, Vec& out, Vec& z) {
    rng.fill_normal(z);
    out.noalias() = model.chol * z;
    out *= std::sqrt(dt);
    out += (model.mu - 0.5 * model.Sigma.diagonal()) * dt;
}

Vec sample_log_returns(const MarketModel& model, double dt, RandomStream& rng) {
    Vec out(model.dim()), z(model.dim());
    sample_log_returns(model, dt, rng, out, z);
    return out;
}

Trajectory simulate_episode(const MarketModel& model, const SimConfig& cfg, const PolicyFn& policy,
                            RandomStream& rng) {
    cfg.validate();
    const int K = cfg.steps();
    const int d = model.dim();
    Trajectory traj;
    traj.times.resize(K + 1);
    traj.wealth.resize(K + 1);
    traj.actions.resize(K);

    Vec lr(d), z(d);
    double x = cfg.x0;
    bool absorbed = false;
    traj.wealth[0] = x;
    for (int k = 0; k < K; ++k) {
        const double t = k * cfg.dt;
        traj.times[k] = t;
        if (absorbed) {
            traj.actions[k] = Vec::Zero(d);
            traj.wealth[k + 1] = 0.0;
            continue;
        }
        Vec u = policy(t, x, rng);
        require(u.size() == d, "simulate_episode: policy returned wrong dimension");
        sample_log_returns(model, cfg.dt, rng, lr, z);
        x = step_wealth(x, u, lr, cfg.dt, model.r);
        traj.actions[k] = std::move(u);
        if (cfg.absorb_at_zero && x <= 0.0) {
            x = 0.0;
            absorbed = true;
        }
        traj.wealth[k + 1] = x;
    }
    traj.times[K] = K * cfg.dt;
    return traj;
}

Trajectory simulate_episode(const MarketModel& model, const SimConfig& cfg, const PolicyFn& policy) {
    RandomStream rng(cfg.seed, 0, 0);
    return simulate_episode(model, cfg, policy, rng);
}

namespace {
// (e^y - 1)/y, with the small-|y| expansion used near the singularity
double expm1_over(double y) {
    if (std::abs(y) < 1e-8) return 1.0 + y / 2.0 + y * y / 6.0;
    return std::expm1(y) / y;
}
}  // namespace

std::pair<double, double> exploratory_moments(const MarketModel& model, const Vec& phi1,
                                              const Mat& phi2, double phi3, double w, double x0,
                                              double t, double T) {
    require(t >= 0.0 && t <= T, "exploratory_moments: t outside [0, T]");
    require(phi1.size() == model.dim(), "exploratory_moments: phi1 dimension mismatch");
    const Vec ex = model.excess();
    const double A = ex.dot(phi1);
    const double B = phi1.dot(model.Sigma * phi1);
    const double trSphi2 = (model.Sigma.cwiseProduct(phi2)).sum();
    const double Q = -2.0 * A + B + phi3;

    const double mean = (x0 - w) * std::exp(-A * t);
    // E[(x - w)^2] = (x0-w)^2 e^{(B-2A)t} + <Sigma, phi2> e^{phi3 (T-t)} t (e^{Qt}-1)/(Qt)
    const double second = (x0 - w) * (x0 - w) * std::exp((B - 2.0 * A) * t) +
                          trSphi2 * std::exp(phi3 * (T - t)) * t * expm1_over(Q * t);
    return {mean, second};
}

}  // namespace ctrlmv
