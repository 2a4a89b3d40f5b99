#include "ctrlmv/actor_critic.hpp"

#include <cmath>

namespace ctrlmv {

namespace {

constexpr double kLog2PiE = 2.8378770664093453;  // log(2 pi e)
constexpr double kLog2Pi = 1.8378770664093453;   // log(2 pi)

// Symmetric factorization of phi2; throws if not SPD or too ill-conditioned.
Eigen::LLT<Mat> factor_phi2(const Mat& phi2) {
    require(phi2.rows() == phi2.cols(), "policy: phi2 must be square");
    require((phi2 - phi2.transpose()).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + phi2.cwiseAbs().maxCoeff()),
            "policy: phi2 must be symmetric");
    Eigen::LLT<Mat> llt(phi2);
    if (llt.info() != Eigen::Success)
        throw invalid_input("policy: phi2 must be positive definite");
    Eigen::SelfAdjointEigenSolver<Mat> es(phi2);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    if (!(lmin > 0.0) || lmax / lmin > 1e12)
        throw numerical_error("policy: phi2 ill-conditioned");
    return llt;
}

}  // namespace

void PolicyParams::validate() const {
    require(phi1.size() >= 1, "policy: phi1 must be non-empty");
    require(gamma >= 0.0, "policy: gamma must be non-negative");
    factor_phi2(phi2);
}

double value_J(double t, double x, const ValueParams& v, double w, double z, double T) {
    require(t >= 0.0 && t <= T, "value_J: t outside [0, T]");
    const double dx = x - w;
    const double dz = w - z;
    return dx * dx * std::exp(-v.theta3 * (T - t)) + v.theta2 * (t * t - T * T) +
           v.theta1 * (t - T) - dz * dz;
}

Eigen::Vector2d grad_J_theta(double t, double T) {
    require(t >= 0.0 && t <= T, "grad_J_theta: t outside [0, T]");
    return {t - T, t * t - T * T};
}

Vec sample_action(double t, double x, const PolicyParams& p, double T, RandomStream& rng) {
    auto llt = factor_phi2(p.phi2);
    Vec zvec(p.dim());
    rng.fill_normal(zvec);
    const double scale = std::exp(0.5 * p.phi3 * (T - t));
    return -p.phi1 * (x - p.w) + scale * (Mat(llt.matrixL()) * zvec);
}

double log_pi(const Vec& u, double t, double x, const PolicyParams& p, double T) {
    auto llt = factor_phi2(p.phi2);
    const int d = p.dim();
    require(u.size() == d, "log_pi: action dimension mismatch");
    const double tau = T - t;
    const Vec dev = u + p.phi1 * (x - p.w);
    // covariance = phi2 e^{phi3 tau}
    const Vec solved = llt.solve(dev);
    const double quad = dev.dot(solved) * std::exp(-p.phi3 * tau);
    double logdet_phi2 = 0.0;
    for (int i = 0; i < d; ++i) logdet_phi2 += 2.0 * std::log(llt.matrixL()(i, i));
    return -0.5 * d * kLog2Pi - 0.5 * (logdet_phi2 + d * p.phi3 * tau) - 0.5 * quad;
}

Vec grad_log_pi_phi1(const Vec& u, double t, double x, const PolicyParams& p, double T) {
    auto llt = factor_phi2(p.phi2);
    require(u.size() == p.dim(), "grad_log_pi_phi1: action dimension mismatch");
    const double dx = x - p.w;
    const double e = std::exp(-p.phi3 * (T - t));
    return -e * (dx * llt.solve(u) + dx * dx * llt.solve(p.phi1));
}

Mat grad_log_pi_phi2inv(const Vec& u, double t, double x, const PolicyParams& p, double T) {
    factor_phi2(p.phi2);
    require(u.size() == p.dim(), "grad_log_pi_phi2inv: action dimension mismatch");
    const double dx = x - p.w;
    const double e = std::exp(-p.phi3 * (T - t));
    const Vec dev = u + p.phi1 * dx;
    return 0.5 * p.phi2 - 0.5 * e * (dev * dev.transpose());
}

double entropy_hat(double t, const PolicyParams& p, double T) {
    auto llt = factor_phi2(p.phi2);
    const int d = p.dim();
    double logdet_phi2 = 0.0;
    for (int i = 0; i < d; ++i) logdet_phi2 += 2.0 * std::log(llt.matrixL()(i, i));
    return -0.5 * d * kLog2PiE - 0.5 * logdet_phi2 - 0.5 * d * p.phi3 * (T - t);
}

Vec execute_deterministic(double /*t*/, double x, const PolicyParams& p) {
    return -p.phi1 * (x - p.w);
}

}  // namespace ctrlmv
