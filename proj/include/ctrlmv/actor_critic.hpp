#pragma once

#include "ctrlmv/common.hpp"
#include "ctrlmv/rng.hpp"

namespace ctrlmv {

// Critic parameters. theta3 is the fixed hyperparameter shared with the
// policy's phi3; it is never updated by the trainers.
struct ValueParams {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double theta3 = 1.0;
};

// Actor parameters of the Gaussian policy N(-phi1 (x - w), phi2 e^{phi3 (T-t)})
// plus the Lagrange multiplier w and the entropy temperature gamma.
struct PolicyParams {
    Vec phi1;
    Mat phi2;
    double phi3 = 1.0;
    double w = 1.0;
    double gamma = 0.1;

    int dim() const { return static_cast<int>(phi1.size()); }
    void validate() const;
};

// (x - w)^2 e^{-theta3 (T-t)} + theta2 (t^2 - T^2) + theta1 (t - T) - (w - z)^2
double value_J(double t, double x, const ValueParams& v, double w, double z, double T);

// (dJ/dtheta1, dJ/dtheta2) = (t - T, t^2 - T^2)
Eigen::Vector2d grad_J_theta(double t, double T);

Vec sample_action(double t, double x, const PolicyParams& p, double T, RandomStream& rng);

double log_pi(const Vec& u, double t, double x, const PolicyParams& p, double T);
Vec grad_log_pi_phi1(const Vec& u, double t, double x, const PolicyParams& p, double T);
Mat grad_log_pi_phi2inv(const Vec& u, double t, double x, const PolicyParams& p, double T);

// E[log pi] of the policy at time t; depends only on phi2, phi3 and t.
double entropy_hat(double t, const PolicyParams& p, double T);

// greedy action -phi1 (x - w)
Vec execute_deterministic(double t, double x, const PolicyParams& p);

}  // namespace ctrlmv
