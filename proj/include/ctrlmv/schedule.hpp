#pragma once

#include <string>
#include <vector>

#include "ctrlmv/common.hpp"

namespace ctrlmv {

// Learning rates and expanding projection radii of the stochastic
// approximation recursion:
//   a_n = a_{w,n} = alpha / (n + beta)
//   cap on |phi1|:  c1_scale * (1 v (log log n)^{1/8})
//   cap on |phi2|:  c2_scale * (1 v (log log n)^{1/8})
//   cap on |w|:     cw_scale * (1 v (log log n)^{1/16})
//   eigen floor:    1 / (b_scale * (1 v (log log n)^{1/8}))
// The theory fixes only the n-dependence of the radii; the scale factors are
// free constants and must be large enough that the sets contain the optimum
// one is converging to.
struct Schedule {
    double alpha = 1.0;
    double beta = 1.0;
    double alpha_w = -1.0;        // < 0 means "same as alpha"
    bool constant_rates = false;  // a_n = alpha, a_{w,n} = alpha_w (pre-training mode)

    double c_theta1 = 100.0;
    double c_theta2 = 100.0;
    double c1_scale = 4.0;
    double c2_scale = 2.0;
    double cw_scale = 4.0;
    double b_scale = 20.0;

    double a(long n) const;
    double a_w(long n) const;
    double c1(long n) const { return c1_scale * grow8(n); }
    double c2(long n) const { return c2_scale * grow8(n); }
    double cw(long n) const { return cw_scale * grow16(n); }
    double phi2_floor(long n) const { return 1.0 / (b_scale * grow8(n)); }

    // Checks the schedule shape conditions (positive decreasing rates,
    // non-decreasing radii); returns human-readable warnings, empty when fine.
    std::vector<std::string> validate() const;

    static double grow8(long n);   // 1 v (log log n)^{1/8}
    static double grow16(long n);  // 1 v (log log n)^{1/16}
};

// Euclidean projection onto the ball { |v| <= radius }.
Vec project_box(const Vec& v, double radius);
// Scalar clamp onto [-radius, radius].
double project_box(double v, double radius);

// Projection-style map onto { S symmetric, eig(S) >= floor, |S|_F <= cap }:
// symmetrize, clamp eigenvalues up to the floor, then if the Frobenius norm
// exceeds the cap shrink eigenvalues toward the floor by the unique s in [0,1]
// (bisection, 1e-10 norm tolerance) that attains it.
Mat project_psd_band(const Mat& A, double floor_, double cap);

}  // namespace ctrlmv
