#include "ctrlmv/schedule.hpp"

#include <cmath>

namespace ctrlmv {

double Schedule::grow8(long n) {
    if (n < 16) return 1.0;  // log log n <= 1 up to e^e
    const double ll = std::log(std::log(static_cast<double>(n)));
    return ll <= 1.0 ? 1.0 : std::pow(ll, 1.0 / 8.0);
}

double Schedule::grow16(long n) {
    if (n < 16) return 1.0;
    const double ll = std::log(std::log(static_cast<double>(n)));
    return ll <= 1.0 ? 1.0 : std::pow(ll, 1.0 / 16.0);
}

double Schedule::a(long n) const {
    return constant_rates ? alpha : alpha / (static_cast<double>(n) + beta);
}

double Schedule::a_w(long n) const {
    const double aw = alpha_w < 0.0 ? alpha : alpha_w;
    return constant_rates ? aw : aw / (static_cast<double>(n) + beta);
}

std::vector<std::string> Schedule::validate() const {
    std::vector<std::string> warnings;
    if (!(alpha > 0.0)) warnings.push_back("schedule: alpha must be positive");
    if (!constant_rates && !(beta > 0.0)) warnings.push_back("schedule: beta must be positive");
    if (!(c_theta1 > 0.0 && c_theta2 > 0.0)) warnings.push_back("schedule: theta caps must be positive");
    if (!(c1_scale > 0.0 && c2_scale > 0.0 && cw_scale > 0.0 && b_scale > 0.0))
        warnings.push_back("schedule: radius scales must be positive");
    if (constant_rates)
        warnings.push_back("schedule: constant rates do not satisfy the decaying-rate condition");
    for (long n : {1L, 10L, 100L, 10000L}) {
        if (a(n + 1) > a(n) + 1e-15) warnings.push_back("schedule: a_n must be non-increasing");
        if (c1(n + 1) < c1(n) || c2(n + 1) < c2(n) || cw(n + 1) < cw(n))
            warnings.push_back("schedule: radii must be non-decreasing");
    }
    // the feasible phi2 band must be non-empty at n = 1
    if (c2(1) < phi2_floor(1)) warnings.push_back("schedule: phi2 cap below eigen floor");
    return warnings;
}

Vec project_box(const Vec& v, double radius) {
    require(radius > 0.0, "project_box: radius must be positive");
    const double norm = v.norm();
    if (norm <= radius) return v;
    return v * (radius / norm);
}

double project_box(double v, double radius) {
    require(radius > 0.0, "project_box: radius must be positive");
    return std::clamp(v, -radius, radius);
}

Mat project_psd_band(const Mat& A, double floor_, double cap) {
    require(A.allFinite(), "project_psd_band: non-finite matrix");
    require(floor_ > 0.0 && cap > 0.0, "project_psd_band: floor and cap must be positive");
    const int d = static_cast<int>(A.rows());
    if (cap < floor_ * std::sqrt(static_cast<double>(d)))
        throw invalid_input("project_psd_band: empty feasible set (cap < floor * sqrt(d))");

    Mat S = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    Vec lam = es.eigenvalues().cwiseMax(floor_);
    const auto norm_of = [&](const Vec& l) { return l.norm(); };  // Frobenius = eigenvalue l2

    if (norm_of(lam) > cap) {
        // shrink toward the floor: lam(s) = floor + s (lam - floor)
        double lo = 0.0, hi = 1.0;
        const Vec excess = lam.array() - floor_;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double nrm = norm_of(Vec(floor_ + mid * excess.array()));
            if (nrm > cap)
                hi = mid;
            else
                lo = mid;
            if (hi - lo < 1e-14 && std::abs(nrm - cap) < 1e-10) break;
        }
        const double s = 0.5 * (lo + hi);
        lam = floor_ + s * excess.array();
    }
    Mat out = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

}  // namespace ctrlmv
