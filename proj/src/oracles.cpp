#include "ctrlmv/oracles.hpp"

#include <cmath>

namespace ctrlmv {

namespace {
// (e^y - 1)/y and (e^y - 1 - y)/y^2 with series branches near 0
double f1(double y) {
    if (std::abs(y) < 1e-8) return 1.0 + y / 2.0 + y * y / 6.0;
    return std::expm1(y) / y;
}
double f2(double y) {
    if (std::abs(y) < 1e-8) return 0.5 + y / 6.0 + y * y / 24.0;
    return (std::expm1(y) - y) / (y * y);
}
}  // namespace

OracleSet optimal_params(const MarketModel& model, double gamma, double z, double x0, double T) {
    const Vec ex = model.excess();
    Eigen::LLT<Mat> llt(model.Sigma);
    if (llt.info() != Eigen::Success) throw numerical_error("optimal_params: singular Sigma");
    OracleSet o;
    o.phi1_star = llt.solve(ex);
    o.phi2_star = 0.5 * gamma * llt.solve(Mat::Identity(model.dim(), model.dim()));
    o.k = ex.dot(o.phi1_star) * T;
    o.sr_star = std::sqrt(std::expm1(o.k));
    o.degenerate = o.k < 1e-14;
    if (o.degenerate) {
        o.w_star = std::numeric_limits<double>::quiet_NaN();
    } else {
        const double ek = std::exp(o.k);
        o.w_star = (z * ek - x0) / (ek - 1.0);
    }
    return o;
}

double oracle_Q(const MarketModel& model, const Vec& phi1, double phi3) {
    const Vec ex = model.excess();
    return -2.0 * ex.dot(phi1) + phi1.dot(model.Sigma * phi1) + phi3;
}

double oracle_R(const MarketModel& model, const Vec& phi1, const Mat& phi2, double w, double phi3,
                double x0, double T) {
    const double Q = oracle_Q(model, phi1, phi3);
    const double trSphi2 = (model.Sigma.cwiseProduct(phi2)).sum();
    const double y = Q * T;
    return 2.0 * ((x0 - w) * (x0 - w) * std::exp(-phi3 * T) * T * f1(y) + trSphi2 * T * T * f2(y));
}

Vec h1(const Vec& phi1, const Mat& phi2, double w, const MarketModel& model, double phi3,
       double x0, double T) {
    const double R = oracle_R(model, phi1, phi2, w, phi3, x0, T);
    return -R * (model.excess() - model.Sigma * phi1);
}

Mat h2(const Mat& phi2, const MarketModel& model, double gamma, double T) {
    return (0.5 * gamma * phi2 - phi2 * model.Sigma * phi2) * T;
}

double hw(const Vec& phi1, double w, const MarketModel& model, double x0, double z, double T) {
    const double eAT = std::exp(-model.excess().dot(phi1) * T);
    return (1.0 - eAT) * w + (x0 * eAT - z);
}

double sharpe_closed_form(const Vec& phi1, const MarketModel& model, double T) {
    const double B = phi1.dot(model.Sigma * phi1);
    if (B < 1e-16) return 0.0;  // 0/0 form at phi1 = 0, documented convention
    const double A = model.excess().dot(phi1);
    return std::expm1(A * T) / std::sqrt(std::expm1(B * T));
}

std::pair<double, double> fit_loglog_slope(const std::vector<std::pair<double, double>>& series,
                                           long burn_in) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long m = 0;
    for (const auto& [n, v] : series) {
        if (n < static_cast<double>(burn_in)) continue;
        if (!(v > 0.0)) throw invalid_input("fit_loglog_slope: non-positive value after burn-in");
        const double lx = std::log(n), ly = std::log(v);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    require(m >= 10, "fit_loglog_slope: need at least 10 points after burn-in");
    const double denom = m * sxx - sx * sx;
    const double slope = (m * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / m;
    return {slope, intercept};
}

std::vector<double> cumulative_regret(const std::vector<Vec>& phi1_history, const OracleSet& oracle,
                                      const MarketModel& model, double T) {
    std::vector<double> out(phi1_history.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < phi1_history.size(); ++i) {
        acc += oracle.sr_star - sharpe_closed_form(phi1_history[i], model, T);
        out[i] = acc;
    }
    return out;
}

double exploratory_terminal_variance(const MarketModel& model, const Vec& phi1, const Mat& phi2,
                                     double phi3, double w, double x0, double T) {
    auto [mean, second] = exploratory_moments(model, phi1, phi2, phi3, w, x0, T, T);
    return second - mean * mean;
}

}  // namespace ctrlmv
