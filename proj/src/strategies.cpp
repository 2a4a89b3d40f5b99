#include "ctrlmv/strategies.hpp"

#include <cmath>

namespace ctrlmv {

namespace {

Eigen::LLT<Mat> factor_spd(const Mat& S, const char* who) {
    Eigen::LLT<Mat> llt(S);
    if (llt.info() != Eigen::Success)
        throw numerical_error(std::string(who) + ": covariance not positive definite");
    return llt;
}

// orthonormal basis of the zero-sum hyperplane {v : 1'v = 0}
Mat zero_sum_basis(int d) {
    Mat ones = Mat::Ones(d, 1);
    Eigen::HouseholderQR<Mat> qr(ones);
    Mat Q = qr.householderQ();
    return Q.rightCols(d - 1);
}

}  // namespace

MomentEstimate estimate_sample_moments(const Mat& window) {
    const int M = static_cast<int>(window.rows());
    require(M >= 2, "sample_moments: need at least two rows");
    MomentEstimate est;
    est.window = M;
    est.mu_hat = window.colwise().mean();
    Mat centered = window.rowwise() - est.mu_hat.transpose();
    est.sigma_hat = (centered.transpose() * centered) / (M - 1);
    est.sigma_hat = 0.5 * (est.sigma_hat + est.sigma_hat.transpose());
    return est;
}

Vec solve_mv(const Vec& mu, const Mat& Sigma, double mu_star) {
    require(mu.size() == Sigma.rows() && Sigma.rows() == Sigma.cols(), "mv: shape mismatch");
    auto llt = factor_spd(Sigma, "mv");
    const Vec ones = Vec::Ones(mu.size());
    const Vec Sinv_mu = llt.solve(mu);
    const Vec Sinv_1 = llt.solve(ones);
    const double a = mu.dot(Sinv_mu);
    const double b = mu.dot(Sinv_1);
    const double c = ones.dot(Sinv_1);
    const double denom = a * c - b * b;
    if (std::abs(denom) < 1e-14 * std::max(1.0, a * c))
        throw numerical_error("mv: degenerate frontier (mu proportional to ones)");
    return ((c * mu_star - b) / denom) * Sinv_mu + ((a - b * mu_star) / denom) * Sinv_1;
}

Vec solve_min_variance(const Mat& Sigma) {
    auto llt = factor_spd(Sigma, "min_v");
    const Vec ones = Vec::Ones(Sigma.rows());
    const Vec Sinv_1 = llt.solve(ones);
    return Sinv_1 / ones.dot(Sinv_1);
}

Vec shrink_mean_js(const MomentEstimate& moments) {
    const int d = static_cast<int>(moments.mu_hat.size());
    const int M = moments.window;
    require(M > d + 2, "js: window must exceed d + 2");
    auto llt = factor_spd(moments.sigma_hat, "js");
    const Vec ones = Vec::Ones(d);
    const Vec Sinv_1 = llt.solve(ones);
    const double common = moments.mu_hat.dot(Sinv_1) / ones.dot(Sinv_1);
    const Vec mu_tilde = common * ones;
    const Vec diff = moments.mu_hat - mu_tilde;
    const double dist = diff.dot(llt.solve(diff));
    const double alpha = (d + 2.0) / (d + 2.0 + (M - d - 2.0) * dist);
    return (1.0 - alpha) * moments.mu_hat + alpha * mu_tilde;
}

Mat shrink_cov_lw(const Mat& window, const Vec& market_returns) {
    const int M = static_cast<int>(window.rows());
    const int d = static_cast<int>(window.cols());
    require(market_returns.size() == M, "lw: market series must align with the window");
    require(M >= 3, "lw: need at least three rows");

    const Vec mu = window.colwise().mean();
    const double mu_m = market_returns.mean();
    const Mat X = window.rowwise() - mu.transpose();      // centered assets
    const Vec m = market_returns.array() - mu_m;          // centered market
    const Mat Sigma = (X.transpose() * X) / (M - 1);
    const double var_m = m.squaredNorm() / (M - 1);
    if (!(var_m > 0.0)) throw numerical_error("lw: zero market variance");
    const double sd_m = std::sqrt(var_m);
    const Vec cov_im = (X.transpose() * m) / (M - 1);
    const Vec b = cov_im / var_m;

    // single-index target: F = b b' var_m + diag(residual variances)
    Mat F = var_m * (b * b.transpose());
    for (int i = 0; i < d; ++i) F(i, i) = Sigma(i, i);

    Mat p = Mat::Zero(d, d), rmat = Mat::Zero(d, d), cmat = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = i; j < d; ++j) {
            double pij = 0.0, rij = 0.0;
            for (int t = 0; t < M; ++t) {
                const double xi = X(t, i), xj = X(t, j), xm = m[t];
                const double q = xi * xj - Sigma(i, j);
                pij += q * q;
                const double lead =
                    (cov_im[j] * sd_m * xi + cov_im[i] * sd_m * xj - cov_im[i] * cov_im[j] * xm) /
                    var_m;
                rij += lead * xm * xi * xj - F(i, j) * Sigma(i, j);
            }
            pij /= M;
            rij /= M;
            p(i, j) = p(j, i) = pij;
            rmat(i, j) = rmat(j, i) = (i == j) ? pij : rij;
            const double cij = (F(i, j) - Sigma(i, j)) * (F(i, j) - Sigma(i, j));
            cmat(i, j) = cmat(j, i) = cij;
        }
    }

    Mat out(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            double weight = 0.0;
            if (cmat(i, j) > 1e-30) {
                const double k = (p(i, j) - rmat(i, j)) / cmat(i, j);
                weight = std::clamp(k / M, 0.0, 1.0);
            }
            out(i, j) = weight * F(i, j) + (1.0 - weight) * Sigma(i, j);
        }
    }
    return 0.5 * (out + out.transpose());
}

Vec infer_mu_bl(const Mat& Sigma_all, const Vec& cap_weights, double market_mean,
                double market_var) {
    require(Sigma_all.rows() == cap_weights.size(), "bl: shape mismatch");
    if (!(market_var > 0.0)) throw numerical_error("bl: zero market variance");
    const double gamma_hat = market_mean / market_var;
    return gamma_hat * (Sigma_all * cap_weights);
}

std::pair<Vec, Mat> fit_ff_moments(const Mat& window, const Mat& factors) {
    const int M = static_cast<int>(window.rows());
    const int d = static_cast<int>(window.cols());
    require(factors.rows() == M, "ff: factor series must align with the window");
    require(factors.cols() == 3, "ff: expected three factor columns");
    require(M > 4, "ff: need more rows than regression parameters");

    Mat Ftil = factors.rowwise() - factors.colwise().mean();  // centered factors
    Mat design(M, 4);
    design.col(0).setOnes();
    design.rightCols(3) = Ftil;
    const Mat XtX = design.transpose() * design;
    Eigen::FullPivLU<Mat> lu(XtX);
    if (lu.rank() < 4) throw numerical_error("ff: collinear factors (rank < 3)");

    Vec mu(d);
    Mat B(d, 3);
    Vec resid_var(d);
    for (int i = 0; i < d; ++i) {
        const Vec beta = lu.solve(design.transpose() * window.col(i));
        mu[i] = beta[0];
        B.row(i) = beta.tail(3).transpose();
        const Vec resid = window.col(i) - design * beta;
        resid_var[i] = resid.squaredNorm() / (M - 4);
    }
    const Mat Sigma_F = (Ftil.transpose() * Ftil) / (M - 1);
    Mat Sigma = B * Sigma_F * B.transpose();
    Sigma += resid_var.asDiagonal();
    return {mu, 0.5 * (Sigma + Sigma.transpose())};
}

Vec solve_risk_parity(const Mat& Sigma) {
    const int d = static_cast<int>(Sigma.rows());
    factor_spd(Sigma, "rp");
    // inverse-vol start, damped multiplicative fixed point on contributions;
    // the damping exponent backs off when the spread stops improving (strongly
    // negative correlations make the plain 0.5 step overshoot)
    Vec w = Sigma.diagonal().array().sqrt().inverse();
    w /= w.sum();
    double damping = 0.5;
    double best_spread = std::numeric_limits<double>::infinity();
    int stall = 0;
    for (int it = 0; it < 10000; ++it) {
        const Vec Sw = Sigma * w;
        const double total = w.dot(Sw);  // = C(w)^2
        const Vec contrib = w.cwiseProduct(Sw);
        const double target = total / d;
        double spread = 0.0;
        for (int i = 0; i < d; ++i) spread = std::max(spread, std::abs(contrib[i] - target));
        if (spread <= 1e-12 * total) return w;
        if (spread < best_spread * (1.0 - 1e-12)) {
            best_spread = spread;
            stall = 0;
        } else if (++stall >= 20) {
            damping = std::max(0.02, 0.5 * damping);
            stall = 0;
        }
        for (int i = 0; i < d; ++i) {
            const double ratio =
                contrib[i] > 0.0 ? std::clamp(target / contrib[i], 0.25, 4.0) : 4.0;
            w[i] *= std::pow(ratio, damping);
        }
        w /= w.sum();
    }
    throw numerical_error("rp: fixed point did not converge within 10^4 iterations");
}

double default_drmv_delta(const Mat& sigma_hat, int window) {
    return sigma_hat.trace() / (static_cast<double>(sigma_hat.rows()) * window);
}

namespace {

struct DrmvParts {
    double f;       // sqrt(w'Sw) + sd |w|
    double g;       // mu'w - sd |w| - mu_star
    Vec grad_f, grad_g;
    Mat hess_f, hess_g;
};

DrmvParts drmv_parts(const Vec& w, const Vec& mu, const Mat& Sigma, double sd, double mu_star) {
    const int d = static_cast<int>(w.size());
    DrmvParts p;
    const Vec Sw = Sigma * w;
    const double s = std::sqrt(w.dot(Sw));
    const double nw = w.norm();
    const Mat norm_hess = Mat::Identity(d, d) / nw - (w * w.transpose()) / (nw * nw * nw);
    p.f = s + sd * nw;
    p.g = mu.dot(w) - sd * nw - mu_star;
    p.grad_f = Sw / s + sd * w / nw;
    p.grad_g = mu - sd * w / nw;
    p.hess_f = Sigma / s - (Sw * Sw.transpose()) / (s * s * s) + sd * norm_hess;
    p.hess_g = -sd * norm_hess;
    return p;
}

}  // namespace

Vec solve_drmv(const Vec& mu_hat, const Mat& Sigma_hat, double mu_star, double delta) {
    require(delta >= 0.0, "drmv: delta must be non-negative");
    const int d = static_cast<int>(mu_hat.size());
    require(d >= 2, "drmv: need at least two assets");
    factor_spd(Sigma_hat, "drmv");
    const double sd = std::sqrt(delta);
    const Mat N = zero_sum_basis(d);
    const Vec w0 = Vec::Constant(d, 1.0 / d);
    const auto w_of = [&](const Vec& v) { return Vec(w0 + N * v); };

    // unconstrained minimizer of f over the budget hyperplane
    Vec v = Vec::Zero(d - 1);
    for (int it = 0; it < 100; ++it) {
        const auto p = drmv_parts(w_of(v), mu_hat, Sigma_hat, sd, mu_star);
        const Vec grad = N.transpose() * p.grad_f;
        if (grad.norm() < 1e-13) break;
        Mat H = N.transpose() * p.hess_f * N;
        H.diagonal().array() += 1e-12;
        const Vec dv = H.ldlt().solve(-grad);
        double step = 1.0;
        const double f0 = p.f;
        while (step > 1e-14 &&
               drmv_parts(w_of(v + step * dv), mu_hat, Sigma_hat, sd, mu_star).f >
                   f0 + 1e-4 * step * grad.dot(dv))
            step *= 0.5;
        v += step * dv;
        if (step * dv.norm() < 1e-15) break;
    }
    if (drmv_parts(w_of(v), mu_hat, Sigma_hat, sd, mu_star).g >= -1e-10) return w_of(v);

    // The return constraint binds. Augmented Lagrangian on the equality
    //   min f(w) - lambda g(w) + (rho/2) g(w)^2  over the budget hyperplane
    // (the quadratic term keeps the subproblem coercive for any multiplier).
    double lambda = 0.0;
    double rho = 1e3;
    const auto al_minimize = [&](Vec vv) {
        for (int it = 0; it < 120; ++it) {
            const auto p = drmv_parts(w_of(vv), mu_hat, Sigma_hat, sd, mu_star);
            const Vec gw = p.grad_f - lambda * p.grad_g + rho * p.g * p.grad_g;
            const Vec grad = N.transpose() * gw;
            const double F0 = p.f - lambda * p.g + 0.5 * rho * p.g * p.g;
            if (grad.norm() < 1e-13 * (1.0 + std::abs(F0))) break;
            Mat Hw = p.hess_f - lambda * p.hess_g + rho * (p.grad_g * p.grad_g.transpose()) +
                     rho * p.g * p.hess_g;
            Mat H = N.transpose() * Hw * N;
            Eigen::SelfAdjointEigenSolver<Mat> es(H);
            const double shift = std::max(0.0, 1e-10 - es.eigenvalues().minCoeff());
            H.diagonal().array() += shift + 1e-12;
            const Vec dv = H.ldlt().solve(-grad);
            double t = 1.0;
            while (t > 1e-14) {
                const auto pt = drmv_parts(w_of(vv + t * dv), mu_hat, Sigma_hat, sd, mu_star);
                const double Ft = pt.f - lambda * pt.g + 0.5 * rho * pt.g * pt.g;
                if (Ft <= F0 + 1e-4 * t * grad.dot(dv)) break;
                t *= 0.5;
            }
            vv += t * dv;
            if (t * dv.norm() < 1e-15) break;
        }
        return vv;
    };

    double gap = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < 60; ++outer) {
        v = al_minimize(v);
        const double g_now = drmv_parts(w_of(v), mu_hat, Sigma_hat, sd, mu_star).g;
        if (std::abs(g_now) < 1e-10) break;
        lambda -= rho * g_now;
        if (std::abs(g_now) > 0.25 * gap) rho *= 10.0;
        gap = std::abs(g_now);
        if (rho > 1e14 || lambda > 1e12)
            throw invalid_input("drmv: return constraint infeasible");
    }
    const auto final_parts = drmv_parts(w_of(v), mu_hat, Sigma_hat, sd, mu_star);
    if (!(std::abs(final_parts.g) < 1e-8) || !w_of(v).allFinite())
        throw invalid_input("drmv: return constraint infeasible");
    return w_of(v);
}

Vec ctmv_weights(const Vec& mu_hat, const Mat& Sigma_hat, double r, double x, double /*x0*/,
                 double z, double T) {
    const int d = static_cast<int>(mu_hat.size());
    auto llt = factor_spd(Sigma_hat, "ctmv");
    const Vec ex = mu_hat.array() - r;
    const Vec Sinv_ex = llt.solve(ex);
    const double k = ex.dot(Sinv_ex) * T;
    const Vec equal = Vec::Constant(d, 1.0 / d);
    if (k < 1e-12) return equal;  // mu == r: plug-in multiplier undefined
    const double ek = std::exp(k);
    const double w_star = (z * ek - 1.0) / (ek - 1.0);  // x0 normalized to 1
    const Vec u = -Sinv_ex * (x - w_star);
    const double s = u.sum();
    if (std::abs(s) < 1e-10 * std::max(1.0, std::abs(x))) return equal;  // x = w_star degenerate
    return u / s;
}

Vec pmv_predict(const Mat& window, const Vec& rev, const Vec& mom) {
    const int M = static_cast<int>(window.rows());
    const int d = static_cast<int>(window.cols());
    require(M >= 13, "pmv: need at least 13 months of data");
    require(rev.size() == d && mom.size() == d, "pmv: factor vectors must have d entries");

    Vec pred(d);
    for (int i = 0; i < d; ++i) {
        const int n = M - 12;
        Mat X(n, 3);
        Vec y(n);
        for (int t = 12; t < M; ++t) {
            y[t - 12] = window(t, i);
            X(t - 12, 0) = 1.0;
            X(t - 12, 1) = window(t - 1, i);  // reversal: last month's return
            double g = 1.0;
            for (int s = t - 12; s <= t - 2; ++s) g *= 1.0 + window(s, i);
            X(t - 12, 2) = g - 1.0;  // 11-month momentum
        }
        const Mat XtX = X.transpose() * X;
        Eigen::FullPivLU<Mat> lu(XtX);
        if (lu.rank() < 3) throw numerical_error("pmv: singular predictive regression");
        const Vec beta = lu.solve(X.transpose() * y);
        const double b_rev = std::min(beta[1], 0.0);
        const double b_mom = std::max(beta[2], 0.0);
        pred[i] = beta[0] + b_rev * rev[i] + b_mom * mom[i];
    }
    return pred;
}

Vec allocate(const StrategyRequest& req) {
    const int d = static_cast<int>(req.window.cols());
    require(d >= 1, "allocate: empty window");
    const auto need = [&](bool ok, const char* what) {
        if (!ok) throw invalid_input(std::string("allocate: ") + req.id + " requires " + what);
    };

    if (req.id == "ew") return Vec::Constant(d, 1.0 / d);

    const MomentEstimate est = estimate_sample_moments(req.window);
    if (req.id == "mv") return solve_mv(est.mu_hat, est.sigma_hat, req.mu_star);
    if (req.id == "min_v") return solve_min_variance(est.sigma_hat);
    if (req.id == "js") return solve_mv(shrink_mean_js(est), est.sigma_hat, req.mu_star);
    if (req.id == "lw") {
        need(req.market_returns.has_value(), "a market return series");
        return solve_mv(est.mu_hat, shrink_cov_lw(req.window, *req.market_returns), req.mu_star);
    }
    if (req.id == "bl") {
        need(req.cap_weights.has_value() && req.market_mean.has_value() &&
                 req.market_var.has_value(),
             "cap weights and market moments");
        const Vec mu = infer_mu_bl(est.sigma_hat, *req.cap_weights, *req.market_mean,
                                   *req.market_var);
        return solve_mv(mu, est.sigma_hat, req.mu_star);
    }
    if (req.id == "ff") {
        need(req.factors.has_value(), "a three-column factor series");
        auto [mu, Sigma] = fit_ff_moments(req.window, *req.factors);
        return solve_mv(mu, Sigma, req.mu_star);
    }
    if (req.id == "rp") return solve_risk_parity(est.sigma_hat);
    if (req.id == "drmv") {
        const double delta =
            req.delta >= 0.0 ? req.delta : default_drmv_delta(est.sigma_hat, est.window);
        return solve_drmv(est.mu_hat, est.sigma_hat, req.mu_star, delta);
    }
    if (req.id == "ctmv") {
        const double ppy = req.periods_per_year;
        return ctmv_weights(ppy * est.mu_hat, ppy * est.sigma_hat, req.r, req.x, req.x0, req.z,
                            req.T);
    }
    if (req.id == "pmv") {
        const int M = static_cast<int>(req.window.rows());
        require(M >= 13, "pmv: need at least 13 months of data");
        const Vec rev = req.window.row(M - 1);
        Vec mom(d);
        for (int i = 0; i < d; ++i) {
            double g = 1.0;
            for (int s = M - 12; s <= M - 2; ++s) g *= 1.0 + req.window(s, i);
            mom[i] = g - 1.0;
        }
        return solve_mv(pmv_predict(req.window, rev, mom), est.sigma_hat, req.mu_star);
    }
    throw invalid_input("allocate: unknown strategy id '" + req.id + "'");
}

}  // namespace ctrlmv
