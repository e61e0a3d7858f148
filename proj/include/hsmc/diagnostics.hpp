#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsmc/errors.hpp"
#include "hsmc/mnig.hpp"

namespace hsmc {

// Sample autocorrelations at lags 1..max_lag. Autocovariances use the 1/n
// normalization at every lag.
inline Eigen::VectorXd autocorrelation(const Eigen::VectorXd& series, int max_lag) {
    const Eigen::Index n = series.size();
    if (max_lag < 1) throw data_error("max_lag must be at least 1");
    if (n <= max_lag + 1) throw data_error("series too short for requested lags");
    if (series.maxCoeff() == series.minCoeff())
        throw data_error("autocorrelation undefined for zero-variance series");
    const double mean = series.mean();
    const Eigen::ArrayXd centered = series.array() - mean;
    const double c0 = centered.square().sum() / static_cast<double>(n);
    if (!(c0 > 0.0)) throw data_error("autocorrelation undefined for zero-variance series");
    Eigen::VectorXd rho(max_lag);
    for (int k = 1; k <= max_lag; ++k) {
        const double ck =
            (centered.head(n - k) * centered.tail(n - k)).sum() / static_cast<double>(n);
        rho[k - 1] = ck / c0;
    }
    return rho;
}

// Overlapping batch means estimate of the asymptotic variance of time
// averages, batch size floor(n^{1/3}).
inline double obm_variance(const Eigen::VectorXd& series) {
    const Eigen::Index n = series.size();
    if (n < 100) throw data_error("series too short for overlapping batch means (need n >= 100)");
    if (series.maxCoeff() == series.minCoeff()) return 0.0;
    Eigen::Index b = static_cast<Eigen::Index>(std::cbrt(static_cast<double>(n)));
    while ((b + 1) * (b + 1) * (b + 1) <= n) ++b;
    while (b > 1 && b * b * b > n) --b;
    const double mean = series.mean();
    const Eigen::Index nb = n - b + 1;  // number of sliding windows, step 1
    double running = series.head(b).sum();
    double ss = 0.0;
    for (Eigen::Index j = 0;; ++j) {
        const double d = running / static_cast<double>(b) - mean;
        ss += d * d;
        if (j + 1 == nb) break;
        running += series[j + b] - series[j];
    }
    const double nd = static_cast<double>(n);
    const double bd = static_cast<double>(b);
    return nd * bd / ((nd - bd) * (nd - bd + 1.0)) * ss;
}

struct EssResult {
    double value = 0.0;           // clamped to (0, n]
    bool super_efficient = false; // n_e exceeded n before clamping
};

// n_e = n var(series) / sigma2_phi, the path length adjusted for
// autocorrelation; clamped to (0, n] with a flag for super-efficient series.
inline EssResult effective_sample_size_info(const Eigen::VectorXd& series) {
    const Eigen::Index n = series.size();
    if (series.maxCoeff() == series.minCoeff())
        throw data_error("effective sample size undefined for zero-variance series");
    const double avar = obm_variance(series);
    const double var = (series.array() - series.mean()).square().sum() / static_cast<double>(n);
    if (!(var > 0.0)) throw data_error("effective sample size undefined for zero-variance series");
    EssResult out;
    if (!(avar > 0.0)) {
        out.value = static_cast<double>(n);
        out.super_efficient = true;
        return out;
    }
    const double ne = static_cast<double>(n) * var / avar;
    if (ne > static_cast<double>(n)) {
        out.value = static_cast<double>(n);
        out.super_efficient = true;
    } else {
        out.value = ne;
    }
    return out;
}

inline double effective_sample_size(const Eigen::VectorXd& series) {
    return effective_sample_size_info(series).value;
}

inline double mcse(const Eigen::VectorXd& series) {
    return std::sqrt(obm_variance(series) / static_cast<double>(series.size()));
}

struct ScalingRecord {
    double n = 0.0;
    double p = 0.0;
    double response = 0.0;
};

struct ScalingFit {
    double intercept = 0.0, a1 = 0.0, a2 = 0.0;
    double se_intercept = 0.0, se_a1 = 0.0, se_a2 = 0.0;
};

// OLS of log(response) on log N + log p with an intercept.
inline ScalingFit scaling_regression(const std::vector<ScalingRecord>& records) {
    const Eigen::Index m = static_cast<Eigen::Index>(records.size());
    if (m < 4) throw data_error("scaling regression needs at least 4 records");
    Eigen::MatrixXd X(m, 3);
    Eigen::VectorXd y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        if (!(r.n > 0.0) || !(r.p > 0.0) || !(r.response > 0.0))
            throw data_error("scaling records must have positive N, p and response");
        X(i, 0) = 1.0;
        X(i, 1) = std::log(r.n);
        X(i, 2) = std::log(r.p);
        y[i] = std::log(r.response);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < 3)
        throw data_error("scaling regression design is rank deficient (vary both N and p)");
    const Eigen::VectorXd coef = qr.solve(y);
    const double rss = (y - X * coef).squaredNorm();
    const double s2 = rss / static_cast<double>(m - 3);
    const Eigen::MatrixXd xtx_inv =
        (X.transpose() * X).llt().solve(Eigen::MatrixXd::Identity(3, 3));
    ScalingFit fit;
    fit.intercept = coef[0];
    fit.a1 = coef[1];
    fit.a2 = coef[2];
    fit.se_intercept = std::sqrt(s2 * xtx_inv(0, 0));
    fit.se_a1 = std::sqrt(s2 * xtx_inv(1, 1));
    fit.se_a2 = std::sqrt(s2 * xtx_inv(2, 2));
    return fit;
}

// KL(p0 || p1) between two MNIG laws sharing the shape parameter:
//   1/2 [ tr(S1^{-1} S0 - I) - log|S1^{-1} S0| + (m1-m0)' S1^{-1} (m1-m0) a0/b0 ]
//   + a0 log(b0/b1) + (b1-b0) a0/b0.
// Restricted to a0 == a1 by construction; both conditionals in scope share
// shape (N+a0)/2, so the restriction never binds.
inline double kl_mnig(const MNIGParams& p0, const MNIGParams& p1) {
    if (p0.a != p1.a)
        throw data_error("kl_mnig requires equal shape parameters; refusing to generalize");
    if (p0.m.size() != p1.m.size() || p0.Sigma.rows() != p1.Sigma.rows())
        throw data_error("kl_mnig dimension mismatch");
    const Eigen::Index p = p0.m.size();
    Eigen::LLT<Eigen::MatrixXd> llt0(p0.Sigma);
    Eigen::LLT<Eigen::MatrixXd> llt1(p1.Sigma);
    if (llt0.info() != Eigen::Success || llt1.info() != Eigen::Success)
        throw not_spd_error("kl_mnig covariance not symmetric positive definite");
    const double logdet0 = 2.0 * llt0.matrixLLT().diagonal().array().log().sum();
    const double logdet1 = 2.0 * llt1.matrixLLT().diagonal().array().log().sum();
    const double tr = llt1.solve(p0.Sigma).trace();
    const Eigen::VectorXd dm = p1.m - p0.m;
    const double quad = dm.dot(llt1.solve(dm));
    const double ratio = p0.a / p0.b;
    double kl = 0.5 * (tr - static_cast<double>(p) - (logdet0 - logdet1) + quad * ratio) +
                p0.a * std::log(p0.b / p1.b) + (p1.b - p0.b) * ratio;
    if (std::abs(kl) < 1e-12) kl = 0.0;  // round-off on coinciding parameters
    if (kl < 0.0 && kl > -1e-9) kl = 0.0;
    return kl;
}

// Leading-order uniform total variation bound between the exact and
// thresholded kernels: sqrt(delta) |W| sqrt(4 + (N+a0)/b0 + (N/2) |z|^2/b0).
inline double tv_bound_theorem1(double delta, double op_norm_w, Eigen::Index n, double a0,
                                double b0, double z_norm_sq) {
    return std::sqrt(delta) * op_norm_w *
           std::sqrt(4.0 + (static_cast<double>(n) + a0) / b0 +
                     0.5 * static_cast<double>(n) * z_norm_sq / b0);
}

// TV upper bound sqrt(KL/2) from Pinsker's inequality.
inline double pinsker_check(double kl) {
    if (kl < 0.0) throw std::domain_error("pinsker_check: negative KL divergence");
    return std::sqrt(0.5 * kl);
}

// Pathwise instruments for one stored chain block.
struct DiagnosticsReport {
    std::vector<std::string> names;
    Eigen::VectorXd ess;
    Eigen::VectorXd mcse;
    std::vector<bool> super_efficient;
    Eigen::MatrixXd autocorrelations;  // lag x coordinate
    double accept_rate_xi = 0.0;
    double wall_seconds_per_scan = 0.0;
};

// draws: stored scan x coordinate, already past any store-level burn-in.
// `discard` additional leading rows are dropped (paper-style 5,000 default is
// applied by callers that own the convention).
inline DiagnosticsReport build_report(const Eigen::MatrixXd& draws,
                                      std::vector<std::string> names, Eigen::Index discard,
                                      int max_lag, double accept_rate_xi,
                                      double wall_seconds_per_scan) {
    if (draws.rows() <= discard) throw data_error("diagnostics discard leaves no samples");
    const Eigen::MatrixXd kept = draws.bottomRows(draws.rows() - discard);
    const Eigen::Index k = kept.cols();
    DiagnosticsReport rep;
    rep.names = std::move(names);
    rep.ess.resize(k);
    rep.mcse.resize(k);
    rep.super_efficient.assign(static_cast<std::size_t>(k), false);
    const int lags = std::min<int>(max_lag, static_cast<int>(kept.rows() - 2));
    rep.autocorrelations.resize(lags, k);
    rep.accept_rate_xi = accept_rate_xi;
    rep.wall_seconds_per_scan = wall_seconds_per_scan;
    for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::VectorXd col = kept.col(j);
        try {
            const EssResult er = effective_sample_size_info(col);
            rep.ess[j] = er.value;
            rep.super_efficient[static_cast<std::size_t>(j)] = er.super_efficient;
            rep.mcse[j] = mcse(col);
            rep.autocorrelations.col(j) = autocorrelation(col, lags);
        } catch (const data_error&) {
            // degenerate coordinate (constant series); flag with NaNs
            rep.ess[j] = std::numeric_limits<double>::quiet_NaN();
            rep.mcse[j] = std::numeric_limits<double>::quiet_NaN();
            rep.autocorrelations.col(j).setConstant(std::numeric_limits<double>::quiet_NaN());
        }
    }
    return rep;
}

} // namespace hsmc
