// Test-only oracles: independent reference computations the implementation is
// checked against. Nothing here is reachable from the library.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "hsmc/mnig.hpp"
#include "hsmc/rng.hpp"

namespace oracles {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---- deterministic rng stubs ----------------------------------------------

struct ZeroRng {
    double normal() { return 0.0; }
    double uniform01() { return 0.5; }
    double gamma(double) { return 1.0; }
    double inv_gamma(double, double rate) { return rate; }
};

// Pops scripted values; falls back to a real stream when a script runs dry.
struct ScriptRng {
    std::vector<double> normals;
    std::vector<double> uniforms;
    std::size_t in = 0, iu = 0;
    hsmc::Rng fallback{12345};

    double normal() { return in < normals.size() ? normals[in++] : fallback.normal(); }
    double uniform01() { return iu < uniforms.size() ? uniforms[iu++] : fallback.uniform01(); }
    double gamma(double shape) { return fallback.gamma(shape); }
    double inv_gamma(double shape, double rate) { return rate / gamma(shape); }
};

// ---- dense linear-algebra oracles ------------------------------------------

inline MatrixXd naive_form_m(const MatrixXd& W, const VectorXd& scales) {
    const Eigen::Index n = W.rows(), p = W.cols();
    MatrixXd M = MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k)
            for (Eigen::Index j = 0; j < p; ++j) M(i, k) += W(i, j) * scales[j] * W(k, j);
    for (Eigen::Index i = 0; i < n; ++i) M(i, i) += 1.0;
    return M;
}

inline double logdet_eig(const MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
    return es.eigenvalues().array().log().sum();
}

// z'M^{-1}z through the eigen-decomposition, an independent route.
inline double quadform_eig(const MatrixXd& M, const VectorXd& z) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
    const VectorXd proj = es.eigenvectors().transpose() * z;
    return (proj.array().square() / es.eigenvalues().array()).sum();
}

// Conditional posterior moments of beta: mean (W'W+G^{-1})^{-1}W'z and
// covariance sigma2 (W'W+G^{-1})^{-1}, G the prior variance diagonal.
inline std::pair<VectorXd, MatrixXd> dense_posterior(const MatrixXd& W, const VectorXd& z,
                                                     const VectorXd& prior_var, double sigma2) {
    const MatrixXd A =
        W.transpose() * W + MatrixXd(prior_var.cwiseInverse().asDiagonal());
    const MatrixXd cov = A.inverse();
    return {cov * (W.transpose() * z), sigma2 * cov};
}

inline MatrixXd random_spd(Eigen::Index n, hsmc::Rng& rng, double ridge = 0.5) {
    MatrixXd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) = rng.normal();
    return A * A.transpose() + ridge * static_cast<double>(n) * MatrixXd::Identity(n, n);
}

inline MatrixXd random_matrix(Eigen::Index n, Eigen::Index p, hsmc::Rng& rng) {
    MatrixXd A(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) A(i, j) = rng.normal();
    return A;
}

inline VectorXd random_vector(Eigen::Index n, hsmc::Rng& rng) {
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

// ---- series oracles ---------------------------------------------------------

// Stationary AR(1) with unit marginal variance.
inline VectorXd ar1_series(Eigen::Index n, double rho, std::uint64_t seed) {
    hsmc::Rng rng(seed);
    VectorXd x(n);
    x[0] = rng.normal();
    const double innov = std::sqrt(1.0 - rho * rho);
    for (Eigen::Index t = 1; t < n; ++t) x[t] = rho * x[t - 1] + innov * rng.normal();
    return x;
}

// Geweke-style split-mean z score: first 10% vs last 50%, standard errors from
// batch means on each segment.
inline double geweke_z(const VectorXd& series, const std::function<double(const VectorXd&)>& avar) {
    const Eigen::Index n = series.size();
    const Eigen::Index na = n / 10;
    const Eigen::Index nb = n / 2;
    const VectorXd a = series.head(na);
    const VectorXd b = series.tail(nb);
    const double se2_a = avar(a) / static_cast<double>(na);
    const double se2_b = avar(b) / static_cast<double>(nb);
    return (a.mean() - b.mean()) / std::sqrt(se2_a + se2_b);
}

// ---- quadrature oracles ------------------------------------------------------

// Composite Simpson on [lo, hi]; m must be even.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int m) {
    const double h = (hi - lo) / m;
    double s = f(lo) + f(hi);
    for (int k = 1; k < m; ++k) s += f(lo + k * h) * (k % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Brute-force nested numerical integration of KL(p0 || p1) for p = 1 MNIG
// pairs with equal shape: outer over t = log sigma^2, inner over beta.
inline double kl_mnig_numeric(const hsmc::MNIGParams& p0, const hsmc::MNIGParams& p1) {
    const double a = p0.a;
    const double m0 = p0.m[0], m1 = p1.m[0];
    const double s0 = p0.Sigma(0, 0), s1 = p1.Sigma(0, 0);
    const double b0 = p0.b, b1 = p1.b;
    const auto log_ig = [&](double b, double v) { return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(v) - b / v; };
    const auto log_norm = [&](double m, double s2, double v, double x) {
        return -0.5 * std::log(2.0 * M_PI * s2 * v) - (x - m) * (x - m) / (2.0 * s2 * v);
    };
    const double t_lo = std::log(b0) - 9.0;
    const double t_hi = std::log(b0) + 90.0 / a + 12.0;
    const auto outer = [&](double t) {
        const double v = std::exp(t);
        const double width = 14.0 * std::sqrt(v * std::max(s0, s1));
        const double x_lo = std::min(m0, m1) - width;
        const double x_hi = std::max(m0, m1) + width;
        const auto inner = [&](double x) {
            const double lp0 = log_norm(m0, s0, v, x) + log_ig(b0, v);
            const double lp1 = log_norm(m1, s1, v, x) + log_ig(b1, v);
            return std::exp(lp0) * (lp0 - lp1);
        };
        // Jacobian of sigma^2 = e^t
        return simpson(inner, x_lo, x_hi, 1200) * v;
    };
    return simpson(outer, t_lo, t_hi, 800);
}

// Numeric CDF of Gamma(shape, rate) truncated to (0, upper), and its inverse
// by bisection, all through Simpson on the raw density.
inline double trunc_gamma_cdf_numeric(double shape, double rate, double upper, double x) {
    const auto dens = [&](double t) {
        return t <= 0.0 ? 0.0 : std::exp((shape - 1.0) * std::log(t) - rate * t);
    };
    const double total = simpson(dens, 0.0, upper, 20000);
    return simpson(dens, 0.0, x, 20000) / total;
}

inline double trunc_gamma_inv_numeric(double shape, double rate, double upper, double v) {
    double lo = 0.0, hi = upper;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (trunc_gamma_cdf_numeric(shape, rate, upper, mid) < v ? lo : hi) = mid;
        if (hi - lo < 1e-13 * upper) break;
    }
    return 0.5 * (lo + hi);
}

// ---- kernel density estimate (for bimodality checks) ------------------------

struct KdeModes {
    std::vector<double> locations;  // local maxima of the KDE, ascending x
    std::vector<double> masses;     // share of draws nearest each mode's basin
};

// Gaussian KDE on a grid with Silverman bandwidth; basins split at the KDE
// minima between adjacent modes.
inline KdeModes kde_modes(const VectorXd& draws, int grid_points = 512) {
    const Eigen::Index n = draws.size();
    const double mean = draws.mean();
    const double sd = std::sqrt((draws.array() - mean).square().sum() / (n - 1));
    std::vector<double> sorted(draws.data(), draws.data() + n);
    std::sort(sorted.begin(), sorted.end());
    const double q1 = sorted[static_cast<std::size_t>(0.25 * (n - 1))];
    const double q3 = sorted[static_cast<std::size_t>(0.75 * (n - 1))];
    const double iqr = q3 - q1;
    const double h = 0.9 * std::min(sd, iqr / 1.34) * std::pow(static_cast<double>(n), -0.2);
    const double lo = sorted.front() - 3.0 * h;
    const double hi = sorted.back() + 3.0 * h;
    const double step = (hi - lo) / (grid_points - 1);
    std::vector<double> dens(grid_points, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = draws[i];
        const int lo_k = std::max(0, static_cast<int>((x - 6.0 * h - lo) / step));
        const int hi_k = std::min(grid_points - 1, static_cast<int>((x + 6.0 * h - lo) / step) + 1);
        for (int k = lo_k; k <= hi_k; ++k) {
            const double u = (lo + k * step - x) / h;
            dens[static_cast<std::size_t>(k)] += std::exp(-0.5 * u * u);
        }
    }
    KdeModes out;
    std::vector<int> mode_idx;
    for (int k = 1; k + 1 < grid_points; ++k)
        if (dens[k] > dens[k - 1] && dens[k] >= dens[k + 1]) mode_idx.push_back(k);
    if (mode_idx.empty()) return out;
    // valley boundaries between consecutive modes
    std::vector<double> cuts;
    for (std::size_t m = 0; m + 1 < mode_idx.size(); ++m) {
        int argmin = mode_idx[m];
        for (int k = mode_idx[m]; k <= mode_idx[m + 1]; ++k)
            if (dens[k] < dens[argmin]) argmin = k;
        cuts.push_back(lo + argmin * step);
    }
    out.masses.assign(mode_idx.size(), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::size_t basin = 0;
        while (basin < cuts.size() && draws[i] > cuts[basin]) ++basin;
        out.masses[basin] += 1.0 / static_cast<double>(n);
    }
    for (int k : mode_idx) out.locations.push_back(lo + k * step);
    return out;
}

} // namespace oracles
