#pragma once

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <optional>

#include "hsmc/detail/scan.hpp"
#include "hsmc/kernel_exact.hpp"

namespace hsmc {
namespace detail {

// log P(a, t) for the regularized lower incomplete gamma via the ascending
// series; valid (and fast) in the left tail t < a + 1, which is the only
// region where the linear-space value can underflow.
inline double log_gamma_p_series(double a, double t) {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 10000; ++k) {
        term *= t / (a + k);
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return a * std::log(t) - t - std::lgamma(a + 1.0) + std::log(sum);
}

// Inverse CDF at v of Gamma(shape, rate) truncated to (0, upper). Linear-space
// inversion when the CDF mass below `upper` is representable; otherwise a
// log-space bisection so that deep left-tail truncations (the regime the
// legacy floors were papering over) still invert correctly.
inline double trunc_gamma_inv(double shape, double rate, double upper, double v) {
    const double t_up = rate * upper;
    if (t_up < 1e-300) return upper * std::pow(v, 1.0 / shape);  // rate ~ 0: pure power law
    const double f_up = boost::math::gamma_p(shape, t_up);
    if (f_up >= 1e-250) {
        const double target = v * f_up;
        if (target >= 1e-290) {
            const double x = boost::math::gamma_p_inv(shape, target) / rate;
            return std::min(x, upper);
        }
    }
    const double target = std::log(v) + log_gamma_p_series(shape, t_up);
    double lo = 0.0, hi = t_up;
    for (int it = 0; it < 200 && (hi - lo) > 1e-15 * t_up; ++it) {
        const double mid = 0.5 * (lo + hi);
        (log_gamma_p_series(shape, mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi) / rate;
}

} // namespace detail

// Slice update of xi | eta, beta, sigma^2 for the legacy update rule. The full
// conditional is xi^{(p-1)/2} (1+xi)^{-1} exp(-xi m) with
// m = sum_j eta_j beta_j^2 / (2 sigma^2); the auxiliary u ~ Unif(0, 1/(1+xi))
// leaves a Gamma((p+1)/2, m) truncated to (0, (1-u)/u), drawn by CDF inversion.
template <class Rng>
double slice_xi_baseline(double xi, Eigen::Index p, double m, Rng& rng) {
    const double u = rng.uniform01() * (1.0 / (1.0 + xi));
    const double r = (1.0 - u) / u;
    const double v = rng.uniform01();
    return detail::trunc_gamma_inv(0.5 * (static_cast<double>(p) + 1.0), m, r, v);
}

// Legacy truncation floors: any of xi^{-1}, eta_j^{-1}, sigma^2 sampled below
// the floor is replaced by it.
inline void apply_floors(ChainState& state, double floor_value) {
    if (1.0 / state.xi < floor_value) state.xi = 1.0 / floor_value;
    if (state.sigma2 < floor_value) state.sigma2 = floor_value;
    for (Eigen::Index j = 0; j < state.eta.size(); ++j)
        if (1.0 / state.eta[j] < floor_value) state.eta[j] = 1.0 / floor_value;
}

// One scan of the legacy comparator kernel:
//   beta | sigma^2, xi, eta, z   (structured Gaussian, dense route)
//   sigma^2 | beta, xi, eta, z   (inverse-gamma, beta conditioned upon)
//   xi | eta, beta, sigma^2      (slice, truncated gamma)
//   eta | xi, beta, sigma^2      (as in the exact kernel)
// followed by the truncation floors when enabled. This is a comparator for
// reproducing the legacy failure modes, not a supported inference path.
template <class Rng>
ChainState step_old(const ChainState& state, const ModelData& data, const HyperParams& hp,
                    Rng& rng, std::optional<double> floor_value = 1e-10,
                    ScanInfo* info = nullptr) {
    const Eigen::Index n = data.n();
    const Eigen::Index p = data.p();
    ChainState next = state;

    // beta
    MOperator op(data.W, data.z, nullptr, state.eta.cwiseInverse(), /*force_dense=*/true);
    if (info) {
        info->active_size = p;
        info->lowrank_route = false;
    }
    VectorXd prior_var(p);
    for (Eigen::Index j = 0; j < p; ++j) prior_var[j] = 1.0 / (state.xi * state.eta[j]);
    next.beta = sample_structured_gaussian(
        data.W, data.z, prior_var, state.sigma2, rng,
        [&](const VectorXd& r) { return op.apply_inv(state.xi, r); });

    // sigma^2 | beta: InvGamma((N+p+a0)/2, (|z-W beta|^2 + xi sum eta_j beta_j^2 + b0)/2)
    const double rss = (data.z - data.W * next.beta).squaredNorm();
    const double prior_quad = state.xi * next.beta.array().square().matrix().dot(state.eta);
    next.sigma2 =
        rng.inv_gamma(0.5 * (static_cast<double>(n + p) + hp.a0), 0.5 * (rss + prior_quad + hp.b0));

    // xi | eta, beta, sigma^2
    const double m = next.beta.array().square().matrix().dot(state.eta) / (2.0 * next.sigma2);
    next.xi = slice_xi_baseline(state.xi, p, m, rng);
    if (info) info->xi_accepted = true;

    // eta | xi, beta, sigma^2
    next.eta = sample_eta(next, hp, rng);

    if (floor_value) apply_floors(next, *floor_value);
    return next;
}

} // namespace hsmc
