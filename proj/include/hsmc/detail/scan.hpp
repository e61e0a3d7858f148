#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "hsmc/chain.hpp"
#include "hsmc/linalg.hpp"

namespace hsmc {

// Prior on xi induced by a half-Cauchy on the global sd xi^{-1/2}:
// pi(x) ∝ (1+x)^{-1} x^{-1/2}. The normalizing constant always cancels.
inline double log_prior_xi(double x) { return -std::log1p(x) - 0.5 * std::log(x); }

// log L(z | xi, eta) marginal over (beta, sigma^2), up to xi-free constants:
// -1/2 log|M| - (n+a0)/2 log(b0/2 + z'M^{-1}z / 2).
inline double log_marginal_likelihood_parts(Eigen::Index n, double a0, double b0, double logdet,
                                            double quadform) {
    return -0.5 * logdet -
           0.5 * (static_cast<double>(n) + a0) * std::log(0.5 * b0 + 0.5 * quadform);
}

// Log MH ratio for the log-scale random walk on xi; the xi*/xi term is the
// change-of-variables Jacobian.
inline double xi_log_accept_ratio(double ll_star, double ll_cur, double xi_star, double xi) {
    return (ll_star - ll_cur) + log_prior_xi(xi_star) - log_prior_xi(xi) +
           (std::log(xi_star) - std::log(xi));
}

// Inverse CDF of the exponential with rate m truncated to (0, r), evaluated at
// v. Uses log1p/expm1 so no truncation floors are ever needed; the m -> 0
// removable singularity is the uniform limit r v.
inline double eta_slice_invert(double m, double r, double v) {
    const double mr = m * r;
    if (mr < 1e-300) return r * v;
    return -std::log1p(std::expm1(-mr) * v) / m;
}

// One coordinate of the eta slice update: u ~ Unif(0, 1/(eta+1)) sets the
// interval (0, (1-u)/u); then invert the truncated-exponential CDF.
template <class Rng>
double slice_eta_one(double eta_j, double m_j, Rng& rng) {
    const double u = rng.uniform01() * (1.0 / (eta_j + 1.0));
    const double r = (1.0 - u) / u;
    const double v = rng.uniform01();
    return eta_slice_invert(m_j, r, v);
}

// eta | xi, sigma^2, beta: independent slice updates with m_j = beta_j^2 xi / (2 sigma^2).
template <class Rng>
Eigen::VectorXd sample_eta(const ChainState& state, const HyperParams&, Rng& rng) {
    const Eigen::Index p = state.eta.size();
    Eigen::VectorXd out(p);
    const double scale = state.xi / (2.0 * state.sigma2);
    for (Eigen::Index j = 0; j < p; ++j)
        out[j] = slice_eta_one(state.eta[j], state.beta[j] * state.beta[j] * scale, rng);
    return out;
}

// Shape and rate of the sigma^2 conditional InvGamma((N+a0)/2, (z'M^{-1}z + b0)/2).
inline std::pair<double, double> sigma2_posterior_params(Eigen::Index n, double a0, double b0,
                                                         double quadform) {
    return {0.5 * (static_cast<double>(n) + a0), 0.5 * (quadform + b0)};
}

namespace detail {

// Active set under the hard threshold: j kept iff prec_max * eta_j^{-1} > delta
// (strict), prec_max = max(xi^{-1}, xi*^{-1}).
inline std::vector<int> active_indices(const Eigen::VectorXd& eta, double prec_max, double delta) {
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(eta.size()));
    for (Eigen::Index j = 0; j < eta.size(); ++j)
        if (prec_max / eta[j] > delta) idx.push_back(static_cast<int>(j));
    return idx;
}

template <class Rng>
std::pair<double, bool> sigma2_update(Eigen::Index n, const HyperParams& hp, double quadform,
                                      double sigma2_cur, Rng& rng) {
    const auto [shape, rate] = sigma2_posterior_params(n, hp.a0, hp.b0, quadform);
    if (hp.sigma_update == SigmaUpdate::gibbs) return {rng.inv_gamma(shape, rate), true};
    // Random walk on log(sigma^{-2}); the target for phi = sigma^{-2} is
    // Gamma(shape, rate), so on the log scale the density picks up one power of phi.
    const double lphi = -std::log(sigma2_cur);
    const double lphi_star = lphi + hp.prop_sd_sigma * rng.normal();
    const double phi = std::exp(lphi);
    const double phi_star = std::exp(lphi_star);
    const double log_q = shape * (lphi_star - lphi) - rate * (phi_star - phi);
    const double u = rng.uniform01();
    if (std::isfinite(phi_star) && std::log(u) < log_q) return {1.0 / phi_star, true};
    return {sigma2_cur, false};
}

// One full scan of the blocked sampler: xi -> sigma^2 -> beta -> eta.
// `thresholded` switches between the exact kernel (full D, dense route) and
// the approximate kernel (D_delta, low-rank route when s < N). The rng draw
// order is identical in both, which is what makes the delta = 0 chains agree.
//
// Draws per scan: 1 normal (xi proposal), 1 uniform (xi accept), the sigma^2
// draws, p + N normals (beta), then 2p uniforms (eta, interleaved u_j, v_j).
template <class Rng>
ChainState scan_step(const ChainState& cur, const ModelData& data, const HyperParams& hp,
                     Rng& rng, bool thresholded, ScanInfo* info) {
    const Eigen::Index n = data.n();
    const Eigen::Index p = data.p();
    ChainState next = cur;

    // -- xi: MH on the marginal likelihood, (beta, sigma^2) integrated out.
    const double log_xi_star = std::log(cur.xi) + hp.prop_sd_xi * rng.normal();
    const double xi_star = std::exp(log_xi_star);

    std::vector<int> active;
    const std::vector<int>* active_ptr = nullptr;
    VectorXd scales;
    if (thresholded) {
        const double prec_max = std::max(1.0 / cur.xi, std::isfinite(xi_star) && xi_star > 0.0
                                                           ? 1.0 / xi_star
                                                           : 1.0 / cur.xi);
        active = detail::active_indices(cur.eta, prec_max, hp.delta);
        active_ptr = &active;
        if (static_cast<Eigen::Index>(active.size()) == p) {
            scales = cur.eta.cwiseInverse();
        } else {
            scales.resize(static_cast<Eigen::Index>(active.size()));
            for (std::size_t k = 0; k < active.size(); ++k)
                scales[static_cast<Eigen::Index>(k)] = 1.0 / cur.eta[active[k]];
        }
    } else {
        scales = cur.eta.cwiseInverse();
    }
    MOperator op(data.W, data.z, active_ptr, std::move(scales), /*force_dense=*/!thresholded);
    if (info) {
        info->active_size = op.active_size();
        info->lowrank_route = op.lowrank();
    }

    const double ll_cur =
        log_marginal_likelihood_parts(n, hp.a0, hp.b0, op.logdet(cur.xi), op.quadform(cur.xi));
    double log_ratio = -std::numeric_limits<double>::infinity();
    if (std::isfinite(xi_star) && xi_star > 0.0) {
        const double ll_star = log_marginal_likelihood_parts(n, hp.a0, hp.b0, op.logdet(xi_star),
                                                             op.quadform(xi_star));
        log_ratio = xi_log_accept_ratio(ll_star, ll_cur, xi_star, cur.xi);
    }
    const bool xi_accepted = std::log(rng.uniform01()) < log_ratio;
    next.xi = xi_accepted ? xi_star : cur.xi;
    if (info) info->xi_accepted = xi_accepted;

    // -- sigma^2 | xi, eta, z (the Cholesky/SVD of M at the accepted xi is reused).
    const auto [sigma2_new, sigma_accepted] =
        detail::sigma2_update(n, hp, op.quadform(next.xi), cur.sigma2, rng);
    next.sigma2 = sigma2_new;
    if (info) info->sigma_accepted = sigma_accepted;

    // -- beta | sigma^2, xi, eta, z. The prior draw u always covers all p
    // coordinates; only the correction term is thresholded.
    VectorXd prior_var(p);
    for (Eigen::Index j = 0; j < p; ++j) prior_var[j] = 1.0 / (next.xi * cur.eta[j]);
    VectorXd corr_var;
    const VectorXd* corr_ptr = nullptr;
    if (thresholded && static_cast<Eigen::Index>(active.size()) < p) {
        corr_var = VectorXd::Zero(p);
        for (int j : active) corr_var[j] = prior_var[j];
        corr_ptr = &corr_var;
    }
    next.beta = sample_structured_gaussian(
        data.W, data.z, prior_var, next.sigma2, rng,
        [&](const VectorXd& r) { return op.apply_inv(next.xi, r); }, corr_ptr);

    // -- eta | xi, sigma^2, beta.
    next.eta = sample_eta(next, hp, rng);
    return next;
}

} // namespace detail
} // namespace hsmc
