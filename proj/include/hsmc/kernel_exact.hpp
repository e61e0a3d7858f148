#pragma once

#include <utility>

#include "hsmc/detail/scan.hpp"

namespace hsmc {

// log L(z | xi, eta) with (beta, sigma^2) marginalized out, computed on the
// dense route. The parts-level overload in detail/scan.hpp accepts externally
// supplied log-determinant and quadratic form.
inline double log_marginal_likelihood_xi(const ModelData& data, const Eigen::VectorXd& eta,
                                         double xi, const HyperParams& hp) {
    if (!(xi > 0.0)) throw numerical_error("xi must be strictly positive");
    MOperator op(data.W, data.z, nullptr, eta.cwiseInverse(), /*force_dense=*/true);
    return log_marginal_likelihood_parts(data.n(), hp.a0, hp.b0, op.logdet(xi), op.quadform(xi));
}

// Random-walk MH update of xi | eta, z on the log scale. Consumes one normal
// and one uniform regardless of the outcome.
template <class Rng>
std::pair<ChainState, bool> mh_step_xi(const ChainState& state, const ModelData& data,
                                       const HyperParams& hp, Rng& rng) {
    const double log_xi_star = std::log(state.xi) + hp.prop_sd_xi * rng.normal();
    const double xi_star = std::exp(log_xi_star);
    double log_ratio = -std::numeric_limits<double>::infinity();
    if (std::isfinite(xi_star) && xi_star > 0.0) {
        MOperator op(data.W, data.z, nullptr, state.eta.cwiseInverse(), /*force_dense=*/true);
        const double ll_cur = log_marginal_likelihood_parts(data.n(), hp.a0, hp.b0,
                                                            op.logdet(state.xi),
                                                            op.quadform(state.xi));
        const double ll_star = log_marginal_likelihood_parts(data.n(), hp.a0, hp.b0,
                                                             op.logdet(xi_star),
                                                             op.quadform(xi_star));
        log_ratio = xi_log_accept_ratio(ll_star, ll_cur, xi_star, state.xi);
    }
    const bool accepted = std::log(rng.uniform01()) < log_ratio;
    ChainState next = state;
    if (accepted) next.xi = xi_star;
    return {next, accepted};
}

// sigma^2 | xi, eta, z: InvGamma((N+a0)/2, (z'M^{-1}z + b0)/2), or the
// random-walk MH variant on log(sigma^{-2}) when hp.sigma_update == mh.
template <class Rng>
double sample_sigma2(const ChainState& state, const ModelData& data, const HyperParams& hp,
                     Rng& rng) {
    MOperator op(data.W, data.z, nullptr, state.eta.cwiseInverse(), /*force_dense=*/true);
    return detail::sigma2_update(data.n(), hp, op.quadform(state.xi), state.sigma2, rng).first;
}

// Parts-level variant taking a precomputed z'M^{-1}z.
template <class Rng>
std::pair<double, bool> sample_sigma2_from_quadform(Eigen::Index n, const HyperParams& hp,
                                                    double quadform, double sigma2_cur,
                                                    Rng& rng) {
    return detail::sigma2_update(n, hp, quadform, sigma2_cur, rng);
}

// One scan of the blocked exact kernel: xi -> sigma^2 -> beta -> eta, all on
// the dense route with the full D.
template <class Rng>
ChainState step_exact(const ChainState& state, const ModelData& data, const HyperParams& hp,
                      Rng& rng, ScanInfo* info = nullptr) {
    return detail::scan_step(state, data, hp, rng, /*thresholded=*/false, info);
}

} // namespace hsmc
