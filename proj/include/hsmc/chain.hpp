#pragma once

#include <Eigen/Core>
#include <cmath>

#include "hsmc/errors.hpp"

namespace hsmc {

// One point (beta, sigma^2, xi, eta) of the chain. tau = xi^{-1/2} and
// lambda_j = eta_j^{-1/2} are derived views, never stored.
struct ChainState {
    Eigen::VectorXd beta;
    double sigma2 = 1.0;
    double xi = 1.0;
    Eigen::VectorXd eta;

    static ChainState initial(Eigen::Index p) {
        ChainState s;
        s.beta = Eigen::VectorXd::Zero(p);
        s.eta = Eigen::VectorXd::Ones(p);
        return s;
    }

    void validate() const {
        if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw numerical_error("sigma2 must be positive finite");
        if (!(xi > 0.0) || !std::isfinite(xi)) throw numerical_error("xi must be positive finite");
        if (!beta.allFinite()) throw numerical_error("beta contains non-finite entries");
        if (eta.size() != beta.size()) throw numerical_error("eta/beta length mismatch");
        for (Eigen::Index j = 0; j < eta.size(); ++j)
            if (!(eta[j] > 0.0) || !std::isfinite(eta[j]))
                throw numerical_error("eta entries must be positive finite");
    }
};

enum class SigmaUpdate { gibbs, mh };

struct HyperParams {
    double a0 = 1.0;
    double b0 = 1.0;
    double prop_sd_xi = 0.8;     // random-walk sd on log(xi)
    double prop_sd_sigma = 0.1;  // random-walk sd on log(sigma^{-2})
    SigmaUpdate sigma_update = SigmaUpdate::gibbs;
    double delta = 1e-4;         // threshold; only the approximate kernel reads it

    void validate() const {
        if (!(a0 > 0.0) || !(b0 > 0.0)) throw config_error("a0 and b0 must be positive");
        if (!(prop_sd_xi > 0.0)) throw config_error("prop_sd_xi must be positive");
        if (!(prop_sd_sigma > 0.0)) throw config_error("prop_sd_sigma must be positive");
        if (delta < 0.0) throw config_error("delta must be nonnegative");
    }
};

// Per-scan bookkeeping surfaced to the harness.
struct ScanInfo {
    bool xi_accepted = false;
    bool sigma_accepted = true;  // gibbs mode always counts as accepted
    Eigen::Index active_size = 0;
    bool lowrank_route = false;
};

} // namespace hsmc
