#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <utility>

#include "hsmc/linalg.hpp"
#include "hsmc/rng.hpp"

namespace hsmc {

enum class DesignKind { independent, ar1 };

struct SimulationConfig {
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    DesignKind design = DesignKind::independent;
    double phi = 0.9;          // AR coefficient for the dependent design
    double residual_sd = 2.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n < 1 || p < 1) throw config_error("simulate: N and p must be at least 1");
        if (!(phi > -1.0 && phi < 1.0)) throw config_error("simulate: phi must be in (-1, 1)");
        if (!(residual_sd > 0.0)) throw config_error("simulate: residual sd must be positive");
    }
};

// Decreasing signal sequence: beta_j = 2^{-(j/4 - 9/4)} for j = 1..23, zero after.
inline Eigen::VectorXd true_signal_vector(Eigen::Index p) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    for (Eigen::Index j = 1; j <= std::min<Eigen::Index>(p, 23); ++j)
        beta[j - 1] = std::exp2(-(static_cast<double>(j) / 4.0 - 9.0 / 4.0));
    return beta;
}

// Rows w_i iid N(0, Sigma) with Sigma = I or Sigma_ij = phi^{|i-j|} (unit
// diagonal), z_i ~ N(w_i beta, residual_sd^2). Draw order: all design rows,
// then the N response noises.
inline std::pair<ModelData, Eigen::VectorXd> simulate_data(const SimulationConfig& cfg) {
    cfg.validate();
    if (cfg.p < 24)
        std::cerr << "warning: p = " << cfg.p << " < 24 truncates the signal sequence\n";
    Rng rng(cfg.seed);
    ModelData data;
    data.W.resize(cfg.n, cfg.p);
    const double carry = std::sqrt(1.0 - cfg.phi * cfg.phi);
    for (Eigen::Index i = 0; i < cfg.n; ++i) {
        if (cfg.design == DesignKind::independent) {
            for (Eigen::Index j = 0; j < cfg.p; ++j) data.W(i, j) = rng.normal();
        } else {
            double prev = rng.normal();
            data.W(i, 0) = prev;
            for (Eigen::Index j = 1; j < cfg.p; ++j) {
                prev = cfg.phi * prev + carry * rng.normal();
                data.W(i, j) = prev;
            }
        }
    }
    const Eigen::VectorXd beta = true_signal_vector(cfg.p);
    data.z = data.W * beta;
    for (Eigen::Index i = 0; i < cfg.n; ++i) data.z[i] += cfg.residual_sd * rng.normal();
    return {std::move(data), beta};
}

} // namespace hsmc
