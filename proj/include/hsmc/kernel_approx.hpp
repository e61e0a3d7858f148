#pragma once

#include <vector>

#include "hsmc/detail/scan.hpp"
#include "hsmc/mnig.hpp"

namespace hsmc {

// Indices escaping the hard threshold, with the precision bound that was
// applied: j in S iff prec_max * eta_j^{-1} > delta (strict inequality).
struct ActiveSet {
    std::vector<int> indices;     // strictly increasing, 0-based
    double threshold_base = 1.0;  // prec_max = max(xi^{-1}, xi*^{-1})

    Eigen::Index size() const { return static_cast<Eigen::Index>(indices.size()); }
};

inline ActiveSet build_active_set(const Eigen::VectorXd& eta, double xi, double xi_star,
                                  double delta) {
    if (!(xi > 0.0) || !(xi_star > 0.0)) throw numerical_error("xi values must be positive");
    if (delta < 0.0) throw config_error("delta must be nonnegative");
    ActiveSet s;
    s.threshold_base = std::max(1.0 / xi, 1.0 / xi_star);
    s.indices = detail::active_indices(eta, s.threshold_base, delta);
    return s;
}

// One scan of the thresholded kernel: same update rule as step_exact with D
// replaced by D_delta in the xi, sigma^2 and beta updates. One active set per
// scan, built from the max precision at the MH step and reused afterwards.
// Solves and determinants route through the low-rank path when s < N.
template <class Rng>
ChainState step_approx(const ChainState& state, const ModelData& data, const HyperParams& hp,
                       Rng& rng, ScanInfo* info = nullptr) {
    return detail::scan_step(state, data, hp, rng, /*thresholded=*/true, info);
}

// Full conditional of (beta, sigma^2) | xi, eta, z for the exact kernel:
//   m = Gamma W' M^{-1} z,  Sigma = Gamma - Gamma W' M^{-1} W Gamma,
//   a = (N+a0)/2,           b = (z'M^{-1}z + b0)/2.
inline MNIGParams exact_conditional_law(const ModelData& data, const Eigen::VectorXd& eta,
                                        double xi, const HyperParams& hp) {
    const Eigen::Index p = data.p();
    const VectorXd gamma = (xi * eta.array()).inverse().matrix();
    const MatrixXd M = form_m(data, ScaleDiag{gamma});
    const auto llt = detail::cholesky_spd(M);
    const VectorXd minv_z = detail::refined_solve(llt, M, data.z);
    const MatrixXd minv_w = llt.solve(data.W);
    MNIGParams out;
    out.m = gamma.asDiagonal() * (data.W.transpose() * minv_z);
    MatrixXd S = data.W.transpose() * minv_w;
    S = gamma.asDiagonal() * S * gamma.asDiagonal();
    out.Sigma = MatrixXd(gamma.asDiagonal()) - S;
    out.Sigma = 0.5 * (out.Sigma + out.Sigma.transpose()).eval();
    out.a = 0.5 * (static_cast<double>(data.n()) + hp.a0);
    out.b = 0.5 * (data.z.dot(minv_z) + hp.b0);
    return out;
}

// Implied conditional law of (beta, sigma^2) under the thresholded kernel at a
// frozen (xi, eta): mean (m_S; 0) and covariance with blocks
//   [ (W_S'W_S + Gamma_S^{-1})^{-1}   -Gamma_S W_S' M_S^{-1} W_Sc Gamma_Sc ]
//   [            (sym)                            Gamma_Sc                ]
// in the original coordinate order. Diagnostics-only; not on the sampling path.
inline MNIGParams approx_conditional_law(const ModelData& data, const Eigen::VectorXd& eta,
                                         double xi, double delta, const HyperParams& hp) {
    const Eigen::Index n = data.n();
    const Eigen::Index p = data.p();
    const ActiveSet S = build_active_set(eta, xi, xi, delta);
    const Eigen::Index s = S.size();
    const VectorXd gamma = (xi * eta.array()).inverse().matrix();

    MNIGParams out;
    out.a = 0.5 * (static_cast<double>(n) + hp.a0);
    out.m = VectorXd::Zero(p);
    if (s == 0) {
        out.Sigma = MatrixXd(gamma.asDiagonal());
        out.b = 0.5 * (data.z.squaredNorm() + hp.b0);
        return out;
    }

    MatrixXd Ws(n, s);
    VectorXd gamma_s(s);
    for (Eigen::Index k = 0; k < s; ++k) {
        Ws.col(k) = data.W.col(S.indices[static_cast<std::size_t>(k)]);
        gamma_s[k] = gamma[S.indices[static_cast<std::size_t>(k)]];
    }

    // (W_S'W_S + Gamma_S^{-1})^{-1} via Cholesky; also gives m_S.
    MatrixXd A = MatrixXd::Zero(s, s);
    A.selfadjointView<Eigen::Lower>().rankUpdate(Ws.transpose());
    A.triangularView<Eigen::Upper>() = A.transpose();
    A.diagonal() += gamma_s.cwiseInverse();
    const auto llt_a = detail::cholesky_spd(A);
    const VectorXd m_s = detail::refined_solve(llt_a, A, Ws.transpose() * data.z);
    for (Eigen::Index k = 0; k < s; ++k) out.m[S.indices[static_cast<std::size_t>(k)]] = m_s[k];
    MatrixXd sigma_ss = llt_a.solve(MatrixXd::Identity(s, s));
    sigma_ss = 0.5 * (sigma_ss + sigma_ss.transpose()).eval();

    // M_S = I + W_S Gamma_S W_S' for the cross block and the rate b.
    MatrixXd Ms = MatrixXd::Identity(n, n);
    const MatrixXd Bs = Ws * gamma_s.cwiseSqrt().asDiagonal();
    Ms.selfadjointView<Eigen::Lower>().rankUpdate(Bs);
    Ms.triangularView<Eigen::Upper>() = Ms.transpose();
    const auto llt_m = detail::cholesky_spd(Ms);
    const VectorXd msinv_z = detail::refined_solve(llt_m, Ms, data.z);
    out.b = 0.5 * (data.z.dot(msinv_z) + hp.b0);

    out.Sigma.resize(p, p);
    out.Sigma.setZero();
    std::vector<bool> in_s(static_cast<std::size_t>(p), false);
    for (int j : S.indices) in_s[static_cast<std::size_t>(j)] = true;
    std::vector<int> comp;
    comp.reserve(static_cast<std::size_t>(p - s));
    for (Eigen::Index j = 0; j < p; ++j)
        if (!in_s[static_cast<std::size_t>(j)]) comp.push_back(static_cast<int>(j));

    MatrixXd cross;  // s x (p-s)
    if (!comp.empty()) {
        MatrixXd Wc(n, static_cast<Eigen::Index>(comp.size()));
        VectorXd gamma_c(static_cast<Eigen::Index>(comp.size()));
        for (std::size_t k = 0; k < comp.size(); ++k) {
            Wc.col(static_cast<Eigen::Index>(k)) = data.W.col(comp[k]);
            gamma_c[static_cast<Eigen::Index>(k)] = gamma[comp[k]];
        }
        cross = -(gamma_s.asDiagonal() * (Ws.transpose() * llt_m.solve(Wc)) *
                  gamma_c.asDiagonal());
        for (std::size_t k = 0; k < comp.size(); ++k) {
            const int j = comp[k];
            out.Sigma(j, j) = gamma[j];
        }
    }

    for (Eigen::Index ki = 0; ki < s; ++ki) {
        const int i = S.indices[static_cast<std::size_t>(ki)];
        for (Eigen::Index kj = 0; kj < s; ++kj)
            out.Sigma(i, S.indices[static_cast<std::size_t>(kj)]) = sigma_ss(ki, kj);
        for (std::size_t kc = 0; kc < comp.size(); ++kc) {
            out.Sigma(i, comp[kc]) = cross(ki, static_cast<Eigen::Index>(kc));
            out.Sigma(comp[kc], i) = cross(ki, static_cast<Eigen::Index>(kc));
        }
    }
    return out;
}

} // namespace hsmc
