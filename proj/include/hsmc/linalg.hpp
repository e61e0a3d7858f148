#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "hsmc/errors.hpp"

namespace hsmc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Fixed inputs of every kernel: N x p design and length-N response.
struct ModelData {
    MatrixXd W;
    VectorXd z;

    Eigen::Index n() const { return W.rows(); }
    Eigen::Index p() const { return W.cols(); }

    void validate() const {
        if (W.rows() < 1 || W.cols() < 1) throw data_error("design matrix must be at least 1x1");
        if (z.size() != W.rows()) {
            std::ostringstream msg;
            msg << "response length " << z.size() << " does not match design rows " << W.rows();
            throw data_error(msg.str());
        }
        if (!W.allFinite()) throw data_error("design matrix contains non-finite entries");
        if (!z.allFinite()) throw data_error("response contains non-finite entries");
    }
};

// Diagonal variance scales xi^{-1} eta_j^{-1}; the Gamma matrix of the prior.
struct ScaleDiag {
    VectorXd entries;

    void validate() const {
        for (Eigen::Index j = 0; j < entries.size(); ++j) {
            const double s = entries[j];
            if (!(s > 0.0) || !std::isfinite(s)) {
                std::ostringstream msg;
                msg << "scale entry " << j << " = " << s << " is not strictly positive and finite";
                throw numerical_error(msg.str());
            }
        }
    }
};

// Columns of W surviving a threshold together with the matching diagonal of D
// (entries eta_j^{-1}; the global factor xi is passed to the operations).
struct LowRankFactor {
    MatrixXd subset_columns;   // N x s
    VectorXd subset_scales;    // length s, strictly positive
    std::vector<int> indices;  // strictly increasing, 0-based

    Eigen::Index rank() const { return subset_columns.cols(); }

    void validate() const {
        if (subset_scales.size() != subset_columns.cols() ||
            static_cast<Eigen::Index>(indices.size()) != subset_columns.cols())
            throw data_error("low-rank factor fields have inconsistent sizes");
        for (std::size_t k = 0; k < indices.size(); ++k) {
            if (k > 0 && indices[k] <= indices[k - 1])
                throw data_error("low-rank factor indices must be strictly increasing");
            if (!(subset_scales[static_cast<Eigen::Index>(k)] > 0.0))
                throw numerical_error("low-rank factor scales must be strictly positive");
        }
    }
};

// M = I_N + W diag(scales) W'. Symmetric, eigenvalues >= 1.
inline MatrixXd form_m(const ModelData& data, const ScaleDiag& scales) {
    scales.validate();
    if (scales.entries.size() != data.p())
        throw data_error("scale vector length does not match design columns");
    const MatrixXd B = data.W * scales.entries.cwiseSqrt().asDiagonal();
    MatrixXd M = MatrixXd::Identity(data.n(), data.n());
    M.selfadjointView<Eigen::Lower>().rankUpdate(B);
    M.triangularView<Eigen::Upper>() = M.transpose();
    if (!M.allFinite()) {
        std::ostringstream msg;
        msg << "non-finite accumulation forming M; largest scale magnitude "
            << scales.entries.maxCoeff();
        throw numerical_error(msg.str());
    }
    return M;
}

namespace detail {

inline Eigen::LLT<MatrixXd> cholesky_spd(const MatrixXd& M) {
    Eigen::LLT<MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) throw not_spd_error("matrix is not symmetric positive definite");
    return llt;
}

inline double logdet_from_llt(const Eigen::LLT<MatrixXd>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// One step of iterative refinement on top of the Cholesky solve.
inline VectorXd refined_solve(const Eigen::LLT<MatrixXd>& llt, const MatrixXd& M, const VectorXd& rhs) {
    VectorXd x = llt.solve(rhs);
    x += llt.solve(rhs - M.selfadjointView<Eigen::Lower>() * x);
    return x;
}

} // namespace detail

inline VectorXd solve_m(const MatrixXd& M, const VectorXd& rhs) {
    const auto llt = detail::cholesky_spd(M);
    return detail::refined_solve(llt, M, rhs);
}

inline double logdet_m(const MatrixXd& M) {
    return detail::logdet_from_llt(detail::cholesky_spd(M));
}

// (I + xi^{-1} W_S D_S W_S')^{-1} rhs via the Woodbury identity:
// rhs - W_S (xi D_S^{-1} + W_S' W_S)^{-1} W_S' rhs.
inline VectorXd woodbury_apply(const LowRankFactor& factor, double xi, const VectorXd& rhs) {
    factor.validate();
    if (!(xi > 0.0)) throw numerical_error("xi must be strictly positive");
    if (factor.rank() == 0) return rhs;
    const MatrixXd& Ws = factor.subset_columns;
    MatrixXd inner = MatrixXd::Zero(factor.rank(), factor.rank());
    inner.selfadjointView<Eigen::Lower>().rankUpdate(Ws.transpose());
    inner.triangularView<Eigen::Upper>() = inner.transpose();
    inner.diagonal() += xi * factor.subset_scales.cwiseInverse();
    const auto llt = detail::cholesky_spd(inner);
    return rhs - Ws * detail::refined_solve(llt, inner, Ws.transpose() * rhs);
}

// log|I + xi^{-1} W_S D_S W_S'| = sum_k log(1 + s_k^2), s_k the singular values
// of xi^{-1/2} W_S D_S^{1/2}; the N - s unit eigenvalues contribute nothing.
inline double logdet_lowrank(const LowRankFactor& factor, double xi) {
    factor.validate();
    if (!(xi > 0.0)) throw numerical_error("xi must be strictly positive");
    if (factor.rank() == 0) return 0.0;
    const MatrixXd B =
        factor.subset_columns * (factor.subset_scales / xi).cwiseSqrt().asDiagonal();
    Eigen::BDCSVD<MatrixXd> svd(B);
    if (svd.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "SVD failed on " << B.rows() << "x" << B.cols() << " matrix";
        throw numerical_error(msg.str());
    }
    double out = 0.0;
    for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k)
        out += std::log1p(svd.singularValues()[k] * svd.singularValues()[k]);
    return out;
}

// Structured Gaussian draw for beta | sigma^2, xi, eta, z:
//   u ~ N(0, diag(prior_var)), f ~ N(0, I_N), v = W u + f,
//   v* = solver(z/sigma - v), beta = sigma (u + C W' v*),
// where C defaults to diag(prior_var); the thresholded kernel passes a C with
// zeroed entries, whose correction sums are skipped entirely.
template <class Rng, class Solver>
VectorXd sample_structured_gaussian(const MatrixXd& W, const VectorXd& z,
                                    const VectorXd& prior_var, double sigma2, Rng& rng,
                                    Solver&& apply_m_inverse,
                                    const VectorXd* correction_var = nullptr) {
    const Eigen::Index n = W.rows();
    const Eigen::Index p = W.cols();
    const double sigma = std::sqrt(sigma2);
    VectorXd u(p);
    for (Eigen::Index j = 0; j < p; ++j) u[j] = std::sqrt(prior_var[j]) * rng.normal();
    VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
    v += W * u;
    const VectorXd vstar = apply_m_inverse(VectorXd(z / sigma - v));
    const VectorXd& C = correction_var ? *correction_var : prior_var;
    VectorXd beta(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double c = C[j];
        beta[j] = sigma * (u[j] + (c == 0.0 ? 0.0 : c * W.col(j).dot(vstar)));
    }
    return beta;
}

// Per-scan operator for M(c) = I + c^{-1} W_S D_S W_S', shared by the exact and
// thresholded kernels. The dense route factors M(c) once per c value (the MH
// step needs c = xi and c = xi*); the low-rank route runs off a single thin
// SVD of W_S D_S^{1/2}, which also yields the determinants for both c values.
class MOperator {
public:
    // active == nullptr means all columns; scales holds eta_j^{-1} aligned with
    // the selected columns.
    MOperator(const MatrixXd& W, const VectorXd& z, const std::vector<int>* active,
              VectorXd scales, bool force_dense)
        : W_(W), z_(z), scales_(std::move(scales)) {
        const Eigen::Index p = W.cols();
        const Eigen::Index s = active ? static_cast<Eigen::Index>(active->size()) : p;
        s_ = s;
        dense_ = force_dense || s >= W.rows();
        if (!active || s == p) {
            B_ = W * scales_.cwiseSqrt().asDiagonal();
        } else {
            B_.resize(W.rows(), s);
            for (Eigen::Index k = 0; k < s; ++k)
                B_.col(k) = W.col((*active)[static_cast<std::size_t>(k)]) *
                            std::sqrt(scales_[k]);
        }
        if (!B_.allFinite()) {
            std::ostringstream msg;
            msg << "non-finite accumulation forming M; largest scale magnitude "
                << (scales_.size() ? scales_.maxCoeff() : 0.0);
            throw numerical_error(msg.str());
        }
        if (dense_) {
            P_ = MatrixXd::Zero(W.rows(), W.rows());
            P_.selfadjointView<Eigen::Lower>().rankUpdate(B_);
            P_.triangularView<Eigen::Upper>() = P_.transpose();
        } else if (s_ > 0) {
            Eigen::BDCSVD<MatrixXd> svd(B_, Eigen::ComputeThinV);
            if (svd.info() != Eigen::Success) {
                std::ostringstream msg;
                msg << "SVD failed on " << B_.rows() << "x" << B_.cols() << " matrix";
                throw numerical_error(msg.str());
            }
            sv2_ = svd.singularValues().array().square();
            V_ = svd.matrixV();
            btz_ = B_.transpose() * z_;
        }
    }

    bool lowrank() const { return !dense_; }
    Eigen::Index active_size() const { return s_; }

    double logdet(double c) {
        if (dense_) return factor(c).logdet;
        double out = 0.0;
        for (Eigen::Index k = 0; k < sv2_.size(); ++k) out += std::log1p(sv2_[k] / c);
        return out;
    }

    // z' M(c)^{-1} z
    double quadform(double c) {
        if (dense_) {
            const Factor& f = factor(c);
            return z_.dot(f.llt.solve(z_));
        }
        if (s_ == 0) return z_.squaredNorm();
        const VectorXd w = V_.transpose() * btz_;
        double out = z_.squaredNorm();
        for (Eigen::Index k = 0; k < w.size(); ++k) out -= w[k] * w[k] / (c + sv2_[k]);
        return out;
    }

    VectorXd apply_inv(double c, const VectorXd& rhs) {
        if (dense_) {
            const Factor& f = factor(c);
            VectorXd x = f.llt.solve(rhs);
            x += f.llt.solve(rhs - f.M.selfadjointView<Eigen::Lower>() * x);
            return x;
        }
        if (s_ == 0) return rhs;
        VectorXd w = V_.transpose() * (B_.transpose() * rhs);
        for (Eigen::Index k = 0; k < w.size(); ++k) w[k] /= (c + sv2_[k]);
        return rhs - B_ * (V_ * w);
    }

private:
    struct Factor {
        double c = -1.0;
        MatrixXd M;
        Eigen::LLT<MatrixXd> llt;
        double logdet = 0.0;
    };

    const Factor& factor(double c) {
        for (const Factor* f : {&f0_, &f1_})
            if (f->c == c) return *f;
        Factor& slot = (f0_.c < 0.0) ? f0_ : (f1_.c < 0.0 ? f1_ : older_slot());
        slot.c = c;
        slot.M = P_ / c;
        slot.M.diagonal().array() += 1.0;
        slot.llt.compute(slot.M);
        if (slot.llt.info() != Eigen::Success)
            throw not_spd_error("matrix is not symmetric positive definite");
        slot.logdet = detail::logdet_from_llt(slot.llt);
        return slot;
    }

    Factor& older_slot() {
        // Evict f1 by convention; f0 holds the first (current-state) factor.
        return f1_;
    }

    const MatrixXd& W_;
    const VectorXd& z_;
    VectorXd scales_;
    MatrixXd B_;
    Eigen::Index s_ = 0;
    bool dense_ = true;
    MatrixXd P_;
    VectorXd sv2_;
    MatrixXd V_;
    VectorXd btz_;
    Factor f0_, f1_;
};

} // namespace hsmc
