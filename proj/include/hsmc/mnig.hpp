#pragma once

#include <Eigen/Core>

namespace hsmc {

// Parameters of the multivariate-normal inverse-gamma joint law of
// (beta, sigma^2): beta | sigma^2 ~ N(m, sigma^2 Sigma), sigma^2 ~ IG(a, b).
struct MNIGParams {
    Eigen::VectorXd m;
    Eigen::MatrixXd Sigma;
    double a = 1.0;
    double b = 1.0;
};

} // namespace hsmc
