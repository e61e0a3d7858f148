#pragma once

#include <stdexcept>
#include <string>

namespace hsmc {

// Error taxonomy mirrored by the CLI exit codes: config 2, data 3, numerical 4.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : error {
    using error::error;
};

struct data_error : error {
    using error::error;
};

struct numerical_error : error {
    using error::error;
};

// Cholesky factorization rejected the matrix.
struct not_spd_error : numerical_error {
    using numerical_error::numerical_error;
};

} // namespace hsmc
