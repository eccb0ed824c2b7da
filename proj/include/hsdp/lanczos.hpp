#pragma once

#include <functional>

#include "hsdp/types.hpp"

namespace hsdp {

/// y = A x for a Hermitian operator of the given dimension.
using LinearOperator = std::function<void(const CVec &x, CVec &y)>;

struct LanczosOptions {
    int           max_steps = 300;
    double        tol       = 1e-12; ///< residual bound relative to the spectral scale
    std::uint64_t seed      = 7;
};

struct ExtremeEigen {
    double min        = 0.0;
    double max        = 0.0;
    int    steps      = 0;
    bool   converged  = false;
};

/// Smallest and largest eigenvalues by Lanczos with full reorthogonalization.
ExtremeEigen lanczos_extremes(const LinearOperator &A, int dim, const LanczosOptions &opts = {});

} // namespace hsdp
