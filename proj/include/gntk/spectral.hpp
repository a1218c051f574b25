#pragma once

#include <Eigen/Dense>

#include "gntk/kernels.hpp"

namespace gntk {

struct SpectralResult {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    long iterations = 0;
    double residual = 0.0; // ||Mv - lambda v|| / ||M||_F at convergence
};

struct SpectralOptions {
    double tol = 1e-8;
    long max_iterations = 100000;
};

/// Extreme eigenvalues of a symmetric matrix by power iteration: lambda_max
/// on M, then lambda_min via power iteration on (lambda_max I - M). The start
/// vector is the normalized all-ones vector, perturbed deterministically on
/// stagnation. Non-symmetric input (beyond 1e-10 relative) is a domain error;
/// exceeding the iteration cap raises ConvergenceError with the best estimate.
SpectralResult lambda_extremes(const Eigen::MatrixXd& matrix, const SpectralOptions& options = {});

inline SpectralResult lambda_extremes(const KernelMatrix& kernel,
                                      const SpectralOptions& options = {}) {
    return lambda_extremes(kernel.values, options);
}

struct SeparationReport {
    double lambda_min = 0.0;
    double bound = 0.0; // delta / (100 n^2)
    bool holds = false;
    bool degenerate_separation = false; // delta == 0: bound trivial
    bool unit_norm_attested = false;    // caller attests unit-norm aggregated inputs
};

/// Checks lambda_min(H) >= delta / (100 n^2). The unit-norm hypothesis on the
/// aggregated columns cannot be seen from the Gram alone; the caller's
/// attestation is recorded in the report.
SeparationReport check_separation_bound(const KernelMatrix& kernel, double delta, int n,
                                        bool unit_norm_attested = true);

struct ShiftedBoundsReport {
    double lambda_min = 0.0;
    double lower_bound = 0.0;  // exp(-b^2/2) delta / (100 n^2)
    double upper_bound = 0.0;  // exp(-b^2/2); requires unit-norm aggregated inputs
    double mc_margin = 0.0;    // 3 * mc_stderr
    double lower_margin = 0.0; // lambda_min - (lower_bound - mc_margin)
    double upper_margin = 0.0; // (upper_bound + mc_margin) - lambda_min
    bool lower_holds = false;
    bool upper_holds = false;
};

/// Sandwich check exp(-b^2/2) delta/(100 n^2) - 3 se <= lambda_min
/// <= exp(-b^2/2) + 3 se on a Monte Carlo shifted Gram.
ShiftedBoundsReport check_shifted_bounds(const KernelMatrix& shifted_kernel, double bias,
                                         double delta, int n, double mc_stderr);

}  // namespace gntk
