#include "gntk/spectral.hpp"

#include <cmath>
#include <limits>

namespace gntk {

namespace {

struct PowerResult {
    double eigenvalue = 0.0;
    long iterations = 0;
    double residual = 0.0;
};

/// Largest eigenvalue of a symmetric matrix whose spectrum the caller has
/// shifted to be nonnegative. The start vector is the normalized all-ones
/// vector. Power iteration accepts any eigenpair its start vector overlaps,
/// so on convergence the iteration restarts from deterministic coordinate
/// perturbations of the converged vector and keeps the best eigenvalue; it
/// stops once no perturbation improves it.
PowerResult power_iteration(const Eigen::MatrixXd& m, double norm_scale,
                            const SpectralOptions& options) {
    const Eigen::Index n = m.rows();
    PowerResult best;
    best.eigenvalue = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(double(n));
    Eigen::Index next_perturbation = 0;
    long iterations = 0;

    while (true) {
        // Iterate the current start vector to a residual-certified eigenpair.
        double rayleigh = 0.0, residual = 0.0;
        bool converged = false;
        while (iterations < options.max_iterations) {
            ++iterations;
            Eigen::VectorXd mv = m * v;
            const double norm = mv.norm();
            if (norm <= 1e-14 * norm_scale) {
                // (Numerically) in the null space: eigenvalue 0 for this run.
                rayleigh = 0.0;
                residual = norm / norm_scale;
                converged = true;
                break;
            }
            rayleigh = v.dot(mv);
            residual = (mv - rayleigh * v).norm() / norm_scale;
            if (residual <= options.tol) {
                converged = true;
                break;
            }
            v = mv / norm;
        }
        if (!converged)
            throw ConvergenceError(std::max(best.eigenvalue, rayleigh),
                                   "power iteration: cap of " +
                                       std::to_string(options.max_iterations) +
                                       " iterations exceeded (best estimate " +
                                       std::to_string(std::max(best.eigenvalue, rayleigh)) +
                                       ", residual " + std::to_string(residual) + ")");
        const bool improved = rayleigh > best.eigenvalue + options.tol * norm_scale;
        if (improved) {
            best.eigenvalue = rayleigh;
            best.residual = residual;
            best.iterations = iterations;
            next_perturbation = 0;
        }
        if (next_perturbation >= n) return best; // no perturbation beats it
        Eigen::VectorXd restart = v;
        restart(next_perturbation) += 1.0;
        ++next_perturbation;
        v = restart / restart.norm();
    }
}

}  // namespace

SpectralResult lambda_extremes(const Eigen::MatrixXd& matrix, const SpectralOptions& options) {
    if (matrix.rows() != matrix.cols()) throw DataError("lambda_extremes: matrix not square");
    if (options.tol <= 0.0) throw ConfigError("lambda_extremes: tol must be > 0");
    const double frob = matrix.norm();
    if (frob == 0.0) return SpectralResult{0.0, 0.0, 0, 0.0};
    if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-10 * frob)
        throw DataError("lambda_extremes: matrix not symmetric");

    // Shift so the spectrum is nonnegative: |lambda| <= ||M||_F for symmetric M.
    const Eigen::Index n = matrix.rows();
    const Eigen::MatrixXd shifted_up = matrix + frob * Eigen::MatrixXd::Identity(n, n);
    const PowerResult top = power_iteration(shifted_up, frob, options);
    const double lambda_max = top.eigenvalue - frob;

    const Eigen::MatrixXd shifted_down =
        lambda_max * Eigen::MatrixXd::Identity(n, n) - matrix;
    const PowerResult bottom = power_iteration(shifted_down, frob, options);
    const double lambda_min = lambda_max - bottom.eigenvalue;

    SpectralResult result;
    result.lambda_max = lambda_max;
    result.lambda_min = lambda_min;
    result.iterations = top.iterations + bottom.iterations;
    result.residual = std::max(top.residual, bottom.residual);
    return result;
}

SeparationReport check_separation_bound(const KernelMatrix& kernel, double delta, int n,
                                        bool unit_norm_attested) {
    if (delta < 0.0) throw ConfigError("check_separation_bound: delta must be >= 0");
    if (n < 1) throw ConfigError("check_separation_bound: n must be >= 1");
    SeparationReport report;
    report.lambda_min = lambda_extremes(kernel).lambda_min;
    report.bound = delta / (100.0 * double(n) * double(n));
    report.holds = report.lambda_min >= report.bound;
    report.degenerate_separation = delta == 0.0;
    report.unit_norm_attested = unit_norm_attested;
    return report;
}

ShiftedBoundsReport check_shifted_bounds(const KernelMatrix& shifted_kernel, double bias,
                                         double delta, int n, double mc_stderr) {
    if (bias < 0.0) throw ConfigError("check_shifted_bounds: bias must be >= 0");
    ShiftedBoundsReport report;
    report.lambda_min = lambda_extremes(shifted_kernel).lambda_min;
    const double envelope = std::exp(-bias * bias / 2.0);
    report.lower_bound = envelope * delta / (100.0 * double(n) * double(n));
    report.upper_bound = envelope;
    report.mc_margin = 3.0 * mc_stderr;
    report.lower_margin = report.lambda_min - (report.lower_bound - report.mc_margin);
    report.upper_margin = (report.upper_bound + report.mc_margin) - report.lambda_min;
    report.lower_holds = report.lower_margin >= 0.0;
    report.upper_holds = report.upper_margin >= 0.0;
    return report;
}

}  // namespace gntk
