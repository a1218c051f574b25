#pragma once

// Test-side oracles, independent of the library's computation paths:
// Monte Carlo estimates of the Gaussian expectations, central finite
// differences, a hand-rolled dense solve, and eigendecompositions via
// Eigen's dense solver (the library itself only ever uses power iteration
// and Cholesky).

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdint>

#include "gntk/common.hpp"
#include "gntk/gnn.hpp"

namespace oracles {

struct McEstimate {
    double value = 0.0;
    double stderr_est = 0.0;
};

/// P[w'x >= 0, w'x' >= 0] for unit vectors at cosine c, via antithetic
/// Gaussian pairs in the plane spanned by x, x'.
inline McEstimate mc_coactivation(double cos_angle, long samples, std::uint64_t seed) {
    gntk::Rng rng(seed);
    const double sin_angle = std::sqrt(std::max(0.0, 1.0 - cos_angle * cos_angle));
    const long pairs = samples / 2;
    double sum = 0.0, sum_sq = 0.0;
    for (long i = 0; i < pairs; ++i) {
        const double w1 = rng.gaussian(), w2 = rng.gaussian();
        const double f1 = (w1 >= 0.0 && cos_angle * w1 + sin_angle * w2 >= 0.0) ? 1.0 : 0.0;
        const double f2 = (-w1 >= 0.0 && -(cos_angle * w1 + sin_angle * w2) >= 0.0) ? 1.0 : 0.0;
        const double f = 0.5 * (f1 + f2);
        sum += f;
        sum_sq += f * f;
    }
    const double mean = sum / double(pairs);
    const double var = std::max(0.0, sum_sq / double(pairs) - mean * mean);
    return {mean, std::sqrt(var / double(pairs))};
}

struct McMoments {
    McEstimate sigma;
    McEstimate sigma_dot;
};

/// c_sigma E[relu(a) relu(b)] and c_sigma E[step(a) step(b)] for (a, b)
/// standard bivariate normal with correlation rho. Antithetic pairs plus an
/// a*b control variate keep the 1e6-sample error well under 1e-3.
inline McMoments mc_relu_moments(double rho, long samples, std::uint64_t seed) {
    gntk::Rng rng(seed);
    const double ortho = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    const long pairs = samples / 2;
    double sum_f = 0.0, sum_ff = 0.0, sum_h = 0.0, sum_hh = 0.0, sum_fh = 0.0;
    double sum_g = 0.0, sum_gg = 0.0;
    for (long i = 0; i < pairs; ++i) {
        const double z1 = rng.gaussian(), z2 = rng.gaussian();
        const double a = z1, b = rho * z1 + ortho * z2;
        const double f = 0.5 * (std::max(0.0, a) * std::max(0.0, b) +
                                std::max(0.0, -a) * std::max(0.0, -b));
        const double g = 0.5 * ((a >= 0.0 && b >= 0.0 ? 1.0 : 0.0) +
                                (-a >= 0.0 && -b >= 0.0 ? 1.0 : 0.0));
        const double h = a * b; // control variate, known mean rho
        sum_f += f;
        sum_ff += f * f;
        sum_g += g;
        sum_gg += g * g;
        sum_h += h;
        sum_hh += h * h;
        sum_fh += f * h;
    }
    const double n = double(pairs);
    const double mean_f = sum_f / n, mean_h = sum_h / n, mean_g = sum_g / n;
    const double var_h = std::max(1e-300, sum_hh / n - mean_h * mean_h);
    const double cov_fh = sum_fh / n - mean_f * mean_h;
    const double beta = cov_fh / var_h;
    const double adjusted = mean_f - beta * (mean_h - rho);
    const double var_f = std::max(0.0, sum_ff / n - mean_f * mean_f);
    const double var_adj = std::max(0.0, var_f - cov_fh * cov_fh / var_h);
    const double var_g = std::max(0.0, sum_gg / n - mean_g * mean_g);
    McMoments m;
    m.sigma = {2.0 * adjusted, 2.0 * std::sqrt(var_adj / n)};
    m.sigma_dot = {2.0 * mean_g, 2.0 * std::sqrt(var_g / n)};
    return m;
}

/// Central finite differences of forward_graph with respect to every weight
/// entry.
inline Eigen::MatrixXd fd_grad_graph(const gntk::GnnParams& params, const Eigen::MatrixXd& agg,
                                     double step = 1e-6) {
    gntk::GnnParams probe = params;
    Eigen::MatrixXd grad(params.dim(), params.width());
    for (int r = 0; r < params.width(); ++r)
        for (int c = 0; c < params.dim(); ++c) {
            const double keep = probe.weights(c, r);
            probe.weights(c, r) = keep + step;
            const double up = gntk::forward_graph(probe, agg);
            probe.weights(c, r) = keep - step;
            const double down = gntk::forward_graph(probe, agg);
            probe.weights(c, r) = keep;
            grad(c, r) = (up - down) / (2.0 * step);
        }
    return grad;
}

/// True when some unit sits within `margin` of its activation kink on some
/// column (finite differences are unreliable there).
inline bool near_kink(const gntk::GnnParams& params, const Eigen::MatrixXd& agg, double margin) {
    const Eigen::MatrixXd z = params.weights.transpose() * agg;
    return ((z.array() - params.bias).abs() < margin).any();
}

/// Dense solve by Gaussian elimination with partial pivoting.
inline Eigen::VectorXd solve_dense(Eigen::MatrixXd a, Eigen::VectorXd b) {
    const Eigen::Index n = a.rows();
    for (Eigen::Index col = 0; col < n; ++col) {
        Eigen::Index pivot = col;
        for (Eigen::Index r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
        a.row(col).swap(a.row(pivot));
        std::swap(b(col), b(pivot));
        for (Eigen::Index r = col + 1; r < n; ++r) {
            const double factor = a(r, col) / a(col, col);
            a.row(r) -= factor * a.row(col);
            b(r) -= factor * b(col);
        }
    }
    Eigen::VectorXd x(n);
    for (Eigen::Index r = n - 1; r >= 0; --r) {
        double acc = b(r);
        for (Eigen::Index c = r + 1; c < n; ++c) acc -= a(r, c) * x(c);
        x(r) = acc / a(r, r);
    }
    return x;
}

inline Eigen::VectorXd eigenvalues_sym(const Eigen::MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues();
}

}  // namespace oracles
