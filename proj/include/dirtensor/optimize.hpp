#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace dirtensor {

struct MinimizeResult {
    std::vector<double> x;
    double value = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Derivative-free simplex search (GSL nmsimplex2). Stops when the simplex
/// characteristic size drops below `size_tol` or after `max_iter` iterations.
MinimizeResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                           std::vector<double> x0, double initial_step, std::size_t max_iter,
                           double size_tol = 1e-10);

/// Nonlinear least squares min ||r(x)||^2 by Levenberg-Marquardt with a
/// finite-difference Jacobian (GSL multifit_nlinear). `value` is ||r||^2.
MinimizeResult levenberg_marquardt(
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& residual,
    std::size_t n_residuals, std::vector<double> x0, std::size_t max_iter);

}  // namespace dirtensor
