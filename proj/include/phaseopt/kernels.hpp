#pragma once

#include <span>

#include "phaseopt/grid.hpp"

namespace phaseopt {

/// v = A u where A = -Laplacian (5-point stencil, positive semidefinite):
/// v_ij = (2u_ij - u_{i-1,j} - u_{i+1,j})/hx^2 + (2u_ij - u_{i,j-1} - u_{i,j+1})/hy^2.
/// Out-of-range neighbors are zero (DirichletBox) or wrap (Periodic).
ScalarField laplacian_apply(const GridSpec& grid, const ScalarField& u);

/// v = A u + C (1 - phi) .* u, fused; the penalized operator kernel.
void penalized_apply(const GridSpec& grid, std::span<const double> phi, double C,
                     std::span<const double> u, std::span<double> v);

/// Σ a_i b_i with a fixed chunked summation order, so the result does not
/// depend on the OpenMP thread count.
double dot_chunked(std::span<const double> a, std::span<const double> b);

namespace serial {
// Reference implementations kept for testing the parallel kernels against.
ScalarField laplacian_apply(const GridSpec& grid, const ScalarField& u);
void penalized_apply(const GridSpec& grid, std::span<const double> phi, double C,
                     std::span<const double> u, std::span<double> v);
double dot(std::span<const double> a, std::span<const double> b);
}  // namespace serial

}  // namespace phaseopt
