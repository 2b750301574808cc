#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "phaseopt/grid.hpp"
#include "phaseopt/kernels.hpp"

namespace phaseopt {

/// A + C diag(1 - phi), applied matrix-free. Symmetric positive semidefinite;
/// definite under DirichletBox, or whenever C > 0 and phi < 1 somewhere.
struct PenalizedOperator {
    GridSpec grid;
    ScalarField phi;  // density in [0,1]
    double C = 0.0;

    PenalizedOperator(const GridSpec& g, const ScalarField& density, double penalization);

    void apply(std::span<const double> u, std::span<double> v) const {
        penalized_apply(grid, phi.values, C, u, v);
    }
    ScalarField apply(const ScalarField& u) const;

    /// Operator diagonal, 2/hx^2 + 2/hy^2 + C(1-phi); the Jacobi preconditioner.
    std::vector<double> diagonal() const;
};

/// (lambda, u) with u normalized in the discrete L2 inner product
/// <u,w>_M = hx*hy*Σ u w; residual = ||A u - lambda u||_M.
struct EigenPair {
    double lambda = 0.0;
    ScalarField u;
    double residual = 0.0;
};

struct ConvergenceError : std::runtime_error {
    double best_residual;
    ConvergenceError(const std::string& msg, double res)
        : std::runtime_error(msg), best_residual(res) {}
};

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Operator applications allowed per requested eigenpair before giving up.
inline constexpr std::size_t kMaxAppliesPerPair = 50000;

/// k smallest eigenpairs, ascending, pairwise M-orthonormal, each residual
/// <= tol*max(1, lambda). Deterministic for a fixed seed; the entry of largest
/// magnitude of each vector is made positive. Blocked LOBPCG with a Jacobi
/// preconditioner; `warm_start` vectors (if any) seed the initial block.
std::vector<EigenPair> smallest_eigenpairs(const PenalizedOperator& op, int k, double tol,
                                           std::uint64_t seed,
                                           const std::vector<ScalarField>* warm_start = nullptr);

/// Fallback solver: deflated inverse (shift 0) power iteration, conjugate
/// gradient inner solves. Same contract as smallest_eigenpairs; requires the
/// operator to be definite.
std::vector<EigenPair> shift_invert_eigenpairs(const PenalizedOperator& op, int k, double tol,
                                               std::uint64_t seed);

/// ||A u - lambda u||_M, independent of how the pair was produced.
double eigen_residual(const PenalizedOperator& op, const EigenPair& pair);

// Diagnostics for tuning: the last LOBPCG call's iteration/apply counts.
std::size_t last_lobpcg_iterations();
std::size_t last_lobpcg_applies();

}  // namespace phaseopt
