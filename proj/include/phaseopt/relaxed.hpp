#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phaseopt/eigensolver.hpp"
#include "phaseopt/phase_system.hpp"

namespace phaseopt {

// Relative gap below which an eigenvalue counts as clustered (degenerate).
inline constexpr double kClusterGapTol = 1e-8;

/// lambda_k(phi, C) together with its eigenfunction and the relative gap to
/// the neighboring eigenvalues (for degeneracy detection).
struct RelaxedEigenResult {
    double lambda = 0.0;
    ScalarField u;  // M-normalized
    int k = 1;
    double C = 0.0;
    double rel_gap = 1.0;
    std::vector<ScalarField> basis;  // all solved vectors; warm-start fodder

    bool clustered() const { return rel_gap < kClusterGapTol; }
};

struct ClusteredEigenvalueError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// k-th eigenpair of A + C diag(1-phi). Solves one extra pair to measure the
/// gap. `warm` seeds the solver block.
RelaxedEigenResult relaxed_eigenvalue(const ScalarField& phi, double C, int k, double tol,
                                      std::uint64_t seed,
                                      const std::vector<ScalarField>* warm = nullptr);

/// d lambda_k / d phi_ij = -C u_ij^2 for the l2-normalized discrete
/// eigenvector, i.e. -C*hx*hy*u^2 of the stored M-normalized one. Throws
/// ClusteredEigenvalueError on a clustered eigenvalue unless allow_clustered
/// (then the returned field is the subgradient for the returned vector).
ScalarField eigenvalue_gradient(const RelaxedEigenResult& result, bool allow_clustered = false);

struct CostBreakdown {
    double total = 0.0;
    std::vector<double> per_phase_eigenvalue;  // h entries
    double volume_term = 0.0;                  // (1/(nx*ny)) Σ phi_{h+1}
    double alpha = 0.0;

    std::string csv_row(int iteration) const;
};

struct PhaseEvalParams {
    double C = 1e4;
    int k = 1;
    double alpha = 0.0;
    double tol = 1e-8;
    std::uint64_t seed = 0;
    bool allow_clustered = true;  // optimizer proceeds with the subgradient
};

struct MultiphaseEvaluation {
    CostBreakdown cost;
    std::vector<RelaxedEigenResult> eigs;  // per competing phase
    bool any_clustered = false;
};

/// Σ_l lambda_k(phi_l, C) - alpha * (1/(nx*ny)) Σ phi_{h+1}; one eigensolve
/// per competing phase. `warm` is a previous evaluation's per-phase result
/// list whose bases seed the solves.
MultiphaseEvaluation evaluate_multiphase(const PhaseSystem& phases, const PhaseEvalParams& params,
                                         const std::vector<RelaxedEigenResult>* warm = nullptr);

CostBreakdown multiphase_cost(const PhaseSystem& phases, double C, int k, double alpha,
                              double tol, std::uint64_t seed);

/// Gradient of the cost w.r.t. every phi_l: -C u_l^2 (l2-normalized) for
/// l <= h, the constant -alpha/(nx*ny) for the empty phase.
std::vector<ScalarField> multiphase_gradient(const PhaseSystem& phases, double C, int k,
                                             double alpha, double tol, std::uint64_t seed);

std::vector<ScalarField> gradient_from_evaluation(const PhaseSystem& phases,
                                                  const MultiphaseEvaluation& eval,
                                                  const PhaseEvalParams& params);

}  // namespace phaseopt
