#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "phaseopt/optimizer.hpp"
#include "phaseopt/reference_shapes.hpp"

namespace phaseopt {

/// How reference shapes are sampled onto the grid for the error study.
/// NodeCenter keeps the raw indicator; ErodeQuarterCell shrinks the shape by
/// h/4 first, which recenters the effective discrete wall on the true
/// boundary (see README on conventions).
enum class MaskRule { NodeCenter, ErodeQuarterCell };

struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Max over k = 1..k_max of |lambda_k^approx - lambda_k| / lambda_k, per
/// (N, C) cell. Failed cells carry NaN plus a reason.
struct ErrorTable {
    std::vector<int> Ns;
    std::vector<double> Cs;
    int k_max = 10;
    std::string shape_id;
    std::vector<std::vector<double>> entries;           // [row][col]
    std::vector<std::vector<std::string>> failures;     // empty string: ok

    std::string csv() const;
    double entry(int N, double C) const;
};

/// Builds the table on the box [-1.5,1.5]^2 with N x N Dirichlet grids.
/// Cells are independent jobs on a bounded worker pool; per-cell seeds are
/// derived from (seed, N, C) so results do not depend on jobs or column order.
ErrorTable error_table(const ReferenceShape& shape, const std::vector<int>& Ns,
                       const std::vector<double>& Cs, int k_max, double tol,
                       std::uint64_t seed, int jobs = 1,
                       MaskRule rule = MaskRule::ErodeQuarterCell);

/// Least-squares slope of log(error) vs log(C) over the pre-plateau columns
/// of the row for N. The plateau starts at the first pair of successive
/// entries differing by < 5% relative. Throws InsufficientDataError with
/// fewer than 3 pre-plateau columns.
double decay_exponent(const ErrorTable& table, int N);

struct RunSummary {
    std::uint64_t seed = 0;
    double alpha = 0.0;
    double final_total = 0.0;
    int iterations = 0;
    TerminationReason termination = TerminationReason::IterationCap;
    std::vector<double> per_phase_area;         // hx*hy * argmax counts, l <= h
    std::vector<std::uint16_t> labels;          // final argmax partition
    std::string raster_path;                    // empty if not written
};

struct StabilityResult {
    std::vector<RunSummary> runs;
    double spread = 0.0;  // (max - min)/min of final totals
};

/// optimize() for seeds 0..n_seeds-1 (n_seeds >= 2) or an explicit seed list.
StabilityResult stability_study(const OptimizerConfig& cfg, int n_seeds);
StabilityResult stability_study(const OptimizerConfig& cfg,
                                const std::vector<std::uint64_t>& seeds);

struct SweepResult {
    std::vector<double> alphas;
    std::vector<RunSummary> runs;  // aligned with alphas (ascending)
};

/// Optimizes per alpha, running the largest alpha first and warm-starting
/// each next run from the previous final densities. alphas must be strictly
/// increasing.
SweepResult alpha_sweep(const OptimizerConfig& base_cfg, const std::vector<double>& alphas);

/// Flat key=value run configuration (grid + optimizer fields); see README.
OptimizerConfig parse_run_config(const std::string& path);

std::string reference_eigenvalues_csv(const ReferenceShape& shape, int count);

}  // namespace phaseopt
