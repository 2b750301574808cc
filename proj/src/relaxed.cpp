#include "phaseopt/relaxed.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "phaseopt/rng.hpp"

namespace phaseopt {

RelaxedEigenResult relaxed_eigenvalue(const ScalarField& phi, double C, int k, double tol,
                                      std::uint64_t seed, const std::vector<ScalarField>* warm) {
    if (k < 1) throw std::invalid_argument("relaxed_eigenvalue: k must be >= 1");
    if (!(C > 0.0)) throw std::invalid_argument("relaxed_eigenvalue: C must be > 0");
    PenalizedOperator op(phi.grid, phi, C);
    // One extra pair so the gap to the next eigenvalue is known.
    const int solve_k =
        static_cast<std::size_t>(k + 1) < op.grid.node_count() ? k + 1 : k;
    std::vector<EigenPair> pairs = smallest_eigenpairs(op, solve_k, tol, seed, warm);

    RelaxedEigenResult res;
    res.lambda = pairs[k - 1].lambda;
    res.u = pairs[k - 1].u;
    res.k = k;
    res.C = C;
    const double scale = std::max(std::abs(res.lambda), 1e-30);
    double gap = std::numeric_limits<double>::infinity();
    if (k >= 2) gap = std::min(gap, std::abs(res.lambda - pairs[k - 2].lambda));
    if (solve_k > k) gap = std::min(gap, std::abs(pairs[k].lambda - res.lambda));
    res.rel_gap = std::isinf(gap) ? 1.0 : gap / scale;
    res.basis.reserve(pairs.size());
    for (EigenPair& p : pairs) res.basis.push_back(std::move(p.u));
    return res;
}

ScalarField eigenvalue_gradient(const RelaxedEigenResult& result, bool allow_clustered) {
    if (result.clustered() && !allow_clustered)
        throw ClusteredEigenvalueError(
            "eigenvalue_gradient: clustered eigenvalue (relative gap < 1e-8), "
            "the derivative formula gives only a subgradient");
    const GridSpec& g = result.u.grid;
    // Derivative w.r.t. a node value, for the l2-normalized discrete
    // eigenvector: -C u2^2 = -C hx hy u_M^2.
    const double w = -result.C * g.cell_area();
    ScalarField grad(g);
    const long n = static_cast<long>(grad.values.size());
    #pragma omp parallel for schedule(static) if(n >= 32768)
    for (long i = 0; i < n; ++i) {
        const double u = result.u.values[i];
        grad.values[i] = w * u * u;
    }
    return grad;
}

std::string CostBreakdown::csv_row(int iteration) const {
    char buf[64];
    std::string row = std::to_string(iteration);
    auto push = [&](double v) {
        std::snprintf(buf, sizeof buf, ",%.17g", v);
        row += buf;
    };
    push(total);
    for (double l : per_phase_eigenvalue) push(l);
    push(volume_term);
    return row;
}

MultiphaseEvaluation evaluate_multiphase(const PhaseSystem& phases, const PhaseEvalParams& params,
                                         const std::vector<RelaxedEigenResult>* warm) {
    phases.validate();
    if (params.alpha < 0.0) throw std::invalid_argument("evaluate_multiphase: alpha must be >= 0");
    MultiphaseEvaluation ev;
    ev.cost.alpha = params.alpha;
    ev.eigs.reserve(phases.h);
    for (int l = 0; l < phases.h; ++l) {
        const std::vector<ScalarField>* warm_ptr = nullptr;
        if (warm && l < static_cast<int>(warm->size()) && !(*warm)[l].basis.empty())
            warm_ptr = &(*warm)[l].basis;
        try {
            RelaxedEigenResult r = relaxed_eigenvalue(phases.fields[l], params.C, params.k,
                                                      params.tol, mix_seed(params.seed, l),
                                                      warm_ptr);
            ev.any_clustered = ev.any_clustered || r.clustered();
            ev.cost.per_phase_eigenvalue.push_back(r.lambda);
            ev.eigs.push_back(std::move(r));
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("phase " + std::to_string(l + 1) + ": " + e.what(),
                                   e.best_residual);
        }
    }
    const ScalarField& empty = phases.empty_phase();
    double sum = 0.0;
    for (double v : empty.values) sum += v;
    ev.cost.volume_term = sum / static_cast<double>(phases.grid.node_count());
    double total = -params.alpha * ev.cost.volume_term;
    for (double l : ev.cost.per_phase_eigenvalue) total += l;
    ev.cost.total = total;
    return ev;
}

CostBreakdown multiphase_cost(const PhaseSystem& phases, double C, int k, double alpha,
                              double tol, std::uint64_t seed) {
    PhaseEvalParams params{C, k, alpha, tol, seed, true};
    return evaluate_multiphase(phases, params).cost;
}

std::vector<ScalarField> gradient_from_evaluation(const PhaseSystem& phases,
                                                  const MultiphaseEvaluation& eval,
                                                  const PhaseEvalParams& params) {
    std::vector<ScalarField> grads;
    grads.reserve(phases.h + 1);
    for (int l = 0; l < phases.h; ++l)
        grads.push_back(eigenvalue_gradient(eval.eigs[l], params.allow_clustered));
    // Empty phase: derivative of -alpha * volume_term.
    grads.emplace_back(phases.grid,
                       -params.alpha / static_cast<double>(phases.grid.node_count()));
    return grads;
}

std::vector<ScalarField> multiphase_gradient(const PhaseSystem& phases, double C, int k,
                                             double alpha, double tol, std::uint64_t seed) {
    PhaseEvalParams params{C, k, alpha, tol, seed, false};
    MultiphaseEvaluation ev = evaluate_multiphase(phases, params);
    return gradient_from_evaluation(phases, ev, params);
}

}  // namespace phaseopt
