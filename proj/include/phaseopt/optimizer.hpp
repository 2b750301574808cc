#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "phaseopt/relaxed.hpp"

namespace phaseopt {

struct OptimizerConfig {
    GridSpec grid;
    int k = 1;
    double alpha = 0.0;
    int h = 1;
    double C = 1e4;
    double gamma0 = 1e-4;
    double omega = 2.0;
    double eps = 1e-6;
    int p_max = 500;
    std::uint64_t seed = 0;
    double eig_tol = 1e-8;

    std::string out_dir;  // empty: no files written
    std::string run_id = "run";
    int checkpoint_every = 25;

    void validate() const;
    PhaseEvalParams eval_params() const;
};

enum class TerminationReason { StepCriterion, IterationCap };

struct IterationRecord {
    int iteration = 0;
    CostBreakdown cost;
    double gamma = 0.0;
    double grad_inf_norm = 0.0;
};

struct RunLog {
    std::vector<IterationRecord> records;
    TerminationReason termination = TerminationReason::IterationCap;
    PhaseSystem final_system;
    int clustered_events = 0;

    std::string csv() const;
    double final_total() const { return records.back().cost.total; }
};

// Expansion trials allowed in one linesearch call.
inline constexpr int kMaxExpansions = 60;
// Halvings tried when the gamma0 trial does not improve, before declaring
// stationarity.
inline constexpr int kMaxBacktracks = 20;

struct LinesearchCoreResult {
    double gamma = 0.0;
    int accepted_trial = -1;  // -1: even the first trial did not improve
    bool improved = false;
};

/// The expanding search of the step-length algorithm over an abstract cost:
/// trials at gamma0, gamma0*omega, ... while each strictly improves on the
/// previous; returns the last improving gamma. `evaluate` is called once per
/// trial, in order.
LinesearchCoreResult linesearch_core(double gamma0, double omega, double base_cost,
                                     const std::function<double(double)>& evaluate,
                                     int max_expansions = kMaxExpansions);

struct LinesearchResult {
    double gamma = 0.0;
    PhaseSystem candidate;
    CostBreakdown cost;
    bool improved = false;
    MultiphaseEvaluation eval;  // evaluation at candidate
    int evaluations = 0;
};

/// One step-length search from `current` along `direction` (= -gradient):
/// form x + gamma*d, project onto the simplex, evaluate; expand gamma by omega
/// while the cost strictly improves. When even gamma0 does not improve, the
/// gamma0 trial is returned flagged non-improving.
LinesearchResult linesearch(const PhaseSystem& current, const std::vector<ScalarField>& direction,
                            const OptimizerConfig& cfg);

/// Projected gradient descent: evaluate cost and gradient, step along the
/// negative gradient with the expanding linesearch, project, until
/// gamma*||grad||_inf < eps or p_max iterations. Deterministic per seed.
RunLog optimize(const OptimizerConfig& cfg, const std::optional<PhaseSystem>& init = std::nullopt);

}  // namespace phaseopt
