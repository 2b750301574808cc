#include "phaseopt/optimizer.hpp"

#include <cmath>
#include <limits>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "phaseopt/rng.hpp"

namespace phaseopt {

void OptimizerConfig::validate() const {
    if (grid.nx < 3 || grid.ny < 3) throw std::invalid_argument("config: grid not set");
    if (k < 1) throw std::invalid_argument("config: k must be >= 1");
    if (alpha < 0.0) throw std::invalid_argument("config: alpha must be >= 0");
    if (h < 1) throw std::invalid_argument("config: h must be >= 1");
    if (!(C > 0.0)) throw std::invalid_argument("config: C must be > 0");
    if (!(gamma0 > 0.0)) throw std::invalid_argument("config: gamma0 must be > 0");
    if (!(omega > 1.0)) throw std::invalid_argument("config: omega must be > 1");
    if (!(eps > 0.0)) throw std::invalid_argument("config: eps must be > 0");
    if (p_max < 0) throw std::invalid_argument("config: p_max must be >= 0");
    if (!(eig_tol > 0.0)) throw std::invalid_argument("config: eig_tol must be > 0");
}

PhaseEvalParams OptimizerConfig::eval_params() const {
    return PhaseEvalParams{C, k, alpha, eig_tol, mix_seed(seed, 0x0e7a1ULL), true};
}

LinesearchCoreResult linesearch_core(double gamma0, double omega, double base_cost,
                                     const std::function<double(double)>& evaluate,
                                     int max_expansions) {
    LinesearchCoreResult res;
    double gamma = gamma0;
    double prev_cost = base_cost;
    for (int t = 0; t < max_expansions; ++t) {
        const double c = evaluate(gamma);
        if (!(c < prev_cost)) break;
        res.gamma = gamma;
        res.accepted_trial = t;
        res.improved = true;
        prev_cost = c;
        gamma *= omega;
    }
    if (!res.improved) res.gamma = gamma0;
    return res;
}

namespace {

struct Trial {
    PhaseSystem system;
    MultiphaseEvaluation eval;
};

PhaseSystem step_and_project(const PhaseSystem& x, const std::vector<ScalarField>& d,
                             double gamma) {
    PhaseSystem trial = x;
    for (std::size_t l = 0; l < trial.fields.size(); ++l) {
        auto& vals = trial.fields[l].values;
        const auto& dir = d[l].values;
        #pragma omp parallel for schedule(static) if(vals.size() >= 32768)
        for (long i = 0; i < static_cast<long>(vals.size()); ++i) vals[i] += gamma * dir[i];
    }
    project_simplex_inplace(trial);
    return trial;
}

double grad_inf_norm(const std::vector<ScalarField>& grads) {
    double m = 0.0;
    for (const ScalarField& g : grads)
        for (double v : g.values) m = std::max(m, std::abs(v));
    return m;
}

struct SearchOutcome {
    double gamma = 0.0;
    Trial trial;
    bool improved = false;
    int evaluations = 0;
};

SearchOutcome expanding_search(const PhaseSystem& x, const std::vector<ScalarField>& d,
                               double gamma0, double omega, double base_cost,
                               const PhaseEvalParams& params,
                               const std::vector<RelaxedEigenResult>* warm) {
    SearchOutcome out;
    Trial last, accepted;
    const double kMaxStepSup = []() {
        const char* e = std::getenv("PHASEOPT_STEP_SUP");
        return e ? std::atof(e) : 0.2;
    }();
    const std::function<double(double)> evaluate = [&](double gamma) {
        PhaseSystem trial_system = step_and_project(x, d, gamma);
        // Quasi-static guard: once a trial moves some density by more than
        // kMaxStepSup the support is binarizing faster than the eigenfunction
        // balance can follow, which freezes the discrete free boundary in the
        // wrong place; treat such trials as non-improving.
        if (out.evaluations > 0) {
            double sup_change = 0.0;
            for (std::size_t l = 0; l < trial_system.fields.size(); ++l)
                for (std::size_t i = 0; i < trial_system.fields[l].values.size(); ++i)
                    sup_change = std::max(sup_change,
                                          std::abs(trial_system.fields[l].values[i] -
                                                   x.fields[l].values[i]));
            if (sup_change > kMaxStepSup)
                return std::numeric_limits<double>::infinity();
        }
        std::vector<RelaxedEigenResult> prev_eigs;
        const std::vector<RelaxedEigenResult>* trial_warm = warm;
        if (out.evaluations > 0) {
            if (last.eval.cost.total < base_cost)
                accepted = last;  // previous trial improved; keep it retrievable
            // successive trials are one doubling apart: chain the warm starts
            prev_eigs = std::move(last.eval.eigs);
            trial_warm = &prev_eigs;
        }
        last.system = std::move(trial_system);
        last.eval = evaluate_multiphase(last.system, params, trial_warm);
        ++out.evaluations;
        return last.eval.cost.total;
    };
    // Far beyond gamma*||d||_inf ~ 1e3 the projected trial saturates at
    // Pi(|d|) and further doubling only walks the tail of that limit; cap
    // the expansion there instead of burning eigensolves. The constant is
    // generous because ||d||_inf sits at the eigenfunction peak while the
    // useful step scale is set by the much smaller bulk gradient.
    constexpr double kSaturationScale = 1e3;
    double dinf = 0.0;
    for (const ScalarField& f : d)
        for (double v : f.values) dinf = std::max(dinf, std::abs(v));
    int max_expansions = kMaxExpansions;
    if (dinf > 0.0) {
        if (gamma0 * dinf >= kSaturationScale)
            max_expansions = 1;
        else
            max_expansions = std::clamp(
                1 + static_cast<int>(std::ceil(std::log(kSaturationScale / (gamma0 * dinf)) /
                                               std::log(omega))),
                1, kMaxExpansions);
    }
    // The closure above compares against base_cost only to cache the best-so-
    // far system; the accept/expand rule itself lives in linesearch_core.
    LinesearchCoreResult core = linesearch_core(gamma0, omega, base_cost, evaluate,
                                                max_expansions);
    out.gamma = core.gamma;
    out.improved = core.improved;
    if (!core.improved) {
        out.trial = std::move(last);  // the gamma0 trial
    } else if (core.accepted_trial == out.evaluations - 1) {
        out.trial = std::move(last);  // expansion hit the trial cap while improving
    } else {
        out.trial = std::move(accepted);
    }
    return out;
}

}  // namespace

LinesearchResult linesearch(const PhaseSystem& current, const std::vector<ScalarField>& direction,
                            const OptimizerConfig& cfg) {
    cfg.validate();
    current.validate();
    if (direction.size() != current.fields.size())
        throw std::invalid_argument("linesearch: direction needs h+1 fields");
    PhaseEvalParams params = cfg.eval_params();
    const double base = evaluate_multiphase(current, params).cost.total;
    SearchOutcome out = expanding_search(current, direction, cfg.gamma0, cfg.omega, base,
                                         params, nullptr);
    LinesearchResult res;
    res.gamma = out.gamma;
    res.candidate = std::move(out.trial.system);
    res.eval = std::move(out.trial.eval);
    res.cost = res.eval.cost;
    res.improved = out.improved;
    res.evaluations = out.evaluations + 1;  // counting the base evaluation
    return res;
}

RunLog optimize(const OptimizerConfig& cfg, const std::optional<PhaseSystem>& init) {
    cfg.validate();
    PhaseSystem x = init ? *init : random_init(cfg.grid, cfg.h, cfg.seed);
    if (init) {
        require_same_grid(cfg.grid, x.grid, "optimize init");
        if (x.h != cfg.h) throw std::invalid_argument("optimize: init phase count mismatch");
        x.validate();
    }
    PhaseEvalParams params = cfg.eval_params();

    const bool writing = !cfg.out_dir.empty();
    if (writing) std::filesystem::create_directories(cfg.out_dir);
    auto out_path = [&](const std::string& suffix) {
        return cfg.out_dir + "/" + cfg.run_id + suffix;
    };

    RunLog log;
    // Early on the search only has to order costs that differ by the previous
    // accepted improvement; solving to cfg.eig_tol there wastes iterations in
    // the near-degenerate random-density regime. The tolerance tightens as
    // improvements shrink and floors at cfg.eig_tol.
    auto eval_tol = [&](double prev_improvement, double lambda_scale) {
        const double target = 0.03 * prev_improvement / (cfg.h * std::max(1.0, lambda_scale));
        return std::clamp(target, cfg.eig_tol, 1e-4);
    };
    params.tol = 1e-4;
    MultiphaseEvaluation cur = evaluate_multiphase(x, params);
    if (cur.any_clustered) ++log.clustered_events;
    std::vector<ScalarField> grads = gradient_from_evaluation(x, cur, params);
    double ginf = grad_inf_norm(grads);
    log.records.push_back({0, cur.cost, 0.0, ginf});

    double gamma0_eff = cfg.gamma0;
    double prev_improvement = std::abs(cur.cost.total) * 1e-2 + 1.0;
    log.termination = TerminationReason::IterationCap;

    for (int p = 1; p <= cfg.p_max; ++p) {
        double lambda_scale = 1.0;
        for (double l : cur.cost.per_phase_eigenvalue)
            lambda_scale = std::max(lambda_scale, std::abs(l));
        params.tol = eval_tol(prev_improvement, lambda_scale);
        std::vector<ScalarField> direction;
        direction.reserve(grads.size());
        for (const ScalarField& g : grads) {
            ScalarField d = g;
            for (double& v : d.values) v = -v;
            direction.push_back(std::move(d));
        }

        SearchOutcome found = expanding_search(x, direction, gamma0_eff, cfg.omega,
                                               cur.cost.total, params, &cur.eigs);
        if (!found.improved) {
            // Expansion-only search stalls near optima; backtrack before
            // declaring stationarity.
            bool rescued = false;
            double gamma_try = gamma0_eff;
            for (int t = 0; t < kMaxBacktracks; ++t) {
                gamma_try *= 0.5;
                Trial trial;
                trial.system = step_and_project(x, direction, gamma_try);
                trial.eval = evaluate_multiphase(trial.system, params, &cur.eigs);
                if (trial.eval.cost.total < cur.cost.total) {
                    found.gamma = gamma_try;
                    found.trial = std::move(trial);
                    found.improved = true;
                    rescued = true;
                    break;
                }
            }
            if (!rescued) {
                log.termination = TerminationReason::StepCriterion;
                break;
            }
        }

        prev_improvement = cur.cost.total - found.trial.eval.cost.total;
        x = std::move(found.trial.system);
        cur = std::move(found.trial.eval);
        if (cur.any_clustered) ++log.clustered_events;
        grads = gradient_from_evaluation(x, cur, params);
        ginf = grad_inf_norm(grads);
        log.records.push_back({p, cur.cost, found.gamma, ginf});
        // Start the next search one notch under the accepted step instead of
        // re-expanding from gamma0 every iteration.
        gamma0_eff = std::max(cfg.gamma0, found.gamma / cfg.omega);

        if (writing && cfg.checkpoint_every > 0 && p % cfg.checkpoint_every == 0)
            write_checkpoint(x, out_path("_checkpoint.sps"));

        if (found.gamma * ginf < cfg.eps) {
            log.termination = TerminationReason::StepCriterion;
            break;
        }
    }

    log.final_system = std::move(x);
    if (writing) {
        write_checkpoint(log.final_system, out_path("_final.sps"));
        write_ppm(argmax_partition(log.final_system), cfg.grid, cfg.h, out_path("_final.ppm"));
        std::ofstream csv(out_path("_log.csv"));
        csv << log.csv();
    }
    return log;
}

std::string RunLog::csv() const {
    std::string out = "iteration,total";
    const std::size_t h = records.empty() ? 0 : records[0].cost.per_phase_eigenvalue.size();
    for (std::size_t l = 1; l <= h; ++l) out += ",lambda_" + std::to_string(l);
    out += ",volume_term,gamma,grad_inf\n";
    char buf[64];
    for (const IterationRecord& r : records) {
        out += r.cost.csv_row(r.iteration);
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", r.gamma, r.grad_inf_norm);
        out += buf;
    }
    return out;
}

}  // namespace phaseopt
