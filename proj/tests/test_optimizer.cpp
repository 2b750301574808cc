#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "phaseopt/optimizer.hpp"
#include "phaseopt/bessel.hpp"
#include "test_helpers.hpp"

using namespace phaseopt;

namespace {

OptimizerConfig small_cfg() {
    OptimizerConfig cfg;
    cfg.grid = GridSpec::periodic_box(0.0, 1.0, 0.0, 1.0, 24, 24);
    cfg.h = 2;
    cfg.k = 1;
    cfg.alpha = 30.0;
    cfg.C = 1e3;
    cfg.eig_tol = 1e-8;
    cfg.p_max = 10;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("linesearch core follows the expanding rule") {
    SUBCASE("minimum between gamma0*omega^2 and gamma0*omega^3") {
        // Enumerating the trials by hand: costs at gamma0*omega^t are
        // decreasing for t = 0,1,2 and rise at t = 3, so the search returns
        // gamma0*omega^2.
        const double gamma0 = 1e-3, omega = 2.0;
        const double gmin = gamma0 * omega * omega * 1.5;  // between w^2 and w^3
        auto cost = [&](double gamma) { return (gamma - gmin) * (gamma - gmin); };
        std::vector<double> seen;
        LinesearchCoreResult res = linesearch_core(gamma0, omega, cost(0.0), [&](double g) {
            seen.push_back(g);
            return cost(g);
        });
        CHECK(res.improved);
        CHECK(res.gamma == doctest::Approx(gamma0 * omega * omega).epsilon(1e-15));
        CHECK(seen.size() == 4);  // trials at w^0..w^3; the last one broke the run
    }
    SUBCASE("improving forever doubles until the trial cap") {
        std::vector<double> seen;
        LinesearchCoreResult res =
            linesearch_core(1.0, 2.0, 1e9, [&](double g) {
                seen.push_back(g);
                return -g;  // always improves
            });
        CHECK(res.improved);
        CHECK(static_cast<int>(seen.size()) == kMaxExpansions);
        for (std::size_t t = 1; t < seen.size(); ++t)
            CHECK(seen[t] == doctest::Approx(2.0 * seen[t - 1]).epsilon(1e-15));
        CHECK(res.gamma == seen.back());
    }
    SUBCASE("non-improving first trial") {
        LinesearchCoreResult res =
            linesearch_core(0.5, 2.0, 1.0, [&](double) { return 2.0; });
        CHECK_FALSE(res.improved);
        CHECK(res.gamma == 0.5);
    }
}

TEST_CASE("linesearch with zero direction returns the current system") {
    OptimizerConfig cfg = small_cfg();
    PhaseSystem x = random_init(cfg.grid, cfg.h, 3);
    std::vector<ScalarField> dir(cfg.h + 1, ScalarField(cfg.grid, 0.0));
    LinesearchResult res = linesearch(x, dir, cfg);
    CHECK_FALSE(res.improved);
    CHECK(res.gamma == cfg.gamma0);
    for (int l = 0; l <= cfg.h; ++l)
        for (std::size_t i = 0; i < x.fields[l].values.size(); ++i)
            CHECK(res.candidate.fields[l].values[i] ==
                  doctest::Approx(x.fields[l].values[i]).epsilon(1e-13));
}

TEST_CASE("p_max = 0 records only the initial cost") {
    OptimizerConfig cfg = small_cfg();
    cfg.p_max = 0;
    RunLog log = optimize(cfg);
    CHECK(log.records.size() == 1);
    CHECK(log.records[0].iteration == 0);
    CHECK(log.termination == TerminationReason::IterationCap);
}

TEST_CASE("short run: descent, feasibility, determinism") {
    OptimizerConfig cfg = small_cfg();
    RunLog log = optimize(cfg);
    REQUIRE(log.records.size() >= 2);
    for (std::size_t r = 1; r < log.records.size(); ++r)
        CHECK(log.records[r].cost.total <= log.records[r - 1].cost.total + 1e-12);
    log.final_system.validate();

    RunLog again = optimize(cfg);
    CHECK(again.csv() == log.csv());  // byte-for-byte

    OptimizerConfig other = cfg;
    other.seed = cfg.seed + 1;
    RunLog different = optimize(other);
    CHECK(different.csv() != log.csv());
}

TEST_CASE("explicit init is honored and validated") {
    OptimizerConfig cfg = small_cfg();
    cfg.p_max = 2;
    PhaseSystem init = random_init(cfg.grid, cfg.h, 77);
    RunLog log = optimize(cfg, init);
    CHECK(log.records.size() >= 1);

    PhaseSystem wrong_h = random_init(cfg.grid, cfg.h + 1, 77);
    CHECK_THROWS_AS((void)optimize(cfg, wrong_h), std::invalid_argument);
}

TEST_CASE("single phase shrinks toward the optimal disk") {
    // Desk-scale circle-packing: alpha tuned for r_alpha = 0.5; the argmax
    // region area should land near pi/4 (generous slack at this resolution).
    OptimizerConfig cfg;
    cfg.grid = GridSpec::dirichlet_box(-1.5, 1.5, -1.5, 1.5, 48, 48);
    cfg.h = 1;
    cfg.k = 1;
    const double j01 = bessel_zeros(0, 1)[0];
    const double r_alpha = 0.5;
    const double alpha_cont = j01 * j01 / (std::numbers::pi * std::pow(r_alpha, 4.0));
    cfg.alpha = alpha_cont * 9.0;  // volume term carries the 1/N^2 weight
    cfg.C = 1e4;
    cfg.eig_tol = 1e-8;
    cfg.p_max = 250;
    cfg.gamma0 = 1e-4;
    cfg.seed = 1;
    RunLog log = optimize(cfg);

    std::vector<std::uint16_t> labels = argmax_partition(log.final_system);
    double area = 0.0;
    for (auto lab : labels)
        if (lab == 1) area += cfg.grid.cell_area();
    const double target = std::numbers::pi * r_alpha * r_alpha;
    CHECK(area == doctest::Approx(target).epsilon(0.2));
}

TEST_CASE("config validation") {
    OptimizerConfig cfg = small_cfg();
    cfg.omega = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_cfg();
    cfg.gamma0 = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_cfg();
    cfg.alpha = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
