// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Criteria 1-4 exercise the error tables, 5-6 the gradients and projection,
// 7-11 the optimizer studies, 12 the dense oracle.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "phaseopt/bessel.hpp"
#include "phaseopt/study.hpp"
#include "test_helpers.hpp"

using namespace phaseopt;
using namespace phaseopt::testing;

namespace {

// Alpha for the 6-cell periodic stability runs (criterion 8). Found with
// `phaseopt calibrate-alpha` on the sqrt(3) x 1 box; the packing-regime model
// cost 12 j01 sqrt(pi a) - sqrt(3) a crosses 205.2 near a = 612, i.e. 612*|D|
// in the code's 1/N^2 volume convention. See README on conventions.
constexpr double kSixCellAlpha = 1060.0;

struct Criterion {
    int number;
    const char* title;
    std::function<bool(std::string&)> run;
};

bool within_factor(double value, double reference, double factor) {
    return value >= reference / factor && value <= reference * factor;
}

double occupied_area(const RunSummary& run) {
    double occ = 0.0;
    for (double a : run.per_phase_area) occ += a;
    return occ;
}

// Fraction of nodes on which two periodic label fields agree, maximized over
// cyclic translations and relabelings of the competing phases (the empty
// phase must map to itself).
double best_match_fraction(const std::vector<std::uint16_t>& a,
                           const std::vector<std::uint16_t>& b, const GridSpec& g, int h) {
    const int nx = g.nx, ny = g.ny;
    const std::size_t n = g.node_count();
    std::vector<int> perm_base(h);
    for (int i = 0; i < h; ++i) perm_base[i] = i;

    double best = 0.0;
    #pragma omp parallel for schedule(dynamic) reduction(max : best)
    for (int shift = 0; shift < static_cast<int>(n); ++shift) {
        const int sx = shift % nx, sy = shift / nx;
        // overlap[la][lb]: nodes where a has label la+1 and shifted b has lb+1
        std::vector<int> overlap((h + 1) * (h + 1), 0);
        for (int j = 0; j < ny; ++j) {
            const int jb = (j + sy) % ny;
            for (int i = 0; i < nx; ++i) {
                const int ib = (i + sx) % nx;
                const int la = a[static_cast<std::size_t>(j) * nx + i] - 1;
                const int lb = b[static_cast<std::size_t>(jb) * nx + ib] - 1;
                ++overlap[la * (h + 1) + lb];
            }
        }
        int fixed = overlap[h * (h + 1) + h];  // empty phase matches itself
        std::vector<int> perm = perm_base;
        int best_perm = 0;
        do {
            int s = 0;
            for (int la = 0; la < h; ++la) s += overlap[la * (h + 1) + perm[la]];
            best_perm = std::max(best_perm, s);
        } while (std::next_permutation(perm.begin(), perm.end()));
        best = std::max(best, static_cast<double>(fixed + best_perm) / static_cast<double>(n));
    }
    return best;
}

bool no_triple_point(const std::vector<std::uint16_t>& labels, const GridSpec& g, int h) {
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const std::uint16_t block[4] = {
                labels[g.index(i, j)],
                labels[g.index((i + 1) % g.nx, j)],
                labels[g.index(i, (j + 1) % g.ny)],
                labels[g.index((i + 1) % g.nx, (j + 1) % g.ny)],
            };
            int distinct = 0;
            for (int l = 1; l <= h; ++l)
                if (block[0] == l || block[1] == l || block[2] == l || block[3] == l)
                    ++distinct;
            if (distinct >= 3) return false;
        }
    return true;
}

// Shared state: the disk table feeds criteria 1, 3 and 4.
ErrorTable g_disk_table;
StabilityResult g_stability;
GridSpec g_stability_grid;

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    auto selected = [&](int n) {
        return only.empty() || std::find(only.begin(), only.end(), n) != only.end();
    };

    std::vector<Criterion> criteria;

    criteria.push_back({1, "disk error table, N=100, C in {1e3, 1e6}", [](std::string& msg) {
        ReferenceShape disk = ReferenceShape::disk(0.0, 0.0, 1.0);
        g_disk_table = error_table(disk, {100, 200},
                                   {1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9}, 10, 1e-9, 0);
        const double e3 = g_disk_table.entry(100, 1e3);
        const double e6 = g_disk_table.entry(100, 1e6);
        char buf[160];
        std::snprintf(buf, sizeof buf, "err(1e3)=%.3g vs 5.2e-2, err(1e6)=%.3g vs 1.1e-2",
                      e3, e6);
        msg = buf;
        return within_factor(e3, 5.2e-2, 2.0) && within_factor(e6, 1.1e-2, 2.0);
    }});

    criteria.push_back({2, "square error table, N=200, C=1e6", [](std::string& msg) {
        ReferenceShape square = ReferenceShape::rectangle(0.0, 0.0, 2.0, 2.0);
        ErrorTable t = error_table(square, {200}, {1e6}, 10, 1e-9, 0);
        const double e = t.entry(200, 1e6);
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "err=%.3g vs paper 4.8e-3 (factor %.2f); the N=200 grid places the "
                      "square wall exactly between nodes, error floor ~1.5e-2",
                      e, e / 4.8e-3);
        msg = buf;
        return within_factor(e, 4.8e-3, 2.0);
    }});

    criteria.push_back({3, "plateau: disk rows agree pairwise within 5% for C >= 1e7",
                        [](std::string& msg) {
        bool ok = true;
        char buf[160];
        std::string detail;
        for (int N : {100, 200}) {
            const double e7 = g_disk_table.entry(N, 1e7);
            const double e8 = g_disk_table.entry(N, 1e8);
            const double e9 = g_disk_table.entry(N, 1e9);
            const double lo = std::min({e7, e8, e9});
            const double hi = std::max({e7, e8, e9});
            ok = ok && (hi - lo) / lo <= 0.05;
            std::snprintf(buf, sizeof buf, "N=%d: {%.4g, %.4g, %.4g} ", N, e7, e8, e9);
            detail += buf;
        }
        msg = detail;
        return ok;
    }});

    criteria.push_back({4, "decay exponent <= -1/6 + 0.05 and order-of-magnitude drop",
                        [](std::string& msg) {
        const double slope = decay_exponent(g_disk_table, 200);
        const double drop = g_disk_table.entry(200, 1e3) / g_disk_table.entry(200, 1e9);
        char buf[160];
        std::snprintf(buf, sizeof buf, "slope=%.4f (bound %.4f), drop 1e3->1e9 = %.1fx",
                      slope, -1.0 / 6.0 + 0.05, drop);
        msg = buf;
        return slope <= -1.0 / 6.0 + 0.05 && drop >= 5.0;
    }});

    criteria.push_back({5, "gradient vs central differences on a 40x40 grid",
                        [](std::string& msg) {
        const auto t0 = std::chrono::steady_clock::now();
        GridSpec g = GridSpec::dirichlet_box(-1.5, 1.5, -1.5, 1.5, 40, 40);
        ScalarField phi = random_field(g, 314, 0.1, 0.9);
        const double C = 1e4, tol = 1e-11, eps = 1e-6;
        RelaxedEigenResult base = relaxed_eigenvalue(phi, C, 1, tol, 1);
        ScalarField grad = eigenvalue_gradient(base, true);
        std::vector<ScalarField> warm{base.u};

        std::mt19937_64 rng(2718);
        double worst = 0.0;
        for (int dir = 0; dir < 10; ++dir) {
            ScalarField delta(g);
            double norm = 0.0;
            for (double& v : delta.values) {
                v = uniform01(rng) - 0.5;
                norm += v * v;
            }
            norm = std::sqrt(norm);
            ScalarField up = phi, dn = phi;
            double lin = 0.0;
            for (std::size_t i = 0; i < delta.values.size(); ++i) {
                delta.values[i] /= norm;
                up.values[i] += eps * delta.values[i];
                dn.values[i] -= eps * delta.values[i];
                lin += grad.values[i] * delta.values[i];
            }
            const double lp = relaxed_eigenvalue(up, C, 1, tol, 1, &warm).lambda;
            const double lm = relaxed_eigenvalue(dn, C, 1, tol, 1, &warm).lambda;
            const double fd = (lp - lm) / (2.0 * eps);
            worst = std::max(worst, std::abs(fd - lin) / std::abs(lin));
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        char buf[120];
        std::snprintf(buf, sizeof buf, "worst relative error %.3g over 10 directions, %.1fs",
                      worst, secs);
        msg = buf;
        return worst <= 1e-3 && secs <= 30.0;
    }});

    criteria.push_back({6, "projection property suite on 1e5 random nodes",
                        [](std::string& msg) {
        GridSpec g = GridSpec::periodic_box(0.0, 1.0, 0.0, 1.0, 320, 320);  // 102400 nodes
        const int h = 3;
        std::vector<ScalarField> raw;
        for (int l = 0; l <= h; ++l) raw.push_back(random_field(g, 500 + l, -1.5, 2.0));
        raw[0].values[7] = 0.0;
        raw[2].values[12345] = 0.0;
        PhaseSystem once = project_simplex(raw);

        double worst = 0.0;
        // simplex invariant
        for (std::size_t i = 0; i < g.node_count(); ++i) {
            double sum = 0.0;
            for (const auto& f : once.fields) {
                const double v = f.values[i];
                if (v < 0.0 || v > 1.0) worst = 1.0;
                sum += v;
            }
            worst = std::max(worst, std::abs(sum - 1.0));
        }
        // idempotence
        PhaseSystem twice = project_simplex(once.fields);
        for (int l = 0; l <= h; ++l)
            for (std::size_t i = 0; i < g.node_count(); ++i)
                worst = std::max(worst,
                                 std::abs(twice.fields[l].values[i] - once.fields[l].values[i]));
        // per-node scale invariance
        std::vector<ScalarField> scaled = raw;
        for (auto& f : scaled)
            for (double& v : f.values) v *= -7.25;
        PhaseSystem ps = project_simplex(scaled);
        for (int l = 0; l <= h; ++l)
            for (std::size_t i = 0; i < g.node_count(); ++i)
                worst = std::max(worst,
                                 std::abs(ps.fields[l].values[i] - once.fields[l].values[i]));
        // zero pattern
        const bool zeros_kept =
            once.fields[0].values[7] == 0.0 && once.fields[2].values[12345] == 0.0;
        char buf[120];
        std::snprintf(buf, sizeof buf, "worst deviation %.3g, zero pattern %s", worst,
                      zeros_kept ? "kept" : "broken");
        msg = buf;
        return worst <= 1e-12 && zeros_kept;
    }});

    criteria.push_back({7, "optimizer determinism and descent (N=64, h=3, 200 iterations)",
                        [](std::string& msg) {
        OptimizerConfig cfg;
        cfg.grid = GridSpec::periodic_box(0.0, 1.0, 0.0, 1.0, 64, 64);
        cfg.h = 3;
        cfg.k = 1;
        cfg.alpha = 300.0;
        cfg.C = 1e4;
        cfg.eig_tol = 1e-8;
        cfg.p_max = 200;
        cfg.seed = 12;
        RunLog a = optimize(cfg);
        RunLog b = optimize(cfg);
        const bool identical = a.csv() == b.csv();
        bool monotone = true;
        for (std::size_t r = 1; r < a.records.size(); ++r)
            monotone = monotone && a.records[r].cost.total <= a.records[r - 1].cost.total;
        char buf[120];
        std::snprintf(buf, sizeof buf, "%zu iterations, rerun %s, costs %s",
                      a.records.size() - 1, identical ? "identical" : "DIFFERS",
                      monotone ? "nonincreasing" : "NOT monotone");
        msg = buf;
        return identical && monotone;
    }});

    criteria.push_back({8, "6-cell stability: cost spread and partition agreement",
                        [](std::string& msg) {
        OptimizerConfig cfg;
        cfg.grid = GridSpec::periodic_box(0.0, std::sqrt(3.0), 0.0, 1.0, 96, 96);
        cfg.h = 6;
        cfg.k = 1;
        cfg.alpha = kSixCellAlpha;
        cfg.C = 1e4;
        cfg.eig_tol = 1e-8;
        cfg.p_max = 500;
        g_stability_grid = cfg.grid;
        g_stability = stability_study(cfg, 4);

        double worst_match = 1.0;
        for (std::size_t i = 0; i < g_stability.runs.size(); ++i)
            for (std::size_t j = i + 1; j < g_stability.runs.size(); ++j)
                worst_match = std::min(
                    worst_match, best_match_fraction(g_stability.runs[i].labels,
                                                     g_stability.runs[j].labels,
                                                     g_stability_grid, cfg.h));
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "totals {%.4f, %.4f, %.4f, %.4f}, spread %.3g, worst pairwise match %.1f%%",
                      g_stability.runs[0].final_total, g_stability.runs[1].final_total,
                      g_stability.runs[2].final_total, g_stability.runs[3].final_total,
                      g_stability.spread, 100.0 * worst_match);
        msg = buf;
        return g_stability.spread <= 0.002 && worst_match >= 0.95;
    }});

    criteria.push_back({9, "circle-packing limit: one phase contracts to the r_alpha disk",
                        [](std::string& msg) {
        OptimizerConfig cfg;
        cfg.grid = GridSpec::dirichlet_box(-1.5, 1.5, -1.5, 1.5, 100, 100);
        cfg.h = 1;
        cfg.k = 1;
        const double j01sq = std::pow(bessel_zeros(0, 1)[0], 2.0);
        const double r_alpha = 0.75;
        const double alpha_cont = j01sq / (std::numbers::pi * std::pow(r_alpha, 4.0));
        cfg.alpha = alpha_cont * 9.0;  // code volume term is (1/N^2)-weighted
        cfg.C = 1e4;
        cfg.eig_tol = 1e-8;
        cfg.p_max = 400;
        cfg.seed = 3;
        RunLog log = optimize(cfg);
        std::vector<std::uint16_t> labels = argmax_partition(log.final_system);
        double area = 0.0;
        for (auto lab : labels)
            if (lab == 1) area += cfg.grid.cell_area();
        const double target = std::numbers::pi * r_alpha * r_alpha;
        char buf[120];
        std::snprintf(buf, sizeof buf, "area %.4f vs pi r^2 = %.4f (%.1f%% off)", area,
                      target, 100.0 * std::abs(area - target) / target);
        msg = buf;
        return std::abs(area - target) <= 0.10 * target;
    }});

    criteria.push_back({10, "alpha sweep: occupied area nonincreasing in alpha",
                        [](std::string& msg) {
        OptimizerConfig cfg;
        cfg.grid = GridSpec::periodic_box(0.0, 1.0, 0.0, 1.0, 96, 96);
        cfg.h = 4;
        cfg.k = 1;
        cfg.C = 1e4;
        cfg.eig_tol = 1e-8;
        cfg.p_max = 300;
        cfg.seed = 4;
        SweepResult res = alpha_sweep(cfg, {300.0, 420.0, 560.0, 700.0});
        std::string detail = "areas:";
        bool ok = true;
        char buf[48];
        for (std::size_t i = 0; i < res.runs.size(); ++i) {
            std::snprintf(buf, sizeof buf, " %.4f", occupied_area(res.runs[i]));
            detail += buf;
            if (i > 0)
                ok = ok &&
                     occupied_area(res.runs[i]) <= occupied_area(res.runs[i - 1]) * 1.02;
        }
        msg = detail;
        return ok;
    }});

    criteria.push_back({11, "no 2x2 block carries three competing phases",
                        [](std::string& msg) {
        if (g_stability.runs.empty()) {
            msg = "requires criterion 8's run";
            return false;
        }
        const bool ok = no_triple_point(g_stability.runs[0].labels, g_stability_grid, 6);
        msg = ok ? "no triple junction found" : "triple junction present";
        return ok;
    }});

    criteria.push_back({12, "iterative solver matches dense diagonalization (n <= 400)",
                        [](std::string& msg) {
        double worst = 0.0;
        const double tol = 1e-9;
        int checked = 0;
        for (int trial = 0; trial < 20; ++trial) {
            const int nx = 14 + (trial % 3) * 3;  // 14, 17, 20 -> n up to 400
            GridSpec g = trial % 2 == 0
                             ? GridSpec::dirichlet_box(-1.5, 1.5, -1.5, 1.5, nx, nx)
                             : GridSpec::periodic_box(0.0, 1.0, 0.0, 1.0, nx, nx);
            ScalarField phi = random_field(g, 900 + trial);
            const double C = trial % 3 == 0 ? 1e6 : 1e3;
            PenalizedOperator op(g, phi, C);
            std::vector<double> ref = dense_eigenvalues(dense_from_definition(g, phi, C), 10);
            std::vector<EigenPair> pairs = smallest_eigenpairs(op, 10, tol, trial);
            for (int i = 0; i < 10; ++i)
                worst = std::max(worst,
                                 std::abs(pairs[i].lambda - ref[i]) / std::max(1.0, ref[i]));
            ++checked;
        }
        char buf[120];
        std::snprintf(buf, sizeof buf, "%d random densities, worst deviation %.3g", checked,
                      worst);
        msg = buf;
        return worst <= 100.0 * tol;
    }});

    int failures = 0;
    for (const Criterion& c : criteria) {
        if (!selected(c.number)) continue;
        std::string msg;
        bool ok = false;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            ok = c.run(msg);
        } catch (const std::exception& e) {
            msg = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] criterion %2d: %s — %s (%.1fs)\n", ok ? "PASS" : "FAIL", c.number,
                    c.title, msg.c_str(), secs);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
