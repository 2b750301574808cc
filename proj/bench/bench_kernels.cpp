// Serial reference vs OpenMP kernels on optimizer-sized grids.
#include <chrono>
#include <cstdio>
#include <random>

#include <omp.h>

#include "phaseopt/kernels.hpp"
#include "phaseopt/phase_system.hpp"
#include "phaseopt/rng.hpp"

using namespace phaseopt;
using clock_type = std::chrono::high_resolution_clock;

namespace {

double ms_since(clock_type::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

ScalarField random_field(const GridSpec& g, std::uint64_t seed) {
    ScalarField f(g);
    std::mt19937_64 rng(seed);
    for (double& v : f.values) v = uniform01(rng);
    return f;
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = clock_type::now();
        fn();
        best = std::min(best, ms_since(t0));
    }
    return best;
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    const int reps = 20;

    for (int N : {96, 200, 400}) {
        GridSpec g = GridSpec::periodic_box(0.0, 1.0, 0.0, 1.0, N, N);
        ScalarField u = random_field(g, 1);
        ScalarField phi = random_field(g, 2);
        ScalarField v(g);

        const double t_lap_serial =
            time_best_of(reps, [&] { v = serial::laplacian_apply(g, u); });
        const double t_lap_omp = time_best_of(reps, [&] { v = laplacian_apply(g, u); });

        const double t_pen_serial = time_best_of(
            reps, [&] { serial::penalized_apply(g, phi.values, 1e6, u.values, v.values); });
        const double t_pen_omp = time_best_of(
            reps, [&] { penalized_apply(g, phi.values, 1e6, u.values, v.values); });

        double sink = 0.0;
        const double t_dot_serial =
            time_best_of(reps, [&] { sink += serial::dot(u.values, phi.values); });
        const double t_dot_omp =
            time_best_of(reps, [&] { sink += dot_chunked(u.values, phi.values); });

        PhaseSystem ps = random_init(g, 6, 7);
        PhaseSystem ps2 = ps;
        const double t_proj_serial = time_best_of(reps, [&] {
            ps2 = ps;
            serial::project_simplex_inplace(ps2);
        });
        const double t_proj_omp = time_best_of(reps, [&] {
            ps2 = ps;
            project_simplex_inplace(ps2);
        });

        std::printf("N=%d (%d nodes)\n", N, N * N);
        std::printf("  laplacian_apply   serial %8.3f ms   omp %8.3f ms   speedup %.2fx\n",
                    t_lap_serial, t_lap_omp, t_lap_serial / t_lap_omp);
        std::printf("  penalized_apply   serial %8.3f ms   omp %8.3f ms   speedup %.2fx\n",
                    t_pen_serial, t_pen_omp, t_pen_serial / t_pen_omp);
        std::printf("  dot               serial %8.3f ms   omp %8.3f ms   speedup %.2fx\n",
                    t_dot_serial, t_dot_omp, t_dot_serial / t_dot_omp);
        std::printf("  project_simplex   serial %8.3f ms   omp %8.3f ms   speedup %.2fx\n",
                    t_proj_serial, t_proj_omp, t_proj_serial / t_proj_omp);
        if (sink == 12345.0) std::printf("%f\n", sink);  // keep the dots alive
    }
    return 0;
}
