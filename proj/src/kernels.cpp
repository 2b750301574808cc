#include "phaseopt/kernels.hpp"

#include <stdexcept>

namespace phaseopt {

namespace {

// Parallel regions only pay off once the grid is large enough.
inline bool n_big(const GridSpec& g) { return g.node_count() >= 8192; }

// One output row of the stencil; writes are disjoint per row, so the parallel
// loop is bitwise order-independent.
template <bool Periodic>
inline void stencil_row(const GridSpec& g, const double* u, double* v, int j) {
    const int nx = g.nx, ny = g.ny;
    const double ax = 1.0 / (g.hx * g.hx);
    const double ay = 1.0 / (g.hy * g.hy);
    const std::size_t row = static_cast<std::size_t>(j) * nx;
    const double* un;  // north row
    const double* us;  // south row
    if constexpr (Periodic) {
        un = u + static_cast<std::size_t>(j + 1 == ny ? 0 : j + 1) * nx;
        us = u + static_cast<std::size_t>(j == 0 ? ny - 1 : j - 1) * nx;
    } else {
        un = j + 1 < ny ? u + row + nx : nullptr;
        us = j > 0 ? u + row - nx : nullptr;
    }
    const double* uc = u + row;
    double* vc = v + row;
    for (int i = 0; i < nx; ++i) {
        double west, east;
        if constexpr (Periodic) {
            west = uc[i == 0 ? nx - 1 : i - 1];
            east = uc[i + 1 == nx ? 0 : i + 1];
        } else {
            west = i > 0 ? uc[i - 1] : 0.0;
            east = i + 1 < nx ? uc[i + 1] : 0.0;
        }
        const double north = Periodic ? un[i] : (un ? un[i] : 0.0);
        const double south = Periodic ? us[i] : (us ? us[i] : 0.0);
        vc[i] = ax * (2.0 * uc[i] - west - east) + ay * (2.0 * uc[i] - north - south);
    }
}

}  // namespace

ScalarField laplacian_apply(const GridSpec& grid, const ScalarField& u) {
    require_same_grid(grid, u.grid, "laplacian_apply");
    ScalarField v(grid);
    const double* up = u.values.data();
    double* vp = v.values.data();
    const bool par = n_big(grid);
    if (grid.bc == BcKind::Periodic) {
        #pragma omp parallel for schedule(static) if(par)
        for (int j = 0; j < grid.ny; ++j) stencil_row<true>(grid, up, vp, j);
    } else {
        #pragma omp parallel for schedule(static) if(par)
        for (int j = 0; j < grid.ny; ++j) stencil_row<false>(grid, up, vp, j);
    }
    return v;
}

void penalized_apply(const GridSpec& grid, std::span<const double> phi, double C,
                     std::span<const double> u, std::span<double> v) {
    const std::size_t n = grid.node_count();
    if (phi.size() != n || u.size() != n || v.size() != n)
        throw std::invalid_argument("penalized_apply: field/grid mismatch");
    const double* up = u.data();
    double* vp = v.data();
    const double* pp = phi.data();
    const bool par = n_big(grid);
    if (grid.bc == BcKind::Periodic) {
        #pragma omp parallel for schedule(static) if(par)
        for (int j = 0; j < grid.ny; ++j) {
            stencil_row<true>(grid, up, vp, j);
            const std::size_t row = static_cast<std::size_t>(j) * grid.nx;
            for (int i = 0; i < grid.nx; ++i)
                vp[row + i] += C * (1.0 - pp[row + i]) * up[row + i];
        }
    } else {
        #pragma omp parallel for schedule(static) if(par)
        for (int j = 0; j < grid.ny; ++j) {
            stencil_row<false>(grid, up, vp, j);
            const std::size_t row = static_cast<std::size_t>(j) * grid.nx;
            for (int i = 0; i < grid.nx; ++i)
                vp[row + i] += C * (1.0 - pp[row + i]) * up[row + i];
        }
    }
}

double dot_chunked(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot_chunked: size mismatch");
    const std::size_t n = a.size();
    // Fixed chunk layout: the reduction order never depends on thread count.
    constexpr int kChunks = 64;
    double partial[kChunks] = {};
    const std::size_t chunk = (n + kChunks - 1) / kChunks;
    #pragma omp parallel for schedule(static) if(n >= 32768)
    for (int c = 0; c < kChunks; ++c) {
        const std::size_t lo = c * chunk;
        const std::size_t hi = lo < n ? std::min(n, lo + chunk) : lo;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
        partial[c] = s;
    }
    double total = 0.0;
    for (int c = 0; c < kChunks; ++c) total += partial[c];
    return total;
}

namespace serial {

ScalarField laplacian_apply(const GridSpec& grid, const ScalarField& u) {
    require_same_grid(grid, u.grid, "laplacian_apply");
    ScalarField v(grid);
    const double* up = u.values.data();
    double* vp = v.values.data();
    for (int j = 0; j < grid.ny; ++j) {
        if (grid.bc == BcKind::Periodic)
            stencil_row<true>(grid, up, vp, j);
        else
            stencil_row<false>(grid, up, vp, j);
    }
    return v;
}

void penalized_apply(const GridSpec& grid, std::span<const double> phi, double C,
                     std::span<const double> u, std::span<double> v) {
    const std::size_t n = grid.node_count();
    if (phi.size() != n || u.size() != n || v.size() != n)
        throw std::invalid_argument("penalized_apply: field/grid mismatch");
    for (int j = 0; j < grid.ny; ++j) {
        if (grid.bc == BcKind::Periodic)
            stencil_row<true>(grid, u.data(), v.data(), j);
        else
            stencil_row<false>(grid, u.data(), v.data(), j);
        const std::size_t row = static_cast<std::size_t>(j) * grid.nx;
        for (int i = 0; i < grid.nx; ++i)
            v[row + i] += C * (1.0 - phi[row + i]) * u[row + i];
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    const std::size_t n = a.size();
    constexpr int kChunks = 64;
    double partial[kChunks] = {};
    const std::size_t chunk = (n + kChunks - 1) / kChunks;
    for (int c = 0; c < kChunks; ++c) {
        const std::size_t lo = c * chunk;
        const std::size_t hi = lo < n ? std::min(n, lo + chunk) : lo;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
        partial[c] = s;
    }
    double total = 0.0;
    for (int c = 0; c < kChunks; ++c) total += partial[c];
    return total;
}

}  // namespace serial

}  // namespace phaseopt
