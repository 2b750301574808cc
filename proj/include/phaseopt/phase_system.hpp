#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phaseopt/grid.hpp"

namespace phaseopt {

/// h competing densities plus the empty phase, last slot; at every node the
/// h+1 values are in [0,1] and sum to 1.
struct PhaseSystem {
    GridSpec grid;
    int h = 0;                        // competing phases; fields.size() == h+1
    std::vector<ScalarField> fields;  // fields[h] is the empty phase

    PhaseSystem() = default;
    PhaseSystem(const GridSpec& g, int phases);

    const ScalarField& empty_phase() const { return fields.back(); }
    void validate(double tol = 1e-12) const;
};

/// The nodewise projection (Pi x)_l = |x_l| / Σ_l |x_l|. An all-zero node maps
/// to the uniform point 1/(h+1).
PhaseSystem project_simplex(const std::vector<ScalarField>& raw);
void project_simplex_inplace(PhaseSystem& ps);

namespace serial {
void project_simplex_inplace(PhaseSystem& ps);
}

/// i.i.d. uniform(0,1) per node per phase from the seeded PRNG, then projected.
PhaseSystem random_init(const GridSpec& grid, int h, std::uint64_t seed);

/// Per-node label in 1..h+1 of the maximal density; ties resolve to the lowest
/// index.
std::vector<std::uint16_t> argmax_partition(const PhaseSystem& ps);

/// Checkpoint: u64 field count, then the fields as ScalarField checkpoints.
void write_checkpoint(const PhaseSystem& ps, const std::string& path);
PhaseSystem read_phase_checkpoint(const std::string& path, const GridSpec& grid);

/// Label rasters; row j=ny-1 is the top scanline so +y points up.
void write_pgm(const std::vector<std::uint16_t>& labels, const GridSpec& grid, int h,
               const std::string& path);
void write_ppm(const std::vector<std::uint16_t>& labels, const GridSpec& grid, int h,
               const std::string& path);

}  // namespace phaseopt
