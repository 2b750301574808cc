#include "phaseopt/phase_system.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "phaseopt/rng.hpp"

namespace phaseopt {

PhaseSystem::PhaseSystem(const GridSpec& g, int phases) : grid(g), h(phases) {
    if (phases < 1) throw std::invalid_argument("PhaseSystem: h must be >= 1");
    fields.assign(phases + 1, ScalarField(g));
}

void PhaseSystem::validate(double tol) const {
    if (h < 1 || fields.size() != static_cast<std::size_t>(h) + 1)
        throw std::invalid_argument("PhaseSystem: needs h+1 fields");
    for (const ScalarField& f : fields) require_same_grid(grid, f.grid, "PhaseSystem");
    const std::size_t n = grid.node_count();
    for (std::size_t idx = 0; idx < n; ++idx) {
        double sum = 0.0;
        for (const ScalarField& f : fields) {
            const double v = f.values[idx];
            if (!(v >= 0.0) || !(v <= 1.0))
                throw std::invalid_argument("PhaseSystem: density outside [0,1]");
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol)
            throw std::invalid_argument("PhaseSystem: densities do not sum to 1");
    }
}

namespace {

inline void project_node(std::vector<ScalarField>& fields, std::size_t idx) {
    double sum = 0.0;
    for (ScalarField& f : fields) {
        f.values[idx] = std::abs(f.values[idx]);
        sum += f.values[idx];
    }
    if (sum == 0.0) {
        // 0/0 node: the unique symmetric completion.
        const double uniform = 1.0 / static_cast<double>(fields.size());
        for (ScalarField& f : fields) f.values[idx] = uniform;
        return;
    }
    for (ScalarField& f : fields) f.values[idx] /= sum;
}

}  // namespace

void project_simplex_inplace(PhaseSystem& ps) {
    const long n = static_cast<long>(ps.grid.node_count());
    auto& fields = ps.fields;
    #pragma omp parallel for schedule(static) if(n >= 8192)
    for (long idx = 0; idx < n; ++idx) project_node(fields, static_cast<std::size_t>(idx));
}

namespace serial {
void project_simplex_inplace(PhaseSystem& ps) {
    const std::size_t n = ps.grid.node_count();
    for (std::size_t idx = 0; idx < n; ++idx) project_node(ps.fields, idx);
}
}  // namespace serial

PhaseSystem project_simplex(const std::vector<ScalarField>& raw) {
    if (raw.size() < 2) throw std::invalid_argument("project_simplex: needs h+1 >= 2 fields");
    PhaseSystem ps;
    ps.grid = raw[0].grid;
    ps.h = static_cast<int>(raw.size()) - 1;
    for (const ScalarField& f : raw) require_same_grid(ps.grid, f.grid, "project_simplex");
    ps.fields = raw;
    project_simplex_inplace(ps);
    return ps;
}

PhaseSystem random_init(const GridSpec& grid, int h, std::uint64_t seed) {
    if (h < 1) throw std::invalid_argument("random_init: h must be >= 1");
    PhaseSystem ps(grid, h);
    std::mt19937_64 rng(mix_seed(seed, 0xf1e1dULL));
    for (ScalarField& f : ps.fields)
        for (double& v : f.values) v = uniform01(rng);
    project_simplex_inplace(ps);
    return ps;
}

std::vector<std::uint16_t> argmax_partition(const PhaseSystem& ps) {
    ps.validate();
    const std::size_t n = ps.grid.node_count();
    std::vector<std::uint16_t> labels(n, 1);
    #pragma omp parallel for schedule(static) if(n >= 8192)
    for (long idx = 0; idx < static_cast<long>(n); ++idx) {
        double best = ps.fields[0].values[idx];
        std::uint16_t lab = 1;
        for (int l = 1; l <= ps.h; ++l) {
            const double v = ps.fields[l].values[idx];
            if (v > best) {  // strict: ties keep the lowest index
                best = v;
                lab = static_cast<std::uint16_t>(l + 1);
            }
        }
        labels[idx] = lab;
    }
    return labels;
}

void write_checkpoint(const PhaseSystem& ps, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    const std::uint64_t count = ps.fields.size();
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(count >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
    for (const ScalarField& f : ps.fields) write_checkpoint_stream(f, out);
}

PhaseSystem read_phase_checkpoint(const std::string& path, const GridSpec& grid) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw std::runtime_error(path + ": truncated header");
    std::uint64_t count = 0;
    for (int i = 0; i < 8; ++i) count |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    if (count < 2 || count > 4096) throw std::runtime_error(path + ": implausible field count");
    PhaseSystem ps(grid, static_cast<int>(count) - 1);
    for (std::uint64_t l = 0; l < count; ++l) ps.fields[l] = read_checkpoint_stream(in, grid);
    ps.validate(1e-9);
    return ps;
}

namespace {

// 12 distinguishable phase colors; the empty phase renders white.
constexpr unsigned char kPalette[12][3] = {
    {230, 25, 75},  {60, 180, 75},   {255, 225, 25}, {0, 130, 200},
    {245, 130, 48}, {145, 30, 180},  {70, 240, 240}, {240, 50, 230},
    {210, 245, 60}, {250, 190, 190}, {0, 128, 128},  {128, 64, 0},
};

}  // namespace

void write_pgm(const std::vector<std::uint16_t>& labels, const GridSpec& grid, int h,
               const std::string& path) {
    if (labels.size() != grid.node_count())
        throw std::invalid_argument("write_pgm: label/grid mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "P5\n" << grid.nx << " " << grid.ny << "\n255\n";
    std::vector<unsigned char> row(grid.nx);
    for (int j = grid.ny - 1; j >= 0; --j) {
        for (int i = 0; i < grid.nx; ++i) {
            const int lab = labels[grid.index(i, j)];
            row[i] = static_cast<unsigned char>(255 * (lab - 1) / h);
        }
        out.write(reinterpret_cast<const char*>(row.data()), grid.nx);
    }
}

void write_ppm(const std::vector<std::uint16_t>& labels, const GridSpec& grid, int h,
               const std::string& path) {
    if (labels.size() != grid.node_count())
        throw std::invalid_argument("write_ppm: label/grid mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "P6\n" << grid.nx << " " << grid.ny << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(grid.nx) * 3);
    for (int j = grid.ny - 1; j >= 0; --j) {
        for (int i = 0; i < grid.nx; ++i) {
            const int lab = labels[grid.index(i, j)];
            unsigned char* px = &row[3 * static_cast<std::size_t>(i)];
            if (lab == h + 1) {
                px[0] = px[1] = px[2] = 255;
            } else {
                const unsigned char* c = kPalette[(lab - 1) % 12];
                px[0] = c[0];
                px[1] = c[1];
                px[2] = c[2];
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
}

}  // namespace phaseopt
