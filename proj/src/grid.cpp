#include "phaseopt/grid.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <tuple>

namespace phaseopt {

namespace {

void check_extents(double width, double height, int nx, int ny) {
    if (nx < 3 || ny < 3) throw std::invalid_argument("grid needs nx >= 3 and ny >= 3");
    if (!(width > 0.0) || !(height > 0.0))
        throw std::invalid_argument("grid box must have positive extent");
}

}  // namespace

GridSpec GridSpec::dirichlet_box(double xmin, double xmax, double ymin, double ymax,
                                 int nx, int ny) {
    check_extents(xmax - xmin, ymax - ymin, nx, ny);
    GridSpec g;
    g.width = xmax - xmin;
    g.height = ymax - ymin;
    g.nx = nx;
    g.ny = ny;
    g.bc = BcKind::DirichletBox;
    g.xmin = xmin;
    g.ymin = ymin;
    g.hx = g.width / (nx + 1);
    g.hy = g.height / (ny + 1);
    return g;
}

GridSpec GridSpec::periodic_box(double xmin, double xmax, double ymin, double ymax,
                                int nx, int ny) {
    check_extents(xmax - xmin, ymax - ymin, nx, ny);
    GridSpec g;
    g.width = xmax - xmin;
    g.height = ymax - ymin;
    g.nx = nx;
    g.ny = ny;
    g.bc = BcKind::Periodic;
    g.xmin = xmin;
    g.ymin = ymin;
    g.hx = g.width / nx;
    g.hy = g.height / ny;
    return g;
}

double GridSpec::node_x(int i) const {
    if (i < 0 || i >= nx) throw std::out_of_range("node index i out of range");
    return bc == BcKind::DirichletBox ? xmin + (i + 1) * hx : xmin + i * hx;
}

double GridSpec::node_y(int j) const {
    if (j < 0 || j >= ny) throw std::out_of_range("node index j out of range");
    return bc == BcKind::DirichletBox ? ymin + (j + 1) * hy : ymin + j * hy;
}

std::pair<double, double> GridSpec::node_coordinates(int i, int j) const {
    return {node_x(i), node_y(j)};
}

bool GridSpec::operator==(const GridSpec& other) const {
    return width == other.width && height == other.height && nx == other.nx &&
           ny == other.ny && bc == other.bc && xmin == other.xmin && ymin == other.ymin;
}

void ScalarField::require_finite(const char* what) const {
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
    if (a != b) throw std::invalid_argument(std::string(what) + ": field/grid mismatch");
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void write_checkpoint_stream(const ScalarField& field, std::ostream& out) {
    out.write("SPF1", 4);
    put_u64(out, static_cast<std::uint64_t>(field.grid.nx));
    put_u64(out, static_cast<std::uint64_t>(field.grid.ny));
    char bc = static_cast<char>(field.grid.bc);
    out.write(&bc, 1);
    static_assert(sizeof(double) == 8);
    // doubles are stored little-endian; this code targets little-endian hosts
    out.write(reinterpret_cast<const char*>(field.values.data()),
              static_cast<std::streamsize>(field.values.size() * sizeof(double)));
    if (!out) throw std::runtime_error("checkpoint: short write");
}

ScalarField read_checkpoint_stream(std::istream& in, const GridSpec& grid) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SPF1", 4) != 0)
        throw std::runtime_error("checkpoint: bad magic");
    std::uint64_t nx = get_u64(in);
    std::uint64_t ny = get_u64(in);
    char bc;
    in.read(&bc, 1);
    if (nx != static_cast<std::uint64_t>(grid.nx) || ny != static_cast<std::uint64_t>(grid.ny) ||
        static_cast<std::uint8_t>(bc) != static_cast<std::uint8_t>(grid.bc))
        throw std::invalid_argument("checkpoint header does not match grid");
    ScalarField field(grid);
    in.read(reinterpret_cast<char*>(field.values.data()),
            static_cast<std::streamsize>(field.values.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated payload");
    return field;
}

void write_checkpoint(const ScalarField& field, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_checkpoint_stream(field, out);
}

std::tuple<std::uint64_t, std::uint64_t, std::uint8_t> read_checkpoint_header(
    const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SPF1", 4) != 0)
        throw std::runtime_error(path + ": not a ScalarField checkpoint");
    std::uint64_t nx = get_u64(in);
    std::uint64_t ny = get_u64(in);
    char bc;
    in.read(&bc, 1);
    if (!in) throw std::runtime_error(path + ": truncated header");
    return {nx, ny, static_cast<std::uint8_t>(bc)};
}

ScalarField read_checkpoint(const std::string& path, const GridSpec& grid) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return read_checkpoint_stream(in, grid);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

}  // namespace phaseopt
