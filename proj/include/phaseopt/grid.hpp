#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace phaseopt {

enum class BcKind : std::uint8_t { DirichletBox = 0, Periodic = 1 };

/// Uniform rectangular grid on the box [xmin, xmin+width] x [ymin, ymin+height].
///
/// DirichletBox grids store only the nx*ny interior nodes with spacing
/// hx = width/(nx+1); the zero boundary value is implied one spacing outside
/// the stored nodes, which makes the classical 5-point stencil spectrum exact
/// on the box. Periodic grids use hx = width/nx and wrap indices.
struct GridSpec {
    double width = 0.0;
    double height = 0.0;
    int nx = 0;
    int ny = 0;
    BcKind bc = BcKind::DirichletBox;
    double xmin = 0.0;
    double ymin = 0.0;
    double hx = 0.0;  // derived
    double hy = 0.0;  // derived

    static GridSpec dirichlet_box(double xmin, double xmax, double ymin, double ymax,
                                  int nx, int ny);
    static GridSpec periodic_box(double xmin, double xmax, double ymin, double ymax,
                                 int nx, int ny);

    std::size_t node_count() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }

    double node_x(int i) const;
    double node_y(int j) const;
    std::pair<double, double> node_coordinates(int i, int j) const;

    double cell_area() const { return hx * hy; }

    bool operator==(const GridSpec& other) const;
    bool operator!=(const GridSpec& other) const { return !(*this == other); }
};

/// One real value per grid node, row-major (index = j*nx + i).
struct ScalarField {
    GridSpec grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const GridSpec& g, double fill = 0.0)
        : grid(g), values(g.node_count(), fill) {}

    double& at(int i, int j) { return values[grid.index(i, j)]; }
    double at(int i, int j) const { return values[grid.index(i, j)]; }

    void require_finite(const char* what) const;
};

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);

/// Binary checkpoint, little-endian: "SPF1", nx and ny as u64, bc as one byte,
/// then nx*ny doubles row-major.
void write_checkpoint(const ScalarField& field, const std::string& path);
ScalarField read_checkpoint(const std::string& path, const GridSpec& grid);
void write_checkpoint_stream(const ScalarField& field, std::ostream& out);
ScalarField read_checkpoint_stream(std::istream& in, const GridSpec& grid);
/// Reads just the header; returns (nx, ny, bc byte).
std::tuple<std::uint64_t, std::uint64_t, std::uint8_t> read_checkpoint_header(const std::string& path);

}  // namespace phaseopt
