#pragma once

#include <string>
#include <vector>

#include "phaseopt/grid.hpp"

namespace phaseopt {

/// Analytic reference shape living strictly inside the grid box.
struct ReferenceShape {
    enum class Kind { Disk, Rectangle };
    Kind kind = Kind::Disk;
    double cx = 0.0, cy = 0.0;
    double radius = 0.0;           // Disk
    double width = 0.0, height = 0.0;  // Rectangle

    static ReferenceShape disk(double cx, double cy, double radius);
    static ReferenceShape rectangle(double cx, double cy, double width, double height);

    /// Signed distance to the boundary, positive inside.
    double signed_distance(double x, double y) const;
    std::string id() const;
    /// First `count` Dirichlet eigenvalues, ascending with multiplicities.
    std::vector<double> reference_eigenvalues(int count) const;
};

/// First `count` Dirichlet eigenvalues of a disk: (j_{m,n}/r)^2, multiplicity
/// 2 for m >= 1.
std::vector<double> disk_eigenvalues(double radius, int count);

/// pi^2 (m^2/w^2 + n^2/h^2), m,n >= 1, sorted, first `count`.
std::vector<double> rectangle_eigenvalues(double width, double height, int count);

/// Indicator of the shape sampled at node centers: 1 where the signed
/// distance exceeds erode_margin, else 0. No antialiasing. Throws if the
/// shape is not strictly inside the grid box.
ScalarField rasterize(const ReferenceShape& shape, const GridSpec& grid,
                      double erode_margin = 0.0);

}  // namespace phaseopt
