#include "phaseopt/reference_shapes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "phaseopt/bessel.hpp"

namespace phaseopt {

ReferenceShape ReferenceShape::disk(double cx, double cy, double radius) {
    if (radius < 0.0) throw std::invalid_argument("disk: radius must be >= 0");
    ReferenceShape s;
    s.kind = Kind::Disk;
    s.cx = cx;
    s.cy = cy;
    s.radius = radius;
    return s;
}

ReferenceShape ReferenceShape::rectangle(double cx, double cy, double width, double height) {
    if (!(width > 0.0) || !(height > 0.0))
        throw std::invalid_argument("rectangle: extents must be > 0");
    ReferenceShape s;
    s.kind = Kind::Rectangle;
    s.cx = cx;
    s.cy = cy;
    s.width = width;
    s.height = height;
    return s;
}

double ReferenceShape::signed_distance(double x, double y) const {
    if (kind == Kind::Disk)
        return radius - std::hypot(x - cx, y - cy);
    const double dx = width / 2.0 - std::abs(x - cx);
    const double dy = height / 2.0 - std::abs(y - cy);
    return std::min(dx, dy);
}

std::string ReferenceShape::id() const {
    return kind == Kind::Disk ? "disk" : "rectangle";
}

std::vector<double> ReferenceShape::reference_eigenvalues(int count) const {
    return kind == Kind::Disk ? disk_eigenvalues(radius, count)
                              : rectangle_eigenvalues(width, height, count);
}

std::vector<double> disk_eigenvalues(double radius, int count) {
    if (!(radius > 0.0)) throw std::invalid_argument("disk_eigenvalues: radius must be > 0");
    if (count < 1) throw std::invalid_argument("disk_eigenvalues: count must be >= 1");
    // Weyl: about x_max^2/4 eigenvalues (with multiplicity) below (x_max/r)^2.
    double x_max = 2.0 * std::sqrt(static_cast<double>(count)) + 10.0;
    std::vector<double> lams;
    while (true) {
        lams.clear();
        for (int m = 0; m <= static_cast<int>(x_max); ++m) {
            const std::vector<double> zeros = bessel_zeros_below(m, x_max);
            if (zeros.empty() && m > 0) break;  // j_{m,1} > m already exceeds x_max
            for (double z : zeros) {
                const double lam = (z / radius) * (z / radius);
                lams.push_back(lam);
                if (m >= 1) lams.push_back(lam);
            }
        }
        if (static_cast<int>(lams.size()) >= count) {
            std::sort(lams.begin(), lams.end());
            // Everything below (x_max/r)^2 is present, so the first `count`
            // are correct as long as lams[count-1] is below that cutoff.
            const double cutoff = (x_max / radius) * (x_max / radius);
            if (lams[count - 1] < cutoff) break;
        }
        x_max *= 1.4;
    }
    lams.resize(count);
    return lams;
}

std::vector<double> rectangle_eigenvalues(double width, double height, int count) {
    if (!(width > 0.0) || !(height > 0.0))
        throw std::invalid_argument("rectangle_eigenvalues: extents must be > 0");
    if (count < 1) throw std::invalid_argument("rectangle_eigenvalues: count must be >= 1");
    const double pi2 = std::numbers::pi * std::numbers::pi;
    int mmax = 2;
    std::vector<double> lams;
    while (true) {
        lams.clear();
        for (int m = 1; m <= mmax; ++m)
            for (int n = 1; n <= mmax; ++n)
                lams.push_back(pi2 * (m * m / (width * width) + n * n / (height * height)));
        std::sort(lams.begin(), lams.end());
        if (static_cast<int>(lams.size()) >= count) {
            // Correct iff no mode with m or n > mmax could undercut lams[count-1].
            const double fringe = pi2 * ((mmax + 1.0) * (mmax + 1.0) /
                                         std::max(width * width, height * height) +
                                         1.0 / std::min(width * width, height * height));
            if (lams[count - 1] < fringe) break;
        }
        mmax *= 2;
    }
    lams.resize(count);
    return lams;
}

ScalarField rasterize(const ReferenceShape& shape, const GridSpec& grid, double erode_margin) {
    // The shape must sit strictly inside the box.
    double sxmin, sxmax, symin, symax;
    if (shape.kind == ReferenceShape::Kind::Disk) {
        sxmin = shape.cx - shape.radius;
        sxmax = shape.cx + shape.radius;
        symin = shape.cy - shape.radius;
        symax = shape.cy + shape.radius;
    } else {
        sxmin = shape.cx - shape.width / 2.0;
        sxmax = shape.cx + shape.width / 2.0;
        symin = shape.cy - shape.height / 2.0;
        symax = shape.cy + shape.height / 2.0;
    }
    if (!(sxmin > grid.xmin) || !(sxmax < grid.xmin + grid.width) ||
        !(symin > grid.ymin) || !(symax < grid.ymin + grid.height))
        throw std::domain_error("rasterize: shape is not strictly inside the grid box");

    ScalarField field(grid);
    #pragma omp parallel for schedule(static)
    for (int j = 0; j < grid.ny; ++j) {
        const double y = grid.node_y(j);
        for (int i = 0; i < grid.nx; ++i)
            field.values[grid.index(i, j)] =
                shape.signed_distance(grid.node_x(i), y) > erode_margin ? 1.0 : 0.0;
    }
    return field;
}

}  // namespace phaseopt
