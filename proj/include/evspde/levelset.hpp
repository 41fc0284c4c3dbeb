#pragma once

#include <string>
#include <vector>

namespace evspde::geometry {

/// f(x, y) = x²/2 + (y² - 1)²/2 sampled on a resolution × resolution node
/// grid over [-xmax, xmax] × [-ymax, ymax].
struct LevelSetField {
    double xmax = 1.5;
    double ymax = 1.5;
    int resolution = 256;

    static double value(double x, double y) noexcept;
    double x(int i) const noexcept;
    double y(int j) const noexcept;
    double cell_width() const noexcept;
    double cell_height() const noexcept;
};

struct ContourPoint {
    double x;
    double y;
};

struct ContourPolyline {
    int component = 0;
    bool closed = false;
    std::vector<ContourPoint> points;
};

struct LevelSetResult {
    double level = 0.0;
    int components = 0;
    std::vector<ContourPolyline> polylines;
};

/// Marching squares on {f = c}. Ambiguous saddle cells are resolved with the
/// cell-centre average; components are counted by union-find over shared
/// edge crossings. Throws std::invalid_argument for c <= 0 or resolution < 64.
LevelSetResult level_set_components(const LevelSetField& field, double c);

/// CSV with columns (component_id, x, y).
std::string contour_csv(const LevelSetResult& result);

} // namespace evspde::geometry
