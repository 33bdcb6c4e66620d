#pragma once

#include "mdcontour/dataset.hpp"
#include "mdcontour/vec2.hpp"

#include <array>
#include <span>
#include <vector>

namespace mdcontour {

// Axis-aligned box in projection space.
struct Box {
    Vec2 min;
    Vec2 max;

    double width() const { return max.x - min.x; }
    double height() const { return max.y - min.y; }
    double diagonal() const { return std::hypot(width(), height()); }
    bool contains(const Vec2& p) const { return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y; }
};

// Bounds of the points grown by `margin` of the larger extent on every side.
// A zero-size box is widened to unit size first.
Box padded_bounds(std::span<const Vec2> points, double margin = 0.05);

struct ProjectionModel {
    std::vector<double> mean;
    std::array<std::vector<double>, 2> axes;
    std::array<double, 2> eigenvalues{};

    Vec2 project(std::span<const double> row) const;
};

struct PointCloud2D {
    std::vector<Vec2> positions;
    Box viewport;
};

struct Projection {
    ProjectionModel model;
    PointCloud2D cloud;
};

// Top-two principal axes of the sample covariance. Each axis is signed so its
// largest-magnitude component is positive.
// Throws Error{VarianceZero} when every column is constant and
// Error{InsufficientDimensions} for single-column data.
Projection pca_project(const Dataset& ds);

} // namespace mdcontour
