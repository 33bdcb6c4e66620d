#pragma once

#include "mdcontour/dataset.hpp"
#include "mdcontour/mesh.hpp"
#include "mdcontour/mls.hpp"
#include "mdcontour/projection.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mdcontour {

// Maps pixel space (x right, y down, pixel centres at +0.5) onto a projection-space box.
struct Viewport {
    Box box;
    std::uint32_t width = 0;
    std::uint32_t height = 0;

    Vec2 units_per_pixel() const { return {box.width() / width, box.height() / height}; }
    Vec2 pixel_center(std::uint32_t x, std::uint32_t y) const { return to_world({x + 0.5, y + 0.5}); }
    Vec2 to_world(const Vec2& pixel) const
    {
        return {box.min.x + pixel.x * box.width() / width, box.max.y - pixel.y * box.height() / height};
    }
    Vec2 to_pixel(const Vec2& world) const
    {
        return {(world.x - box.min.x) * width / box.width(), (box.max.y - world.y) * height / box.height()};
    }
};

enum class TargetMode { Projection, Single, Pair };

struct TargetAssignment {
    std::vector<Vec2> targets;
    TargetMode mode = TargetMode::Projection;
    std::string label;

    int components() const { return mode == TargetMode::Single ? 1 : 2; }
};

// The undistorted projection coordinates of each node.
TargetAssignment projection_targets(std::span<const Vec2> original_positions);
// (value, 0) for one dataset column.
TargetAssignment single_targets(const Dataset& ds, std::size_t column);
// (valueA, valueB) for two dataset columns.
TargetAssignment pair_targets(const Dataset& ds, std::size_t column_a, std::size_t column_b);

struct CoordinateField {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<Vec2> coords; // row-major, row 0 at the top
    std::vector<Vec2> source_positions;
    Viewport viewport;
    int components = 2;

    const Vec2& at(std::uint32_t x, std::uint32_t y) const { return coords[static_cast<std::size_t>(y) * width + x]; }
    Vec2& at(std::uint32_t x, std::uint32_t y) { return coords[static_cast<std::size_t>(y) * width + x]; }
};

// Point location over a triangulation with a walking hint. Not thread-safe;
// use one per worker.
class PointLocator {
public:
    PointLocator(const TriMesh& mesh, std::span<const Vec2> positions);

    // Triangle containing v, or -1 when v lies outside every triangle.
    std::int64_t locate(const Vec2& v);

    // Barycentric blend of the containing triangle's targets; outside the mesh,
    // the affine map of the triangle on the nearest hull edge is extended.
    Vec2 interpolate(const Vec2& v, std::span<const Vec2> targets);

private:
    std::size_t nearest_hull_triangle(const Vec2& v) const;

    const TriMesh& mesh_;
    std::span<const Vec2> positions_;
    std::vector<std::array<std::int64_t, 3>> adjacency_; // neighbour across edge opposite vertex k
    std::vector<std::array<std::size_t, 2>> hull_;       // (hull edge tail, triangle)
    std::int64_t hint_ = 0;
};

Vec2 linear_interp(const Vec2& v, const TriMesh& mesh, std::span<const Vec2> positions, std::span<const Vec2> targets);

// Per-pixel evaluation of the chosen interpolant over a viewport fitted to the
// positions with a 5% margin. The snap distance is a quarter pixel.
CoordinateField compute_field(const TriMesh& mesh, std::span<const Vec2> positions, const TargetAssignment& targets,
                              const MlsParams& params, std::uint32_t width, std::uint32_t height);

// Same, over an explicit viewport.
CoordinateField compute_field(const TriMesh& mesh, std::span<const Vec2> positions, const TargetAssignment& targets,
                              const MlsParams& params, const Viewport& viewport);

// Finite-difference Jacobian at a pixel: a = du/dx, b = du/dy, c = dv/dx,
// d = dv/dy, with x to the right and y upward, per pixel. Central differences
// inside, one-sided at the border.
Mat2 field_gradient(const CoordinateField& field, std::uint32_t x, std::uint32_t y);

// Binary raster: "MLSF", u32 width, u32 height, row-major (f64, f64) pairs,
// all little-endian.
void write_field(std::ostream& out, const CoordinateField& field);
CoordinateField read_field(std::istream& in);

} // namespace mdcontour
