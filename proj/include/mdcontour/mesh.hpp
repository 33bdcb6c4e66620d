#pragma once

#include "mdcontour/projection.hpp"
#include "mdcontour/vec2.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace mdcontour {

using Index = std::uint32_t;
using Triangle = std::array<Index, 3>;

// Triangulated point set. Adjacency is stored as CSR (offsets + flattened
// targets, neighbours counter-clockwise around each node) and as per-node
// triangle fans.
struct TriMesh {
    std::size_t node_count = 0;
    std::vector<Vec2> original_pos; // fixed
    std::vector<Vec2> current_pos;  // advanced by the layout
    std::vector<Index> csr_offsets; // node_count + 1
    std::vector<Index> csr_targets;
    // Fan of node v: fan_nodes[fan_offsets[v] .. fan_offsets[v+1]) lists
    // neighbours w0..wk counter-clockwise; each consecutive pair (wj, wj+1)
    // closes the triangle (v, wj, wj+1). Interior fans repeat w0 at the end.
    std::vector<Index> fan_offsets;
    std::vector<Index> fan_nodes;
    std::vector<Triangle> triangles; // counter-clockwise
    std::size_t hull_size = 0;

    // Builds adjacency from positions and counter-clockwise triangles.
    static TriMesh from_triangles(std::vector<Vec2> positions, std::vector<Triangle> triangles);

    std::size_t edge_count() const { return csr_targets.size() / 2; }
    std::size_t triangle_count() const { return triangles.size(); }

    std::span<const Index> neighbors(Index v) const
    {
        return {csr_targets.data() + csr_offsets[v], csr_targets.data() + csr_offsets[v + 1]};
    }
    std::span<const Index> fan(Index v) const
    {
        return {fan_nodes.data() + fan_offsets[v], fan_nodes.data() + fan_offsets[v + 1]};
    }
    std::size_t fan_triangle_count(Index v) const
    {
        const std::size_t k = fan_offsets[v + 1] - fan_offsets[v];
        return k == 0 ? 0 : k - 1;
    }
    bool on_hull(Index v) const;

    // Each hull edge (a, b) with the interior on its left.
    std::vector<std::array<Index, 2>> hull_edges() const;
};

struct DelaunayOptions {
    std::uint64_t seed = 0; // drives the de-duplication jitter only
};

// Incremental Bowyer-Watson triangulation. Near-duplicate points (closer than
// 1e-9 of the viewport diagonal) are displaced by 1e-6 of the diagonal in a
// seeded direction first. Throws Error{DegenerateInput} for collinear input or
// fewer than three points.
TriMesh delaunay(const PointCloud2D& points, const DelaunayOptions& options = {});

// Number of triangles whose orientation at `positions` is not counter-clockwise.
std::size_t count_inverted(const TriMesh& mesh, std::span<const Vec2> positions);

struct LimitingLine {
    Vec2 point;  // a point on the line
    Vec2 normal; // unit normal toward the associated vertex
};

// The three midsegment lines of triangle (a, b, c); line k is parallel to the
// edge opposite vertex k and its normal points toward vertex k.
// Throws Error{ZeroAreaTriangle} when the triangle is not counter-clockwise.
std::array<LimitingLine, 3> limiting_lines(const Vec2& a, const Vec2& b, const Vec2& c);
std::array<LimitingLine, 3> limiting_lines(const Triangle& tri, std::span<const Vec2> positions);

// Line-based text dump: node count, original and current positions, triangles,
// and optionally a block of relaxed positions.
void write_mesh(std::ostream& out, const TriMesh& mesh, std::span<const Vec2> relaxed = {});

struct MeshDump {
    TriMesh mesh;
    std::vector<Vec2> relaxed;
};

MeshDump read_mesh(std::istream& in);

} // namespace mdcontour
