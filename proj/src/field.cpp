#include "mdcontour/field.hpp"

#include "mdcontour/error.hpp"
#include "mdcontour/parallel.hpp"
#include "mdcontour/predicates.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

namespace mdcontour {

TargetAssignment projection_targets(std::span<const Vec2> original_positions)
{
    return {std::vector<Vec2>(original_positions.begin(), original_positions.end()), TargetMode::Projection,
            "projection"};
}

TargetAssignment single_targets(const Dataset& ds, std::size_t column)
{
    TargetAssignment t;
    t.mode = TargetMode::Single;
    t.label = ds.column(column).name;
    for (const double x : ds.column(column).values)
        t.targets.push_back({x, 0.0});
    return t;
}

TargetAssignment pair_targets(const Dataset& ds, std::size_t column_a, std::size_t column_b)
{
    TargetAssignment t;
    t.mode = TargetMode::Pair;
    t.label = ds.column(column_a).name + ":" + ds.column(column_b).name;
    const auto& a = ds.column(column_a).values;
    const auto& b = ds.column(column_b).values;
    for (std::size_t i = 0; i < a.size(); ++i)
        t.targets.push_back({a[i], b[i]});
    return t;
}

PointLocator::PointLocator(const TriMesh& mesh, std::span<const Vec2> positions)
    : mesh_(mesh), positions_(positions)
{
    const auto& tris = mesh.triangles;
    adjacency_.assign(tris.size(), {-1, -1, -1});
    std::map<std::pair<Index, Index>, std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t t = 0; t < tris.size(); ++t)
        for (std::size_t k = 0; k < 3; ++k)
            edges[{tris[t][(k + 1) % 3], tris[t][(k + 2) % 3]}] = {t, k};
    for (std::size_t t = 0; t < tris.size(); ++t)
        for (std::size_t k = 0; k < 3; ++k) {
            const auto it = edges.find({tris[t][(k + 2) % 3], tris[t][(k + 1) % 3]});
            if (it != edges.end())
                adjacency_[t][k] = static_cast<std::int64_t>(it->second.first);
            else
                hull_.push_back({tris[t][(k + 1) % 3], t});
        }
}

std::int64_t PointLocator::locate(const Vec2& v)
{
    const auto& tris = mesh_.triangles;
    if (tris.empty())
        return -1;
    std::int64_t t = std::clamp<std::int64_t>(hint_, 0, static_cast<std::int64_t>(tris.size()) - 1);
    const std::size_t limit = 2 * tris.size() + 8;
    for (std::size_t step = 0; step < limit; ++step) {
        const Triangle& tri = tris[static_cast<std::size_t>(t)];
        std::int64_t next = -2;
        for (std::size_t k = 0; k < 3; ++k) {
            const std::size_t e = (k + step) % 3;
            if (orient2d(positions_[tri[(e + 1) % 3]], positions_[tri[(e + 2) % 3]], v) < 0) {
                next = adjacency_[static_cast<std::size_t>(t)][e];
                break;
            }
        }
        if (next == -2) {
            hint_ = t;
            return t;
        }
        if (next == -1)
            return -1;
        t = next;
    }
    // Walk did not settle (inverted triangles): exhaustive search.
    for (std::size_t s = 0; s < tris.size(); ++s) {
        const Triangle& tri = tris[s];
        const int o0 = orient2d(positions_[tri[1]], positions_[tri[2]], v);
        const int o1 = orient2d(positions_[tri[2]], positions_[tri[0]], v);
        const int o2 = orient2d(positions_[tri[0]], positions_[tri[1]], v);
        if (o0 >= 0 && o1 >= 0 && o2 >= 0 && orient2d(positions_[tri[0]], positions_[tri[1]], positions_[tri[2]]) > 0) {
            hint_ = static_cast<std::int64_t>(s);
            return hint_;
        }
    }
    return -1;
}

std::size_t PointLocator::nearest_hull_triangle(const Vec2& v) const
{
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_tri = 0;
    for (const auto& [tail, t] : hull_) {
        const Triangle& tri = mesh_.triangles[t];
        std::size_t k = 0;
        while (tri[k] != tail)
            ++k;
        const Vec2& a = positions_[tri[k]];
        const Vec2& b = positions_[tri[(k + 1) % 3]];
        const Vec2 ab = b - a;
        const double len2 = norm2(ab);
        const double s = len2 > 0.0 ? std::clamp(dot(v - a, ab) / len2, 0.0, 1.0) : 0.0;
        const double d2 = norm2(v - (a + ab * s));
        if (d2 < best) {
            best = d2;
            best_tri = t;
        }
    }
    return best_tri;
}

Vec2 PointLocator::interpolate(const Vec2& v, std::span<const Vec2> targets)
{
    std::int64_t t = locate(v);
    const std::size_t tri_index = t >= 0 ? static_cast<std::size_t>(t) : nearest_hull_triangle(v);
    const Triangle& tri = mesh_.triangles[tri_index];
    const Vec2& a = positions_[tri[0]];
    const Vec2& b = positions_[tri[1]];
    const Vec2& c = positions_[tri[2]];
    const double area = cross(b - a, c - a);
    if (area == 0.0)
        return targets[tri[0]];
    const double la = cross(b - v, c - v) / area;
    const double lb = cross(c - v, a - v) / area;
    const double lc = 1.0 - la - lb;
    return targets[tri[0]] * la + targets[tri[1]] * lb + targets[tri[2]] * lc;
}

Vec2 linear_interp(const Vec2& v, const TriMesh& mesh, std::span<const Vec2> positions, std::span<const Vec2> targets)
{
    PointLocator locator(mesh, positions);
    return locator.interpolate(v, targets);
}

CoordinateField compute_field(const TriMesh& mesh, std::span<const Vec2> positions, const TargetAssignment& targets,
                              const MlsParams& params, std::uint32_t width, std::uint32_t height)
{
    Viewport viewport{padded_bounds(positions), width, height};
    return compute_field(mesh, positions, targets, params, viewport);
}

CoordinateField compute_field(const TriMesh& mesh, std::span<const Vec2> positions, const TargetAssignment& targets,
                              const MlsParams& params, const Viewport& viewport)
{
    if (viewport.width == 0 || viewport.height == 0)
        throw Error(ErrorCode::InvalidParameter, "field resolution must be positive");
    if (targets.targets.size() != positions.size())
        throw Error(ErrorCode::InvalidParameter, "target count does not match the node count");
    if (positions.empty())
        throw Error(ErrorCode::InvalidParameter, "field needs at least one control point");

    CoordinateField field;
    field.width = viewport.width;
    field.height = viewport.height;
    field.viewport = viewport;
    field.components = targets.components();
    field.source_positions.assign(positions.begin(), positions.end());
    field.coords.resize(static_cast<std::size_t>(viewport.width) * viewport.height);

    MlsParams local = params;
    const Vec2 upp = viewport.units_per_pixel();
    const double snap = 0.25 * std::max(upp.x, upp.y);
    local.epsilon_dist = snap * snap;

    const Controls controls(positions, targets.targets);
    parallel_for(viewport.height, [&](std::size_t y0, std::size_t y1) {
        if (params.variant == MlsVariant::Linear) {
            PointLocator locator(mesh, positions);
            for (std::size_t y = y0; y < y1; ++y)
                for (std::uint32_t x = 0; x < viewport.width; ++x)
                    field.at(x, static_cast<std::uint32_t>(y))
                        = locator.interpolate(viewport.pixel_center(x, static_cast<std::uint32_t>(y)), targets.targets);
            return;
        }
        for (std::size_t y = y0; y < y1; ++y)
            for (std::uint32_t x = 0; x < viewport.width; ++x) {
                const Vec2 v = viewport.pixel_center(x, static_cast<std::uint32_t>(y));
                field.at(x, static_cast<std::uint32_t>(y)) = evaluate_mls(v, controls, local);
            }
    });
    return field;
}

Mat2 field_gradient(const CoordinateField& field, std::uint32_t x, std::uint32_t y)
{
    const std::uint32_t xl = x > 0 ? x - 1 : x;
    const std::uint32_t xr = x + 1 < field.width ? x + 1 : x;
    const std::uint32_t yu = y > 0 ? y - 1 : y;
    const std::uint32_t yd = y + 1 < field.height ? y + 1 : y;
    Mat2 j;
    if (xr != xl) {
        const Vec2 dx = (field.at(xr, y) - field.at(xl, y)) / static_cast<double>(xr - xl);
        j.a = dx.x;
        j.c = dx.y;
    }
    if (yd != yu) {
        // image rows grow downward; derivative taken upward
        const Vec2 dy = (field.at(x, yu) - field.at(x, yd)) / static_cast<double>(yd - yu);
        j.b = dy.x;
        j.d = dy.y;
    }
    return j;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v)
{
    char b[4];
    for (int i = 0; i < 4; ++i)
        b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    out.write(b, 4);
}

void put_f64(std::ostream& out, double d)
{
    const auto v = std::bit_cast<std::uint64_t>(d);
    char b[8];
    for (int i = 0; i < 8; ++i)
        b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    out.write(b, 8);
}

std::uint64_t get_bytes(std::istream& in, int count)
{
    unsigned char b[8] = {};
    if (!in.read(reinterpret_cast<char*>(b), count))
        throw Error(ErrorCode::FormatError, "field raster is truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < count; ++i)
        v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

} // namespace

void write_field(std::ostream& out, const CoordinateField& field)
{
    out.write("MLSF", 4);
    put_u32(out, field.width);
    put_u32(out, field.height);
    for (const Vec2& c : field.coords) {
        put_f64(out, c.x);
        put_f64(out, c.y);
    }
}

CoordinateField read_field(std::istream& in)
{
    char magic[4] = {};
    if (!in.read(magic, 4) || std::string_view(magic, 4) != "MLSF")
        throw Error(ErrorCode::FormatError, "not an MLSF field raster");
    CoordinateField field;
    field.width = static_cast<std::uint32_t>(get_bytes(in, 4));
    field.height = static_cast<std::uint32_t>(get_bytes(in, 4));
    field.coords.resize(static_cast<std::size_t>(field.width) * field.height);
    for (Vec2& c : field.coords) {
        c.x = std::bit_cast<double>(get_bytes(in, 8));
        c.y = std::bit_cast<double>(get_bytes(in, 8));
    }
    field.viewport.width = field.width;
    field.viewport.height = field.height;
    field.viewport.box = {{0.0, 0.0}, {static_cast<double>(field.width), static_cast<double>(field.height)}};
    return field;
}

} // namespace mdcontour
