#include "mdcontour/mesh.hpp"

#include "mdcontour/error.hpp"
#include "mdcontour/predicates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>

namespace mdcontour {

namespace {

constexpr Index kGhost = std::numeric_limits<Index>::max();
constexpr std::int32_t kNone = -1;

// Displaces points that sit within `radius` of an earlier point. Each moved
// point travels `step` in a direction drawn from the seeded generator.
std::vector<Vec2> separate_duplicates(std::vector<Vec2> pts, double radius, double step, std::uint64_t seed)
{
    if (!(radius > 0.0))
        return pts;
    std::mt19937_64 rng(seed);
    std::unordered_map<std::int64_t, std::vector<Index>> grid;
    auto cell_of = [radius](double x) { return static_cast<std::int64_t>(std::floor(x / radius)); };
    auto key = [](std::int64_t cx, std::int64_t cy) { return cx * 73856093LL ^ cy * 19349663LL; };
    auto has_close = [&](const Vec2& p, Index self) {
        const std::int64_t cx = cell_of(p.x), cy = cell_of(p.y);
        for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                const auto it = grid.find(key(cx + dx, cy + dy));
                if (it == grid.end())
                    continue;
                for (const Index j : it->second)
                    if (j != self && norm2(pts[j] - p) < radius * radius)
                        return true;
            }
        return false;
    };

    for (Index i = 0; i < pts.size(); ++i) {
        int attempts = 0;
        while (has_close(pts[i], i) && attempts++ < 64) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            const double angle = 2.0 * std::numbers::pi * u;
            pts[i] += Vec2{std::cos(angle), std::sin(angle)} * step;
        }
        grid[key(cell_of(pts[i].x), cell_of(pts[i].y))].push_back(i);
    }
    return pts;
}

struct Tri {
    std::array<Index, 3> v{};
    std::array<std::int32_t, 3> n{kNone, kNone, kNone}; // neighbour opposite v[i]
    bool alive = true;

    int ghost_slot() const
    {
        for (int i = 0; i < 3; ++i)
            if (v[static_cast<std::size_t>(i)] == kGhost)
                return i;
        return -1;
    }
};

class BowyerWatson {
public:
    explicit BowyerWatson(std::span<const Vec2> pts) : pts_(pts) {}

    std::vector<Triangle> run()
    {
        const Index n = static_cast<Index>(pts_.size());
        if (n < 3)
            throw Error(ErrorCode::DegenerateInput, "triangulation needs at least 3 points");

        Index i1 = 1;
        while (i1 < n && pts_[i1] == pts_[0])
            ++i1;
        Index i2 = i1 + 1;
        while (i2 < n && orient2d(pts_[0], pts_[i1], pts_[i2]) == 0)
            ++i2;
        if (i1 >= n || i2 >= n)
            throw Error(ErrorCode::DegenerateInput, "all points are collinear; cannot triangulate");

        Index a = 0, b = i1, c = i2;
        if (orient2d(pts_[a], pts_[b], pts_[c]) < 0)
            std::swap(b, c);
        seed_triangle(a, b, c);

        for (Index i = 1; i < n; ++i)
            if (i != i1 && i != i2)
                insert(i);

        std::vector<Triangle> out;
        for (const Tri& t : tris_) {
            if (!t.alive || t.ghost_slot() >= 0)
                continue;
            Triangle tri{t.v[0], t.v[1], t.v[2]};
            std::rotate(tri.begin(), std::min_element(tri.begin(), tri.end()), tri.end());
            out.push_back(tri);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    void seed_triangle(Index a, Index b, Index c)
    {
        tris_.push_back(Tri{{a, b, c}});
        tris_.push_back(Tri{{c, b, kGhost}});
        tris_.push_back(Tri{{a, c, kGhost}});
        tris_.push_back(Tri{{b, a, kGhost}});
        link_by_edges({0, 1, 2, 3});
        last_ = 0;
    }

    void link_by_edges(const std::vector<std::int32_t>& ids)
    {
        for (const std::int32_t t : ids)
            for (std::size_t i = 0; i < 3; ++i) {
                const Index ea = tris_[t].v[(i + 1) % 3], eb = tris_[t].v[(i + 2) % 3];
                for (const std::int32_t u : ids) {
                    if (u == t)
                        continue;
                    for (std::size_t j = 0; j < 3; ++j)
                        if (tris_[u].v[(j + 1) % 3] == eb && tris_[u].v[(j + 2) % 3] == ea)
                            tris_[t].n[i] = u;
                }
            }
    }

    bool in_conflict(const Tri& t, const Vec2& p) const
    {
        const int g = t.ghost_slot();
        if (g < 0)
            return incircle(pts_[t.v[0]], pts_[t.v[1]], pts_[t.v[2]], p) > 0;
        const Vec2& u = pts_[t.v[static_cast<std::size_t>((g + 1) % 3)]];
        const Vec2& w = pts_[t.v[static_cast<std::size_t>((g + 2) % 3)]];
        const int o = orient2d(u, w, p);
        if (o != 0)
            return o > 0;
        // Collinear with the hull edge: conflicts only strictly inside the segment.
        return dot(p - u, w - u) > 0.0 && dot(p - w, u - w) > 0.0;
    }

    std::int32_t locate(const Vec2& p)
    {
        std::int32_t t = last_;
        const std::size_t limit = 4 * tris_.size() + 16;
        for (std::size_t step = 0; step < limit; ++step) {
            const Tri& tri = tris_[static_cast<std::size_t>(t)];
            if (tri.ghost_slot() >= 0)
                return in_conflict(tri, p) ? t : scan(p);
            bool moved = false;
            for (std::size_t k = 0; k < 3; ++k) {
                const std::size_t i = (k + step) % 3;
                if (orient2d(pts_[tri.v[(i + 1) % 3]], pts_[tri.v[(i + 2) % 3]], p) < 0) {
                    t = tri.n[i];
                    moved = true;
                    break;
                }
            }
            if (!moved)
                return in_conflict(tri, p) ? t : scan(p);
        }
        return scan(p);
    }

    std::int32_t scan(const Vec2& p) const
    {
        for (std::size_t t = 0; t < tris_.size(); ++t)
            if (tris_[t].alive && in_conflict(tris_[t], p))
                return static_cast<std::int32_t>(t);
        throw Error(ErrorCode::DegenerateInput, "duplicate point could not be inserted");
    }

    void insert(Index pi)
    {
        const Vec2& p = pts_[pi];
        const std::int32_t start = locate(p);

        ++stamp_;
        if (visit_.size() < tris_.size())
            visit_.resize(tris_.size(), {0, false});
        cavity_.clear();
        boundary_.clear();
        cavity_.push_back(start);
        visit_[static_cast<std::size_t>(start)] = {stamp_, true};
        for (std::size_t k = 0; k < cavity_.size(); ++k) {
            const std::int32_t t = cavity_[k];
            for (std::size_t i = 0; i < 3; ++i) {
                const std::int32_t nb = tris_[static_cast<std::size_t>(t)].n[i];
                auto& mark = visit_[static_cast<std::size_t>(nb)];
                if (mark.first != stamp_) {
                    mark = {stamp_, in_conflict(tris_[static_cast<std::size_t>(nb)], p)};
                    if (mark.second)
                        cavity_.push_back(nb);
                }
                if (!mark.second)
                    boundary_.push_back({t, static_cast<int>(i)});
            }
        }

        fresh_.clear();
        for (const auto& [t, i] : boundary_) {
            const Tri& old = tris_[static_cast<std::size_t>(t)];
            const auto si = static_cast<std::size_t>(i);
            const Index a = old.v[(si + 1) % 3], b = old.v[(si + 2) % 3];
            const std::int32_t outside = old.n[si];
            const auto id = static_cast<std::int32_t>(tris_.size());
            Tri nt{{a, b, pi}};
            nt.n[2] = outside;
            tris_.push_back(nt);
            for (auto& back : tris_[static_cast<std::size_t>(outside)].n)
                if (back == t)
                    back = id;
            fresh_.push_back({a, id});
        }
        for (const std::int32_t t : cavity_)
            tris_[static_cast<std::size_t>(t)].alive = false;

        auto starting_at = [this](Index v) {
            for (const auto& [a, id] : fresh_)
                if (a == v)
                    return id;
            throw Error(ErrorCode::DegenerateInput, "cavity boundary is not a simple cycle");
        };
        for (const auto& [a, id] : fresh_) {
            Tri& nt = tris_[static_cast<std::size_t>(id)];
            const std::int32_t next = starting_at(nt.v[1]);
            nt.n[0] = next;
            tris_[static_cast<std::size_t>(next)].n[1] = id;
        }

        visit_.resize(tris_.size(), {0, false});
        for (const auto& [a, id] : fresh_)
            if (tris_[static_cast<std::size_t>(id)].ghost_slot() < 0) {
                last_ = id;
                break;
            }
    }

    std::span<const Vec2> pts_;
    std::vector<Tri> tris_;
    std::int32_t last_ = 0;
    std::uint64_t stamp_ = 0;
    std::vector<std::pair<std::uint64_t, bool>> visit_;
    std::vector<std::int32_t> cavity_;
    std::vector<std::pair<std::int32_t, int>> boundary_;
    std::vector<std::pair<Index, std::int32_t>> fresh_;
};

} // namespace

TriMesh TriMesh::from_triangles(std::vector<Vec2> positions, std::vector<Triangle> triangles)
{
    TriMesh mesh;
    mesh.node_count = positions.size();
    mesh.original_pos = positions;
    mesh.current_pos = std::move(positions);
    mesh.triangles = std::move(triangles);

    const std::size_t n = mesh.node_count;
    std::vector<std::vector<std::array<Index, 2>>> incident(n);
    for (const Triangle& t : mesh.triangles) {
        for (std::size_t k = 0; k < 3; ++k) {
            if (t[k] >= n)
                throw Error(ErrorCode::FormatError, "triangle references node " + std::to_string(t[k]));
            incident[t[k]].push_back({t[(k + 1) % 3], t[(k + 2) % 3]});
        }
    }

    mesh.csr_offsets.assign(1, 0);
    mesh.fan_offsets.assign(1, 0);
    for (Index v = 0; v < n; ++v) {
        const auto& pairs = incident[v];
        std::vector<Index> ring;
        if (!pairs.empty()) {
            auto next_of = [&pairs](Index a) -> std::optional<Index> {
                for (const auto& [x, y] : pairs)
                    if (x == a)
                        return y;
                return std::nullopt;
            };
            Index start = pairs.front()[0];
            bool open = false;
            for (const auto& [x, y] : pairs) {
                const bool has_pred = std::any_of(pairs.begin(), pairs.end(), [x](const auto& q) { return q[1] == x; });
                if (!has_pred) {
                    start = x;
                    open = true;
                    break;
                }
            }
            ring.push_back(start);
            Index cur = start;
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                const auto nxt = next_of(cur);
                if (!nxt)
                    throw Error(ErrorCode::FormatError, "triangles around node " + std::to_string(v) + " do not form a fan");
                cur = *nxt;
                ring.push_back(cur);
            }
            if (ring.size() != pairs.size() + 1 || (!open && ring.back() != start))
                throw Error(ErrorCode::FormatError, "triangles around node " + std::to_string(v) + " do not form a fan");
            if (open)
                ++mesh.hull_size;
            mesh.fan_nodes.insert(mesh.fan_nodes.end(), ring.begin(), ring.end());
            mesh.csr_targets.insert(mesh.csr_targets.end(), ring.begin(), open ? ring.end() : ring.end() - 1);
        }
        mesh.fan_offsets.push_back(static_cast<Index>(mesh.fan_nodes.size()));
        mesh.csr_offsets.push_back(static_cast<Index>(mesh.csr_targets.size()));
    }
    return mesh;
}

bool TriMesh::on_hull(Index v) const
{
    const auto f = fan(v);
    return !f.empty() && f.front() != f.back();
}

std::vector<std::array<Index, 2>> TriMesh::hull_edges() const
{
    std::vector<std::array<Index, 2>> out;
    for (Index v = 0; v < node_count; ++v)
        if (on_hull(v))
            out.push_back({v, fan(v).front()});
    return out;
}

TriMesh delaunay(const PointCloud2D& points, const DelaunayOptions& options)
{
    double diagonal = points.viewport.diagonal();
    if (!(diagonal > 0.0))
        diagonal = padded_bounds(points.positions).diagonal();
    std::vector<Vec2> pts = separate_duplicates(points.positions, 1e-9 * diagonal, 1e-6 * diagonal, options.seed);
    BowyerWatson builder(pts);
    std::vector<Triangle> tris = builder.run();
    return TriMesh::from_triangles(std::move(pts), std::move(tris));
}

std::size_t count_inverted(const TriMesh& mesh, std::span<const Vec2> positions)
{
    std::size_t count = 0;
    for (const Triangle& t : mesh.triangles)
        if (orient2d(positions[t[0]], positions[t[1]], positions[t[2]]) <= 0)
            ++count;
    return count;
}

std::array<LimitingLine, 3> limiting_lines(const Vec2& a, const Vec2& b, const Vec2& c)
{
    if (orient2d(a, b, c) <= 0)
        throw Error(ErrorCode::ZeroAreaTriangle, "limiting lines need a counter-clockwise triangle with positive area");
    const std::array<Vec2, 3> v{a, b, c};
    std::array<LimitingLine, 3> lines;
    for (std::size_t k = 0; k < 3; ++k) {
        const Vec2& vk = v[k];
        const Vec2& v1 = v[(k + 1) % 3];
        const Vec2& v2 = v[(k + 2) % 3];
        Vec2 normal = perp(v2 - v1);
        normal = normal / norm(normal);
        const Vec2 point = (vk + v1) * 0.5;
        if (dot(normal, vk - point) < 0.0)
            normal = -normal;
        lines[k] = {point, normal};
    }
    return lines;
}

std::array<LimitingLine, 3> limiting_lines(const Triangle& tri, std::span<const Vec2> positions)
{
    return limiting_lines(positions[tri[0]], positions[tri[1]], positions[tri[2]]);
}

void write_mesh(std::ostream& out, const TriMesh& mesh, std::span<const Vec2> relaxed)
{
    auto fmt = [](double x) {
        std::ostringstream s;
        s.precision(17);
        s << x;
        return s.str();
    };
    out << "mdcontour-mesh 1\n";
    out << "nodes " << mesh.node_count << "\n";
    for (std::size_t i = 0; i < mesh.node_count; ++i)
        out << fmt(mesh.original_pos[i].x) << ' ' << fmt(mesh.original_pos[i].y) << ' '
            << fmt(mesh.current_pos[i].x) << ' ' << fmt(mesh.current_pos[i].y) << "\n";
    out << "triangles " << mesh.triangles.size() << "\n";
    for (const Triangle& t : mesh.triangles)
        out << t[0] << ' ' << t[1] << ' ' << t[2] << "\n";
    if (!relaxed.empty()) {
        out << "relaxed " << relaxed.size() << "\n";
        for (const Vec2& p : relaxed)
            out << fmt(p.x) << ' ' << fmt(p.y) << "\n";
    }
}

MeshDump read_mesh(std::istream& in)
{
    auto expect = [&in](const std::string& word) {
        std::string got;
        if (!(in >> got) || got != word)
            throw Error(ErrorCode::FormatError, "mesh dump: expected '" + word + "', got '" + got + "'");
    };
    auto count = [&in]() {
        std::size_t n = 0;
        if (!(in >> n))
            throw Error(ErrorCode::FormatError, "mesh dump: expected a count");
        return n;
    };
    expect("mdcontour-mesh");
    if (count() != 1)
        throw Error(ErrorCode::FormatError, "mesh dump: unsupported version");
    expect("nodes");
    const std::size_t n = count();
    std::vector<Vec2> original(n), current(n);
    for (std::size_t i = 0; i < n; ++i)
        if (!(in >> original[i].x >> original[i].y >> current[i].x >> current[i].y))
            throw Error(ErrorCode::FormatError, "mesh dump: truncated node block");
    expect("triangles");
    const std::size_t t = count();
    std::vector<Triangle> tris(t);
    for (auto& tri : tris)
        if (!(in >> tri[0] >> tri[1] >> tri[2]))
            throw Error(ErrorCode::FormatError, "mesh dump: truncated triangle block");

    MeshDump dump{TriMesh::from_triangles(original, std::move(tris)), {}};
    dump.mesh.current_pos = std::move(current);
    std::string word;
    if (in >> word) {
        if (word != "relaxed")
            throw Error(ErrorCode::FormatError, "mesh dump: unexpected section '" + word + "'");
        const std::size_t r = count();
        dump.relaxed.resize(r);
        for (auto& p : dump.relaxed)
            if (!(in >> p.x >> p.y))
                throw Error(ErrorCode::FormatError, "mesh dump: truncated relaxed block");
    }
    return dump;
}

} // namespace mdcontour
