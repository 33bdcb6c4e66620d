#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mdcontour/error.hpp"
#include "mdcontour/mesh.hpp"
#include "mdcontour/predicates.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

using namespace mdcontour;

namespace {

PointCloud2D cloud(std::vector<Vec2> pts)
{
    PointCloud2D c;
    c.viewport = padded_bounds(pts);
    c.positions = std::move(pts);
    return c;
}

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::FormatError;
}

using i128 = __int128;

int sign(i128 v) { return (v > 0) - (v < 0); }

// Integer lattice scaled by 2^-k keeps every double exact, so the integer
// determinants below are the true signs.
int exact_orient(std::array<std::int64_t, 2> a, std::array<std::int64_t, 2> b, std::array<std::int64_t, 2> c)
{
    return sign(i128(b[0] - a[0]) * (c[1] - a[1]) - i128(b[1] - a[1]) * (c[0] - a[0]));
}

int exact_incircle(std::array<std::int64_t, 2> a, std::array<std::int64_t, 2> b, std::array<std::int64_t, 2> c,
                   std::array<std::int64_t, 2> d)
{
    const i128 adx = a[0] - d[0], ady = a[1] - d[1], bdx = b[0] - d[0], bdy = b[1] - d[1], cdx = c[0] - d[0],
               cdy = c[1] - d[1];
    const i128 al = adx * adx + ady * ady, bl = bdx * bdx + bdy * bdy, cl = cdx * cdx + cdy * cdy;
    return sign(al * (bdx * cdy - bdy * cdx) - bl * (adx * cdy - ady * cdx) + cl * (adx * bdy - ady * bdx));
}

void check_structure(const TriMesh& m)
{
    const std::size_t n = m.node_count;
    REQUIRE(m.csr_offsets.size() == n + 1);
    REQUIRE(m.fan_offsets.size() == n + 1);
    for (std::size_t v = 0; v < n; ++v)
        CHECK(m.csr_offsets[v] <= m.csr_offsets[v + 1]);
    for (Index t : m.csr_targets)
        CHECK(t < n);

    for (const Triangle& t : m.triangles)
        CHECK(signed_area(m.current_pos[t[0]], m.current_pos[t[1]], m.current_pos[t[2]]) > 0);

    // fan iteration yields exactly the incident triangles
    std::map<std::array<Index, 3>, int> canonical;
    auto canon = [](Triangle t) {
        const auto r = std::min_element(t.begin(), t.end()) - t.begin();
        std::rotate(t.begin(), t.begin() + r, t.end());
        return t;
    };
    for (const Triangle& t : m.triangles)
        canonical[canon(t)]++;
    for (Index v = 0; v < n; ++v) {
        std::multiset<std::array<Index, 3>> from_fan, incident;
        const auto fan = m.fan(v);
        for (std::size_t j = 0; j + 1 < fan.size(); ++j)
            from_fan.insert(canon({v, fan[j], fan[j + 1]}));
        for (const Triangle& t : m.triangles)
            if (t[0] == v || t[1] == v || t[2] == v)
                incident.insert(canon(t));
        CHECK(from_fan == incident);
        CHECK(m.fan_triangle_count(v) == incident.size());

        // CSR neighbours are the fan's distinct nodes
        std::set<Index> a(m.neighbors(v).begin(), m.neighbors(v).end());
        std::set<Index> b(fan.begin(), fan.end());
        CHECK(a == b);
        CHECK(a.size() == m.neighbors(v).size());
    }
    CHECK(m.fan_nodes.size() == n + 3 * m.triangle_count());
}

} // namespace

TEST_CASE("signed area")
{
    CHECK(signed_area({0, 0}, {1, 0}, {0, 1}) == 0.5);
    CHECK(signed_area({0, 0}, {0, 1}, {1, 0}) == -0.5);
    CHECK(signed_area({0, 0}, {1, 1}, {2, 2}) == 0.0);
    CHECK(orient2d({0, 0}, {1, 0}, {0, 1}) == 1);
    CHECK(orient2d({0, 0}, {0, 1}, {1, 0}) == -1);
    CHECK(orient2d({0, 0}, {1, 1}, {2, 2}) == 0);
}

TEST_CASE("orientation agrees with exact integer arithmetic near degeneracy")
{
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::int64_t> base(-(std::int64_t(1) << 39), std::int64_t(1) << 39);
    std::uniform_int_distribution<std::int64_t> dir(-(1 << 20), 1 << 20);
    std::uniform_int_distribution<std::int64_t> mult(-(1 << 18), 1 << 18);
    std::uniform_int_distribution<std::int64_t> off(-1, 1);
    const double scale = std::ldexp(1.0, -30);
    int mismatches = 0, zeros = 0;
    for (int i = 0; i < 30000; ++i) {
        // a, b, c on one lattice line, then c nudged by at most one step
        const std::array<std::int64_t, 2> a{base(rng), base(rng)};
        const std::int64_t dx = dir(rng), dy = dir(rng), m1 = mult(rng), m2 = mult(rng);
        const std::array<std::int64_t, 2> b{a[0] + m1 * dx, a[1] + m1 * dy};
        const std::array<std::int64_t, 2> c{a[0] + m2 * dx + off(rng), a[1] + m2 * dy + off(rng)};
        const Vec2 fa{a[0] * scale, a[1] * scale}, fb{b[0] * scale, b[1] * scale}, fc{c[0] * scale, c[1] * scale};
        const int want = exact_orient(a, b, c);
        zeros += want == 0;
        if (orient2d(fa, fb, fc) != want)
            ++mismatches;
        const double area = signed_area(fa, fb, fc);
        if ((area > 0) - (area < 0) != want)
            ++mismatches;
    }
    CHECK(mismatches == 0);
    CHECK(zeros > 1000);
}

TEST_CASE("incircle agrees with exact integer arithmetic on near-cocircular input")
{
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<std::int64_t> off(-1, 1);
    const double scale = std::ldexp(1.0, -12);
    int mismatches = 0, zeros = 0;
    // Pythagorean points on circles of radius 5k, then nudged by one lattice step.
    const std::array<std::array<std::int64_t, 2>, 8> unit{{{5, 0}, {4, 3}, {0, 5}, {-3, 4}, {-5, 0}, {-4, -3}, {0, -5}, {3, -4}}};
    for (int i = 0; i < 20000; ++i) {
        const std::int64_t k = std::uniform_int_distribution<std::int64_t>(1, 100000)(rng);
        const std::int64_t cx = std::uniform_int_distribution<std::int64_t>(-100000, 100000)(rng);
        const std::int64_t cy = std::uniform_int_distribution<std::int64_t>(-100000, 100000)(rng);
        std::array<int, 8> idx{0, 1, 2, 3, 4, 5, 6, 7};
        std::shuffle(idx.begin(), idx.end(), rng);
        std::sort(idx.begin(), idx.begin() + 3);
        std::array<std::array<std::int64_t, 2>, 4> p;
        for (int j = 0; j < 4; ++j)
            p[j] = {cx + k * unit[idx[j]][0], cy + k * unit[idx[j]][1]};
        if (i % 2)
            p[3] = {p[3][0] + off(rng), p[3][1] + off(rng)};
        const int want = exact_incircle(p[0], p[1], p[2], p[3]);
        zeros += want == 0;
        auto f = [&](int j) { return Vec2{p[j][0] * scale, p[j][1] * scale}; };
        if (incircle(f(0), f(1), f(2), f(3)) != want)
            ++mismatches;
    }
    CHECK(mismatches == 0);
    CHECK(zeros > 5000);
}

TEST_CASE("three points")
{
    const TriMesh m = delaunay(cloud({{0, 0}, {1, 0}, {0, 1}}));
    CHECK(m.triangle_count() == 1);
    CHECK(m.edge_count() == 3);
    CHECK(m.hull_size == 3);
    check_structure(m);
}

TEST_CASE("unit square")
{
    const TriMesh m = delaunay(cloud({{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
    CHECK(m.triangle_count() == 2);
    CHECK(m.edge_count() == 5);
    check_structure(m);
}

TEST_CASE("random point sets satisfy the empty-circumcircle property and Euler counts")
{
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const std::size_t n = 3 + seed * 7 % 120;
        const auto pts = oracle::random_points(n, seed);
        const TriMesh m = delaunay(cloud(pts));
        CHECK(oracle::circumcircle_violations(m.current_pos, m.triangles) == 0);
        const std::size_t h = oracle::hull_vertex_count(m.current_pos);
        CHECK(m.hull_size == h);
        CHECK(m.triangle_count() == 2 * n - 2 - h);
        CHECK(m.edge_count() == 3 * n - 3 - h);
        CHECK(double(3 * m.triangle_count()) / n <= 6.0);
        check_structure(m);
        CHECK(count_inverted(m, m.current_pos) == 0);
    }
}

TEST_CASE("lattice input with many co-circular quadruples")
{
    std::vector<Vec2> pts;
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 9; ++x)
            pts.push_back({x * 0.5, y * 0.5});
    const TriMesh a = delaunay(cloud(pts));
    const TriMesh b = delaunay(cloud(pts));
    CHECK(a.triangles == b.triangles);
    CHECK(oracle::circumcircle_violations(a.current_pos, a.triangles) == 0);
    // hull has 2*(9+8)-4 = 30 points, all but the 4 corners collinear on edges
    CHECK(a.triangle_count() == 2 * pts.size() - 2 - 30);
    check_structure(a);
}

TEST_CASE("duplicates are jittered deterministically")
{
    std::vector<Vec2> pts = oracle::random_points(30, 4);
    for (int i = 0; i < 10; ++i)
        pts.push_back(pts[i]);
    pts.push_back(pts[0]);
    const TriMesh a = delaunay(cloud(pts), {7});
    const TriMesh b = delaunay(cloud(pts), {7});
    CHECK(a.node_count == pts.size());
    CHECK(a.current_pos == b.current_pos);
    CHECK(a.triangles == b.triangles);
    CHECK(a.original_pos == a.current_pos);
    check_structure(a);
    const double diag = cloud(pts).viewport.diagonal();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(norm(a.current_pos[i] - pts[i]) <= 1e-6 * diag * 1.0000001);
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            CHECK(norm(a.current_pos[i] - a.current_pos[j]) > 1e-9 * diag);
    }
    const TriMesh c = delaunay(cloud(pts), {8});
    CHECK(c.current_pos != a.current_pos);
}

TEST_CASE("degenerate input")
{
    CHECK(code_of([] { delaunay(cloud({{0, 0}, {1, 1}, {2, 2}, {3, 3}})); }) == ErrorCode::DegenerateInput);
    CHECK(code_of([] { delaunay(cloud({{0, 0}, {1, 1}})); }) == ErrorCode::DegenerateInput);
    // coincident points are separated by the jitter before the collinearity test
    CHECK(delaunay(cloud({{1, 1}, {1, 1}, {1, 1}})).triangle_count() == 1);
}

TEST_CASE("hull edges keep the interior on their left")
{
    const auto pts = oracle::random_points(60, 12);
    const TriMesh m = delaunay(cloud(pts));
    const auto edges = m.hull_edges();
    CHECK(edges.size() == m.hull_size);
    for (const auto& e : edges) {
        CHECK(m.on_hull(e[0]));
        for (Index v = 0; v < m.node_count; ++v)
            if (v != e[0] && v != e[1])
                CHECK(orient2d(m.current_pos[e[0]], m.current_pos[e[1]], m.current_pos[v]) > 0);
    }
}

TEST_CASE("limiting lines")
{
    SUBCASE("right triangle")
    {
        const auto lines = limiting_lines({0, 0}, {2, 0}, {0, 2});
        const LimitingLine& l = lines[0];
        // (1,0) and (0,1) both lie on it
        CHECK(std::abs(dot(Vec2{1, 0} - l.point, l.normal)) < 1e-12);
        CHECK(std::abs(dot(Vec2{0, 1} - l.point, l.normal)) < 1e-12);
        CHECK(norm(l.normal) == doctest::Approx(1.0));
    }
    SUBCASE("equilateral: half the altitude")
    {
        const Vec2 v[3] = {{0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}};
        const auto lines = limiting_lines(v[0], v[1], v[2]);
        const double altitude = std::sqrt(3.0) / 2;
        for (int k = 0; k < 3; ++k) {
            const double d = dot(v[k] - lines[k].point, lines[k].normal);
            CHECK(d == doctest::Approx(altitude / 2));
        }
    }
    SUBCASE("vertex on its own side, random triangles")
    {
        const auto pts = oracle::random_points(300, 5, -3, 3);
        for (std::size_t i = 0; i + 2 < pts.size(); i += 3) {
            Vec2 a = pts[i], b = pts[i + 1], c = pts[i + 2];
            if (oracle::signed_area(a, b, c) < 0)
                std::swap(b, c);
            const auto lines = limiting_lines(a, b, c);
            const Vec2 v[3] = {a, b, c};
            for (int k = 0; k < 3; ++k) {
                CHECK(dot(lines[k].normal, v[k] - lines[k].point) > 0);
                // the other two vertices sit on the far side at the same distance
                const double near = dot(lines[k].normal, v[k] - lines[k].point);
                CHECK(dot(lines[k].normal, v[(k + 1) % 3] - lines[k].point) == doctest::Approx(-near).epsilon(1e-9));
            }
        }
    }
    CHECK(code_of([] { limiting_lines({0, 0}, {1, 1}, {2, 2}); }) == ErrorCode::ZeroAreaTriangle);
    CHECK(code_of([] { limiting_lines({0, 0}, {0, 1}, {1, 0}); }) == ErrorCode::ZeroAreaTriangle);
}

TEST_CASE("mesh dump round trip")
{
    TriMesh m = delaunay(cloud(oracle::random_points(25, 3)));
    m.current_pos[3] = m.current_pos[3] + Vec2{1e-7, -2e-7};
    std::vector<Vec2> relaxed = m.current_pos;
    relaxed[0] = {0.125, 0.375};
    std::stringstream ss;
    write_mesh(ss, m, relaxed);
    const MeshDump d = read_mesh(ss);
    CHECK(d.mesh.node_count == m.node_count);
    CHECK(d.mesh.original_pos == m.original_pos);
    CHECK(d.mesh.current_pos == m.current_pos);
    CHECK(d.mesh.triangles == m.triangles);
    CHECK(d.mesh.csr_targets == m.csr_targets);
    CHECK(d.mesh.fan_nodes == m.fan_nodes);
    CHECK(d.relaxed == relaxed);

    std::stringstream bad("not a mesh\n");
    CHECK(code_of([&] { read_mesh(bad); }) == ErrorCode::FormatError);
}

TEST_CASE("count_inverted")
{
    const TriMesh m = delaunay(cloud({{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
    std::vector<Vec2> moved = m.current_pos;
    CHECK(count_inverted(m, moved) == 0);
    moved[0] = {2, 2};
    CHECK(count_inverted(m, moved) >= 1);
}
