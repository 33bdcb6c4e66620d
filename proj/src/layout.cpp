#include "mdcontour/layout.hpp"

#include "mdcontour/error.hpp"
#include "mdcontour/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mdcontour {

void LayoutParams::validate() const
{
    auto require = [](bool ok, const char* what) {
        if (!ok)
            throw Error(ErrorCode::InvalidParameter, std::string("layout parameter out of range: ") + what);
    };
    require(std::isfinite(repulsion) && repulsion > 0.0, "repulsion must be > 0");
    require(std::isfinite(spring_scale) && spring_scale > 0.0, "spring scale must be > 0");
    require(std::isfinite(edge_length) && edge_length > 0.0, "edge length must be > 0");
    require(std::isfinite(softening) && softening > 0.0, "softening must be > 0");
    require(std::isfinite(initial_temp) && initial_temp > 0.0, "initial temperature must be > 0");
    require(decay > 0.0 && decay < 1.0, "lambda must be in (0, 1)");
    require(std::isfinite(bh_theta) && bh_theta > 0.0, "Barnes-Hut theta must be > 0");
}

LayoutParams LayoutParams::defaults_for(const TriMesh& mesh)
{
    std::vector<double> lengths;
    lengths.reserve(mesh.edge_count());
    for (Index v = 0; v < mesh.node_count; ++v)
        for (const Index w : mesh.neighbors(v))
            if (v < w)
                lengths.push_back(norm(mesh.original_pos[w] - mesh.original_pos[v]));
    double d = 1.0;
    if (!lengths.empty()) {
        const auto mid = lengths.begin() + static_cast<std::ptrdiff_t>(lengths.size() / 2);
        std::nth_element(lengths.begin(), mid, lengths.end());
        d = *mid > 0.0 ? *mid : 1.0;
    }
    LayoutParams p;
    p.edge_length = d;
    p.repulsion = d * d * d;
    p.spring_scale = 1.0;
    p.softening = 1e-4 * d;
    p.initial_temp = d;
    p.decay = 0.99;
    p.iterations = 500;
    p.bh_theta = 0.5;
    return p;
}

Vec2 repulsive_force(const Vec2& v, const Vec2& other, const LayoutParams& params)
{
    const Vec2 diff = v - other;
    const double r = norm(diff);
    const double denom = r * r * r + params.softening;
    if (!(denom > 0.0))
        return {};
    return diff * (params.repulsion / denom);
}

Vec2 spring_force(const Vec2& v, const Vec2& neighbor, const LayoutParams& params)
{
    const Vec2 diff = v - neighbor;
    const double r = norm(diff);
    if (!(r > 0.0))
        return {};
    const double magnitude = params.spring_scale * r * std::log((r + params.softening) / params.edge_length);
    return diff * (-magnitude / r);
}

Vec2 node_edge_force(const Vec2& v, const Vec2& a, const Vec2& b, const LayoutParams& params)
{
    const Vec2 edge = b - a;
    const double len2 = norm2(edge);
    if (!(len2 > 0.0))
        return {};
    const Vec2 foot = a + edge * (dot(v - a, edge) / len2);
    const Vec2 r = foot - v;
    const double dist = norm(r);
    if (dist < 1e-12)
        return {};
    const double magnitude = params.repulsion / (dist * dist + params.softening);
    return r * (-magnitude / dist);
}

RepulsionTree::RepulsionTree(std::span<const Vec2> positions, std::size_t leaf_size) : positions_(positions)
{
    order_.resize(positions.size());
    std::iota(order_.begin(), order_.end(), Index{0});
    nodes_.reserve(2 * positions.size() / std::max<std::size_t>(1, leaf_size) + 2);
    if (!positions.empty())
        build(0, static_cast<std::uint32_t>(positions.size()), std::max<std::size_t>(1, leaf_size));
}

std::int32_t RepulsionTree::build(std::uint32_t begin, std::uint32_t end, std::size_t leaf_size)
{
    Node node;
    node.begin = begin;
    node.end = end;
    node.count = end - begin;
    node.box.min = node.box.max = positions_[order_[begin]];
    Vec2 sum;
    for (std::uint32_t k = begin; k < end; ++k) {
        const Vec2& p = positions_[order_[k]];
        node.box.min = {std::min(node.box.min.x, p.x), std::min(node.box.min.y, p.y)};
        node.box.max = {std::max(node.box.max.x, p.x), std::max(node.box.max.y, p.y)};
        sum += p;
    }
    node.center = sum / static_cast<double>(node.count);
    for (std::uint32_t k = begin; k < end; ++k) {
        const Vec2 d = positions_[order_[k]] - node.center;
        node.mxx += d.x * d.x;
        node.mxy += d.x * d.y;
        node.myy += d.y * d.y;
        node.radius = std::max(node.radius, norm(d));
    }

    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(node);
    if (node.count <= leaf_size)
        return id;

    const bool split_x = node.box.width() >= node.box.height();
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [this, split_x](Index a, Index b) {
                         const Vec2& pa = positions_[a];
                         const Vec2& pb = positions_[b];
                         return split_x ? (pa.x < pb.x || (pa.x == pb.x && a < b))
                                        : (pa.y < pb.y || (pa.y == pb.y && a < b));
                     });
    const std::int32_t left = build(begin, mid, leaf_size);
    const std::int32_t right = build(mid, end, leaf_size);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
}

Vec2 RepulsionTree::force_on(Index i, const LayoutParams& params) const
{
    double bound = 0.0;
    const Vec2 coarse = walk(i, params, std::numeric_limits<double>::infinity(), bound);
    if (bound <= kForceTolerance * norm(coarse))
        return coarse;
    return walk(i, params, kForceTolerance * norm(coarse), bound);
}

Vec2 RepulsionTree::walk(Index i, const LayoutParams& params, double budget, double& bound) const
{
    Vec2 total;
    bound = 0.0;
    if (nodes_.empty())
        return total;
    const Vec2 v = positions_[i];
    const double theta2 = params.bh_theta * params.bh_theta;

    std::int32_t stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[static_cast<std::size_t>(stack[--top])];
        if (node.left < 0) {
            for (std::uint32_t k = node.begin; k < node.end; ++k)
                if (order_[k] != i)
                    total += repulsive_force(v, positions_[order_[k]], params);
            continue;
        }
        const Vec2 diff = v - node.center;
        const double dist2 = norm2(diff);
        const double size2 = norm2(node.box.max - node.box.min);
        if (!node.box.contains(v) && size2 < theta2 * dist2) {
            const double r = std::sqrt(dist2);
            // multipole terms of order >= 3 are bounded by (l + 1) x^l / r^2 per
            // member, x = radius / r; doubled for the softening mismatch
            const double x = node.radius / r;
            const double tail = 1.0 / ((1.0 - x) * (1.0 - x)) - 1.0 - 2.0 * x - 3.0 * x * x;
            const double cell_bound = 2.0 * params.repulsion * node.count * tail / dist2;
            if (cell_bound <= budget) {
                bound += cell_bound;
                total += diff * (node.count * params.repulsion / (r * r * r + params.softening));
                // second-order Taylor term of C d / |d|^3 summed over the group
                const double r5 = dist2 * dist2 * r;
                const double r7 = r5 * dist2;
                const Vec2 md{node.mxx * diff.x + node.mxy * diff.y, node.mxy * diff.x + node.myy * diff.y};
                const double trace = node.mxx + node.myy;
                const double dmd = dot(diff, md);
                total += (diff * (15.0 * dmd / r7 - 3.0 * trace / r5) - md * (6.0 / r5)) * (0.5 * params.repulsion);
                continue;
            }
        }
        stack[top++] = node.left;
        stack[top++] = node.right;
    }
    return total;
}

namespace {

// Largest factor in [0, 1] keeping `disp` within the limiting-line constraints of
// one triangle (node, a, b).
double triangle_clamp_factor(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& disp, double eta)
{
    const std::array<Vec2, 3> v{p, a, b};
    double factor = 1.0;
    for (std::size_t k = 0; k < 3; ++k) {
        const Vec2& v1 = v[(k + 1) % 3];
        const Vec2& v2 = v[(k + 2) % 3];
        Vec2 normal = perp(v2 - v1);
        const double len = norm(normal);
        if (!(len > 0.0))
            return 0.0;
        normal = normal / len;
        const Vec2 point = (v[k] + v1) * 0.5;
        const double side = dot(normal, p - point);
        const Vec2 toward = side > 0.0 ? -normal : normal;
        const double gap = std::abs(side);
        const double allowed = gap >= eta ? gap - eta : 0.5 * gap;
        const double proj = dot(disp, toward);
        if (proj > allowed)
            factor = std::min(factor, allowed / proj);
    }
    return factor;
}

} // namespace

Vec2 clamp_displacement(Index node, const Vec2& proposed, const TriMesh& mesh, std::span<const Vec2> positions,
                        const LayoutParams& params)
{
    if (proposed.x == 0.0 && proposed.y == 0.0)
        return proposed;
    const auto fan = mesh.fan(node);
    double factor = 1.0;
    for (std::size_t j = 0; j + 1 < fan.size(); ++j)
        factor = std::min(factor, triangle_clamp_factor(positions[node], positions[fan[j]], positions[fan[j + 1]],
                                                        proposed, params.softening));
    return proposed * factor;
}

Vec2 clamp_displacement(Index node, const Vec2& proposed, const TriMesh& mesh, const LayoutParams& params)
{
    return clamp_displacement(node, proposed, mesh, mesh.current_pos, params);
}

LayoutState make_layout_state(TriMesh mesh, const LayoutParams& params)
{
    LayoutState state;
    state.mesh = std::move(mesh);
    state.iteration = 0;
    state.temperature = params.initial_temp;
    state.relaxed_pos = state.mesh.current_pos;
    return state;
}

void layout_step(LayoutState& state, const LayoutParams& params)
{
    TriMesh& mesh = state.mesh;
    const std::span<const Vec2> snapshot = mesh.current_pos;
    std::vector<Vec2> next(snapshot.size());
    const RepulsionTree tree(snapshot);
    const double cap = state.temperature;

    parallel_for(mesh.node_count, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto node = static_cast<Index>(i);
            const Vec2 p = snapshot[i];
            Vec2 force = tree.force_on(node, params);
            for (const Index w : mesh.neighbors(node))
                force += spring_force(p, snapshot[w], params);
            const auto fan = mesh.fan(node);
            for (std::size_t j = 0; j + 1 < fan.size(); ++j)
                force += node_edge_force(p, snapshot[fan[j]], snapshot[fan[j + 1]], params);

            Vec2 disp = force;
            const double len = norm(disp);
            if (!std::isfinite(len))
                disp = {};
            else if (len > cap)
                disp *= cap / len;
            disp = clamp_displacement(node, disp, mesh, snapshot, params);
            next[i] = p + disp;
        }
    });

    mesh.current_pos.swap(next);
    ++state.iteration;
    state.temperature = params.initial_temp * std::pow(params.decay, static_cast<double>(state.iteration));
}

LayoutState layout_run(TriMesh mesh, const LayoutParams& params, const LayoutObserver& observer)
{
    LayoutState state = make_layout_state(std::move(mesh), params);
    for (std::uint32_t k = 0; k < params.iterations; ++k) {
        layout_step(state, params);
        if (observer)
            observer(state);
    }
    state.relaxed_pos = state.mesh.current_pos;
    return state;
}

InterpolatedLayout interpolate_layout(const LayoutState& state, double t)
{
    if (!(t >= 0.0 && t <= 1.0))
        throw Error(ErrorCode::TOutOfRange, "relax parameter must lie in [0, 1], got " + std::to_string(t));
    InterpolatedLayout out;
    const auto& original = state.mesh.original_pos;
    const auto& relaxed = state.relaxed_pos;
    out.positions.resize(original.size());
    for (std::size_t i = 0; i < original.size(); ++i)
        out.positions[i] = t == 1.0 ? relaxed[i] : original[i] * (1.0 - t) + relaxed[i] * t;
    out.inverted_triangles = count_inverted(state.mesh, out.positions);
    return out;
}

} // namespace mdcontour
