#pragma once

#include "mdcontour/mesh.hpp"
#include "mdcontour/vec2.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mdcontour {

struct LayoutParams {
    double repulsion = 1.0;     // C: repulsive and node-edge scale
    double spring_scale = 1.0;  // multiplier on the logarithmic spring
    double edge_length = 1.0;   // D: desired edge length
    double softening = 1e-4;    // eta
    double initial_temp = 1.0;  // t_i: displacement cap of the first step
    double decay = 0.99;        // lambda in (0, 1)
    std::uint32_t iterations = 500;
    double bh_theta = 0.5;      // Barnes-Hut opening ratio

    // Throws Error{InvalidParameter} naming the first out-of-range field.
    void validate() const;

    // D = median edge length of the mesh at its original positions, C = D^3,
    // eta = 1e-4 D, t_i = D, lambda = 0.99, 500 iterations, theta = 0.5.
    static LayoutParams defaults_for(const TriMesh& mesh);
};

// C / (|V|^3 + eta) * V with V = v - other.
Vec2 repulsive_force(const Vec2& v, const Vec2& other, const LayoutParams& params);

// spring_scale * |V| * log((|V| + eta) / D) along -V/|V|.
Vec2 spring_force(const Vec2& v, const Vec2& neighbor, const LayoutParams& params);

// Pushes v away from the line through (a, b) with magnitude C / (|R|^2 + eta),
// R being the perpendicular from v to the line. Zero when v lies on the line.
Vec2 node_edge_force(const Vec2& v, const Vec2& a, const Vec2& b, const LayoutParams& params);

// kd-tree over a frozen position snapshot; distant groups act as a charge at
// their centre of mass, corrected by their second moments.
class RepulsionTree {
public:
    // Target bound on |approximate - exact| / |exact| for each node's force.
    static constexpr double kForceTolerance = 0.02;

    explicit RepulsionTree(std::span<const Vec2> positions, std::size_t leaf_size = 4);

    // Approximate sum of repulsive_force from every other node on node i. A
    // group is approximated when it passes the bh_theta test; if the summed
    // truncation bound of those groups exceeds kForceTolerance times the
    // result, the walk is repeated with a per-node error budget.
    Vec2 force_on(Index i, const LayoutParams& params) const;

private:
    struct Node {
        Box box;
        Vec2 center;
        double mxx = 0.0, mxy = 0.0, myy = 0.0; // second moments about center
        double radius = 0.0;                     // farthest member from center
        std::uint32_t count = 0;
        std::uint32_t begin = 0, end = 0; // range into order_
        std::int32_t left = -1, right = -1;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end, std::size_t leaf_size);
    // budget: allowed truncation bound per member of an approximated group.
    Vec2 walk(Index i, const LayoutParams& params, double budget, double& bound) const;

    std::span<const Vec2> positions_;
    std::vector<Index> order_;
    std::vector<Node> nodes_;
};

// Uniformly scales `proposed` by the largest s in [0, 1] such that, for every
// triangle incident to the node and each of its three limiting lines, the
// displacement toward the line does not exceed distance - eta, or half the
// distance when the node is already within eta of the line.
Vec2 clamp_displacement(Index node, const Vec2& proposed, const TriMesh& mesh, std::span<const Vec2> positions,
                        const LayoutParams& params);
Vec2 clamp_displacement(Index node, const Vec2& proposed, const TriMesh& mesh, const LayoutParams& params);

struct LayoutState {
    TriMesh mesh;
    std::uint32_t iteration = 0;
    double temperature = 0.0;
    std::vector<Vec2> relaxed_pos;
};

LayoutState make_layout_state(TriMesh mesh, const LayoutParams& params);

// One annealed iteration. Forces are evaluated for every node in parallel from
// a frozen snapshot of mesh.current_pos, capped at the current temperature,
// clamped to the limiting lines, written to a second buffer, then swapped in.
void layout_step(LayoutState& state, const LayoutParams& params);

using LayoutObserver = std::function<void(const LayoutState&)>;

// Runs params.iterations steps and records relaxed_pos. The observer, when
// given, sees the state after every step.
LayoutState layout_run(TriMesh mesh, const LayoutParams& params, const LayoutObserver& observer = {});

struct InterpolatedLayout {
    std::vector<Vec2> positions;
    std::size_t inverted_triangles = 0; // blending is not guaranteed flip-free
};

// (1 - t) * original + t * relaxed. Throws Error{TOutOfRange} for t outside [0, 1].
InterpolatedLayout interpolate_layout(const LayoutState& state, double t);

} // namespace mdcontour
