// Per-stage timings by node count, plus the layout per-iteration scaling trend.
#include "mdcontour/field.hpp"
#include "mdcontour/layout.hpp"
#include "mdcontour/mesh.hpp"
#include "mdcontour/parallel.hpp"
#include "mdcontour/projection.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <random>

using namespace mdcontour;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

PointCloud2D uniform_cloud(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointCloud2D cloud;
    cloud.positions.resize(n);
    for (auto& p : cloud.positions)
        p = {u(rng), u(rng)};
    cloud.viewport = padded_bounds(cloud.positions);
    return cloud;
}

// Best of `reps` runs.
template <class F>
double best_of(int reps, F&& fn)
{
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto start = Clock::now();
        fn();
        best = std::min(best, since(start));
    }
    return best;
}

double per_iteration(std::size_t n, std::uint32_t iterations)
{
    TriMesh mesh = delaunay(uniform_cloud(n, 100 + n));
    LayoutParams params = LayoutParams::defaults_for(mesh);
    params.iterations = iterations;
    return best_of(2, [&] { layout_run(mesh, params); }) / iterations;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"mdcontour stage timings"};
    std::vector<std::size_t> sizes{306, 1000, 2245};
    std::uint32_t width = 600, height = 600, iterations = 500, trend_iterations = 40;
    std::vector<std::size_t> trend{1000, 2000, 4000};
    unsigned threads = 0;
    bool trend_only = false;
    app.add_option("--sizes", sizes, "node counts for the timing table")->delimiter(',');
    app.add_option("--width", width, "canvas width");
    app.add_option("--height", height, "canvas height");
    app.add_option("--iterations", iterations, "layout iterations for the table");
    app.add_option("--trend", trend, "node counts for the layout scaling check, each double the last")->delimiter(',');
    app.add_option("--trend-iterations", trend_iterations, "iterations timed per trend size");
    app.add_option("--threads", threads, "worker threads (0: MDCONTOUR_THREADS or all cores)");
    app.add_flag("--trend-only", trend_only, "only run the scaling check; exit 1 if it fails");
    CLI11_PARSE(app, argc, argv);
    if (threads > 0)
        set_worker_count(threads);

    if (!trend_only) {
        std::printf("Timings in seconds, %ux%u canvas, %u layout iterations, %u worker(s)\n", width, height,
                    iterations, worker_count());
        std::printf("%-16s", "# Nodes:");
        for (const std::size_t n : sizes)
            std::printf(" %12zu", n);
        std::printf("\n");

        std::vector<TriMesh> meshes;
        std::vector<double> tri, lay;
        for (const std::size_t n : sizes) {
            const PointCloud2D cloud = uniform_cloud(n, n);
            TriMesh mesh;
            tri.push_back(best_of(3, [&] { mesh = delaunay(cloud); }));
            LayoutParams params = LayoutParams::defaults_for(mesh);
            params.iterations = iterations;
            LayoutState state;
            lay.push_back(best_of(1, [&] { state = layout_run(mesh, params); }));
            mesh.current_pos = state.relaxed_pos;
            meshes.push_back(std::move(mesh));
        }
        auto row = [&](const char* label, const std::vector<double>& values) {
            std::printf("%-16s", label);
            for (const double v : values)
                std::printf(" %12.6f", v);
            std::printf("\n");
        };
        row("Triangulation:", tri);
        row("Layout:", lay);
        for (const MlsVariant variant : {MlsVariant::Linear, MlsVariant::Mean, MlsVariant::Affine, MlsVariant::Rigid}) {
            std::vector<double> times;
            for (const TriMesh& mesh : meshes) {
                const TargetAssignment targets = projection_targets(mesh.original_pos);
                const MlsParams params = MlsParams::defaults_for(variant);
                times.push_back(best_of(2, [&] {
                    compute_field(mesh, mesh.current_pos, targets, params, width, height);
                }));
            }
            const std::string label = std::string(to_string(variant)) + ":";
            row(label.c_str(), times);
        }
        std::printf("\n");
    }

    std::printf("Layout per-iteration time (%u iterations each)\n", trend_iterations);
    bool ok = true;
    double previous = 0.0;
    for (std::size_t k = 0; k < trend.size(); ++k) {
        const double t = per_iteration(trend[k], trend_iterations);
        std::printf("  n = %-7zu %10.3f ms", trend[k], t * 1e3);
        if (k > 0) {
            const double ratio = t / previous;
            const bool doubled = trend[k] == 2 * trend[k - 1];
            std::printf("   x%.2f vs n = %zu", ratio, trend[k - 1]);
            if (doubled) {
                std::printf(" (%s: doubling n must stay under 3x)", ratio < 3.0 ? "ok" : "FAIL");
                ok = ok && ratio < 3.0;
            }
        }
        std::printf("\n");
        previous = t;
    }
    return ok ? 0 : 1;
}
