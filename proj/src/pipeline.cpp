#include "mdcontour/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

namespace mdcontour {

double auto_spacing(std::span<const double> values)
{
    if (values.empty())
        return 1.0;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double range = *hi - *lo;
    if (!(range > 0.0) || !std::isfinite(range))
        return 1.0;

    constexpr double kFewest = 8.0, kMost = 15.0;
    const int k_lo = static_cast<int>(std::floor(std::log10(range / kMost))) - 1;
    const int k_hi = static_cast<int>(std::floor(std::log10(range / kFewest))) + 1;
    double best = 1.0;
    double best_miss = std::numeric_limits<double>::infinity();
    for (int k = k_lo; k <= k_hi; ++k) {
        const double decade = std::pow(10.0, std::abs(k));
        for (const double m : {1.0, 2.0, 5.0}) {
            const double s = k >= 0 ? m * decade : m / decade;
            const double levels = range / s;
            const double miss = levels < kFewest ? std::log(kFewest / levels)
                                : levels > kMost ? std::log(levels / kMost)
                                                 : 0.0;
            if (miss < best_miss || (miss == best_miss && s > best)) {
                best_miss = miss;
                best = s;
            }
        }
    }
    return best;
}

LayoutParams LayoutOverrides::resolve(const TriMesh& mesh) const
{
    LayoutParams p = LayoutParams::defaults_for(mesh);
    if (edge_length) {
        // keep the derived constants proportional to the chosen edge length
        const double d = *edge_length;
        p.edge_length = d;
        p.repulsion = d * d * d;
        p.softening = 1e-4 * d;
        p.initial_temp = d;
    }
    if (iterations)
        p.iterations = *iterations;
    if (decay)
        p.decay = *decay;
    if (initial_temp)
        p.initial_temp = *initial_temp;
    if (repulsion)
        p.repulsion = *repulsion;
    if (bh_theta)
        p.bh_theta = *bh_theta;
    p.validate();
    return p;
}

std::shared_ptr<const PreparedData> prepare(Dataset raw, const LayoutOverrides& overrides, std::uint64_t seed)
{
    auto data = std::make_shared<PreparedData>();
    data->raw = std::move(raw);
    auto stage = [](const char* name, auto&& fn) {
        try {
            return fn();
        } catch (const StageError&) {
            throw;
        } catch (const Error& e) {
            throw StageError(name, e);
        }
    };
    data->normalized = stage("normalize", [&] { return normalize(data->raw); });
    data->projection = stage("project", [&] { return pca_project(data->normalized); });
    TriMesh mesh = stage("triangulate", [&] { return delaunay(data->projection.cloud, DelaunayOptions{seed}); });
    data->layout_params = stage("layout", [&] { return overrides.resolve(mesh); });
    data->layout = stage("layout", [&] { return layout_run(std::move(mesh), data->layout_params); });
    return data;
}

std::shared_ptr<const PreparedData> relayout(const PreparedData& base, const LayoutOverrides& overrides)
{
    auto data = std::make_shared<PreparedData>();
    data->raw = base.raw;
    data->normalized = base.normalized;
    data->projection = base.projection;
    TriMesh mesh = base.layout.mesh;
    mesh.current_pos = mesh.original_pos;
    data->layout_params = overrides.resolve(mesh);
    data->layout = layout_run(std::move(mesh), data->layout_params);
    return data;
}

MlsVariant ViewRequest::resolved_variant() const { return variant.value_or(MlsVariant::Affine); }

double ViewRequest::resolved_alpha() const { return alpha.value_or(default_alpha(resolved_variant())); }

void ViewRequest::validate() const
{
    if (width == 0 || height == 0 || width > kMaxResolution || height > kMaxResolution)
        throw Error(ErrorCode::InvalidParameter, "resolution must be between 1x1 and 8192x8192");
    if (!(relax >= 0.0 && relax <= 1.0))
        throw Error(ErrorCode::TOutOfRange, "relax must lie in [0, 1]");
    MlsParams params = MlsParams::defaults_for(resolved_variant());
    params.alpha = resolved_alpha();
    params.validate();
    if (spacing && !(*spacing > 0.0 && std::isfinite(*spacing)))
        throw Error(ErrorCode::InvalidParameter, "spacing must be > 0");
    if (!(line_width_px > 0.0))
        throw Error(ErrorCode::InvalidParameter, "line width must be > 0");
    if (!(point_radius >= 0.0))
        throw Error(ErrorCode::InvalidParameter, "point radius must be >= 0");
    if (mode == RenderMode::Texture && !texture)
        throw Error(ErrorCode::InvalidParameter, "texture mode needs a texture image");
    if (dim.empty())
        throw Error(ErrorCode::InvalidParameter, "a dimension must be selected");
}

namespace {

std::string available_columns(const Dataset& ds)
{
    std::string list;
    for (const auto& name : ds.column_names())
        list += (list.empty() ? "" : ", ") + name;
    return list;
}

std::size_t column_or_throw(const Dataset& ds, const std::string& name)
{
    if (const auto idx = ds.find_column(name))
        return *idx;
    throw Error(ErrorCode::UnknownDimension,
                "unknown dimension '" + name + "'; available columns: " + available_columns(ds) + " (or 'projection')");
}

} // namespace

TargetAssignment resolve_targets(const PreparedData& data, const std::string& dim)
{
    if (dim == "projection")
        return projection_targets(data.layout.mesh.original_pos);
    if (const auto colon = dim.find(':'); colon != std::string::npos)
        return pair_targets(data.raw, column_or_throw(data.raw, dim.substr(0, colon)),
                            column_or_throw(data.raw, dim.substr(colon + 1)));
    return single_targets(data.raw, column_or_throw(data.raw, dim));
}

CoordinateField compute_view_field(const PreparedData& data, const ViewRequest& request)
{
    request.validate();
    const TargetAssignment targets = resolve_targets(data, request.dim);
    if (request.resolved_variant() == MlsVariant::Rigid && targets.mode == TargetMode::Single)
        throw Error(ErrorCode::InvalidParameter,
                    "rigid MLS is undefined for single-dimension targets; choose mean, affine or linear");
    if (request.mode == RenderMode::Gradient && targets.components() < 2)
        throw Error(ErrorCode::InvalidParameter, "gradient mode needs two dimensions ('a:b') or 'projection'");

    const InterpolatedLayout positions = interpolate_layout(data.layout, request.relax);
    MlsParams params = MlsParams::defaults_for(request.resolved_variant());
    params.alpha = request.resolved_alpha();
    return compute_field(data.layout.mesh, positions.positions, targets, params, request.width, request.height);
}

RenderedImage render_view(const PreparedData& data, const CoordinateField& field, const ViewRequest& request)
{
    const TargetAssignment targets = resolve_targets(data, request.dim);
    RenderSpec spec;
    spec.mode = request.mode;
    spec.line_width_px = request.line_width_px;
    spec.points.radius = request.point_radius;
    spec.texture = request.texture;

    std::vector<double> us, vs;
    for (const Vec2& t : targets.targets) {
        us.push_back(t.x);
        vs.push_back(t.y);
    }
    if (request.spacing) {
        spec.spacing = *request.spacing;
    } else if (targets.mode == TargetMode::Projection) {
        const double su = auto_spacing(us), sv = auto_spacing(vs);
        spec.spacing = std::max(su, sv);
    } else {
        spec.spacing = auto_spacing(us);
        if (targets.mode == TargetMode::Pair)
            spec.spacing_v = auto_spacing(vs);
    }

    RenderedImage image = render(field, spec);
    if (spec.points.radius > 0.0)
        image = overlay_points(std::move(image), field.source_positions, field.viewport, spec);
    if (request.legend)
        image = add_legend(image, field, spec);
    return image;
}

void PipelineConfig::validate() const
{
    if (input.empty())
        throw Error(ErrorCode::InvalidParameter, "--input is required");
    if (dims.empty())
        throw Error(ErrorCode::InvalidParameter, "--dims must name at least one dimension");
    ViewRequest probe;
    probe.dim = "probe";
    probe.variant = variant;
    probe.alpha = alpha;
    probe.relax = relax;
    probe.mode = mode;
    probe.spacing = spacing;
    probe.width = width;
    probe.height = height;
    probe.line_width_px = line_width_px;
    probe.point_radius = point_radius;
    if (mode == RenderMode::Texture && !texture)
        throw Error(ErrorCode::InvalidParameter, "texture mode needs --texture");
    if (texture)
        probe.texture = std::make_shared<RenderedImage>(1, 1);
    probe.validate();
    if (layout.iterations && *layout.iterations > 1000000)
        throw Error(ErrorCode::InvalidParameter, "--iterations is unreasonably large");
    if (layout.decay && !(*layout.decay > 0.0 && *layout.decay < 1.0))
        throw Error(ErrorCode::InvalidParameter, "--lambda must lie in (0, 1)");
    if (layout.initial_temp && !(*layout.initial_temp > 0.0))
        throw Error(ErrorCode::InvalidParameter, "--temp must be > 0");
    if (layout.edge_length && !(*layout.edge_length > 0.0))
        throw Error(ErrorCode::InvalidParameter, "--edge-length must be > 0");
    if (layout.repulsion && !(*layout.repulsion > 0.0))
        throw Error(ErrorCode::InvalidParameter, "--repulsion must be > 0");
    if (layout.bh_theta && !(*layout.bh_theta > 0.0))
        throw Error(ErrorCode::InvalidParameter, "--bh-theta must be > 0");
}

bool is_usage_error(const Error& error)
{
    switch (error.code()) {
    case ErrorCode::InvalidParameter:
    case ErrorCode::UnknownDimension:
    case ErrorCode::TOutOfRange: return true;
    default: return false;
    }
}

std::vector<std::string> expand_dims(const Dataset& ds, const std::vector<std::string>& dims)
{
    std::vector<std::string> out;
    for (const std::string& d : dims) {
        if (d == "all") {
            for (const auto& name : ds.column_names())
                out.push_back(name);
            continue;
        }
        if (d != "projection") {
            const auto colon = d.find(':');
            column_or_throw(ds, colon == std::string::npos ? d : d.substr(0, colon));
            if (colon != std::string::npos)
                column_or_throw(ds, d.substr(colon + 1));
        }
        out.push_back(d);
    }
    return out;
}

std::filesystem::path output_path_for(const std::string& output_template, const std::string& dim, bool many)
{
    std::string label;
    for (const char c : dim)
        label += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
    std::string path = output_template;
    if (const auto pos = path.find("{dim}"); pos != std::string::npos)
        return path.replace(pos, 5, label);
    if (!many)
        return path;
    std::filesystem::path p(path);
    return p.parent_path() / (p.stem().string() + "_" + label + p.extension().string());
}

std::vector<std::filesystem::path> run_pipeline(const PipelineConfig& config)
{
    config.validate();
    Dataset raw;
    try {
        raw = load_csv(config.input, CsvOptions{config.delimiter, config.skip_non_numeric});
    } catch (const Error& e) {
        throw StageError("load", e);
    }
    const std::vector<std::string> dims = expand_dims(raw, config.dims);

    std::shared_ptr<const RenderedImage> texture;
    if (config.texture) {
        try {
            texture = std::make_shared<RenderedImage>(read_png(*config.texture));
        } catch (const Error& e) {
            throw StageError("load", e);
        }
    }

    const auto data = prepare(std::move(raw), config.layout, config.seed);

    std::vector<std::filesystem::path> written;
    for (const std::string& dim : dims) {
        ViewRequest request;
        request.dim = dim;
        request.variant = config.variant;
        request.alpha = config.alpha;
        request.relax = config.relax;
        request.mode = config.mode;
        request.spacing = config.spacing;
        request.width = config.width;
        request.height = config.height;
        request.legend = config.legend;
        request.line_width_px = config.line_width_px;
        request.point_radius = config.point_radius;
        request.texture = texture;

        CoordinateField field;
        try {
            field = compute_view_field(*data, request);
        } catch (const Error& e) {
            if (is_usage_error(e))
                throw;
            throw StageError("field", e);
        }
        RenderedImage image;
        try {
            image = render_view(*data, field, request);
        } catch (const Error& e) {
            if (is_usage_error(e))
                throw;
            throw StageError("render", e);
        }
        const auto path = output_path_for(config.output, dim, dims.size() > 1);
        try {
            if (path.has_parent_path())
                std::filesystem::create_directories(path.parent_path());
            write_png(path, image);
        } catch (const Error& e) {
            throw StageError("write", e);
        } catch (const std::filesystem::filesystem_error& e) {
            throw StageError("write", Error(ErrorCode::IoError, e.what()));
        }
        written.push_back(path);
    }
    return written;
}

} // namespace mdcontour
