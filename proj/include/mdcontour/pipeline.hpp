#pragma once

#include "mdcontour/dataset.hpp"
#include "mdcontour/error.hpp"
#include "mdcontour/field.hpp"
#include "mdcontour/layout.hpp"
#include "mdcontour/mesh.hpp"
#include "mdcontour/mls.hpp"
#include "mdcontour/projection.hpp"
#include "mdcontour/render.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mdcontour {

inline constexpr std::uint32_t kMaxResolution = 8192;

// Returns a 1/2/5 x 10^k interval giving 8-15 intervals across the value range
// (the count closest to that band when none lands inside it). 1 for a zero range.
double auto_spacing(std::span<const double> values);

// Layout settings a user may override; unset fields use LayoutParams::defaults_for.
struct LayoutOverrides {
    std::optional<std::uint32_t> iterations;
    std::optional<double> decay;
    std::optional<double> initial_temp;
    std::optional<double> edge_length;
    std::optional<double> repulsion;
    std::optional<double> bh_theta;

    LayoutParams resolve(const TriMesh& mesh) const;
};

// Everything up to and including the relaxed layout. Immutable once built.
struct PreparedData {
    Dataset raw;
    Dataset normalized;
    Projection projection;
    LayoutParams layout_params;
    LayoutState layout;
};

std::shared_ptr<const PreparedData> prepare(Dataset raw, const LayoutOverrides& overrides, std::uint64_t seed);

// Re-runs only the layout on an existing triangulation.
std::shared_ptr<const PreparedData> relayout(const PreparedData& base, const LayoutOverrides& overrides);

// One rendered view of a prepared dataset.
struct ViewRequest {
    std::string dim;                  // column name, "projection", or "a:b"
    std::optional<MlsVariant> variant; // default: affine
    std::optional<double> alpha;      // default: per variant
    double relax = 1.0;
    RenderMode mode = RenderMode::Contour;
    std::optional<double> spacing;    // default: auto
    std::uint32_t width = 600;
    std::uint32_t height = 600;
    bool legend = false;
    double line_width_px = 1.5;
    double point_radius = 3.0;
    std::shared_ptr<const RenderedImage> texture;

    MlsVariant resolved_variant() const;
    double resolved_alpha() const;

    // Throws Error{InvalidParameter} / Error{TOutOfRange} for bad values.
    void validate() const;
};

// Throws Error{UnknownDimension} listing the available columns.
TargetAssignment resolve_targets(const PreparedData& data, const std::string& dim);

CoordinateField compute_view_field(const PreparedData& data, const ViewRequest& request);
RenderedImage render_view(const PreparedData& data, const CoordinateField& field, const ViewRequest& request);

struct PipelineConfig {
    std::filesystem::path input;
    std::vector<std::string> dims{"all"};
    std::optional<MlsVariant> variant;
    std::optional<double> alpha;
    double relax = 1.0;
    RenderMode mode = RenderMode::Contour;
    std::optional<double> spacing;
    std::uint32_t width = 600;
    std::uint32_t height = 600;
    LayoutOverrides layout;
    std::uint64_t seed = 0;
    std::string output = "mdcontour_{dim}.png";
    bool legend = false;
    std::optional<std::filesystem::path> texture;
    char delimiter = ',';
    bool skip_non_numeric = true;
    double line_width_px = 1.5;
    double point_radius = 3.0;

    void validate() const;
};

// Usage problems (bad flag values, unknown dimension): the CLI exits with 2.
bool is_usage_error(const Error& error);

// A failure inside one pipeline stage.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause)
        : Error(cause.code(), stage + ": " + cause.what()), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

// Expands dims ("all" -> every column) and checks every name exists.
std::vector<std::string> expand_dims(const Dataset& ds, const std::vector<std::string>& dims);

std::filesystem::path output_path_for(const std::string& output_template, const std::string& dim, bool many);

// load -> normalize -> project -> triangulate -> layout -> interpolate -> per
// dimension: field -> render -> overlay -> PNG. Returns the written paths.
std::vector<std::filesystem::path> run_pipeline(const PipelineConfig& config);

} // namespace mdcontour
