#pragma once

#include "mdcontour/field.hpp"
#include "mdcontour/image.hpp"

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mdcontour {

enum class RenderMode { Contour, Discrete, DiscreteContour, Adaptive, Gradient, Texture };

std::string_view to_string(RenderMode mode);
std::optional<RenderMode> parse_mode(std::string_view name);

struct PointStyle {
    double radius = 3.0;
    Rgba color{20, 20, 20, 255};
};

// 11-step sequential ramp.
std::vector<Rgba> default_colormap();
// Corner colours (u, v): (0,0) blue, (1,0) pink, (0,1) cyan, (1,1) white.
std::array<Rgba, 4> default_corners();

struct RenderSpec {
    RenderMode mode = RenderMode::Contour;
    double spacing = 1.0;                 // contour interval of the first component
    std::optional<double> spacing_v;      // second component; defaults to spacing
    double line_width_px = 1.5;
    Rgba line_color{40, 40, 40, 255};
    Rgba background{255, 255, 255, 255};
    std::vector<Rgba> colormap = default_colormap();
    std::array<Rgba, 4> corners = default_corners(); // c00, c10, c01, c11
    std::shared_ptr<const RenderedImage> texture;
    PointStyle points;
    double adaptive_target_px = 24.0;

    double spacing_second() const { return spacing_v.value_or(spacing); }

    // Throws Error{InvalidParameter}: non-positive spacing or width, gradient
    // mode on a one-component field, texture mode without a texture.
    void validate(int components) const;
};

// Gradient magnitude of each field component per pixel, in target units per pixel.
struct GradientMaps {
    std::vector<double> u;
    std::vector<double> v; // empty for one-component fields
};
GradientMaps gradient_magnitudes(const CoordinateField& field);

// Screen-space distance, in pixels, from a sample to the nearest isoline.
// Infinite when the gradient vanishes.
double isoline_pixel_distance(double value, double gradient, double spacing);

// Anti-aliased line coverage for a pixel at the given distance from the isoline.
double line_coverage(double pixel_distance, double line_width_px);

// Pixels whose distance to any isoline is below half the line width.
std::vector<std::uint8_t> contour_mask(const CoordinateField& field, const RenderSpec& spec);

// Opacity of an isoline family whose lines are `pixel_gap` pixels apart: zero at
// or below target/4, one at or above target, smoothstep in between.
double adaptive_opacity(double pixel_gap, double target_px);

inline constexpr int kAdaptiveMinOctave = -3;
inline constexpr int kAdaptiveMaxOctave = 3;

// Opacity of family k (spacing * 2^k) at every pixel, first component.
std::vector<double> adaptive_family_opacity(const CoordinateField& field, const RenderSpec& spec, int octave);

// Bilinear blend of the four corner colours at cell-local (fu, fv) in [0, 1].
Rgba gradient_color(double fu, double fv, const std::array<Rgba, 4>& corners);

// Bilinear texture lookup with wrap-around; (s, t) in texture-normalised units,
// t = 0 at the bottom row.
Rgba sample_texture(const RenderedImage& texture, double s, double t);

RenderedImage render_contours(const CoordinateField& field, const RenderSpec& spec);
RenderedImage render_discrete(const CoordinateField& field, const RenderSpec& spec);
RenderedImage render_adaptive(const CoordinateField& field, const RenderSpec& spec);
RenderedImage render_gradient(const CoordinateField& field, const RenderSpec& spec);
RenderedImage render_texture(const CoordinateField& field, const RenderSpec& spec);

// Dispatches on spec.mode after validating.
RenderedImage render(const CoordinateField& field, const RenderSpec& spec);

// Anti-aliased discs at each position; positions outside the viewport are skipped.
RenderedImage overlay_points(RenderedImage image, std::span<const Vec2> positions, const Viewport& viewport,
                             const RenderSpec& spec);

// Appends a vertical value-to-colour strip with tick marks at each isoline level.
RenderedImage add_legend(const RenderedImage& image, const CoordinateField& field, const RenderSpec& spec,
                         std::uint32_t strip_width = 48);

} // namespace mdcontour
