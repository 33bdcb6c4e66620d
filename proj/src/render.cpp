#include "mdcontour/render.hpp"

#include "mdcontour/error.hpp"
#include "mdcontour/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mdcontour {

std::string_view to_string(RenderMode mode)
{
    switch (mode) {
    case RenderMode::Contour: return "contour";
    case RenderMode::Discrete: return "discrete";
    case RenderMode::DiscreteContour: return "discrete+contour";
    case RenderMode::Adaptive: return "adaptive";
    case RenderMode::Gradient: return "gradient";
    case RenderMode::Texture: return "texture";
    }
    return "contour";
}

std::optional<RenderMode> parse_mode(std::string_view name)
{
    for (const RenderMode m : {RenderMode::Contour, RenderMode::Discrete, RenderMode::DiscreteContour,
                               RenderMode::Adaptive, RenderMode::Gradient, RenderMode::Texture})
        if (to_string(m) == name)
            return m;
    return std::nullopt;
}

std::vector<Rgba> default_colormap()
{
    // viridis sampled at 11 evenly spaced stops
    return {{68, 1, 84, 255},    {72, 36, 117, 255},  {65, 68, 135, 255},  {53, 95, 141, 255},
            {42, 120, 142, 255}, {33, 145, 140, 255}, {34, 168, 132, 255}, {68, 191, 112, 255},
            {122, 209, 81, 255}, {189, 223, 38, 255}, {253, 231, 37, 255}};
}

std::array<Rgba, 4> default_corners()
{
    return {Rgba{40, 80, 220, 255}, Rgba{240, 110, 200, 255}, Rgba{70, 220, 230, 255}, Rgba{255, 255, 255, 255}};
}

void RenderSpec::validate(int components) const
{
    if (!(spacing > 0.0) || !std::isfinite(spacing) || !(spacing_second() > 0.0) || !std::isfinite(spacing_second()))
        throw Error(ErrorCode::InvalidParameter, "contour spacing must be > 0");
    if (!(line_width_px > 0.0))
        throw Error(ErrorCode::InvalidParameter, "line width must be > 0");
    if (colormap.empty())
        throw Error(ErrorCode::InvalidParameter, "colormap must not be empty");
    if (mode == RenderMode::Gradient && components < 2)
        throw Error(ErrorCode::InvalidParameter, "gradient mode needs a two-component target");
    if (mode == RenderMode::Texture && (!texture || texture->width == 0 || texture->height == 0))
        throw Error(ErrorCode::InvalidParameter, "texture mode needs a texture image");
}

GradientMaps gradient_magnitudes(const CoordinateField& field)
{
    GradientMaps maps;
    const std::size_t n = field.coords.size();
    maps.u.resize(n);
    if (field.components > 1)
        maps.v.resize(n);
    parallel_for(field.height, [&](std::size_t y0, std::size_t y1) {
        for (std::size_t y = y0; y < y1; ++y)
            for (std::uint32_t x = 0; x < field.width; ++x) {
                const Mat2 j = field_gradient(field, x, static_cast<std::uint32_t>(y));
                const std::size_t i = y * field.width + x;
                maps.u[i] = std::hypot(j.a, j.b);
                if (!maps.v.empty())
                    maps.v[i] = std::hypot(j.c, j.d);
            }
    });
    return maps;
}

double isoline_pixel_distance(double value, double gradient, double spacing)
{
    if (!(gradient > 1e-300) || !std::isfinite(value))
        return std::numeric_limits<double>::infinity();
    const double level = spacing * std::round(value / spacing);
    return std::abs(value - level) / gradient;
}

double line_coverage(double pixel_distance, double line_width_px)
{
    return std::clamp(0.5 * line_width_px + 0.5 - pixel_distance, 0.0, 1.0);
}

namespace {

using PixelFn = std::function<Rgba(std::size_t index, std::uint32_t x, std::uint32_t y)>;

RenderedImage map_pixels(const CoordinateField& field, const PixelFn& fn)
{
    RenderedImage image(field.width, field.height);
    parallel_for(field.height, [&](std::size_t y0, std::size_t y1) {
        for (std::size_t y = y0; y < y1; ++y)
            for (std::uint32_t x = 0; x < field.width; ++x) {
                const std::size_t i = y * field.width + x;
                image.pixels[i] = fn(i, x, static_cast<std::uint32_t>(y));
            }
    });
    return image;
}

// Coverage of the isolines of every component at pixel i.
double contour_alpha(const CoordinateField& field, const GradientMaps& g, const RenderSpec& spec, std::size_t i)
{
    double alpha = line_coverage(isoline_pixel_distance(field.coords[i].x, g.u[i], spec.spacing), spec.line_width_px);
    if (field.components > 1)
        alpha = std::max(alpha, line_coverage(isoline_pixel_distance(field.coords[i].y, g.v[i], spec.spacing_second()),
                                              spec.line_width_px));
    return alpha;
}

class BandPalette {
public:
    BandPalette(const CoordinateField& field, const RenderSpec& spec) : spec_(spec)
    {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const Vec2& c : field.coords) {
            lo = std::min(lo, c.x);
            hi = std::max(hi, c.x);
        }
        if (!std::isfinite(lo)) {
            lo = hi = 0.0;
        }
        lo_ = band(lo);
        hi_ = band(hi);
    }

    double band(double value) const { return std::floor(value / spec_.spacing); }

    Rgba color(double value) const
    {
        const auto& cmap = spec_.colormap;
        const std::size_t k = cmap.size();
        if (hi_ <= lo_)
            return cmap[k / 2];
        const double b = std::clamp(band(value), lo_, hi_);
        const auto idx = static_cast<std::size_t>(std::lround((b - lo_) * static_cast<double>(k - 1) / (hi_ - lo_)));
        return cmap[std::min(idx, k - 1)];
    }

private:
    const RenderSpec& spec_;
    double lo_ = 0.0, hi_ = 0.0;
};

double frac(double x) { return x - std::floor(x); }

} // namespace

std::vector<std::uint8_t> contour_mask(const CoordinateField& field, const RenderSpec& spec)
{
    const GradientMaps g = gradient_magnitudes(field);
    const double half = 0.5 * spec.line_width_px;
    std::vector<std::uint8_t> mask(field.coords.size(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        bool on = isoline_pixel_distance(field.coords[i].x, g.u[i], spec.spacing) < half;
        if (field.components > 1)
            on = on || isoline_pixel_distance(field.coords[i].y, g.v[i], spec.spacing_second()) < half;
        mask[i] = on ? 1 : 0;
    }
    return mask;
}

double adaptive_opacity(double pixel_gap, double target_px)
{
    const double lo = 0.25 * target_px;
    if (!(pixel_gap > lo))
        return 0.0;
    if (pixel_gap >= target_px)
        return 1.0;
    const double x = (pixel_gap - lo) / (target_px - lo);
    return x * x * (3.0 - 2.0 * x);
}

std::vector<double> adaptive_family_opacity(const CoordinateField& field, const RenderSpec& spec, int octave)
{
    const GradientMaps g = gradient_magnitudes(field);
    const double family_spacing = std::ldexp(spec.spacing, octave);
    std::vector<double> out(field.coords.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double gap = g.u[i] > 0.0 ? family_spacing / g.u[i] : std::numeric_limits<double>::infinity();
        out[i] = std::isfinite(gap) ? adaptive_opacity(gap, spec.adaptive_target_px) : 0.0;
    }
    return out;
}

Rgba gradient_color(double fu, double fv, const std::array<Rgba, 4>& corners)
{
    const double w00 = (1 - fu) * (1 - fv), w10 = fu * (1 - fv), w01 = (1 - fu) * fv, w11 = fu * fv;
    auto mix = [&](auto channel) {
        const double v = w00 * channel(corners[0]) + w10 * channel(corners[1]) + w01 * channel(corners[2])
                         + w11 * channel(corners[3]);
        return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    };
    return {mix([](const Rgba& c) { return double(c.r); }), mix([](const Rgba& c) { return double(c.g); }),
            mix([](const Rgba& c) { return double(c.b); }), mix([](const Rgba& c) { return double(c.a); })};
}

Rgba sample_texture(const RenderedImage& texture, double s, double t)
{
    const auto w = static_cast<std::int64_t>(texture.width);
    const auto h = static_cast<std::int64_t>(texture.height);
    const double tx = frac(s) * static_cast<double>(w) - 0.5;
    const double ty = (1.0 - frac(t)) * static_cast<double>(h) - 0.5;
    const double fx = std::floor(tx), fy = std::floor(ty);
    const double ax = tx - fx, ay = ty - fy;
    auto wrap = [](std::int64_t i, std::int64_t n) { return static_cast<std::uint32_t>(((i % n) + n) % n); };
    const auto x0 = static_cast<std::int64_t>(fx), y0 = static_cast<std::int64_t>(fy);
    const Rgba& c00 = texture.at(wrap(x0, w), wrap(y0, h));
    const Rgba& c10 = texture.at(wrap(x0 + 1, w), wrap(y0, h));
    const Rgba& c01 = texture.at(wrap(x0, w), wrap(y0 + 1, h));
    const Rgba& c11 = texture.at(wrap(x0 + 1, w), wrap(y0 + 1, h));
    auto mix = [&](std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
        const double v = (1 - ax) * (1 - ay) * a + ax * (1 - ay) * b + (1 - ax) * ay * c + ax * ay * d;
        return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    };
    return {mix(c00.r, c10.r, c01.r, c11.r), mix(c00.g, c10.g, c01.g, c11.g), mix(c00.b, c10.b, c01.b, c11.b),
            mix(c00.a, c10.a, c01.a, c11.a)};
}

RenderedImage render_contours(const CoordinateField& field, const RenderSpec& spec)
{
    const GradientMaps g = gradient_magnitudes(field);
    return map_pixels(field, [&](std::size_t i, std::uint32_t, std::uint32_t) {
        return blend(spec.background, spec.line_color, contour_alpha(field, g, spec, i));
    });
}

RenderedImage render_discrete(const CoordinateField& field, const RenderSpec& spec)
{
    const BandPalette palette(field, spec);
    const bool with_lines = spec.mode == RenderMode::DiscreteContour;
    const GradientMaps g = with_lines ? gradient_magnitudes(field) : GradientMaps{};
    return map_pixels(field, [&](std::size_t i, std::uint32_t, std::uint32_t) {
        const Rgba base = palette.color(field.coords[i].x);
        return with_lines ? blend(base, spec.line_color, contour_alpha(field, g, spec, i)) : base;
    });
}

RenderedImage render_adaptive(const CoordinateField& field, const RenderSpec& spec)
{
    const GradientMaps g = gradient_magnitudes(field);
    return map_pixels(field, [&](std::size_t i, std::uint32_t, std::uint32_t) {
        double alpha = 0.0;
        for (int k = kAdaptiveMinOctave; k <= kAdaptiveMaxOctave; ++k) {
            const double su = std::ldexp(spec.spacing, k);
            if (g.u[i] > 0.0) {
                const double opacity = adaptive_opacity(su / g.u[i], spec.adaptive_target_px);
                if (opacity > 0.0)
                    alpha = std::max(alpha, opacity * line_coverage(isoline_pixel_distance(field.coords[i].x, g.u[i], su),
                                                                    spec.line_width_px));
            }
            if (field.components > 1 && g.v[i] > 0.0) {
                const double sv = std::ldexp(spec.spacing_second(), k);
                const double opacity = adaptive_opacity(sv / g.v[i], spec.adaptive_target_px);
                if (opacity > 0.0)
                    alpha = std::max(alpha, opacity * line_coverage(isoline_pixel_distance(field.coords[i].y, g.v[i], sv),
                                                                    spec.line_width_px));
            }
        }
        return blend(spec.background, spec.line_color, alpha);
    });
}

RenderedImage render_gradient(const CoordinateField& field, const RenderSpec& spec)
{
    spec.validate(field.components);
    const GradientMaps g = gradient_magnitudes(field);
    return map_pixels(field, [&](std::size_t i, std::uint32_t, std::uint32_t) {
        const Vec2& c = field.coords[i];
        const Rgba base = gradient_color(frac(c.x / spec.spacing), frac(c.y / spec.spacing_second()), spec.corners);
        return blend(base, spec.line_color, contour_alpha(field, g, spec, i));
    });
}

RenderedImage render_texture(const CoordinateField& field, const RenderSpec& spec)
{
    spec.validate(field.components);
    const RenderedImage& tex = *spec.texture;
    return map_pixels(field, [&](std::size_t i, std::uint32_t, std::uint32_t) {
        const Vec2& c = field.coords[i];
        return sample_texture(tex, c.x / spec.spacing, c.y / spec.spacing_second());
    });
}

RenderedImage render(const CoordinateField& field, const RenderSpec& spec)
{
    spec.validate(field.components);
    switch (spec.mode) {
    case RenderMode::Contour: return render_contours(field, spec);
    case RenderMode::Discrete:
    case RenderMode::DiscreteContour: return render_discrete(field, spec);
    case RenderMode::Adaptive: return render_adaptive(field, spec);
    case RenderMode::Gradient: return render_gradient(field, spec);
    case RenderMode::Texture: return render_texture(field, spec);
    }
    return render_contours(field, spec);
}

RenderedImage overlay_points(RenderedImage image, std::span<const Vec2> positions, const Viewport& viewport,
                             const RenderSpec& spec)
{
    const double r = spec.points.radius;
    for (const Vec2& p : positions) {
        const Vec2 c = viewport.to_pixel(p);
        if (!(c.x >= 0.0 && c.x <= image.width && c.y >= 0.0 && c.y <= image.height))
            continue;
        const auto x0 = static_cast<std::int64_t>(std::floor(c.x - r - 1.0));
        const auto x1 = static_cast<std::int64_t>(std::ceil(c.x + r + 1.0));
        const auto y0 = static_cast<std::int64_t>(std::floor(c.y - r - 1.0));
        const auto y1 = static_cast<std::int64_t>(std::ceil(c.y + r + 1.0));
        for (std::int64_t y = std::max<std::int64_t>(0, y0); y <= std::min<std::int64_t>(image.height - 1, y1); ++y)
            for (std::int64_t x = std::max<std::int64_t>(0, x0); x <= std::min<std::int64_t>(image.width - 1, x1); ++x) {
                const double d = std::hypot(x + 0.5 - c.x, y + 0.5 - c.y);
                const double coverage = std::clamp(r + 0.5 - d, 0.0, 1.0);
                if (coverage > 0.0) {
                    Rgba& px = image.at(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y));
                    px = blend(px, spec.points.color, coverage);
                }
            }
    }
    return image;
}

RenderedImage add_legend(const RenderedImage& image, const CoordinateField& field, const RenderSpec& spec,
                         std::uint32_t strip_width)
{
    RenderedImage out(image.width + strip_width, image.height, spec.background);
    for (std::uint32_t y = 0; y < image.height; ++y)
        for (std::uint32_t x = 0; x < image.width; ++x)
            out.at(x, y) = image.at(x, y);

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const Vec2& c : field.coords) {
        lo = std::min(lo, c.x);
        hi = std::max(hi, c.x);
    }
    if (!std::isfinite(lo) || !(hi > lo))
        return out;

    const BandPalette palette(field, spec);
    const double per_row = (hi - lo) / image.height;
    const std::uint32_t gap = std::min<std::uint32_t>(8, strip_width / 4);
    for (std::uint32_t y = 0; y < image.height; ++y) {
        const double value = hi - (y + 0.5) * per_row;
        Rgba color = spec.background;
        if (spec.mode == RenderMode::Discrete || spec.mode == RenderMode::DiscreteContour)
            color = palette.color(value);
        else if (spec.mode == RenderMode::Gradient)
            color = gradient_color(frac(value / spec.spacing), 0.0, spec.corners);
        const bool tick = isoline_pixel_distance(value, per_row, spec.spacing) < 0.75;
        for (std::uint32_t x = image.width + gap; x < out.width; ++x)
            out.at(x, y) = tick && x < image.width + strip_width / 2 ? spec.line_color : color;
    }
    return out;
}

} // namespace mdcontour
