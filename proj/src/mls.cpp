#include "mdcontour/mls.hpp"

#include "mdcontour/error.hpp"

#include <cmath>
#include <string>

namespace mdcontour {

namespace {

// Calls fn with a weight functor of squared distance specialised for the
// common exponents.
template <typename Fn>
decltype(auto) with_weight_fn(double alpha, Fn&& fn)
{
    if (alpha == 1.0)
        return fn([](double d2) { return 1.0 / d2; });
    if (alpha == 0.5)
        return fn([](double d2) { return 1.0 / std::sqrt(d2); });
    if (alpha == 1.5)
        return fn([](double d2) { return 1.0 / (d2 * std::sqrt(d2)); });
    if (alpha == 2.0)
        return fn([](double d2) { return 1.0 / (d2 * d2); });
    return fn([alpha](double d2) { return std::pow(d2, -alpha); });
}

struct Nearest {
    std::size_t index = 0;
    double d2 = INFINITY;
};

thread_local std::vector<double> t_weights;

// Inside the snap radius the nearest control's displacement is applied as is;
// at the control itself this is exactly its target.
Vec2 snapped(const Vec2& v, const Controls& c, std::size_t i) { return c.target(i) + (v - c.source(i)); }

// Fills t_weights and returns the closest control.
Nearest compute_weights(const Vec2& v, const Controls& c, const MlsParams& params)
{
    const std::size_t n = c.size();
    t_weights.resize(n);
    const auto px = c.px();
    const auto py = c.py();
    Nearest nearest;
    with_weight_fn(params.alpha, [&](auto weight) {
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = px[i] - v.x;
            const double dy = py[i] - v.y;
            const double d2 = dx * dx + dy * dy;
            if (d2 < nearest.d2) {
                nearest.d2 = d2;
                nearest.index = i;
            }
            t_weights[i] = d2 > 0.0 ? weight(d2) : 0.0;
        }
    });
    return nearest;
}

struct Centroids {
    double total = 0.0;
    Vec2 p;
    Vec2 q;
};

Centroids centroids(const Controls& c)
{
    Centroids out;
    const auto px = c.px(), py = c.py(), qx = c.qx(), qy = c.qy();
    double spx = 0, spy = 0, sqx = 0, sqy = 0, sw = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double w = t_weights[i];
        sw += w;
        spx += w * px[i];
        spy += w * py[i];
        sqx += w * qx[i];
        sqy += w * qy[i];
    }
    out.total = sw;
    out.p = {spx / sw, spy / sw};
    out.q = {sqx / sw, sqy / sw};
    return out;
}

Vec2 mean_from_weights(const Vec2& v, const Controls& c)
{
    const auto px = c.px(), py = c.py(), qx = c.qx(), qy = c.qy();
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double w = t_weights[i];
        sw += w;
        sx += w * (qx[i] - px[i]);
        sy += w * (qy[i] - py[i]);
    }
    return {v.x + sx / sw, v.y + sy / sw};
}

} // namespace

std::string_view to_string(MlsVariant variant)
{
    switch (variant) {
    case MlsVariant::Linear: return "linear";
    case MlsVariant::Mean: return "mean";
    case MlsVariant::Affine: return "affine";
    case MlsVariant::Rigid: return "rigid";
    }
    return "mean";
}

std::optional<MlsVariant> parse_variant(std::string_view name)
{
    for (const MlsVariant v : {MlsVariant::Linear, MlsVariant::Mean, MlsVariant::Affine, MlsVariant::Rigid})
        if (to_string(v) == name)
            return v;
    return std::nullopt;
}

double default_alpha(MlsVariant variant) { return variant == MlsVariant::Affine ? 1.5 : 1.0; }

MlsParams MlsParams::defaults_for(MlsVariant variant)
{
    MlsParams p;
    p.variant = variant;
    p.alpha = default_alpha(variant);
    return p;
}

void MlsParams::validate() const
{
    if (!(alpha > kAlphaMin && alpha <= kAlphaMax))
        throw Error(ErrorCode::InvalidParameter, "alpha must lie in (0.1, 4], got " + std::to_string(alpha));
    if (!(epsilon_dist > 0.0))
        throw Error(ErrorCode::InvalidParameter, "epsilon distance must be > 0");
    if (!(reg_eps > 0.0))
        throw Error(ErrorCode::InvalidParameter, "regulariser must be > 0");
}

Controls::Controls(std::span<const Vec2> sources, std::span<const Vec2> targets)
{
    if (sources.size() != targets.size())
        throw Error(ErrorCode::InvalidParameter, "control sources and targets differ in length");
    const std::size_t n = sources.size();
    px_.resize(n);
    py_.resize(n);
    qx_.resize(n);
    qy_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        px_[i] = sources[i].x;
        py_[i] = sources[i].y;
        qx_[i] = targets[i].x;
        qy_[i] = targets[i].y;
    }
}

MlsWeight mls_weight(const Vec2& v, const Vec2& p, double alpha, double epsilon_dist)
{
    const double d2 = norm2(p - v);
    if (d2 < epsilon_dist)
        return {INFINITY, true};
    return {std::pow(d2, -alpha), false};
}

Vec2 mean_mls(const Vec2& v, const Controls& controls, const MlsParams& params)
{
    const Nearest nearest = compute_weights(v, controls, params);
    if (nearest.d2 < params.epsilon_dist)
        return snapped(v, controls, nearest.index);
    return mean_from_weights(v, controls);
}

Vec2 affine_mls(const Vec2& v, const Controls& controls, const MlsParams& params)
{
    const Nearest nearest = compute_weights(v, controls, params);
    if (nearest.d2 < params.epsilon_dist)
        return snapped(v, controls, nearest.index);

    const Centroids star = centroids(controls);
    const auto px = controls.px(), py = controls.py(), qx = controls.qx(), qy = controls.qy();
    double a00 = 0, a01 = 0, a11 = 0;
    double b00 = 0, b01 = 0, b10 = 0, b11 = 0;
    for (std::size_t i = 0; i < controls.size(); ++i) {
        const double w = t_weights[i];
        const double hx = px[i] - star.p.x, hy = py[i] - star.p.y;
        const double gx = qx[i] - star.q.x, gy = qy[i] - star.q.y;
        a00 += w * hx * hx;
        a01 += w * hx * hy;
        a11 += w * hy * hy;
        b00 += w * hx * gx;
        b01 += w * hx * gy;
        b10 += w * hy * gx;
        b11 += w * hy * gy;
    }
    const double trace = a00 + a11;
    if (!(trace > 0.0))
        return mean_from_weights(v, controls);

    const double reg = params.reg_eps * trace;
    const double m00 = a00 + reg, m11 = a11 + reg, m01 = a01;
    const double det = m00 * m11 - m01 * m01;
    // inverse of the symmetric moment matrix
    const double i00 = m11 / det, i01 = -m01 / det, i11 = m00 / det;
    const Mat2 map{i00 * b00 + i01 * b10, i00 * b01 + i01 * b11,
                   i01 * b00 + i11 * b10, i01 * b01 + i11 * b11};
    return row_mul(v - star.p, map) + star.q;
}

std::optional<Vec2> rigid_mls_strict(const Vec2& v, const Controls& controls, const MlsParams& params)
{
    const Nearest nearest = compute_weights(v, controls, params);
    if (nearest.d2 < params.epsilon_dist)
        return snapped(v, controls, nearest.index);

    const Centroids star = centroids(controls);
    const Vec2 d = v - star.p;
    const double dlen = norm(d);
    if (dlen == 0.0)
        return star.q;

    // g = sum w_i (q^_i . p^_i, -cross(p^_i, q^_i)); f'(v) = (g . d, g . (-d_perp)).
    const auto px = controls.px(), py = controls.py(), qx = controls.qx(), qy = controls.qy();
    double gx = 0, gy = 0, scale = 0;
    for (std::size_t i = 0; i < controls.size(); ++i) {
        const double w = t_weights[i];
        const double hx = px[i] - star.p.x, hy = py[i] - star.p.y;
        const double ux = qx[i] - star.q.x, uy = qy[i] - star.q.y;
        gx += w * (ux * hx + uy * hy);
        gy += w * (ux * hy - uy * hx);
        scale += w * std::sqrt((hx * hx + hy * hy) * (ux * ux + uy * uy));
    }
    const Vec2 f{gx * d.x + gy * d.y, gx * d.y - gy * d.x};
    const double flen = norm(f);
    if (!(flen > 1e-12 * scale * dlen) || !std::isfinite(flen))
        return std::nullopt;
    return f * (dlen / flen) + star.q;
}

Vec2 rigid_mls(const Vec2& v, const Controls& controls, const MlsParams& params)
{
    if (auto r = rigid_mls_strict(v, controls, params))
        return *r;
    return mean_from_weights(v, controls);
}

Vec2 evaluate_mls(const Vec2& v, const Controls& controls, const MlsParams& params)
{
    switch (params.variant) {
    case MlsVariant::Affine: return affine_mls(v, controls, params);
    case MlsVariant::Rigid: return rigid_mls(v, controls, params);
    case MlsVariant::Mean:
    case MlsVariant::Linear: break;
    }
    return mean_mls(v, controls, params);
}

} // namespace mdcontour
