#pragma once

#include "mdcontour/vec2.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mdcontour {

enum class MlsVariant { Linear, Mean, Affine, Rigid };

std::string_view to_string(MlsVariant variant);
std::optional<MlsVariant> parse_variant(std::string_view name);

// Default exponent per variant: mean 1.0, rigid 1.0, affine 1.5.
double default_alpha(MlsVariant variant);

inline constexpr double kAlphaMin = 0.1;  // exclusive
inline constexpr double kAlphaMax = 4.0;  // inclusive
inline constexpr double kAlphaSliderMin = 0.25;
inline constexpr double kAlphaSliderMax = 3.0;

struct MlsParams {
    double alpha = 1.0;
    MlsVariant variant = MlsVariant::Mean;
    // Squared distance under which a sample snaps to the control's target.
    // compute_field replaces it with (0.25 pixel)^2.
    double epsilon_dist = 1e-20;
    // Regulariser added to the affine moment matrix, relative to its trace.
    double reg_eps = 1e-9;

    static MlsParams defaults_for(MlsVariant variant);
    // Throws Error{InvalidParameter} when alpha is outside (0.1, 4].
    void validate() const;
};

// Control points p_i (where the data sits on screen) paired with their targets q_i.
class Controls {
public:
    Controls() = default;
    Controls(std::span<const Vec2> sources, std::span<const Vec2> targets);

    std::size_t size() const noexcept { return px_.size(); }
    Vec2 source(std::size_t i) const { return {px_[i], py_[i]}; }
    Vec2 target(std::size_t i) const { return {qx_[i], qy_[i]}; }

    std::span<const double> px() const { return px_; }
    std::span<const double> py() const { return py_; }
    std::span<const double> qx() const { return qx_; }
    std::span<const double> qy() const { return qy_; }

private:
    std::vector<double> px_, py_, qx_, qy_;
};

struct MlsWeight {
    double value = 0.0;
    bool at_control = false; // |p - v|^2 fell below epsilon_dist; weight is unbounded
};

// 1 / |p - v|^(2 alpha).
MlsWeight mls_weight(const Vec2& v, const Vec2& p, double alpha, double epsilon_dist);

// v + sum w_i (q_i - p_i) / sum w_i.
Vec2 mean_mls(const Vec2& v, const Controls& controls, const MlsParams& params);

// (v - p*) M + q*, M the weighted least-squares affine map between centred
// controls. Falls back to mean_mls when every centred offset vanishes.
Vec2 affine_mls(const Vec2& v, const Controls& controls, const MlsParams& params);

// Rotation + translation fit. Returns nullopt when the rotation is undefined.
std::optional<Vec2> rigid_mls_strict(const Vec2& v, const Controls& controls, const MlsParams& params);

// rigid_mls_strict, falling back to mean_mls where the rotation is undefined.
Vec2 rigid_mls(const Vec2& v, const Controls& controls, const MlsParams& params);

Vec2 evaluate_mls(const Vec2& v, const Controls& controls, const MlsParams& params);

} // namespace mdcontour
