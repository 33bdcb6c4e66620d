#pragma once

#include "mdcontour/vec2.hpp"

namespace mdcontour {

// Exact sign of cross(b - a, c - a): +1 counter-clockwise, -1 clockwise, 0 collinear.
// Floating-point evaluation with a forward error bound; exact rational arithmetic
// when the bound cannot certify the sign.
int orient2d(const Vec2& a, const Vec2& b, const Vec2& c);

// Exact sign of the in-circle determinant for counter-clockwise (a, b, c):
// +1 when d lies strictly inside the circumcircle, -1 outside, 0 on it.
int incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

// cross(b - a, c - a) / 2. Positive iff (a, b, c) is counter-clockwise. The sign
// always agrees with orient2d even for nearly degenerate input.
double signed_area(const Vec2& a, const Vec2& b, const Vec2& c);

} // namespace mdcontour
