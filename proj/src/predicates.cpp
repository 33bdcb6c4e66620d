#include "mdcontour/predicates.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <limits>

namespace mdcontour {

namespace {

using Rational = boost::multiprecision::cpp_rational;

constexpr double kEps = std::numeric_limits<double>::epsilon() / 2.0; // 2^-53
constexpr double kOrientBound = (3.0 + 16.0 * kEps) * kEps;
constexpr double kIncircleBound = (10.0 + 96.0 * kEps) * kEps;

int sign_of(const Rational& r) { return r.sign(); }

Rational orient_exact(const Vec2& a, const Vec2& b, const Vec2& c)
{
    const Rational ax(a.x), ay(a.y), bx(b.x), by(b.y), cx(c.x), cy(c.y);
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
}

double orient_filtered(const Vec2& a, const Vec2& b, const Vec2& c, bool& certain)
{
    const double left = (a.x - c.x) * (b.y - c.y);
    const double right = (a.y - c.y) * (b.x - c.x);
    const double det = left - right;
    const double bound = kOrientBound * (std::abs(left) + std::abs(right));
    certain = std::abs(det) > bound;
    return det;
}

} // namespace

int orient2d(const Vec2& a, const Vec2& b, const Vec2& c)
{
    bool certain = false;
    const double det = orient_filtered(a, b, c, certain);
    if (certain)
        return det > 0.0 ? 1 : -1;
    return sign_of(orient_exact(a, b, c));
}

int incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d)
{
    const double adx = a.x - d.x, ady = a.y - d.y;
    const double bdx = b.x - d.x, bdy = b.y - d.y;
    const double cdx = c.x - d.x, cdy = c.y - d.y;

    const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
    const double cdxady = cdx * ady, adxcdy = adx * cdy;
    const double adxbdy = adx * bdy, bdxady = bdx * ady;
    const double alift = adx * adx + ady * ady;
    const double blift = bdx * bdx + bdy * bdy;
    const double clift = cdx * cdx + cdy * cdy;

    const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
    const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift
                             + (std::abs(cdxady) + std::abs(adxcdy)) * blift
                             + (std::abs(adxbdy) + std::abs(bdxady)) * clift;
    if (std::abs(det) > kIncircleBound * permanent)
        return det > 0.0 ? 1 : -1;

    const Rational dx(d.x), dy(d.y);
    const Rational eadx = Rational(a.x) - dx, eady = Rational(a.y) - dy;
    const Rational ebdx = Rational(b.x) - dx, ebdy = Rational(b.y) - dy;
    const Rational ecdx = Rational(c.x) - dx, ecdy = Rational(c.y) - dy;
    const Rational ealift = eadx * eadx + eady * eady;
    const Rational eblift = ebdx * ebdx + ebdy * ebdy;
    const Rational eclift = ecdx * ecdx + ecdy * ecdy;
    const Rational exact = ealift * (ebdx * ecdy - ecdx * ebdy) + eblift * (ecdx * eady - eadx * ecdy)
                           + eclift * (eadx * ebdy - ebdx * eady);
    return sign_of(exact);
}

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c)
{
    bool certain = false;
    const double det = orient_filtered(a, b, c, certain);
    if (certain)
        return 0.5 * det;
    return 0.5 * static_cast<double>(orient_exact(a, b, c));
}

} // namespace mdcontour
