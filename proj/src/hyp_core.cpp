#include "graftlab/hyp_core.hpp"
#include "graftlab/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace graftlab {

std::string to_string(MobiusKind k)
{
    switch (k) {
    case MobiusKind::Identity: return "identity";
    case MobiusKind::Hyperbolic: return "hyperbolic";
    case MobiusKind::Parabolic: return "parabolic";
    case MobiusKind::Elliptic: return "elliptic";
    }
    return "unknown";
}

MobiusMap::MobiusMap(real a, real b, real c, real d)
{
    real det = a * d - b * c;
    if (!(det > 0) || !std::isfinite(det))
        throw std::invalid_argument("MobiusMap: determinant must be positive and finite");
    real s = 1 / std::sqrt(det);
    a_ = a * s; b_ = b * s; c_ = c * s; d_ = d * s;
    real tr = a_ + d_;
    bool flip = tr < 0;
    if (tr == 0) {
        // trace zero: pick the representative whose first nonzero of (c, a, b) is positive
        real key = c_ != 0 ? c_ : (a_ != 0 ? a_ : b_);
        flip = key < 0;
    }
    if (flip) { a_ = -a_; b_ = -b_; c_ = -c_; d_ = -d_; }
}

MobiusMap::MobiusMap(const Eigen::Matrix2d& m) : MobiusMap(m(0, 0), m(0, 1), m(1, 0), m(1, 1)) {}

Eigen::Matrix2d MobiusMap::matrix() const
{
    Eigen::Matrix2d m;
    m << a(), b(), c(), d();
    return m;
}

MobiusMap MobiusMap::operator*(const MobiusMap& o) const
{
    return MobiusMap(a_ * o.a_ + b_ * o.c_, a_ * o.b_ + b_ * o.d_,
                     c_ * o.a_ + d_ * o.c_, c_ * o.b_ + d_ * o.d_);
}

cplx MobiusMap::apply(cplx z) const
{
    if (std::isinf(z.real()) || std::isinf(z.imag()))
        return c_ == 0 ? cplx(kInf, 0) : cplx(static_cast<double>(a_ / c_), 0);
    using lc = std::complex<real>;
    lc w(z.real(), z.imag());
    lc den = c_ * w + d_;
    if (den == lc(0, 0)) return cplx(kInf, 0);
    lc r = (a_ * w + b_) / den;
    return cplx(static_cast<double>(r.real()), static_cast<double>(r.imag()));
}

double MobiusMap::apply_boundary(double x) const
{
    if (std::isinf(x)) return c_ == 0 ? kInf : static_cast<double>(a_ / c_);
    real den = c_ * x + d_;
    if (den == 0) return kInf;
    return static_cast<double>((a_ * x + b_) / den);
}

MobiusMap MobiusMap::translation_along_imaginary_axis(double dist)
{
    return MobiusMap(std::exp(real(dist) / 2), 0, 0, std::exp(-real(dist) / 2));
}

MobiusMap MobiusMap::rotation_about_i(double angle)
{
    real co = std::cos(real(angle) / 2), si = std::sin(real(angle) / 2);
    return MobiusMap(co, si, -si, co);
}

MobiusMap MobiusMap::half_turn_about_i() { return MobiusMap(0, -1, 1, 0); }

MobiusMap MobiusMap::frame(cplx p, cplx q)
{
    if (!(p.imag() > 0)) throw std::invalid_argument("frame: base point must be interior");
    double sy = std::sqrt(p.imag());
    MobiusMap tp(sy, p.real() / sy, 0, 1 / sy);
    cplx qq = tp.inverse().apply(q);
    double psi;
    if (is_ideal(qq) && std::isinf(qq.real()))
        psi = 0;
    else
        psi = std::arg((qq - cplx(0, 1)) / (qq + cplx(0, 1)));
    return tp * rotation_about_i(psi);
}

GeodesicOrPoint GeodesicOrPoint::geodesic(double p, double q)
{
    if (p == q || (std::isinf(p) && std::isinf(q)))
        throw DegeneracyError("geodesic endpoints must be distinct");
    GeodesicOrPoint g;
    g.p = p; g.q = q; g.is_point = false;
    return g;
}

GeodesicOrPoint GeodesicOrPoint::point(double p)
{
    GeodesicOrPoint g;
    g.p = p; g.q = p; g.is_point = true;
    return g;
}

Classification classify(const MobiusMap& m)
{
    Classification c;
    real tr = std::abs(m.ea() + m.ed());
    bool near_id = std::abs(m.a() - 1) < 1e-12 && std::abs(m.d() - 1) < 1e-12 &&
                   std::abs(m.b()) < 1e-12 && std::abs(m.c()) < 1e-12;
    if (near_id) {
        c.kind = MobiusKind::Identity;
    } else if (std::abs(tr - 2) < kParabolicTol) {
        c.kind = MobiusKind::Parabolic;
    } else if (tr > 2) {
        c.kind = MobiusKind::Hyperbolic;
        c.length = static_cast<double>(2 * std::acosh(tr / 2));
    } else {
        c.kind = MobiusKind::Elliptic;
    }
    return c;
}

GeodesicOrPoint axis(const MobiusMap& m)
{
    auto cl = classify(m);
    if (cl.kind == MobiusKind::Identity || cl.kind == MobiusKind::Elliptic)
        throw ClassificationError("axis: map is " + to_string(cl.kind));
    real A = m.ec(), B = m.ed() - m.ea(), C = -m.eb();
    if (cl.kind == MobiusKind::Parabolic) {
        // fixed point in homogeneous form, [a-d : 2c] or [2b : d-a], whichever is larger
        real x1 = -B, y1 = 2 * A, x2 = -2 * C, y2 = B;
        real x = x1, y = y1;
        if (std::hypot(x2, y2) > std::hypot(x1, y1)) { x = x2; y = y2; }
        if (y == 0) return GeodesicOrPoint::point(kInf);
        return GeodesicOrPoint::point(static_cast<double>(x / y));
    }
    real disc = B * B - 4 * A * C;
    real sq = std::sqrt(std::max(disc, real(0)));
    real qv = -(B + (B >= 0 ? sq : -sq)) / 2;
    real r1 = A == 0 ? real(kInf) : qv / A;
    real r2 = qv == 0 ? real(kInf) : C / qv;
    // attracting fixed point has |c z + d| > 1
    auto attracting = [&](real z) {
        if (std::isinf(z)) return std::abs(m.ea()) > std::abs(m.ed());
        return std::abs(m.ec() * z + m.ed()) > 1;
    };
    double d1 = static_cast<double>(r1), d2 = static_cast<double>(r2);
    if (attracting(r1)) return GeodesicOrPoint::geodesic(d2, d1);
    return GeodesicOrPoint::geodesic(d1, d2);
}

GeodesicOrPoint image(const MobiusMap& m, const GeodesicOrPoint& g)
{
    if (g.is_point) return GeodesicOrPoint::point(m.apply_boundary(g.p));
    return GeodesicOrPoint::geodesic(m.apply_boundary(g.p), m.apply_boundary(g.q));
}

MobiusMap axis_normalizer(const GeodesicOrPoint& g)
{
    if (g.is_point) throw std::invalid_argument("axis_normalizer: needs a geodesic");
    if (std::isinf(g.q)) return MobiusMap(1, -g.p, 0, 1);
    if (std::isinf(g.p)) return MobiusMap(0, -1, 1, -g.q);
    double k = g.p > g.q ? 1.0 : -1.0;
    return MobiusMap(k, -k * g.p, 1, -g.q);
}

double position_on_geodesic(const GeodesicOrPoint& g, cplx z)
{
    cplx w = axis_normalizer(g).apply(z);
    return std::log(std::abs(w));
}

double distance(cplx p, cplx q)
{
    if (!(p.imag() > 0) || !(q.imag() > 0))
        throw std::invalid_argument("distance: points must lie in the open upper half plane");
    return 2 * std::asinh(std::abs(p - q) / (2 * std::sqrt(p.imag() * q.imag())));
}

OrthoSegment orthogeodesic(const GeodesicOrPoint& a, const GeodesicOrPoint& b)
{
    if (a.is_point && b.is_point)
        throw DegeneracyError("orthogeodesic: two ideal points have no common perpendicular");
    if (a.is_point) {
        OrthoSegment s = orthogeodesic(b, a);
        std::swap(s.foot_a, s.foot_b);
        return s;
    }
    MobiusMap n = axis_normalizer(a);
    MobiusMap ni = n.inverse();
    const double tol = 1e-14;
    auto bad = [&](double x) { return std::isinf(x) || std::abs(x) < tol; };
    OrthoSegment s;
    if (b.is_point) {
        double p = n.apply_boundary(b.p);
        if (bad(p)) throw DegeneracyError("orthogeodesic: point is an endpoint of the geodesic");
        s.foot_a = ni.apply(cplx(0, std::abs(p)));
        s.foot_b = std::isinf(b.p) ? cplx(kInf, 0) : cplx(b.p, 0);
        s.length = kInf;
        return s;
    }
    double p = n.apply_boundary(b.p), q = n.apply_boundary(b.q);
    if (bad(p) || bad(q)) throw DegeneracyError("orthogeodesic: carriers share an endpoint");
    if (p * q <= 0) throw DegeneracyError("orthogeodesic: carriers intersect");
    double r = std::sqrt(p * q);
    double m = 0.5 * (p + q);
    double x = r * r / m;
    double y = std::sqrt(std::max(r * r - x * x, 0.0));
    cplx fa(0, r), fb(x, y);
    s.foot_a = ni.apply(fa);
    s.foot_b = ni.apply(fb);
    s.length = distance(fa, fb);
    return s;
}

cplx to_disk(cplx z)
{
    if (is_ideal(z) && std::isinf(z.real())) return cplx(1, 0);
    return (z - cplx(0, 1)) / (z + cplx(0, 1));
}

cplx from_disk(cplx w)
{
    if (w == cplx(1, 0)) return cplx(kInf, 0);
    return cplx(0, 1) * (1.0 + w) / (1.0 - w);
}

bool is_ideal(cplx z) { return std::isinf(z.real()) || std::isinf(z.imag()) || z.imag() <= 0; }

} // namespace graftlab
