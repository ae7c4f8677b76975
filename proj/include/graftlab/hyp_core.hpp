#pragma once

#include <complex>
#include <limits>
#include <string>

#include <Eigen/Core>

namespace graftlab {

using cplx = std::complex<double>;
using real = long double;   // storage and products of Mobius coefficients
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kParabolicTol = 1e-9;

enum class MobiusKind { Identity, Hyperbolic, Parabolic, Elliptic };

std::string to_string(MobiusKind k);

// Orientation preserving isometry of the upper half plane, z -> (az+b)/(cz+d).
// Stored with ad - bc = 1 and trace >= 0.
class MobiusMap {
public:
    MobiusMap() = default;
    MobiusMap(real a, real b, real c, real d);
    explicit MobiusMap(const Eigen::Matrix2d& m);

    double a() const { return static_cast<double>(a_); }
    double b() const { return static_cast<double>(b_); }
    double c() const { return static_cast<double>(c_); }
    double d() const { return static_cast<double>(d_); }
    real ea() const { return a_; }
    real eb() const { return b_; }
    real ec() const { return c_; }
    real ed() const { return d_; }
    double trace() const { return static_cast<double>(a_ + d_); }
    Eigen::Matrix2d matrix() const;

    MobiusMap inverse() const { return MobiusMap(d_, -b_, -c_, a_); }
    MobiusMap operator*(const MobiusMap& o) const;

    cplx apply(cplx z) const;
    // action on the ideal boundary; kInf stands for the point at infinity
    double apply_boundary(double x) const;

    // common building blocks
    static MobiusMap translation_along_imaginary_axis(double dist);   // diag(e^{d/2}, e^{-d/2})
    static MobiusMap rotation_about_i(double angle);                  // ccw rotation about i
    static MobiusMap half_turn_about_i();                            // z -> -1/z
    // isometry taking i to p with the upward direction at i mapped to the direction towards q
    static MobiusMap frame(cplx p, cplx q);

private:
    real a_ = 1, b_ = 0, c_ = 0, d_ = 1;
};

struct Classification {
    MobiusKind kind = MobiusKind::Identity;
    double length = 0;   // translation length, 0 unless hyperbolic
};

// Either a geodesic with ideal endpoints p (start) and q (end), or a single ideal point p.
// Endpoints may be kInf.
struct GeodesicOrPoint {
    double p = 0;
    double q = kInf;
    bool is_point = false;

    static GeodesicOrPoint geodesic(double p, double q);
    static GeodesicOrPoint point(double p);
};

struct OrthoSegment {
    cplx foot_a;
    cplx foot_b;     // the ideal point itself when b is a parabolic point
    double length = 0;
};

Classification classify(const MobiusMap& m);

// Fixed point set on the boundary. For hyperbolic maps p is repelling and q attracting.
GeodesicOrPoint axis(const MobiusMap& m);

OrthoSegment orthogeodesic(const GeodesicOrPoint& a, const GeodesicOrPoint& b);

double distance(cplx p, cplx q);

GeodesicOrPoint image(const MobiusMap& m, const GeodesicOrPoint& g);

// Orientation preserving map sending g.p -> 0 and g.q -> infinity.
MobiusMap axis_normalizer(const GeodesicOrPoint& g);

// Signed position of an interior point of the geodesic g measured from the top of the
// unit semicircle after normalisation, positive towards g.q.
double position_on_geodesic(const GeodesicOrPoint& g, cplx z);

// Cayley transform to and from the unit disk.
cplx to_disk(cplx z);
cplx from_disk(cplx w);

bool is_ideal(cplx z);

} // namespace graftlab
