#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <functional>
#include <random>

#include "graftlab/errors.hpp"
#include "graftlab/hyp_core.hpp"

using namespace graftlab;

namespace {

MobiusMap random_map(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-2, 2);
    for (;;) {
        double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
        if (a * d - b * c > 0.2) return MobiusMap(a, b, c, d);
    }
}

MobiusMap random_hyperbolic(std::mt19937_64& rng)
{
    for (;;) {
        MobiusMap m = random_map(rng);
        if (classify(m).kind == MobiusKind::Hyperbolic && std::abs(m.trace()) > 2.1) return m;
    }
}

// unit tangent direction at z of the geodesic through z with given ideal endpoint data
cplx tangent(const GeodesicOrPoint& g, cplx z)
{
    if (std::isinf(g.p) || std::isinf(g.q) || std::abs(g.p - g.q) < 1e-300) return cplx(0, 1);
    double c = 0.5 * (g.p + g.q);
    cplx r = z - c;
    return cplx(-r.imag(), r.real()) / std::abs(r);
}

// geodesic through two interior points, as an endpoint pair
GeodesicOrPoint through(cplx a, cplx b)
{
    if (std::abs(a.real() - b.real()) < 1e-14) return GeodesicOrPoint::geodesic(a.real(), kInf);
    double c = (std::norm(b) - std::norm(a)) / (2 * (b.real() - a.real()));
    double r = std::abs(a - c);
    return GeodesicOrPoint::geodesic(c - r, c + r);
}

double orth_residual(const GeodesicOrPoint& carrier, cplx foot, cplx other)
{
    auto seg = through(foot, other);
    cplx t1 = tangent(carrier, foot), t2 = tangent(seg, foot);
    return std::abs(t1.real() * t2.real() + t1.imag() * t2.imag());
}

// point on a geodesic at signed distance s from the top of its normalised semicircle
cplx point_on(const GeodesicOrPoint& g, double s)
{
    return axis_normalizer(g).inverse().apply(cplx(0, std::exp(s)));
}

double golden(std::function<double(double)> f, double lo, double hi)
{
    const double phi = 0.5 * (std::sqrt(5.0) - 1);
    double a = lo, b = hi;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < 200; ++i) {
        if (f1 < f2) { b = x2; x2 = x1; f2 = f1; x1 = b - phi * (b - a); f1 = f(x1); }
        else { a = x1; x1 = x2; f1 = f2; x2 = a + phi * (b - a); f2 = f(x2); }
    }
    return 0.5 * (a + b);
}

} // namespace

TEST_CASE("normalisation to unit determinant and nonnegative trace")
{
    MobiusMap m(-2, -1, -3, -4);
    CHECK(m.a() * m.d() - m.b() * m.c() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m.trace() >= 0);
    CHECK_THROWS_AS(MobiusMap(1, 2, 2, 1), std::invalid_argument);
}

TEST_CASE("classify trivial cases")
{
    auto c = classify(MobiusMap(std::exp(0.5), 0, 0, std::exp(-0.5)));
    CHECK(c.kind == MobiusKind::Hyperbolic);
    CHECK(c.length == doctest::Approx(1.0).epsilon(1e-14));
    auto p = classify(MobiusMap(1, 1, 0, 1));
    CHECK(p.kind == MobiusKind::Parabolic);
    CHECK(p.length == 0);
    CHECK(classify(MobiusMap()).kind == MobiusKind::Identity);
    CHECK(classify(MobiusMap::rotation_about_i(1.0)).kind == MobiusKind::Elliptic);
}

TEST_CASE("classify is conjugation invariant")
{
    std::mt19937_64 rng(7);
    MobiusMap m = random_hyperbolic(rng);
    double l = classify(m).length;
    for (int i = 0; i < 50; ++i) {
        MobiusMap g = random_map(rng);
        CHECK(classify(g * m * g.inverse()).length == doctest::Approx(l).epsilon(1e-10));
    }
}

TEST_CASE("axis of diagonal and translation")
{
    auto a = axis(MobiusMap(std::exp(0.5), 0, 0, std::exp(-0.5)));
    CHECK(!a.is_point);
    CHECK(a.p == doctest::Approx(0.0));
    CHECK(std::isinf(a.q));
    auto t = axis(MobiusMap(1, 1, 0, 1));
    CHECK(t.is_point);
    CHECK(std::isinf(t.p));
    CHECK_THROWS_AS(axis(MobiusMap::rotation_about_i(0.3)), ClassificationError);
    CHECK_THROWS_AS(axis(MobiusMap()), ClassificationError);
}

TEST_CASE("axis endpoints are fixed, attracting end last")
{
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        MobiusMap m = random_hyperbolic(rng);
        auto a = axis(m);
        for (double x : {a.p, a.q}) {
            if (std::isinf(x)) continue;
            double y = m.apply_boundary(x);
            CHECK(std::abs(y - x) < 1e-9 * (1 + std::abs(x)));
        }
        // forward iteration of a generic point approaches q
        cplx z(0.3, 0.7);
        for (int k = 0; k < 200; ++k) z = m.apply(z);
        if (std::isinf(a.q)) CHECK(std::abs(z) > 1e3);
        else CHECK(std::abs(z - a.q) < 1e-6);
    }
}

TEST_CASE("axis is equivariant")
{
    std::mt19937_64 rng(13);
    for (int i = 0; i < 100; ++i) {
        MobiusMap m = random_hyperbolic(rng), g = random_map(rng);
        auto a1 = axis(g * m * g.inverse());
        auto a2 = image(g, axis(m));
        auto close = [](double x, double y) {
            if (std::isinf(x) || std::isinf(y)) return std::abs(x) > 1e8 || std::abs(y) > 1e8 ? true : false;
            return std::abs(x - y) < 1e-9 * (1 + std::abs(x));
        };
        CHECK(close(a1.p, a2.p));
        CHECK(close(a1.q, a2.q));
    }
}

TEST_CASE("orthogeodesic trivial cases")
{
    auto s = orthogeodesic(GeodesicOrPoint::geodesic(-1, 1), GeodesicOrPoint::geodesic(-3, 3));
    CHECK(std::abs(s.foot_a - cplx(0, 1)) < 1e-12);
    CHECK(std::abs(s.foot_b - cplx(0, 3)) < 1e-12);
    CHECK(s.length == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    // circle |z| = 2 sits symmetric about the imaginary axis's perpendicular at 2i
    auto t = orthogeodesic(GeodesicOrPoint::geodesic(0, kInf), GeodesicOrPoint::geodesic(1, 4));
    CHECK(std::abs(t.foot_a - cplx(0, 2)) < 1e-12);
    auto c = orthogeodesic(GeodesicOrPoint::geodesic(0, kInf), GeodesicOrPoint::point(-5));
    CHECK(std::abs(c.foot_a - cplx(0, 5)) < 1e-12);
    CHECK(std::isinf(c.length));
}

TEST_CASE("orthogeodesic degeneracies")
{
    CHECK_THROWS_AS(orthogeodesic(GeodesicOrPoint::geodesic(-1, 1), GeodesicOrPoint::geodesic(0, 2)), DegeneracyError);
    CHECK_THROWS_AS(orthogeodesic(GeodesicOrPoint::geodesic(-1, 1), GeodesicOrPoint::geodesic(1, 2)), DegeneracyError);
    CHECK_THROWS_AS(orthogeodesic(GeodesicOrPoint::geodesic(-1, 1), GeodesicOrPoint::point(1)), DegeneracyError);
    CHECK_THROWS_AS(orthogeodesic(GeodesicOrPoint::point(1), GeodesicOrPoint::point(2)), DegeneracyError);
}

TEST_CASE("orthogeodesic of random disjoint pairs is orthogonal and minimal")
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-10, 10);
    int done = 0;
    while (done < 100) {
        double x[4] = {u(rng), u(rng), u(rng), u(rng)};
        std::sort(x, x + 4);
        if (x[1] - x[0] < 0.05 || x[2] - x[1] < 0.05 || x[3] - x[2] < 0.05) continue;
        // nested intervals would intersect when interleaved; pick disjoint (x0,x1) and (x2,x3)
        auto a = GeodesicOrPoint::geodesic(x[0], x[1]);
        auto b = GeodesicOrPoint::geodesic(x[3], x[2]);
        auto s = orthogeodesic(a, b);
        CHECK(orth_residual(a, s.foot_a, s.foot_b) < 1e-9);
        CHECK(orth_residual(b, s.foot_b, s.foot_a) < 1e-9);
        CHECK(distance(s.foot_a, s.foot_b) == doctest::Approx(s.length).epsilon(1e-10));
        // brute-force the minimum over both carriers
        double best_t = 0;
        auto inner = [&](double sa) {
            cplx pa = point_on(a, sa);
            double tb = golden([&](double sb) { return distance(pa, point_on(b, sb)); }, -30, 30);
            best_t = tb;
            return distance(pa, point_on(b, tb));
        };
        double sa = golden(inner, -30, 30);
        double dmin = inner(sa);
        CHECK(dmin == doctest::Approx(s.length).epsilon(1e-7));
        CHECK(std::abs(point_on(a, sa) - s.foot_a) < 1e-4 * (1 + std::abs(s.foot_a)));
        ++done;
    }
}

TEST_CASE("distance")
{
    CHECK(distance(cplx(0, 1), cplx(0, 1)) == 0);
    CHECK(distance(cplx(0, 1), cplx(0, std::exp(1.0))) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(distance(cplx(0, 0), cplx(0, 1)), std::invalid_argument);
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> x(-3, 3), y(0.05, 3);
    for (int i = 0; i < 1000; ++i) {
        cplx p(x(rng), y(rng)), q(x(rng), y(rng)), r(x(rng), y(rng));
        CHECK(distance(p, r) <= distance(p, q) + distance(q, r) + 1e-12);
        CHECK(distance(p, q) == doctest::Approx(distance(q, p)));
    }
}

TEST_CASE("isometries preserve distance and frames land where asked")
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> x(-3, 3), y(0.05, 3);
    for (int i = 0; i < 100; ++i) {
        MobiusMap g = random_map(rng);
        cplx p(x(rng), y(rng)), q(x(rng), y(rng));
        CHECK(distance(g.apply(p), g.apply(q)) == doctest::Approx(distance(p, q)).epsilon(1e-9));
        MobiusMap f = MobiusMap::frame(p, q);
        CHECK(std::abs(f.apply(cplx(0, 1)) - p) < 1e-12);
        double d = distance(p, q);
        CHECK(std::abs(f.apply(cplx(0, std::exp(d))) - q) < 1e-9 * (1 + std::abs(q)));
    }
    MobiusMap r = MobiusMap::rotation_about_i(0.7);
    CHECK(std::abs(r.apply(cplx(0, 1)) - cplx(0, 1)) < 1e-15);
}

TEST_CASE("disk conversion round trip")
{
    cplx z(0.3, 1.7);
    CHECK(std::abs(from_disk(to_disk(z)) - z) < 1e-14);
    CHECK(std::abs(to_disk(cplx(0, 1))) < 1e-15);
}
