#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "graftlab/errors.hpp"
#include "graftlab/grafting.hpp"
#include "graftlab/uniformize.hpp"

using namespace graftlab;

namespace {

GraftingVector graft(const SurfaceSpec& s, double t)
{
    GraftingVector v;
    v.t[s.curve()] = t;
    return v;
}

SurfaceSpec staggered()
{
    return SurfaceSpec::twice_punctured_torus(1, 0.25, {"p", -0.0625, 0.375}, {"q", 0.0625, 0.625});
}

double edge_length_between(const GraftedMesh& g, int i0, int j0, int i1, int j1)
{
    int e = g.mesh.edge_between(g.vertex(i0, j0), g.vertex(i1, j1));
    REQUIRE(e >= 0);
    return g.mesh.euclidean_length(e);
}

} // namespace

TEST_CASE("topology of the grafted surfaces")
{
    auto one = SurfaceSpec::punctured_torus(1, 0.25, 16);
    auto two = SurfaceSpec::twice_punctured_torus(1, 0.25, {"p", -0.125, 0.5}, {"q", 0.125, 0.5}, 16);
    for (double t : {0.0, 0.5, 3.0}) {
        auto a = build_St_mesh(one, graft(one, t));
        CHECK(a.mesh.euler_characteristic() == 0);
        CHECK(a.mesh.num_cusps() == 1);
        CHECK(punctured_euler_characteristic(a.mesh) == -1);
        auto b = build_St_mesh(two, graft(two, t));
        CHECK(b.mesh.num_cusps() == 2);
        CHECK(punctured_euler_characteristic(b.mesh) == -2);
    }
    auto s1 = build_Sinfty_mesh(one, 5);
    CHECK(s1.mesh.euler_characteristic() == 2);
    CHECK(s1.mesh.num_cusps() == 3);
    auto s2 = build_Sinfty_mesh(two, 5);
    CHECK(s2.mesh.euler_characteristic() == 2);
    CHECK(s2.mesh.num_cusps() == 4);
    CHECK(s2.cap_bottom >= 0);
    CHECK(s2.cap_top >= 0);
}

TEST_CASE("inserted cylinder has modulus t")
{
    auto s = SurfaceSpec::punctured_torus(1, 0.25, 16);
    for (double t : {0.5, 2.0, 8.0}) {
        auto g = build_St_mesh(s, graft(s, t));
        CHECK(g.periodic);
        CHECK(g.cylinder == doctest::Approx(t));
        double top = g.row_y.back();
        CHECK(top == doctest::Approx(1 + t).epsilon(1e-12));
        // circumference of every row is 1
        for (int j = g.row_min; j <= g.row_max; j += 5) {
            double c = 0;
            for (int i = 0; i < g.columns; ++i) c += edge_length_between(g, i, j, (i + 1) % g.columns, j);
            CHECK(c == doctest::Approx(1).epsilon(1e-12));
        }
    }
}

TEST_CASE("grafting only adds to the flat surface")
{
    auto s = staggered();
    auto g1 = build_St_mesh(s, graft(s, 1));
    auto g4 = build_St_mesh(s, graft(s, 4));
    CHECK(g1.se_rows == g4.se_rows);
    CHECK(g1.mesh.loops.at("P.2") == g4.mesh.loops.at("P.2"));
    // S_E embeds identically in both
    for (int j = 0; j < g1.se_rows; ++j)
        for (int i = 0; i < g1.columns; ++i) {
            CHECK(edge_length_between(g1, i, j, i, j + 1) == edge_length_between(g4, i, j, i, j + 1));
            CHECK(g1.vertex(i, j) == g4.vertex(i, j));
        }
    CHECK(graft(s, 1) <= graft(s, 4));
    CHECK_FALSE(graft(s, 4) <= graft(s, 1));
    CHECK(g1.mesh.verts.size() < g4.mesh.verts.size());
}

TEST_CASE("zero grafting is the flat torus itself")
{
    auto s = SurfaceSpec::punctured_torus(1.5, 0.125, 16);
    auto g = build_St_mesh(s, graft(s, 0));
    CHECK(g.row_max - g.row_min + 1 == g.se_rows);
    CHECK(g.row_y.back() == doctest::Approx(1.5));
    CHECK_FALSE(g.mesh.loops.count("a.core"));
}

TEST_CASE("invalid specifications")
{
    auto s = SurfaceSpec::punctured_torus(1, 0.25);
    GraftingVector neg;
    neg.t["a"] = -1;
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
    CHECK_THROWS_AS(build_St_mesh(s, neg), std::invalid_argument);
    GraftingVector other;
    other.t["zz"] = 1;
    CHECK_THROWS_AS(build_St_mesh(s, other), std::invalid_argument);
    CHECK_THROWS_AS(build_Sinfty_mesh(s, 4), std::invalid_argument);

    auto h = SurfaceSpec::punctured_torus(1.01, 0.25);
    CHECK_THROWS_AS(build_St_mesh(h, graft(h, 1)), std::invalid_argument);   // off the grid
    auto off = SurfaceSpec::punctured_torus(1, 0.25);
    off.punctures[0].x = 0.3;
    CHECK_THROWS_AS(build_St_mesh(off, graft(off, 1)), std::invalid_argument);
    auto edge = SurfaceSpec::punctured_torus(1, 0.25);
    edge.punctures[0].y = 1.0 / 32;
    CHECK_THROWS_AS(build_St_mesh(edge, graft(edge, 1)), std::invalid_argument);
    auto close = SurfaceSpec::twice_punctured_torus(1, 0, {"p", 0, 0.5}, {"q", 1.0 / 32, 0.5});
    CHECK_THROWS_AS(build_St_mesh(close, graft(close, 1)), std::invalid_argument);
    auto cols = SurfaceSpec::punctured_torus(1, 0.25, 30);
    CHECK_THROWS_AS(cols.validate(), std::invalid_argument);
}

TEST_CASE("geodesic mode needs a reflection symmetry")
{
    auto s = SurfaceSpec::punctured_torus(1, 0, 32);
    s.mode = GraftingMode::Geodesic;
    CHECK_NOTHROW(s.validate());
    s.shift = 0.25;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    auto t = SurfaceSpec::punctured_torus(1, 0, 32);
    t.mode = GraftingMode::Geodesic;
    t.punctures[0].y = 0.375;
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);

    // the reflection fixes alpha in S and the core circle of the cylinder in S_t, so the
    // polygon along that row has the trace length
    s.shift = 0;
    auto row_length = [](const GraftedMesh& g, int j) {
        double L = 0;
        for (int i = 0; i < g.columns; ++i) {
            int e = g.mesh.edge_between(g.vertex(i, j), g.vertex((i + 1) % g.columns, j));
            L += hyperbolic_length(g.mesh, g.mesh.u, e);
        }
        return L;
    };
    auto core = [](const GraftedMesh& g) { return g.se_rows + (g.row_max + 1 - g.se_rows) / 2; };
    auto g0 = build_St_mesh(s, graft(s, 0));
    uniformize(g0.mesh);
    CHECK(row_length(g0, 0) == doctest::Approx(geodesic_length(g0.mesh, "P.0").length).epsilon(1e-8));
    auto g = build_St_mesh(s, graft(s, 2));
    uniformize(g.mesh);
    CHECK(g.y(core(g)) == doctest::Approx(2));
    CHECK(row_length(g, core(g)) == doctest::Approx(geodesic_length(g.mesh, "P.0").length).epsilon(1e-8));

    auto f = SurfaceSpec::punctured_torus(1, 0.25, 32);
    auto h = build_St_mesh(f, graft(f, 0));
    uniformize(h.mesh);
    CHECK(row_length(h, 0) > geodesic_length(h.mesh, "P.0").length + 1e-4);
}

TEST_CASE("specification JSON round trip")
{
    auto s = staggered();
    s.mode = GraftingMode::FlatStrebel;
    s.name = "staggered";
    nlohmann::json j = s;
    CHECK(j["schema"] == 1);
    auto r = j.get<SurfaceSpec>();
    CHECK(r.name == "staggered");
    CHECK(r.topology == s.topology);
    CHECK(r.height == s.height);
    CHECK(r.shift == s.shift);
    REQUIRE(r.punctures.size() == 2);
    CHECK(r.punctures[1].x == s.punctures[1].x);
    CHECK(r.punctures[1].y == s.punctures[1].y);
    CHECK(r.pd.curves == s.pd.curves);
    CHECK(r.columns == s.columns);
    CHECK(nlohmann::json(r) == j);

    j["schema"] = 2;
    CHECK_THROWS_AS(j.get<SurfaceSpec>(), std::invalid_argument);
    auto k = nlohmann::json(s);
    k["mode"] = "spiral";
    CHECK_THROWS_AS(k.get<SurfaceSpec>(), std::invalid_argument);
}

TEST_CASE("grafted mesh survives the text format")
{
    auto s = staggered();
    auto g = build_St_mesh(s, graft(s, 1));
    std::stringstream ss;
    g.mesh.write(ss);
    auto r = TriMesh::read(ss);
    uniformize(g.mesh);
    uniformize(r);
    auto a = measure_surface(g.mesh, s.pd);
    auto b = measure_surface(r, s.pd);
    CHECK(a.length["b"] == doctest::Approx(b.length["b"]).epsilon(1e-12));
    CHECK(a.twist["a"] == doctest::Approx(b.twist["a"]).epsilon(1e-12));
}

TEST_CASE("fit of a synthetic seam trace")
{
    SeamTrace tr;
    for (int k = 0; k <= 400; ++k) {
        double s = 8.0 * k / 400;
        tr.s.push_back(s);
        tr.theta.push_back(3.3 + 0.7 * std::exp(-2 * std::numbers::pi * s));
    }
    auto f = fit_limit(tr, 4, 8);
    CHECK(f.theta_inf == doctest::Approx(0.3).epsilon(1e-10));
    CHECK(f.residual < 1e-12);
    auto early = fit_limit(tr, 0, 1);
    CHECK(early.amplitude == doctest::Approx(0.7).epsilon(1e-9));
    CHECK_THROWS_AS(fit_limit(tr, 7.999, 8), std::invalid_argument);
}

TEST_CASE("symmetric surface predicts no twist")
{
    auto s = SurfaceSpec::punctured_torus(1, 0, 32);
    auto g = build_Sinfty_mesh(s, 6);
    uniformize(g.mesh);
    auto la = limiting_angles(g, s);
    CHECK(std::abs(half_twist_diff(la.predicted, 0)) < 1e-6);
    CHECK(la.plus.residual < 1e-6);

    auto p = build_St_mesh(s, graft(s, 1));
    CHECK_THROWS_AS(limiting_angles(p, s), std::invalid_argument);
}

TEST_CASE("staggered punctures: twist tends to the limiting angle difference")
{
    auto s = staggered();
    auto g = build_Sinfty_mesh(s, 8);
    uniformize(g.mesh);
    auto la = limiting_angles(g, s);
    auto third = limiting_angles(g, s, 1.0 / 3);
    CHECK(std::abs(half_twist_diff(la.predicted, third.predicted)) < 1e-3);
    CHECK(std::abs(la.predicted) > 0.01);

    // deeper truncation changes nothing at this precision
    auto g10 = build_Sinfty_mesh(s, 10);
    uniformize(g10.mesh);
    CHECK(std::abs(half_twist_diff(limiting_angles(g10, s).predicted, la.predicted)) < 1e-4);

    double prev = 1;
    for (double t : {2.0, 4.0, 8.0}) {
        auto st = build_St_mesh(s, graft(s, t));
        uniformize(st.mesh);
        auto fn = measure_surface(st.mesh, s.pd);
        double gap = std::abs(half_twist_diff(fn.twist["a"], la.predicted));
        CAPTURE(t);
        CHECK(gap < prev);
        prev = gap;
    }
    CHECK(prev < 1e-4);
}
