#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "graftlab/errors.hpp"
#include "graftlab/pants.hpp"

using namespace graftlab;

namespace {

PantsDecomposition genus_two_pd()
{
    nlohmann::json j = nlohmann::json::parse(R"({
      "schema": 1, "curves": ["a", "b", "c"], "grafted": ["b"],
      "pants": [
        {"name": "P", "slots": [{"curve": "a", "side": "+"}, {"curve": "b", "side": "+"}, {"curve": "c", "side": "+"}]},
        {"name": "Q", "slots": [{"curve": "a", "side": "-"}, {"curve": "c", "side": "-"}, {"curve": "b", "side": "-"}]}
      ]})");
    return j.get<PantsDecomposition>();
}

PantsDecomposition five_punctured_sphere_pd()
{
    nlohmann::json j = nlohmann::json::parse(R"({
      "schema": 1, "curves": ["a", "b"], "grafted": ["a"],
      "pants": [
        {"name": "A", "slots": [{"curve": "a", "side": "+"}, {"cusp": "x1"}, {"cusp": "x2"}]},
        {"name": "B", "slots": [{"curve": "a", "side": "-"}, {"curve": "b", "side": "+"}, {"cusp": "x3"}]},
        {"name": "C", "slots": [{"curve": "b", "side": "-"}, {"cusp": "x4"}, {"cusp": "x5"}]}
      ]})");
    return j.get<PantsDecomposition>();
}

double raw_trace(const Eigen::Matrix2d& m) { return m(0, 0) + m(1, 1); }

void round_trip(const PantsDecomposition& pd, std::mt19937_64& rng, int n)
{
    std::uniform_real_distribution<double> L(0.2, 4.0), T(-2.0, 2.0);
    for (int i = 0; i < n; ++i) {
        FNCoords fn;
        for (const auto& c : pd.curves) {
            fn.length[c] = L(rng);
            fn.twist[c] = T(rng);
        }
        MarkedGroup g = build_group(fn, pd);
        CHECK(g.relator_residual() < 1e-9);
        FNCoords m = measure_fn(g, pd);
        for (const auto& c : pd.curves) {
            CHECK(m.length[c] == doctest::Approx(fn.length[c]).epsilon(1e-9));
            CHECK(std::abs(half_twist_diff(m.twist[c], fn.twist[c])) < 1e-9);
            CHECK(m.twist[c] >= 0);
            CHECK(m.twist[c] < 0.5);
            CHECK(m.length[c] == classify(g.eval(g.curve_map[c])).length);
        }
    }
}

} // namespace

TEST_CASE("hexagon side formula")
{
    double a = 0.8;
    double s = hexagon_side(a, a, a);
    CHECK(std::cosh(s) == doctest::Approx(std::cosh(a) * (1 + std::cosh(a)) / std::pow(std::sinh(a), 2)).epsilon(1e-13));
    // high precision evaluation of acosh((cosh 1 + cosh^2 1)/sinh^2 1)
    CHECK(hexagon_side(1, 1, 1) == doctest::Approx(1.70491283235801369).epsilon(1e-14));
    CHECK(std::cosh(hexagon_side(1, 1, 0)) ==
          doctest::Approx((1 + std::pow(std::cosh(1.0), 2)) / std::pow(std::sinh(1.0), 2)).epsilon(1e-13));
    CHECK(std::isinf(hexagon_side(0, 1, 1)));
    CHECK_THROWS_AS(hexagon_side(-1, 1, 1), std::invalid_argument);
}

TEST_CASE("structural validation")
{
    auto pd = one_holed_torus_pd();
    CHECK_NOTHROW(pd.validate());
    CHECK(pd.genus() == 1);
    CHECK(pd.cusps() == 1);
    auto bad = pd;
    bad.pants[0].slots[1].side = +1;
    CHECK_THROWS_AS(bad.validate(), AssemblyError);
    auto bad2 = pd;
    bad2.grafted = {"zz"};
    CHECK_THROWS_AS(bad2.validate(), AssemblyError);
    CHECK_NOTHROW(genus_two_pd().validate());
    CHECK(genus_two_pd().genus() == 2);
    CHECK_NOTHROW(five_punctured_sphere_pd().validate());
    CHECK_NOTHROW(twice_punctured_torus_pd().validate());
    CHECK_NOTHROW(four_punctured_sphere_pd().validate());
}

TEST_CASE("seam partner follows the smallest label")
{
    auto pd = one_holed_torus_pd("a", "p");
    CHECK(pd.seam_partner(0, 0) == 1);   // "a-" < "p"
    CHECK(pd.seam_partner(0, 1) == 0);   // "a+" < "p"
    auto pd2 = one_holed_torus_pd("a", "0");
    CHECK(pd2.seam_partner(0, 0) == 2);
}

TEST_CASE("one-holed torus: commutator is parabolic with trace -2")
{
    auto pd = one_holed_torus_pd();
    FNCoords fn;
    fn.length["a"] = 2;
    fn.twist["a"] = 0;
    MarkedGroup g = build_group(fn, pd);
    Eigen::Matrix2d A = g.gen("P.0").matrix(), B = g.gen("t.a").matrix();
    Eigen::Matrix2d K = A * B * A.inverse() * B.inverse();
    CHECK(raw_trace(K) == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(classify(g.gen("P.2")).kind == MobiusKind::Parabolic);
    // the seam between the two boundary lifts has the hexagon length
    auto s = orthogeodesic(axis(g.gen("P.0")), axis(g.gen("P.1")));
    CHECK(s.length == doctest::Approx(hexagon_side(1, 1, 0)).epsilon(1e-10));
}

TEST_CASE("pants lie to the left of their boundary elements")
{
    FNCoords fn;
    fn.length["a"] = 1.3;
    fn.length["b"] = 0.7;
    fn.length["c"] = 2.1;
    MarkedGroup g = build_group(fn, genus_two_pd());
    for (std::string p : {"P", "Q"})
        for (int k = 0; k < 3; ++k) {
            auto ax = axis(g.gen(p + "." + std::to_string(k)));
            auto other = axis(g.gen(p + "." + std::to_string((k + 1) % 3)));
            CHECK(axis_normalizer(ax).apply_boundary(other.p) < 0);
        }
}

TEST_CASE("round trip build_group -> measure_fn")
{
    std::mt19937_64 rng(101);
    round_trip(one_holed_torus_pd(), rng, 100);
    round_trip(four_punctured_sphere_pd(), rng, 100);
    round_trip(twice_punctured_torus_pd(), rng, 100);
    round_trip(genus_two_pd(), rng, 100);
    round_trip(five_punctured_sphere_pd(), rng, 100);
}

TEST_CASE("twist 0 and 1/4 are measured as such; half twists are invisible")
{
    auto pd = one_holed_torus_pd();
    FNCoords fn;
    fn.length["a"] = 1.1;
    fn.twist["a"] = 0;
    CHECK(std::abs(half_twist_diff(measure_fn(build_group(fn, pd), pd).twist["a"], 0)) < 1e-12);
    fn.twist["a"] = 0.25;
    CHECK(measure_fn(build_group(fn, pd), pd).twist["a"] == doctest::Approx(0.25).epsilon(1e-10));
    fn.twist["a"] = 0.75;
    CHECK(measure_fn(build_group(fn, pd), pd).twist["a"] == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("four-punctured sphere at zero twist is reflection symmetric")
{
    // reflection in the seam line through the a+ and p1 feet should invert P.0, P.1, Q.0 and Q.1
    auto pd = four_punctured_sphere_pd();
    auto defect = [&](double tw) {
        FNCoords fn;
        fn.length["a"] = 1.2;
        fn.twist["a"] = tw;
        MarkedGroup g = build_group(fn, pd);
        auto ax = axis(g.gen("P.0"));
        MobiusMap n = axis_normalizer(ax);
        auto seam = orthogeodesic(ax, axis(g.gen("P.1")));
        double r = std::abs(n.apply(seam.foot_a));
        auto reflect = [&](const MobiusMap& m) {
            MobiusMap h = n * m * n.inverse();
            MobiusMap k(h.d(), h.c() * r * r, h.b() / (r * r), h.a());
            return n.inverse() * k * n;
        };
        double worst = 0;
        for (std::string name : {"P.0", "P.1", "Q.0", "Q.1"}) {
            Eigen::Matrix2d lhs = reflect(g.gen(name)).matrix(), rhs = g.gen(name).inverse().matrix();
            worst = std::max(worst, std::min((lhs - rhs).cwiseAbs().maxCoeff(), (lhs + rhs).cwiseAbs().maxCoeff()));
        }
        return worst;
    };
    CHECK(defect(0.0) < 1e-9);
    CHECK(defect(0.13) > 1e-3);
}

TEST_CASE("measure_fn rejects pinched curves")
{
    auto pd = one_holed_torus_pd();
    MarkedGroup g;
    g.set("P.0", MobiusMap(1, 1, 0, 1));
    g.set("X", MobiusMap(2, 0, 0, 0.5));
    g.curve_map["a"] = parse_word("P.0");
    g.seam_targets["a"] = {parse_word("X"), parse_word("X")};
    CHECK_THROWS_AS(measure_fn(g, pd), DegeneracyError);
}

TEST_CASE("group distance")
{
    auto pd = one_holed_torus_pd();
    FNCoords fn;
    fn.length["a"] = 1.5;
    MarkedGroup g = build_group(fn, pd);
    CHECK(group_distance(g, g) == 0);
    MarkedGroup h = g;
    double eps = 1e-6;
    h.set("P.0", MobiusMap(Eigen::Matrix2d(g.gen("P.0").matrix() + eps * Eigen::Matrix2d::Ones())));
    double d = group_distance(g, h);
    CHECK(d > 0.1 * eps);
    CHECK(d < 100 * eps);
    MarkedGroup r = g.restrict_to({"P.0", "P.1", "P.2"});
    CHECK_THROWS_AS(group_distance(g, r), std::invalid_argument);
    CHECK(r.relators.size() == 1);
    // along a convergent FN sequence the groups converge
    double prev = 1e9;
    for (int k = 1; k <= 6; ++k) {
        FNCoords f2 = fn;
        f2.length["a"] = 1.5 + std::pow(0.5, k);
        double dk = group_distance(g, build_group(f2, pd));
        CHECK(dk < prev);
        prev = dk;
    }
    CHECK(prev < 0.1);
}

TEST_CASE("words and json")
{
    Word w = parse_word("A B^-1 t.a^2");
    CHECK(w.size() == 3);
    CHECK(w[1].power == -1);
    CHECK(format_word(w) == "A B^-1 t.a^2");
    nlohmann::json j = twice_punctured_torus_pd();
    auto back = j.get<PantsDecomposition>();
    CHECK(back.pants.size() == 2);
    CHECK(back.pants[1].slots[1].cusp == "p");
    FNCoords fn;
    fn.length["a"] = 1;
    fn.twist["a"] = 0.3;
    nlohmann::json jf = fn;
    CHECK(jf["schema"] == 1);
    CHECK(jf.get<FNCoords>().twist["a"] == doctest::Approx(0.3));
}
