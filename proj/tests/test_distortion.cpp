#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "graftlab/distortion.hpp"

using namespace graftlab;
using std::numbers::pi;

TEST_CASE("constants")
{
    CHECK(DistortionBounds::C1 == doctest::Approx(std::sqrt(8 / pi)).epsilon(1e-15));
    CHECK(DistortionBounds::C2 == doctest::Approx(8 * pi * std::exp(5 * pi) * (std::sqrt(8 / pi) + 1)).epsilon(1e-14));
    CHECK(bound_fprime() == DistortionBounds::C1);
    CHECK(bound_fprime() >= 1);   // identity has |f'| = 1
}

TEST_CASE("pointwise bounds")
{
    double C2 = DistortionBounds::C2;
    CHECK(bound_fsecond(0, 5) == doctest::Approx(C2 * std::exp(-2 * pi * 5)).epsilon(1e-14));
    // doubling the distance to the edge squares the exponential factor
    double r1 = bound_fsecond(6, 10) / C2, r2 = bound_fsecond(2, 10) / C2;
    CHECK(r2 == doctest::Approx(r1 * r1).epsilon(1e-12));
    CHECK(bound_fsecond(1, 8) < bound_fsecond(2, 8));
    CHECK(bound_fsecond(-2, 8) == bound_fsecond(2, 8));
    CHECK(bound_fsecond(1, 9) < bound_fsecond(1, 8));
    CHECK_THROWS_AS(bound_fsecond(5, 8), std::invalid_argument);
    CHECK_THROWS_AS(bound_fsecond(0, 3), std::invalid_argument);

    CHECK(bound_fprime_real(4) == doctest::Approx(0.026323695861148912980230539179265).epsilon(1e-13));
    CHECK(bound_fprime_real(60) < 1e-150);
    CHECK_THROWS_AS(bound_fprime_real(3), std::invalid_argument);

    CHECK(bound_displacement(0, 6) == doctest::Approx(C2 * (1 + 49) * std::exp(-12 * pi)).epsilon(1e-14));
    CHECK_THROWS_AS(bound_displacement(3, 6), std::invalid_argument);
    // fixed buffer, growing b
    double c = 5;
    for (double b : {20.0, 40.0, 80.0})
        CHECK(bound_displacement(b - c, b) / (C2 * std::exp(-2 * pi * c)) - 1 < 1e-10);
}

TEST_CASE("buffer for epsilon")
{
    CHECK(buffer_for_epsilon(displacement_envelope(5)) == doctest::Approx(5).epsilon(1e-13));
    // high precision root of g(c) = 1e-3
    CHECK(buffer_for_epsilon(1e-3) == doctest::Approx(4.8301712063581534277526904655753).epsilon(1e-13));
    for (double eps : {1e-1, 1e-3, 1e-6, 1e-12, 1e-20}) {
        double c = buffer_for_epsilon(eps);
        CHECK(displacement_envelope(c) <= eps);
        CHECK(displacement_envelope(c - 0.01) > eps);
        CHECK(displacement_envelope(c - 1e-12) > eps * (1 - 1e-9));
    }
    double prev = 0;
    for (double eps = 1.0; eps > 1e-30; eps /= 10) {
        double c = buffer_for_epsilon(eps);
        CHECK(c > prev);
        prev = c;
    }
    double step = buffer_for_epsilon(5e-41) - buffer_for_epsilon(1e-40);
    CHECK(step == doctest::Approx(std::log(2.0) / (2 * pi)).epsilon(0.01));
    CHECK(buffer_for_epsilon(1e12) == 0);
    CHECK_THROWS_AS(buffer_for_epsilon(0), std::invalid_argument);
}

TEST_CASE("strip maps")
{
    auto id = StripMapSpec::identity(6);
    CHECK(id.certified());
    CHECK(empirical_distortion(id, 4) == 0);
    CHECK(std::abs(id.eval(cplx(0.3, 1.2)) - cplx(0.3, 1.2)) == 0);

    StripMapSpec f;
    f.b = 5;
    f.modes = {1};
    f.coeffs = {std::exp(-2 * pi * f.b) / (4 * pi)};
    REQUIRE(f.certified());
    CHECK(f.derivative_excess(f.b) == doctest::Approx(0.5));
    CHECK(std::abs(f.eval(0)) < 1e-300);
    cplx z(0.37, -1.1);
    CHECK(std::abs(f.eval(z + 1.0) - f.eval(z) - 1.0) < 1e-14);
    double h = 1e-5;
    CHECK(std::abs((f.eval(z + h) - f.eval(z - h)) / (2 * h) - f.deriv(z)) < 1e-9);
    CHECK(std::abs((f.deriv(z + h) - f.deriv(z - h)) / (2 * h) - f.deriv2(z)) < 1e-9);

    // single mode: |f - z| = |a1| |e^{2 pi i z} - 1|, maximal at x = 1/2, y = -(b - c)
    double c = 3.5, Y = f.b - c, a1 = std::abs(f.coeffs[0]);
    double closed = a1 * (std::exp(2 * pi * Y) + 1);
    double emp = empirical_distortion(f, c);
    CHECK(emp >= closed * (1 - 1e-12));
    CHECK(emp <= closed * 1.05);
    // dense sampling oracle
    double dense = 0;
    for (int i = 0; i < 2000; ++i)
        for (int j = 0; j <= 400; ++j) {
            cplx w(i / 2000.0, -Y + 2 * Y * j / 400);
            dense = std::max(dense, std::abs(f.eval(w) - w));
        }
    CHECK(dense <= emp);
    CHECK(dense == doctest::Approx(closed).epsilon(1e-9));

    f.coeffs[0] *= 2.5;
    CHECK(!f.certified());
    CHECK_THROWS_AS(empirical_distortion(f, 4), std::invalid_argument);
    CHECK_THROWS_AS(empirical_distortion(id, 2), std::invalid_argument);
    CHECK(empirical_distortion(StripMapSpec::identity(4), 4.5) == 0);
}

TEST_CASE("random certified corpus respects every bound")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> B(4, 8), U(0, 1);
    double eps = 1e-3, c = buffer_for_epsilon(eps);
    for (int m = 0; m < 100; ++m) {
        double b = B(rng);
        auto f = random_strip_map(b, rng);
        REQUIRE(f.certified());
        auto rec = audit_strip_map(f, c, eps, m);
        CHECK(rec.pointwise_violations == 0);
        CHECK(rec.empirical_sup <= rec.bound);
        CHECK(rec.bound <= eps);
        double real_bound = bound_fprime_real(b);
        for (int i = 0; i < 256; ++i)
            CHECK(std::abs(f.deriv(i / 256.0) - 1.0) <= real_bound);
        for (int s = 0; s < 64; ++s) {
            double y = (2 * U(rng) - 1) * (b - 2.5);
            CHECK(std::abs(f.deriv(cplx(U(rng), y))) <= bound_fprime());
            double y3 = (2 * U(rng) - 1) * (b - 3) * 0.999;
            CHECK(std::abs(f.deriv2(cplx(U(rng), y3))) <= bound_fsecond(y3, b));
        }
    }
    auto id = audit_strip_map(StripMapSpec::identity(7), c, eps);
    CHECK(id.margin == id.bound);
}

TEST_CASE("sine lower bound")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> S(-10, 10), T(std::log(2.0), 12);
    for (int k = 0; k < 10000; ++k) {
        double t = T(rng) * (k % 2 ? 1 : -1);
        double s2 = std::norm(std::sin(cplx(S(rng), t)));
        CHECK(s2 >= std::exp(2 * std::abs(t)) / 8);
    }
}
