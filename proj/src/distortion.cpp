#include "graftlab/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace graftlab {

using std::numbers::pi;

namespace {

cplx mode(int k, cplx z) { return std::exp(cplx(0, 2 * pi * k) * z); }

void check_strip(double y, double b)
{
    if (!(std::abs(y) < b - 3))
        throw std::invalid_argument("need |y| < b - 3");
}

} // namespace

cplx StripMapSpec::eval(cplx z) const
{
    cplx s = z;
    for (size_t j = 0; j < modes.size(); ++j) s += coeffs[j] * (mode(modes[j], z) - 1.0);
    return s;
}

cplx StripMapSpec::deriv(cplx z) const
{
    cplx s = 1;
    for (size_t j = 0; j < modes.size(); ++j) s += coeffs[j] * cplx(0, 2 * pi * modes[j]) * mode(modes[j], z);
    return s;
}

cplx StripMapSpec::deriv2(cplx z) const
{
    cplx s = 0;
    for (size_t j = 0; j < modes.size(); ++j) {
        double w = 2 * pi * modes[j];
        s -= coeffs[j] * w * w * mode(modes[j], z);
    }
    return s;
}

double StripMapSpec::derivative_excess(double y) const
{
    double s = 0;
    for (size_t j = 0; j < modes.size(); ++j) {
        int k = std::abs(modes[j]);
        s += 2 * pi * k * std::abs(coeffs[j]) * std::exp(2 * pi * k * std::abs(y));
    }
    return s;
}

bool StripMapSpec::certified() const
{
    if (!(b > 0) || modes.size() != coeffs.size()) return false;
    for (int k : modes)
        if (k == 0) return false;
    return derivative_excess(b) < 1;
}

StripMapSpec StripMapSpec::identity(double b)
{
    StripMapSpec f;
    f.b = b;
    return f;
}

double bound_fprime() { return DistortionBounds::C1; }

double bound_fsecond(double y, double b)
{
    check_strip(y, b);
    return DistortionBounds::C2 * std::exp(2 * pi * (std::abs(y) - b));
}

double bound_fprime_real(double b)
{
    if (!(b > 3)) throw std::invalid_argument("bound_fprime_real: need b > 3");
    return DistortionBounds::C2 * (b + 1) * std::exp(-2 * pi * b);
}

double bound_displacement(double y, double b)
{
    check_strip(y, b);
    return DistortionBounds::C2 * (std::exp(2 * pi * std::abs(y)) + (b + 1) * (b + 1)) * std::exp(-2 * pi * b);
}

double displacement_envelope(double c)
{
    return DistortionBounds::C2 * std::exp(-2 * pi * c) * (1 + (c + 1) * (c + 1));
}

double buffer_for_epsilon(double eps)
{
    if (!(eps > 0)) throw std::invalid_argument("buffer_for_epsilon: eps must be positive");
    if (displacement_envelope(0) <= eps) return 0;
    double lo = 0, hi = 1;
    while (displacement_envelope(hi) > eps) {
        lo = hi;
        hi *= 2;
    }
    for (int it = 0; it < 200 && hi - lo > 0; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (displacement_envelope(mid) <= eps) hi = mid;
        else lo = mid;
    }
    return hi;
}

double empirical_distortion(const StripMapSpec& f, double c, int nx)
{
    if (!f.certified()) throw std::invalid_argument("empirical_distortion: univalence certificate fails");
    if (c < 3) throw std::invalid_argument("empirical_distortion: need c >= 3");
    if (nx < 2) throw std::invalid_argument("empirical_distortion: nx too small");
    double Y = f.b - c;
    if (Y <= 0) return 0;
    double dx = 1.0 / nx;
    int ny = std::max(2, static_cast<int>(std::ceil(2 * Y / dx)));
    double dy = 2 * Y / ny;
    double sup = 0;
    for (int j = 0; j <= ny; ++j) {
        double y = -Y + j * dy;
        for (int i = 0; i < nx; ++i) {
            cplx z(i * dx, y);
            sup = std::max(sup, std::abs(f.eval(z) - z));
        }
    }
    // every point of the closed strip is within half a cell diagonal of a sample
    double lip = std::min(f.derivative_excess(Y), bound_fprime() + 1);
    return sup + lip * 0.5 * std::hypot(dx, dy);
}

StripMapSpec random_strip_map(double b, std::mt19937_64& rng, int kmax)
{
    if (kmax < 1) throw std::invalid_argument("random_strip_map: kmax < 1");
    std::uniform_int_distribution<int> count(1, kmax), pick(1, kmax), sign(0, 1);
    std::uniform_real_distribution<double> U(0, 1);
    StripMapSpec f;
    f.b = b;
    int n = count(rng);
    for (int j = 0; j < n; ++j) {
        int k = pick(rng) * (sign(rng) ? 1 : -1);
        if (std::find(f.modes.begin(), f.modes.end(), k) != f.modes.end()) continue;
        f.modes.push_back(k);
        f.coeffs.push_back(std::polar(U(rng) + 0.05, 2 * pi * U(rng)));
    }
    double target = 0.2 + 0.75 * U(rng);
    double scale = target / f.derivative_excess(b);
    for (auto& a : f.coeffs) a *= scale;
    return f;
}

DistortionRecord audit_strip_map(const StripMapSpec& f, double c, double eps, int map_id)
{
    DistortionRecord r;
    r.map_id = map_id;
    r.b = f.b;
    r.c = c;
    r.empirical_sup = empirical_distortion(f, c);
    r.bound = f.b > c ? bound_displacement(f.b - c, f.b) : eps;
    r.margin = r.bound - r.empirical_sup;
    if (f.b > 3) {
        double Y = f.b - 3;
        int nx = 64, ny = 64;
        for (int j = 1; j < ny; ++j) {
            double y = -Y + 2 * Y * j / ny;
            double bd = bound_displacement(y, f.b);
            for (int i = 0; i < nx; ++i) {
                cplx z(double(i) / nx, y);
                if (std::abs(f.eval(z) - z) > bd) ++r.pointwise_violations;
            }
        }
    }
    return r;
}

} // namespace graftlab
