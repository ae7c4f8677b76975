#pragma once

#include <complex>
#include <random>
#include <vector>

namespace graftlab {

using cplx = std::complex<double>;

struct DistortionBounds {
    // sqrt(8/pi)
    static constexpr double C1 = 1.5957691216057307117597842397375274739034345246597;
    // 8 pi e^{5 pi} (C1 + 1)
    static constexpr double C2 = 432900104.65161026680983773644756555709213643843277;
};

// f(z) = z + sum_k a_k (e^{2 pi i k z} - 1) on the strip |Im z| < b
struct StripMapSpec {
    double b = 4;
    std::vector<int> modes;
    std::vector<cplx> coeffs;

    cplx eval(cplx z) const;
    cplx deriv(cplx z) const;
    cplx deriv2(cplx z) const;

    // sum 2 pi |k| |a_k| e^{2 pi |k| y}; bounds |f' - 1| on |Im z| <= y
    double derivative_excess(double y) const;
    // derivative_excess(b) < 1
    bool certified() const;

    static StripMapSpec identity(double b);
};

double bound_fprime();
double bound_fsecond(double y, double b);
double bound_fprime_real(double b);
double bound_displacement(double y, double b);

// g(c) = C2 e^{-2 pi c} (1 + (c+1)^2)
double displacement_envelope(double c);
double buffer_for_epsilon(double eps);

// certified sup of |f(z) - z| over |Im z| <= b - c (0 when that strip is empty)
double empirical_distortion(const StripMapSpec& f, double c, int nx = 128);

// random certified map with 1..kmax modes, certificate value in [0.2, 0.95]
StripMapSpec random_strip_map(double b, std::mt19937_64& rng, int kmax = 4);

struct DistortionRecord {
    int map_id = 0;
    double b = 0, c = 0;
    double empirical_sup = 0;
    double bound = 0;
    double margin = 0;
    int pointwise_violations = 0;   // grid points in |Im z| < b - 3 over bound_displacement
};

// b > c: bound = bound_displacement(b - c, b); otherwise the strip is empty and bound = eps
DistortionRecord audit_strip_map(const StripMapSpec& f, double c, double eps, int map_id = 0);

} // namespace graftlab
