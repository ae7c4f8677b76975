#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace graftlab {

// w = arcsinh(1 / sinh(l/2))
double collar_width(double l);

struct CollarModulus {
    double lower = 0;   // pi/l - 1
    double upper = 0;   // pi/l
    double exact = 0;   // solves sec(m l / 2) = cosh(collar_width(l))
};
CollarModulus collar_modulus_bounds(double l);

// largest length allowed for a curve across which a cylinder of modulus t is grafted
double pinching_bound(double t);

// log(1 + 2 b / c) with b = t/2 - 1; zero when t <= 2
double distance_across_bound(double t, double c);

struct StraightCylinder {
    double circumference = 1;
    double y0 = 0;
    double y1 = 1;
    double modulus() const { return (y1 - y0) / circumference; }
};

// Vertex lattice on the flat cylinder C/Z with spacing h = 1/cols.
// Vertex (i, j) sits at x = i h, y = y0 + j h. Vertices outside the region are
// boundary: those connected (through the complement) to row 0 carry u = 0, those
// connected to the last row carry u = 1, any other complementary pocket is a hole
// with natural boundary condition.
class GridRegion {
public:
    GridRegion() = default;
    GridRegion(int cols, int rows, double y0 = 0);

    int cols() const { return cols_; }
    int rows() const { return rows_; }
    double h() const { return 1.0 / cols_; }
    double y0() const { return y0_; }
    double x(int i) const { return i * h(); }
    double y(int j) const { return y0_ + j * h(); }

    bool inside(int i, int j) const { return mask_[index(i, j)] != 0; }
    void set(int i, int j, bool v) { mask_[index(i, j)] = v ? 1 : 0; }
    int count() const;

    // true when the region contains a lattice loop winding once around the cylinder
    bool essential() const;

    // boundary label per vertex: -1 region, 0 bottom, 1 top, 2 hole
    std::vector<int8_t> boundary_labels() const;

    static GridRegion straight(int cols, double modulus);

    void write_rle(std::ostream& out) const;
    static GridRegion read_rle(std::istream& in);

private:
    int index(int i, int j) const;
    int cols_ = 0, rows_ = 0;
    double y0_ = 0;
    std::vector<uint8_t> mask_;
};

// Two-sided estimate of the modulus of the essential loop family on the lattice domain.
// lower: 1 / Dirichlet energy of the discrete harmonic u with u = 0 at the bottom, 1 at
// the top. upper: minimal energy of the conjugate v = x + periodic, free on the boundary.
struct ModulusBracket {
    double lower = 0;
    double upper = 0;
};
ModulusBracket grid_modulus_bracket(const GridRegion& r);

// the conjugate (upper) estimate
double grid_modulus(const GridRegion& r);

// tallest band of full region rows, extended to the neighbouring boundary rows
double largest_straight_subcylinder(const GridRegion& r);

// C \ ([-1,0] u [e^{2 pi b}, oo)) pulled back by w = log(z)/(2 pi i), truncated `tail`
// units beyond each slit tip
GridRegion teichmuller_annulus_region(double b, int cols, double tail = 3.0);

// exact modulus of the Teichmuller ring above (arithmetic-geometric mean form)
double teichmuller_annulus_modulus(double b);

struct Notch {
    bool top = false;     // attached to the top boundary
    double center = 0;    // in [0, 1)
    double width = 0.2;   // support width, < 1
    double depth = 0.3;   // peak height of the sinusoidal bump
};

// straight cylinder of the given height with sinusoidal bumps pushed into it
GridRegion notched_cylinder(int cols, double height, const std::vector<Notch>& notches);

struct NotchedSample {
    double height = 0;
    std::vector<Notch> notches;
};
NotchedSample random_notches(std::mt19937_64& rng);

} // namespace graftlab
