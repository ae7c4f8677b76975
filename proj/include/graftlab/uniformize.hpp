#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "graftlab/hyp_core.hpp"
#include "graftlab/mesh.hpp"
#include "graftlab/pants.hpp"

namespace graftlab {

// Clausen function Cl2 and Milnor's Lobachevsky function L(x) = Cl2(2x) / 2
double clausen2(double theta);
double lobachevsky(double x);

// hyperbolic length of edge e under factors u; +inf for edges ending at a cusp
double hyperbolic_length(const TriMesh& m, const std::vector<double>& u, int e);

// corner angles of triangle t in the order of m.tris[t]; a cusp corner has angle 0.
// Collapsed triangles return 0 / pi angles.
std::array<double, 3> triangle_angles(const TriMesh& m, const std::vector<double>& u, int t);
bool triangle_degenerate(const TriMesh& m, const std::vector<double>& u, int t);

// convex discrete conformal energy; its gradient in u_v is 2 pi - (angle sum at v) for finite v
double conformal_energy(const TriMesh& m, const std::vector<double>& u);
std::vector<double> energy_gradient(const TriMesh& m, const std::vector<double>& u);

// sum over triangles of (pi - angle sum)
double hyperbolic_area(const TriMesh& m, const std::vector<double>& u);
// Euler characteristic of the punctured surface
int punctured_euler_characteristic(const TriMesh& m);

struct UniformizeOptions {
    double tol = 1e-10;            // on max |gradient|
    int max_iter = 100;
    double regularization = 1e-12;
    std::ostream* diagnostics = nullptr;   // one JSON object per iteration
};

struct UniformizeReport {
    int iterations = 0;
    double energy = 0;
    double grad_norm = 0;
    std::vector<double> energies;   // energy before each accepted step, then the final one
};

// damped Newton on the energy starting from m.u; the result is written back to m.u
UniformizeReport uniformize(TriMesh& m, const UniformizeOptions& opt = {});

// corner positions of triangle t laid out with its first finite corner at i; cusps at infinity
std::array<cplx, 3> canonical_placement(const TriMesh& m, int t);
// isometry placing triangle t2 next to t (both in canonical position); t and t2 must be adjacent
MobiusMap transition(const TriMesh& m, int t, int t2);
MobiusMap loop_holonomy(const TriMesh& m, const std::vector<int>& loop);

// developed copies of the triangles of a path; entry k maps canonical(path[k]) into the frame of path[0]
std::vector<MobiusMap> develop_path(const TriMesh& m, const std::vector<int>& path);

// generators from the mesh loops named like those of build_group; relators of missing
// generators are dropped. Throws MeshError when a relator is off by more than 1e-6.
MarkedGroup holonomy(const TriMesh& m, const PantsDecomposition& pd);

struct CurveLength {
    double length = 0;
    bool cusp = false;
};
// from the trace of the loop holonomy
CurveLength geodesic_length(const TriMesh& m, const std::string& loop);
// shortest closed path through the edges crossed by the loop (upper bound for the geodesic)
double shortened_length(const TriMesh& m, const std::vector<int>& loop);

// curves whose holonomy is parabolic get length 0 and no twist entry
FNCoords measure_surface(const TriMesh& m, const PantsDecomposition& pd);

} // namespace graftlab
