#pragma once

#include "graftlab/mesh.hpp"
#include "graftlab/pants.hpp"

namespace graftlab {

// Geodesic triangulation of a fundamental domain of the once punctured torus built by
// build_group(fn, one_holed_torus_pd()). The domain is the ideal quadrilateral cut out by the
// side pairings P.0 and t.<curve>, split along a diagonal; each ideal triangle carries a
// barycentric grid with `subdivisions` steps per side, interior points placed by a Tutte
// embedding in the Klein model. Edge parameters are exact, so u = 0 is the uniformized state.
// Loops for P.0, P.1, P.2 and t.<curve> are attached.
TriMesh torus_domain_mesh(const FNCoords& fn, const PantsDecomposition& pd, int subdivisions = 12);

} // namespace graftlab
