#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "graftlab/mesh.hpp"
#include "graftlab/pants.hpp"

namespace graftlab {

enum class GraftingMode { FlatStrebel, Geodesic };

struct FlatPuncture {
    std::string name;
    double x = 0, y = 0;   // position in S_E
};

// Flat model: S_E is the annulus R/Z x [0, height] with punctures; the top circle is glued
// back to the bottom one by w -> w - (shift + i height), so S is the punctured torus
// C / (Z + tau0 Z), tau0 = shift + i height. The grafted curve alpha is the bottom circle,
// traversed towards +x, S_E on its left. alpha(0) is x = 0 on the bottom and x = shift on top.
// Geodesic mode is accepted when a reflection fixes the bottom circle, which is then the
// geodesic representative, so grafting along it is the same straight insertion.
struct SurfaceSpec {
    std::string name = "surface";
    GraftingMode mode = GraftingMode::FlatStrebel;
    std::string topology = "punctured-torus";   // or "twice-punctured-torus"
    double height = 1;
    double shift = 0;
    std::vector<FlatPuncture> punctures;
    PantsDecomposition pd;
    std::optional<FNCoords> base;   // filled in after measuring, informational
    int columns = 32;               // grid samples around alpha at default resolution

    const std::string& curve() const { return pd.grafted.front(); }
    // throws std::invalid_argument
    void validate() const;

    static SurfaceSpec punctured_torus(double height, double shift, int columns = 32);
    static SurfaceSpec twice_punctured_torus(double height, double shift, FlatPuncture p, FlatPuncture q,
                                             int columns = 32);
};

void to_json(nlohmann::json& j, const SurfaceSpec& s);
void from_json(const nlohmann::json& j, SurfaceSpec& s);

struct GraftingVector {
    std::map<std::string, double> t;
    double at(const std::string& curve) const;
    // componentwise order
    bool operator<=(const GraftingVector& o) const;
    void validate() const;
};

// Triangulated flat grid with the bookkeeping needed to follow rows and columns.
struct GraftedMesh {
    TriMesh mesh;
    int columns = 0;
    int row_min = 0, row_max = 0;   // vertex rows; S_E occupies rows 0..se_rows
    int se_rows = 0;
    int base_row = 0;               // row of the base square, above every puncture
    int low_row = 0;                // lowest puncture row
    bool periodic = false;          // torus model: row row_max + 1 wraps to row 0
    int wrap_shift = 0;             // (i, row_max + 1) == (i - wrap_shift, 0)
    int cap_bottom = -1, cap_top = -1;   // apex cusp vertices of S_inf
    std::vector<double> row_y;      // heights of rows row_min..row_max (+1 when periodic)
    double cylinder = 0;            // grafted height t (periodic model) or H

    int vertex(int i, int j) const;
    // triangles of square (i, j) spanning rows j, j + 1: {lower, upper}
    std::array<int, 2> square(int i, int j) const;
    int cap_triangle(bool top, int i) const;
    double y(int j) const { return row_y[j - row_min]; }

    std::vector<int> vertex_ids;
    std::vector<std::array<int, 2>> square_tris;
    std::vector<int> cap_tris_bottom, cap_tris_top;
};

// default resolution: spec.columns; refine multiplies the columns
GraftedMesh build_St_mesh(const SurfaceSpec& spec, const GraftingVector& t, int refine = 1);
GraftedMesh build_Sinfty_mesh(const SurfaceSpec& spec, double H = 8, int refine = 1);

struct SeamTrace {
    std::vector<double> s;       // depth into the half cylinder
    std::vector<double> theta;   // unwrapped
};

struct LimitFit {
    double theta_inf = 0;   // in [0, 1)
    double amplitude = 0;
    double residual = 0;    // rms
};

struct LimitingAngles {
    SeamTrace trace_plus, trace_minus;
    LimitFit plus, minus;
    double predicted = 0;   // theta+ - theta- in [0, 1/2)
};

// fit theta(s) = theta_inf + A exp(-2 pi s) over s in [from, to]
LimitFit fit_limit(const SeamTrace& tr, double from, double to);

// mesh must be uniformized; window is [window_from * H, H]
LimitingAngles limiting_angles(const GraftedMesh& sinf, const SurfaceSpec& spec, double window_from = 0.5,
                               double max_residual = 1e-4);

} // namespace graftlab
