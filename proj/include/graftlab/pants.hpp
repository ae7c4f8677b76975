#pragma once

#include <array>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "graftlab/hyp_core.hpp"

namespace graftlab {

// One boundary slot of a pair of pants: a side of a curve in F, or a cusp.
struct Slot {
    std::string curve;   // empty for cusps
    int side = +1;       // +1 or -1
    std::string cusp;    // cusp name when curve is empty

    bool is_cusp() const { return curve.empty(); }
    std::string label() const;
};

struct Pants {
    std::string name;
    std::array<Slot, 3> slots;
};

struct SlotRef {
    int pants = -1;
    int slot = -1;
};

struct PantsDecomposition {
    std::vector<std::string> curves;    // F
    std::vector<std::string> grafted;   // E
    std::vector<Pants> pants;

    // throws AssemblyError on inconsistent input
    void validate() const;
    int genus() const;
    int cusps() const;
    SlotRef plus_slot(const std::string& curve) const;
    SlotRef minus_slot(const std::string& curve) const;
    // slot index of the seam end chosen from slot k of pants p
    int seam_partner(int p, int k) const;
    bool is_grafted(const std::string& curve) const;
};

struct FNCoords {
    std::map<std::string, double> length;
    std::map<std::string, double> twist;
};

struct Letter {
    std::string gen;
    int power = 1;
};
using Word = std::vector<Letter>;

Word parse_word(const std::string& s);
std::string format_word(const Word& w);

struct MarkedGroup {
    std::vector<std::string> names;
    std::vector<MobiusMap> gens;
    std::vector<Word> relators;
    std::map<std::string, Word> curve_map;                      // plus side boundary element
    std::map<std::string, std::pair<Word, Word>> seam_targets;  // (plus target, minus target)
    MobiusMap basepoint_frame;

    const MobiusMap& gen(const std::string& name) const;
    void set(const std::string& name, const MobiusMap& m);
    MobiusMap eval(const Word& w) const;
    // max deviation of any relator from +-I, relative to the size of its letters
    double relator_residual() const;
    // subgroup on the listed generators, keeping curves and seams expressible in them
    MarkedGroup restrict_to(const std::vector<std::string>& keep) const;
};

double hexagon_side(double l1, double l2, double l3);

// curves glued along the breadth-first spanning tree of the pants graph
std::set<std::string> spanning_curves(const PantsDecomposition& pd);
// generator names (identity matrices), relators, curve words and seam targets of build_group
MarkedGroup marking_template(const PantsDecomposition& pd);

MarkedGroup build_group(const FNCoords& fn, const PantsDecomposition& pd);
FNCoords measure_fn(const MarkedGroup& g, const PantsDecomposition& pd);
double group_distance(const MarkedGroup& g1, const MarkedGroup& g2);

// wrap to [0, 1/2)
double half_twist(double x);
// signed distance between two classes in R / (1/2)Z, in [-1/4, 1/4)
double half_twist_diff(double a, double b);

// standard decompositions used by the experiments
PantsDecomposition one_holed_torus_pd(const std::string& curve = "a", const std::string& cusp = "p");
PantsDecomposition twice_punctured_torus_pd();
PantsDecomposition four_punctured_sphere_pd();

void to_json(nlohmann::json& j, const PantsDecomposition& pd);
void from_json(const nlohmann::json& j, PantsDecomposition& pd);
void to_json(nlohmann::json& j, const FNCoords& fn);
void from_json(const nlohmann::json& j, FNCoords& fn);

} // namespace graftlab
