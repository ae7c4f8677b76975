#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace graftlab {

struct MeshVertex {
    double x = 0, y = 0;   // chart position, informational
    bool cusp = false;
};

// Closed oriented triangulated surface carrying a discrete conformal structure.
// Edge parameter lambda: hyperbolic length after scaling is 2 asinh(exp((lambda + u_i + u_j) / 2)).
// For an edge ending at a cusp the cusp carries no factor.
// Marked loops are closed sequences of triangles, consecutive ones sharing an edge.
class TriMesh {
public:
    std::vector<MeshVertex> verts;
    std::vector<std::array<int, 3>> tris;   // counterclockwise
    std::vector<double> lambda;             // per edge, in edge order
    std::vector<double> u;                  // per vertex, 0 at cusps
    std::map<std::string, std::vector<int>> loops;
    int base_triangle = 0;

    // derive edges and adjacency from tris; throws MeshError unless closed and manifold
    void build();

    int num_edges() const { return static_cast<int>(edges_.size()); }
    const std::array<int, 2>& edge(int e) const { return edges_[e]; }
    // edge of triangle t opposite its corner k
    int tri_edge(int t, int k) const { return tri_edges_[t][k]; }
    // the two triangles on either side of e
    const std::array<int, 2>& edge_tris(int e) const { return edge_tris_[e]; }
    int edge_between(int a, int b) const;          // -1 if none
    int shared_edge(int t1, int t2) const;         // throws unless exactly one shared edge

    int euler_characteristic() const;
    int num_cusps() const;
    int num_finite() const { return static_cast<int>(verts.size()) - num_cusps(); }

    // lambda = 2 log(len / 2)
    void set_euclidean_lengths(const std::vector<double>& len);
    double euclidean_length(int e) const;

    // throws MeshError for bad loops or triangles with two cusp corners
    void validate() const;

    void write(std::ostream& out) const;
    static TriMesh read(std::istream& in);

private:
    std::vector<std::array<int, 2>> edges_;
    std::vector<std::array<int, 3>> tri_edges_;
    std::vector<std::array<int, 2>> edge_tris_;
    std::map<std::pair<int, int>, int> edge_index_;
};

} // namespace graftlab
