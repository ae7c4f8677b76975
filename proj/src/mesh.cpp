#include "graftlab/mesh.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "graftlab/errors.hpp"

namespace graftlab {

namespace {

std::pair<int, int> key(int a, int b) { return a < b ? std::make_pair(a, b) : std::make_pair(b, a); }

} // namespace

void TriMesh::build()
{
    const int nv = static_cast<int>(verts.size());
    const int nt = static_cast<int>(tris.size());
    edges_.clear();
    edge_index_.clear();
    tri_edges_.assign(nt, {-1, -1, -1});
    edge_tris_.clear();
    std::map<std::pair<int, int>, int> half;   // directed edge -> triangle
    for (int t = 0; t < nt; ++t) {
        const auto& v = tris[t];
        for (int k = 0; k < 3; ++k) {
            if (v[k] < 0 || v[k] >= nv) throw MeshError("triangle " + std::to_string(t) + " has a bad vertex index");
            if (v[k] == v[(k + 1) % 3]) throw MeshError("triangle " + std::to_string(t) + " is degenerate");
        }
        for (int k = 0; k < 3; ++k) {
            int a = v[(k + 1) % 3], b = v[(k + 2) % 3];
            if (!half.emplace(std::make_pair(a, b), t).second)
                throw MeshError("directed edge repeated (non-manifold or inconsistent orientation)");
            auto kk = key(a, b);
            auto it = edge_index_.find(kk);
            int e;
            if (it == edge_index_.end()) {
                e = static_cast<int>(edges_.size());
                edges_.push_back({kk.first, kk.second});
                edge_tris_.push_back({t, -1});
                edge_index_[kk] = e;
            } else {
                e = it->second;
                if (edge_tris_[e][1] != -1) throw MeshError("edge shared by more than two triangles");
                edge_tris_[e][1] = t;
            }
            tri_edges_[t][k] = e;
        }
    }
    for (size_t e = 0; e < edges_.size(); ++e)
        if (edge_tris_[e][1] == -1) throw MeshError("mesh has a boundary edge");
    if (u.size() != verts.size()) u.assign(verts.size(), 0.0);
    if (!lambda.empty() && lambda.size() != edges_.size())
        throw MeshError("lambda size does not match edge count");
}

int TriMesh::edge_between(int a, int b) const
{
    auto it = edge_index_.find(key(a, b));
    return it == edge_index_.end() ? -1 : it->second;
}

int TriMesh::shared_edge(int t1, int t2) const
{
    int found = -1, count = 0;
    for (int k = 0; k < 3; ++k) {
        int e = tri_edges_[t1][k];
        const auto& et = edge_tris_[e];
        if ((et[0] == t1 && et[1] == t2) || (et[1] == t1 && et[0] == t2)) {
            found = e;
            ++count;
        }
    }
    if (count != 1)
        throw MeshError("triangles " + std::to_string(t1) + " and " + std::to_string(t2) +
                        (count == 0 ? " are not adjacent" : " share several edges"));
    return found;
}

int TriMesh::euler_characteristic() const
{
    return static_cast<int>(verts.size()) - num_edges() + static_cast<int>(tris.size());
}

int TriMesh::num_cusps() const
{
    int n = 0;
    for (const auto& v : verts) n += v.cusp;
    return n;
}

void TriMesh::set_euclidean_lengths(const std::vector<double>& len)
{
    if (len.size() != edges_.size()) throw std::invalid_argument("set_euclidean_lengths: size mismatch");
    lambda.resize(len.size());
    for (size_t e = 0; e < len.size(); ++e) {
        if (!(len[e] > 0)) throw MeshError("edge length must be positive");
        lambda[e] = 2 * std::log(len[e] / 2);
    }
}

double TriMesh::euclidean_length(int e) const { return 2 * std::exp(lambda[e] / 2); }

void TriMesh::validate() const
{
    if (edges_.empty()) throw MeshError("mesh not built");
    if (lambda.size() != edges_.size()) throw MeshError("edge parameters missing");
    for (double l : lambda)
        if (!std::isfinite(l)) throw MeshError("non-finite edge parameter");
    const int nt = static_cast<int>(tris.size());
    for (int t = 0; t < nt; ++t) {
        int c = 0;
        for (int k = 0; k < 3; ++k) c += verts[tris[t][k]].cusp;
        if (c > 1) throw MeshError("triangle " + std::to_string(t) + " has more than one cusp vertex");
    }
    if (base_triangle < 0 || base_triangle >= nt) throw MeshError("base triangle out of range");
    for (const auto& [name, lp] : loops) {
        if (lp.size() < 2) throw MeshError("loop " + name + " too short");
        if (lp.front() != base_triangle) throw MeshError("loop " + name + " does not start at the base triangle");
        for (size_t i = 0; i < lp.size(); ++i) {
            int a = lp[i], b = lp[(i + 1) % lp.size()];
            if (a < 0 || a >= nt || b < 0 || b >= nt) throw MeshError("loop " + name + " has a bad triangle index");
            shared_edge(a, b);
        }
    }
}

void TriMesh::write(std::ostream& out) const
{
    out << "graftlab-trimesh 1\n" << std::setprecision(17);
    out << "vertices " << verts.size() << "\n";
    for (size_t i = 0; i < verts.size(); ++i)
        out << verts[i].x << " " << verts[i].y << " " << (verts[i].cusp ? 1 : 0) << " " << (i < u.size() ? u[i] : 0.0) << "\n";
    out << "triangles " << tris.size() << "\n";
    for (const auto& t : tris) out << t[0] << " " << t[1] << " " << t[2] << "\n";
    out << "edges " << edges_.size() << "\n";
    for (size_t e = 0; e < edges_.size(); ++e)
        out << edges_[e][0] << " " << edges_[e][1] << " " << (e < lambda.size() ? lambda[e] : 0.0) << "\n";
    out << "base " << base_triangle << "\n";
    out << "loops " << loops.size() << "\n";
    for (const auto& [name, lp] : loops) {
        out << name << " " << lp.size();
        for (int t : lp) out << " " << t;
        out << "\n";
    }
}

TriMesh TriMesh::read(std::istream& in)
{
    auto fail = [](const std::string& what) { throw std::invalid_argument("TriMesh::read: " + what); };
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != "graftlab-trimesh" || version != 1) fail("bad header");
    auto expect = [&](const char* word) {
        std::string w;
        long n = -1;
        if (!(in >> w >> n) || w != word || n < 0) fail(std::string("expected '") + word + "'");
        return n;
    };
    TriMesh m;
    long nv = expect("vertices");
    m.verts.resize(nv);
    m.u.resize(nv);
    for (long i = 0; i < nv; ++i) {
        int c;
        if (!(in >> m.verts[i].x >> m.verts[i].y >> c >> m.u[i])) fail("vertex table");
        m.verts[i].cusp = c != 0;
    }
    long nt = expect("triangles");
    m.tris.resize(nt);
    for (long t = 0; t < nt; ++t)
        if (!(in >> m.tris[t][0] >> m.tris[t][1] >> m.tris[t][2])) fail("triangle table");
    long ne = expect("edges");
    std::vector<std::array<int, 2>> ev(ne);
    std::vector<double> lam(ne);
    for (long e = 0; e < ne; ++e)
        if (!(in >> ev[e][0] >> ev[e][1] >> lam[e])) fail("edge table");
    m.base_triangle = static_cast<int>(expect("base"));
    long nl = expect("loops");
    for (long l = 0; l < nl; ++l) {
        std::string name;
        long n;
        if (!(in >> name >> n) || n < 0) fail("loop header");
        std::vector<int> lp(n);
        for (long i = 0; i < n; ++i)
            if (!(in >> lp[i])) fail("loop " + name);
        m.loops[name] = lp;
    }
    m.build();
    if (m.num_edges() != ne) fail("edge count does not match triangles");
    m.lambda.assign(ne, 0);
    for (long e = 0; e < ne; ++e) {
        int idx = m.edge_between(ev[e][0], ev[e][1]);
        if (idx < 0) fail("edge table lists a non-edge");
        m.lambda[idx] = lam[e];
    }
    return m;
}

} // namespace graftlab
