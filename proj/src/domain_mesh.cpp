#include "graftlab/domain_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "graftlab/errors.hpp"

namespace graftlab {

namespace {

cplx klein_from_uhp(cplx z)
{
    cplx p = to_disk(z);
    return 2.0 * p / (1.0 + std::norm(p));
}

cplx uhp_from_klein(cplx k)
{
    double r2 = std::norm(k);
    if (r2 >= 1) return from_disk(k / std::sqrt(r2));
    return from_disk(k / (1.0 + std::sqrt(1.0 - r2)));
}

cplx ideal_to_klein(double x) { return to_disk(cplx(x, 0)); }

// horocycle diameter at p after applying m
double push_horocycle(const MobiusMap& m, double p, double delta)
{
    double den = m.c() * p + m.d();
    return delta / (den * den);
}

struct Corner {
    int id;        // mesh vertex
    cplx z;        // position in this triangle's copy (upper half plane)
    int ideal;     // which of v0..v3, or -1
};

} // namespace

TriMesh torus_domain_mesh(const FNCoords& fn, const PantsDecomposition& pd, int N)
{
    if (N < 2) throw std::invalid_argument("torus_domain_mesh: subdivisions must be at least 2");
    if (pd.pants.size() != 1 || pd.curves.size() != 1 || !pd.pants[0].slots[2].is_cusp())
        throw std::invalid_argument("torus_domain_mesh: expects the once punctured torus decomposition");
    const std::string tname = "t." + pd.curves[0];
    MarkedGroup G = build_group(fn, pd);
    // generic position so that no vertex of the domain sits at infinity
    MobiusMap C = MobiusMap::rotation_about_i(0.37);
    MobiusMap A = C * G.gen("P.0") * C.inverse();
    MobiusMap B = C * G.gen(tname) * C.inverse();
    MobiusMap Bi = B.inverse();

    MobiusMap K = B * A.inverse() * Bi * A;
    if (classify(K).kind != MobiusKind::Parabolic) throw AssemblyError("torus_domain_mesh: commutator is not parabolic");
    std::array<double, 4> v;
    v[0] = axis(K).p;
    v[1] = Bi.apply_boundary(v[0]);
    v[2] = (A * Bi).apply_boundary(v[0]);
    v[3] = A.apply_boundary(v[0]);
    for (double x : v)
        if (!std::isfinite(x) || std::abs(x) > 1e6) throw AssemblyError("torus_domain_mesh: domain vertex at infinity");
    // one horocycle, pushed around by the side pairings
    std::array<double, 4> delta;
    delta[0] = 0.05 * (1 + v[0] * v[0]);
    delta[1] = push_horocycle(Bi, v[0], delta[0]);
    delta[2] = push_horocycle(A * Bi, v[0], delta[0]);
    delta[3] = push_horocycle(A, v[0], delta[0]);

    std::array<cplx, 4> kv;
    for (int k = 0; k < 4; ++k) kv[k] = ideal_to_klein(v[k]);

    // shared samples, s = 1..N-1 steps from v0
    auto lerp = [&](cplx a, cplx b, int s) { return a + (b - a) * (static_cast<double>(s) / N); };
    TriMesh m;
    auto new_vertex = [&](cplx k, bool cusp = false) {
        cplx z = uhp_from_klein(k);
        m.verts.push_back({z.real(), z.imag(), cusp});
        return static_cast<int>(m.verts.size()) - 1;
    };
    const int cusp = new_vertex(kv[0], true);
    std::vector<int> side01(N + 1, cusp), side03(N + 1, cusp), diag(N + 1, cusp);
    std::vector<cplx> pos01(N + 1), pos03(N + 1), posd(N + 1);
    for (int s = 1; s < N; ++s) {
        pos01[s] = lerp(kv[0], kv[1], s);
        pos03[s] = lerp(kv[0], kv[3], s);
        posd[s] = lerp(kv[0], kv[2], s);
        side01[s] = new_vertex(pos01[s]);
        side03[s] = new_vertex(pos03[s]);
        diag[s] = new_vertex(posd[s]);
    }

    // triangle T (0: v0 v1 v2, 1: v0 v2 v3), barycentric (a, b, c) on its corners
    const std::array<std::array<int, 3>, 2> corners{{{0, 1, 2}, {0, 2, 3}}};
    std::array<std::map<std::array<int, 2>, Corner>, 2> grid;
    auto idx = [](int b, int c) { return std::array<int, 2>{b, c}; };
    for (int T = 0; T < 2; ++T) {
        auto& gr = grid[T];
        const auto& cn = corners[T];
        std::map<std::array<int, 2>, cplx> kpos;
        std::set<std::array<int, 2>> interior;
        for (int b = 0; b <= N; ++b)
            for (int c = 0; b + c <= N; ++c) {
                int a = N - b - c;
                Corner q{-1, {}, -1};
                cplx k;
                if (a == N || b == N || c == N) {
                    int which = a == N ? cn[0] : b == N ? cn[1] : cn[2];
                    q = {cusp, cplx(v[which], 0), which};
                    kpos[idx(b, c)] = kv[which];
                    gr[idx(b, c)] = q;
                    continue;
                }
                if (T == 0 && c == 0) { k = pos01[b]; q.id = side01[b]; }
                else if (T == 0 && b == 0) { k = posd[c]; q.id = diag[c]; }
                else if (T == 0 && a == 0) {
                    // [v1, v2] = B^-1 [v0, v3], c steps from v1
                    q.id = side03[c];
                    k = klein_from_uhp(Bi.apply(uhp_from_klein(pos03[c])));
                } else if (T == 1 && c == 0) { k = posd[b]; q.id = diag[b]; }
                else if (T == 1 && b == 0) { k = pos03[c]; q.id = side03[c]; }
                else if (T == 1 && a == 0) {
                    // [v3, v2] = A [v0, v1], b steps from v3
                    q.id = side01[b];
                    k = klein_from_uhp(A.apply(uhp_from_klein(pos01[b])));
                } else {
                    k = (static_cast<double>(a) * kv[cn[0]] + static_cast<double>(b) * kv[cn[1]] +
                         static_cast<double>(c) * kv[cn[2]]) / static_cast<double>(N);
                    interior.insert(idx(b, c));
                }
                kpos[idx(b, c)] = k;
                gr[idx(b, c)] = q;
            }
        // Tutte relaxation of the interior in the Klein model
        const int nb[6][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}};
        for (int it = 0; it < 20000; ++it) {
            double moved = 0;
            for (const auto& key : interior) {
                cplx s = 0;
                for (const auto& d : nb) s += kpos.at(idx(key[0] + d[0], key[1] + d[1]));
                s /= 6.0;
                moved = std::max(moved, std::abs(s - kpos[key]));
                kpos[key] = s;
            }
            if (moved < 1e-15) break;
        }
        for (auto& [key, q] : gr) {
            if (q.ideal >= 0) continue;
            if (interior.count(key)) q.id = new_vertex(kpos[key]);
            q.z = uhp_from_klein(kpos[key]);
        }
    }

    // small triangles; remember which domain triangle each came from
    std::vector<std::array<Corner, 3>> tc;
    std::vector<int> region;
    for (int T = 0; T < 2; ++T) {
        const auto& gr = grid[T];
        auto add = [&](std::array<int, 2> p, std::array<int, 2> q, std::array<int, 2> r) {
            std::array<Corner, 3> c{gr.at(p), gr.at(q), gr.at(r)};
            // orientation from Klein positions of the corners
            auto kp = [&](const Corner& x) { return x.ideal >= 0 ? kv[x.ideal] : klein_from_uhp(x.z); };
            cplx e1 = kp(c[1]) - kp(c[0]), e2 = kp(c[2]) - kp(c[0]);
            if ((std::conj(e1) * e2).imag() < 0) std::swap(c[1], c[2]);
            tc.push_back(c);
            region.push_back(T);
        };
        for (int b = 0; b < N; ++b)
            for (int c = 0; b + c < N; ++c) {
                add(idx(b, c), idx(b + 1, c), idx(b, c + 1));
                if (b + c < N - 1) add(idx(b + 1, c), idx(b + 1, c + 1), idx(b, c + 1));
            }
    }
    for (const auto& c : tc) m.tris.push_back({c[0].id, c[1].id, c[2].id});
    m.build();

    // exact edge parameters, checked for agreement across the side pairings
    m.lambda.assign(m.num_edges(), std::nan(""));
    for (size_t t = 0; t < tc.size(); ++t)
        for (int k = 0; k < 3; ++k) {
            const Corner& p = tc[t][(k + 1) % 3];
            const Corner& q = tc[t][(k + 2) % 3];
            double lam;
            if (p.ideal >= 0 || q.ideal >= 0) {
                const Corner& id = p.ideal >= 0 ? p : q;
                const Corner& fin = p.ideal >= 0 ? q : p;
                double x = v[id.ideal];
                lam = std::log(std::norm(fin.z - x) / (fin.z.imag() * delta[id.ideal]));
            } else {
                double d = distance(p.z, q.z);
                lam = 2 * std::log(std::sinh(d / 2));
            }
            int e = m.tri_edge(static_cast<int>(t), k);
            if (std::isnan(m.lambda[e])) m.lambda[e] = lam;
            else if (std::abs(m.lambda[e] - lam) > 1e-8 * (1 + std::abs(lam)))
                throw AssemblyError("torus_domain_mesh: side pairing mismatch on an edge");
        }
    m.u.assign(m.verts.size(), 0.0);

    // loops: paths inside the domain, crossing exactly one paired side
    std::set<int> side_edges;
    for (int s = 0; s < N; ++s) {
        side_edges.insert(m.edge_between(side01[s], side01[s + 1]));
        side_edges.insert(m.edge_between(side03[s], side03[s + 1]));
    }
    const int nt = static_cast<int>(m.tris.size());
    m.base_triangle = -1;
    for (int t = 0; t < nt && m.base_triangle < 0; ++t) {
        bool touches = false;
        for (int k = 0; k < 3; ++k) touches |= m.verts[m.tris[t][k]].cusp || side_edges.count(m.tri_edge(t, k));
        if (!touches && region[t] == 0) m.base_triangle = t;
    }
    if (m.base_triangle < 0) throw std::invalid_argument("torus_domain_mesh: subdivisions too small");
    std::vector<int> parent(nt, -2);
    parent[m.base_triangle] = -1;
    std::vector<int> queue{m.base_triangle};
    for (size_t q = 0; q < queue.size(); ++q) {
        int t = queue[q];
        for (int k = 0; k < 3; ++k) {
            int e = m.tri_edge(t, k);
            if (side_edges.count(e)) continue;
            auto et = m.edge_tris(e);
            int t2 = et[0] == t ? et[1] : et[0];
            if (parent[t2] != -2) continue;
            parent[t2] = t;
            queue.push_back(t2);
        }
    }
    auto to_base = [&](int t) {
        std::vector<int> p;
        for (int x = t; x != -1; x = parent[x]) p.push_back(x);
        return p;   // t ... base
    };
    // crossing the side through the edge between sample s and s + 1, leaving region `from`
    auto crossing = [&](int a, int b, int from) {
        int e = m.edge_between(a, b);
        auto et = m.edge_tris(e);
        int out = region[et[0]] == from ? et[0] : et[1];
        int in = out == et[0] ? et[1] : et[0];
        auto p1 = to_base(out);
        std::reverse(p1.begin(), p1.end());   // base ... out
        auto p2 = to_base(in);                // in ... base
        p2.pop_back();
        p1.insert(p1.end(), p2.begin(), p2.end());
        return p1;
    };
    const int mid = N / 2;
    // leaving through [v3, v2] lands in A(D)
    std::vector<int> la = crossing(side01[mid], side01[mid + 1], 1);
    // leaving through [v0, v3] lands in B(D)
    std::vector<int> lb = crossing(side03[mid], side03[mid + 1], 1);
    auto rev = [](std::vector<int> l) {
        std::reverse(l.begin() + 1, l.end());
        return l;
    };
    auto cat = [](std::vector<int> a, const std::vector<int>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    m.loops["P.0"] = la;
    m.loops[tname] = lb;
    // P.1 = t^-1 P.0^-1 t and P.2 = (P.0 P.1)^-1
    std::vector<int> p1 = cat(cat(rev(lb), rev(la)), lb);
    m.loops["P.1"] = p1;
    m.loops["P.2"] = cat(rev(p1), rev(la));
    m.validate();
    return m;
}

} // namespace graftlab
