#include "graftlab/grafting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "graftlab/errors.hpp"
#include "graftlab/uniformize.hpp"

namespace graftlab {

namespace {

constexpr double kPi = std::numbers::pi;

int mod(int a, int n) { return ((a % n) + n) % n; }

// number of grid rows for a length measured in units of the circumference
int grid_count(double len, int n, const char* what)
{
    double r = len * n;
    int k = static_cast<int>(std::lround(r));
    if (std::abs(r - k) > 1e-9 * std::max(1.0, r))
        throw std::invalid_argument(std::string("non-embeddable spec: ") + what + " is not a multiple of the grid step");
    return k;
}

struct Sq {
    int i, j;
};

// square sides: 0 bottom, 1 right, 2 top, 3 left
int side_tri(int parity, int side)
{
    switch (side) {
    case 0: return 0;
    case 2: return 1;
    case 1: return parity == 0 ? 0 : 1;
    default: return parity == 0 ? 1 : 0;
    }
}

struct Layout {
    GraftedMesh& g;
    int n;

    // normalise an unwrapped square into the stored range
    Sq norm_square(Sq s) const
    {
        if (g.periodic) {
            const int R = g.row_max - g.row_min + 1;
            while (s.j > g.row_max) { s.j -= R; s.i -= g.wrap_shift; }
            while (s.j < g.row_min) { s.j += R; s.i += g.wrap_shift; }
        } else if (s.j < g.row_min || s.j >= g.row_max) {
            throw std::logic_error("square row out of range");
        }
        s.i = mod(s.i, n);
        return s;
    }
    int parity(Sq s) const { return mod(s.i + s.j, 2); }
    int tri(Sq s, int side) const
    {
        Sq q = norm_square(s);
        return g.square(q.i, q.j)[side_tri(parity(q), side)];
    }
    int other(Sq s, int t) const
    {
        Sq q = norm_square(s);
        auto st = g.square(q.i, q.j);
        return st[0] == t ? st[1] : st[0];
    }

    std::vector<int> triangles(const std::vector<Sq>& path, int base, Sq base_sq) const
    {
        const int m = static_cast<int>(path.size());
        auto dir_side = [](Sq a, Sq b) {
            if (b.i == a.i + 1 && b.j == a.j) return 1;
            if (b.i == a.i - 1 && b.j == a.j) return 3;
            if (b.j == a.j + 1 && b.i == a.i) return 2;
            if (b.j == a.j - 1 && b.i == a.i) return 0;
            throw std::logic_error("square path has a jump");
        };
        std::vector<int> out;
        for (int k = 0; k < m; ++k) {
            Sq prev = path[(k + m - 1) % m], cur = path[k], next = path[(k + 1) % m];
            if (k == 0) {
                // the closing step compares unwrapped coordinates of the same square
                Sq c0 = norm_square(cur), pl = norm_square(prev);
                prev = {cur.i + (pl.i - c0.i), cur.j + (pl.j - c0.j)};
                Sq pn = norm_square(prev);
                (void)pn;
            }
            if (k == m - 1) {
                Sq nl = norm_square(next), c0 = norm_square(cur);
                next = {cur.i + (nl.i - c0.i), cur.j + (nl.j - c0.j)};
            }
            int tin = tri(cur, dir_side(cur, prev));
            int tout = tri(cur, dir_side(cur, next));
            out.push_back(tin);
            if (tout != tin) out.push_back(tout);
        }
        auto it = std::find(out.begin(), out.end(), base);
        if (it != out.end()) {
            std::rotate(out.begin(), it, out.end());
            return out;
        }
        int o = other(base_sq, base);
        it = std::find(out.begin(), out.end(), o);
        if (it == out.end()) throw std::logic_error("loop misses the base square");
        std::rotate(out.begin(), it, out.end());
        out.insert(out.begin(), base);
        out.push_back(o);
        return out;
    }
};

// closing a square path uses unwrapped coordinates, so steps across the seam i = n are fine
void walk(std::vector<Sq>& p, Sq to)
{
    Sq cur = p.back();
    while (cur.i != to.i) {
        cur.i += (to.i > cur.i) ? 1 : -1;
        p.push_back(cur);
    }
    while (cur.j != to.j) {
        cur.j += (to.j > cur.j) ? 1 : -1;
        p.push_back(cur);
    }
}

// the path ends where it started (in unwrapped coordinates) up to the periodicity; drop the repeat
std::vector<Sq> closed(std::vector<Sq> p)
{
    p.pop_back();
    return p;
}

struct Plan {
    int n = 0;
    int row_min = 0, row_max = 0;
    bool periodic = false;
    int shift = 0;
    std::vector<double> ys;
    std::vector<std::pair<int, int>> cusps;   // (i, j) of punctures
};

GraftedMesh build_grid(const Plan& p)
{
    GraftedMesh g;
    const int n = p.n;
    g.columns = n;
    g.row_min = p.row_min;
    g.row_max = p.row_max;
    g.periodic = p.periodic;
    g.wrap_shift = p.shift;
    g.row_y = p.ys;
    const int rows = p.row_max - p.row_min + 1;
    TriMesh& m = g.mesh;
    g.vertex_ids.resize(static_cast<size_t>(rows) * n);
    for (int j = p.row_min; j <= p.row_max; ++j)
        for (int i = 0; i < n; ++i) {
            g.vertex_ids[(j - p.row_min) * n + i] = static_cast<int>(m.verts.size());
            m.verts.push_back({static_cast<double>(i) / n, g.y(j), false});
        }
    for (auto [i, j] : p.cusps) m.verts[g.vertex(i, j)].cusp = true;

    std::map<std::pair<int, int>, double> len;
    auto add = [&](int a, int b, int c, double lab, double lbc, double lca) {
        m.tris.push_back({a, b, c});
        auto put = [&](int x, int y, double l) { len[{std::min(x, y), std::max(x, y)}] = l; };
        put(a, b, lab);
        put(b, c, lbc);
        put(c, a, lca);
        return static_cast<int>(m.tris.size()) - 1;
    };
    const double h = 1.0 / n;
    const int sq_rows = p.periodic ? rows : rows - 1;
    g.square_tris.resize(static_cast<size_t>(sq_rows) * n);
    for (int j = p.row_min; j < p.row_min + sq_rows; ++j) {
        const double dy = p.ys[j - p.row_min + 1] - p.ys[j - p.row_min];
        const double dg = std::hypot(h, dy);
        for (int i = 0; i < n; ++i) {
            int v00 = g.vertex(i, j), v10 = g.vertex(i + 1, j), v01 = g.vertex(i, j + 1), v11 = g.vertex(i + 1, j + 1);
            std::array<int, 2> st;
            if (mod(i + j, 2) == 0) {
                st[0] = add(v00, v10, v11, h, dy, dg);
                st[1] = add(v00, v11, v01, dg, h, dy);
            } else {
                st[0] = add(v00, v10, v01, h, dg, dy);
                st[1] = add(v10, v11, v01, dy, h, dg);
            }
            g.square_tris[(j - p.row_min) * n + i] = st;
        }
    }
    if (!p.periodic) {
        const double r = 1 / (2 * kPi);
        g.cap_bottom = static_cast<int>(m.verts.size());
        m.verts.push_back({0.5, g.y(p.row_min) - r, true});
        g.cap_top = static_cast<int>(m.verts.size());
        m.verts.push_back({0.5, g.y(p.row_max) + r, true});
        for (int i = 0; i < n; ++i) {
            g.cap_tris_bottom.push_back(add(g.vertex(i + 1, p.row_min), g.vertex(i, p.row_min), g.cap_bottom, h, r, r));
            g.cap_tris_top.push_back(add(g.vertex(i, p.row_max), g.vertex(i + 1, p.row_max), g.cap_top, h, r, r));
        }
    }
    m.build();
    std::vector<double> el(m.num_edges());
    for (int e = 0; e < m.num_edges(); ++e) {
        auto ev = m.edge(e);
        el[e] = len.at({ev[0], ev[1]});
    }
    m.set_euclidean_lengths(el);
    return g;
}

struct Placed {
    int jlo = 0, jhi = 0;   // lowest and highest puncture rows
    std::vector<std::array<int, 2>> at;   // (column, row), sorted by column
    std::vector<std::string> names;
};

Placed place_punctures(const SurfaceSpec& spec, int n, int rE)
{
    Placed pl;
    std::vector<std::pair<std::array<int, 2>, std::string>> cs;
    for (const auto& pu : spec.punctures) {
        int j = grid_count(pu.y, n, "puncture height");
        double xr = pu.x - std::floor(pu.x + 0.5);   // in [-1/2, 1/2)
        int i = static_cast<int>(std::lround(xr * n));
        if (std::abs(xr * n - i) > 1e-9) throw std::invalid_argument("non-embeddable spec: puncture off the grid");
        if (j <= 1 || j >= rE - 1) throw std::invalid_argument("non-embeddable spec: puncture too close to the boundary of S_E");
        if (4 * std::abs(i) >= n) throw std::invalid_argument("non-embeddable spec: punctures must satisfy |x| < 1/4");
        cs.push_back({{i, j}, pu.name});
    }
    std::sort(cs.begin(), cs.end());
    pl.jlo = rE;
    for (size_t k = 0; k < cs.size(); ++k) {
        if (k > 0 && cs[k].first[0] - cs[k - 1].first[0] < 2)
            throw std::invalid_argument("non-embeddable spec: punctures need distinct columns two grid steps apart");
        pl.at.push_back(cs[k].first);
        pl.names.push_back(cs[k].second);
        pl.jlo = std::min(pl.jlo, cs[k].first[1]);
        pl.jhi = std::max(pl.jhi, cs[k].first[1]);
    }
    return pl;
}

void append(std::vector<Sq>& p, const std::vector<Sq>& q)
{
    p.insert(p.end(), q.begin() + 1, q.end());
}

// from the base square along its row to column c, then vertically to row j
std::vector<Sq> tether(Sq B, int c, int j)
{
    std::vector<Sq> p{B};
    walk(p, {c, B.j});
    walk(p, {c, j});
    return p;
}

// clockwise ring around vertex (c, j) starting at its up-left or up-right square
std::vector<Sq> ring_cw(int c, int j, bool from_left)
{
    std::vector<Sq> p{{from_left ? c - 1 : c, j}};
    if (from_left) walk(p, {c, j});
    walk(p, {c, j - 1});
    walk(p, {c - 1, j - 1});
    walk(p, {c - 1, j});
    if (!from_left) walk(p, {c, j});
    return p;
}

// clockwise around a puncture; the tether leaves the base square towards +x (from_left) or -x
std::vector<Sq> puncture_loop(Sq B, int n, int c, int j, bool from_left)
{
    auto T = from_left ? tether(B, c - 1 + n, j) : tether(B, c, j);
    std::vector<Sq> p = T;
    append(p, ring_cw(from_left ? c + n : c, j, from_left));
    std::vector<Sq> back(T.rbegin(), T.rend());
    append(p, back);
    return p;
}

void add_loops(GraftedMesh& g, const SurfaceSpec& spec, const Placed& pl, int core_row)
{
    Layout L{g, g.columns};
    const int n = g.columns, ib = n / 2, jb = pl.jhi;
    const Sq B{ib, jb};
    g.base_row = jb;
    g.low_row = pl.jlo;
    TriMesh& m = g.mesh;
    m.base_triangle = L.tri(B, 0);
    auto finish = [&](const std::string& name, std::vector<Sq> p) {
        m.loops[name] = L.triangles(closed(std::move(p)), m.base_triangle, B);
    };
    // below every puncture towards +x
    {
        std::vector<Sq> p{B};
        walk(p, {ib, pl.jlo - 1});
        walk(p, {ib + n, pl.jlo - 1});
        walk(p, {ib + n, jb});
        finish("P.0", p);
    }
    // above every puncture towards -x
    {
        std::vector<Sq> p{B};
        walk(p, {ib - n, jb});
        finish("P.1", p);
    }
    if (spec.topology == "punctured-torus") {
        finish("P.2", puncture_loop(B, n, pl.at[0][0], pl.at[0][1], true));
    } else {
        // clockwise around the block holding both punctures, entered at its up-left square
        const int lo = pl.at.front()[0], hi = pl.at.back()[0];
        std::vector<Sq> ring{B};
        walk(ring, {lo - 1 + n, jb});
        walk(ring, {hi + n, jb});
        walk(ring, {hi + n, pl.jlo - 1});
        walk(ring, {lo - 1 + n, pl.jlo - 1});
        walk(ring, {lo - 1 + n, jb});
        walk(ring, {ib, jb});
        finish("P.2", ring);
        std::vector<Sq> rev(ring.rbegin(), ring.rend());
        finish("Q.0", rev);
        // with tethers leaving towards +x, beta_ccw * right * left is trivial
        auto lp = puncture_loop(B, n, pl.at.front()[0], pl.at.front()[1], true);
        auto rp = puncture_loop(B, n, pl.at.back()[0], pl.at.back()[1], true);
        const auto& q = spec.pd.pants[1];
        if (q.slots[1].cusp == pl.names.back()) {
            finish("Q.1", rp);
            finish("Q.2", lp);
        } else {
            finish("Q.1", lp);
            std::vector<Sq> inv(lp.rbegin(), lp.rend());
            std::vector<Sq> c = inv;
            append(c, rp);
            append(c, lp);
            finish("Q.2", c);
        }
    }
    if (g.periodic) {
        const int R = g.row_max - g.row_min + 1;
        std::vector<Sq> p{B};
        walk(p, {ib, jb + R});
        walk(p, {ib + g.wrap_shift, jb + R});
        std::vector<Sq> rev(p.rbegin(), p.rend());
        finish("t." + spec.curve(), rev);
        if (core_row >= 0) {
            std::vector<Sq> c{B};
            walk(c, {ib, core_row});
            walk(c, {ib + n, core_row});
            walk(c, {ib + n, jb});
            finish(spec.curve() + ".core", c);
        }
    }
}

} // namespace

int GraftedMesh::vertex(int i, int j) const
{
    const int n = columns;
    if (periodic) {
        const int R = row_max - row_min + 1;
        while (j > row_max) { j -= R; i -= wrap_shift; }
        while (j < row_min) { j += R; i += wrap_shift; }
    }
    if (j < row_min || j > row_max) throw std::out_of_range("vertex row out of range");
    return vertex_ids[(j - row_min) * n + mod(i, n)];
}

std::array<int, 2> GraftedMesh::square(int i, int j) const
{
    const int sq_rows = static_cast<int>(square_tris.size()) / columns;
    if (j < row_min || j >= row_min + sq_rows) throw std::out_of_range("square row out of range");
    return square_tris[(j - row_min) * columns + mod(i, columns)];
}

int GraftedMesh::cap_triangle(bool top, int i) const
{
    const auto& v = top ? cap_tris_top : cap_tris_bottom;
    if (v.empty()) throw std::out_of_range("mesh has no caps");
    return v[mod(i, columns)];
}

void SurfaceSpec::validate() const
{
    if (!(height > 0)) throw std::invalid_argument("SurfaceSpec: height must be positive");
    if (mode == GraftingMode::Geodesic) {
        // the bottom circle is a geodesic when an anticonformal reflection fixes it:
        // (x, y) -> (x + shift, height - y) must preserve the punctures, shift in {0, 1/2}
        double s2 = 2 * shift;
        if (std::abs(s2 - std::round(s2)) > 1e-12)
            throw std::invalid_argument("non-embeddable spec: geodesic mode needs shift 0 or 1/2");
        for (const auto& p : punctures) {
            bool found = false;
            for (const auto& q : punctures) {
                double dx = q.x - (p.x + shift), dy = q.y - (height - p.y);
                found |= std::abs(dx - std::round(dx)) < 1e-12 && std::abs(dy) < 1e-12;
            }
            if (!found)
                throw std::invalid_argument("non-embeddable spec: geodesic mode needs punctures symmetric across alpha");
        }
    }
    if (columns < 8 || columns % 4 != 0) throw std::invalid_argument("SurfaceSpec: columns must be a multiple of 4, at least 8");
    pd.validate();
    if (pd.grafted.size() != 1) throw std::invalid_argument("SurfaceSpec: flat models graft exactly one curve");
    if (topology == "punctured-torus") {
        if (punctures.size() != 1) throw std::invalid_argument("SurfaceSpec: punctured torus needs one puncture");
        if (pd.pants.size() != 1) throw std::invalid_argument("SurfaceSpec: punctured torus needs one pair of pants");
    } else if (topology == "twice-punctured-torus") {
        if (punctures.size() != 2) throw std::invalid_argument("SurfaceSpec: twice punctured torus needs two punctures");
        if (pd.pants.size() != 2 || pd.curves.size() != 2)
            throw std::invalid_argument("SurfaceSpec: twice punctured torus needs pants P, Q and curves a, b");
    } else {
        throw std::invalid_argument("SurfaceSpec: unknown topology " + topology);
    }
    const auto& p0 = pd.pants[0];
    if (p0.name != "P" || p0.slots[0].curve != curve() || p0.slots[0].side != 1 || p0.slots[1].curve != curve() ||
        p0.slots[1].side != -1)
        throw std::invalid_argument("SurfaceSpec: pants P must start with slots (alpha+, alpha-)");
}

SurfaceSpec SurfaceSpec::punctured_torus(double height, double shift, int columns)
{
    SurfaceSpec s;
    s.name = "punctured-torus";
    s.topology = "punctured-torus";
    s.height = height;
    s.shift = shift;
    s.columns = columns;
    s.pd = one_holed_torus_pd("a", "p");
    s.punctures = {{"p", 0.0, height / 2}};
    return s;
}

SurfaceSpec SurfaceSpec::twice_punctured_torus(double height, double shift, FlatPuncture p, FlatPuncture q, int columns)
{
    SurfaceSpec s;
    s.name = "twice-punctured-torus";
    s.topology = "twice-punctured-torus";
    s.height = height;
    s.shift = shift;
    s.columns = columns;
    s.pd = twice_punctured_torus_pd();
    p.name = "p";
    q.name = "q";
    s.punctures = {p, q};
    return s;
}

void to_json(nlohmann::json& j, const SurfaceSpec& s)
{
    j = nlohmann::json{{"schema", 1},
                       {"name", s.name},
                       {"mode", s.mode == GraftingMode::FlatStrebel ? "flat-strebel" : "geodesic"},
                       {"topology", s.topology},
                       {"height", s.height},
                       {"shift", s.shift},
                       {"columns", s.columns},
                       {"pants", s.pd}};
    auto arr = nlohmann::json::array();
    for (const auto& p : s.punctures) arr.push_back({{"name", p.name}, {"x", p.x}, {"y", p.y}});
    j["punctures"] = arr;
    if (s.base) j["base"] = *s.base;
}

void from_json(const nlohmann::json& j, SurfaceSpec& s)
{
    if (j.value("schema", 1) != 1) throw std::invalid_argument("SurfaceSpec: unsupported schema");
    s = SurfaceSpec{};
    s.name = j.value("name", std::string("surface"));
    std::string mode = j.value("mode", std::string("flat-strebel"));
    if (mode == "flat-strebel") s.mode = GraftingMode::FlatStrebel;
    else if (mode == "geodesic") s.mode = GraftingMode::Geodesic;
    else throw std::invalid_argument("SurfaceSpec: unknown mode " + mode);
    s.topology = j.at("topology").get<std::string>();
    s.height = j.at("height").get<double>();
    s.shift = j.value("shift", 0.0);
    s.columns = j.value("columns", 32);
    if (j.contains("pants")) s.pd = j.at("pants").get<PantsDecomposition>();
    else if (s.topology == "punctured-torus") s.pd = one_holed_torus_pd("a", "p");
    else s.pd = twice_punctured_torus_pd();
    for (const auto& p : j.at("punctures"))
        s.punctures.push_back({p.at("name").get<std::string>(), p.at("x").get<double>(), p.at("y").get<double>()});
    if (j.contains("base")) s.base = j.at("base").get<FNCoords>();
    s.validate();
}

double GraftingVector::at(const std::string& curve) const
{
    auto it = t.find(curve);
    return it == t.end() ? 0.0 : it->second;
}

bool GraftingVector::operator<=(const GraftingVector& o) const
{
    for (const auto& [k, v] : t)
        if (v > o.at(k)) return false;
    for (const auto& [k, v] : o.t)
        if (at(k) > v) return false;
    return true;
}

void GraftingVector::validate() const
{
    for (const auto& [k, v] : t)
        if (!(v >= 0) || !std::isfinite(v)) throw std::invalid_argument("GraftingVector: t_" + k + " must be finite and >= 0");
}

GraftedMesh build_St_mesh(const SurfaceSpec& spec, const GraftingVector& tv, int refine)
{
    spec.validate();
    tv.validate();
    if (refine < 1) throw std::invalid_argument("build_St_mesh: refine must be >= 1");
    for (const auto& [k, v] : tv.t)
        if (k != spec.curve() && v != 0) throw std::invalid_argument("build_St_mesh: curve " + k + " is not grafted");
    const int n = spec.columns * refine;
    const double t = tv.at(spec.curve());
    const int rE = grid_count(spec.height, n, "height");
    int rc = static_cast<int>(std::lround(t * n));
    if (t > 0 && rc == 0) rc = 1;
    Plan p;
    p.n = n;
    p.periodic = true;
    p.row_min = 0;
    p.row_max = rE + rc - 1;
    double sr = spec.shift - std::floor(spec.shift + 0.5);   // in [-1/2, 1/2)
    p.shift = grid_count(std::abs(sr), n, "shift") * (sr < 0 ? -1 : 1);
    for (int j = 0; j <= rE + rc; ++j)
        p.ys.push_back(j <= rE ? static_cast<double>(j) / n : spec.height + t * (j - rE) / rc);
    Placed pl = place_punctures(spec, n, rE);
    for (auto [c, j] : pl.at) p.cusps.push_back({c, j});
    GraftedMesh g = build_grid(p);
    g.se_rows = rE;
    g.cylinder = t;
    add_loops(g, spec, pl, rc >= 2 ? rE + rc / 2 : -1);
    g.mesh.validate();
    return g;
}

GraftedMesh build_Sinfty_mesh(const SurfaceSpec& spec, double H, int refine)
{
    spec.validate();
    if (!(H >= 5)) throw std::invalid_argument("build_Sinfty_mesh: H must be at least 5 for the angle fit");
    if (refine < 1) throw std::invalid_argument("build_Sinfty_mesh: refine must be >= 1");
    const int n = spec.columns * refine;
    const int rE = grid_count(spec.height, n, "height");
    const int rH = std::max(1, static_cast<int>(std::lround(H * n)));
    Plan p;
    p.n = n;
    p.periodic = false;
    p.row_min = -rH;
    p.row_max = rE + rH;
    for (int j = p.row_min; j <= p.row_max; ++j) {
        double y = j < 0 ? H * j / rH : j <= rE ? static_cast<double>(j) / n : spec.height + H * (j - rE) / rH;
        p.ys.push_back(y);
    }
    Placed pl = place_punctures(spec, n, rE);
    for (auto [c, j] : pl.at) p.cusps.push_back({c, j});
    GraftedMesh g = build_grid(p);
    g.se_rows = rE;
    g.cylinder = H;
    add_loops(g, spec, pl, -1);
    g.mesh.validate();
    return g;
}

LimitFit fit_limit(const SeamTrace& tr, double from, double to)
{
    Eigen::MatrixXd A(0, 2);
    std::vector<double> rhs;
    std::vector<std::array<double, 2>> rows;
    for (size_t k = 0; k < tr.s.size(); ++k)
        if (tr.s[k] >= from - 1e-12 && tr.s[k] <= to + 1e-12) {
            rows.push_back({1.0, std::exp(-2 * kPi * tr.s[k])});
            rhs.push_back(tr.theta[k]);
        }
    if (rows.size() < 3) throw std::invalid_argument("fit_limit: fewer than three samples in the window");
    A.resize(static_cast<Eigen::Index>(rows.size()), 2);
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
    for (size_t k = 0; k < rows.size(); ++k) {
        A(k, 0) = rows[k][0];
        A(k, 1) = rows[k][1];
        b(k) = rhs[k];
    }
    Eigen::Vector2d x = A.colPivHouseholderQr().solve(b);
    LimitFit f;
    f.theta_inf = x(0) - std::floor(x(0));
    f.amplitude = x(1);
    f.residual = std::sqrt((A * x - b).squaredNorm() / static_cast<double>(rows.size()));
    return f;
}

namespace {

// map sending the parabolic fixed point of g to infinity with g conjugated to z -> z +- 1
MobiusMap cusp_normalizer(const MobiusMap& g)
{
    GeodesicOrPoint ax = axis(g);
    MobiusMap N;
    if (std::isfinite(ax.p)) N = MobiusMap(0, -1, 1, -static_cast<real>(ax.p));
    MobiusMap c = N * g * N.inverse();
    // c = [[1, tau], [0, 1]] up to sign
    double tau = c.b() / c.d();
    double s = 1 / std::sqrt(std::abs(tau));
    return MobiusMap(s, 0, 0, 1 / s) * N;
}

// Develops the triangles of square rows [r0, r1] together with the base square, breadth first
// from the base triangle, never crossing the vertical edges over x = 0. Returns z(i, j) for
// i = 0..n and each vertex row j in [r0, r1], the lower triangle of square (i, j) carrying it.
std::map<int, std::vector<cplx>> develop_rows(const GraftedMesh& g, int r0, int r1)
{
    const TriMesh& m = g.mesh;
    const int n = g.columns, nt = static_cast<int>(m.tris.size());
    std::vector<char> allowed(nt, 0);
    for (int j = r0; j <= r1; ++j)
        for (int i = 0; i < n; ++i)
            for (int t : g.square(i, j)) allowed[t] = 1;
    // trunk along column n/2 from the base square
    for (int j = std::min(r1, g.base_row); j <= std::max(r0, g.base_row); ++j)
        for (int t : g.square(n / 2, j)) allowed[t] = 1;
    std::vector<int> col0;
    for (int j = g.row_min; j <= g.row_max; ++j) col0.push_back(g.vertex(0, j));
    std::sort(col0.begin(), col0.end());
    auto on_cut = [&](int e) {
        auto ev = m.edge(e);
        return std::binary_search(col0.begin(), col0.end(), ev[0]) && std::binary_search(col0.begin(), col0.end(), ev[1]);
    };
    std::vector<MobiusMap> dev(nt);
    std::vector<char> seen(nt, 0);
    std::vector<int> queue{m.base_triangle};
    seen[m.base_triangle] = 1;
    for (size_t q = 0; q < queue.size(); ++q) {
        int t = queue[q];
        for (int k = 0; k < 3; ++k) {
            int e = m.tri_edge(t, k);
            if (on_cut(e)) continue;
            auto et = m.edge_tris(e);
            int t2 = et[0] == t ? et[1] : et[0];
            if (!allowed[t2] || seen[t2]) continue;
            seen[t2] = 1;
            dev[t2] = dev[t] * transition(m, t, t2);
            queue.push_back(t2);
        }
    }
    auto corner = [&](int t, int v) {
        for (int c = 0; c < 3; ++c)
            if (m.tris[t][c] == v) return dev[t].apply(canonical_placement(m, t)[c]);
        throw std::logic_error("vertex not in triangle");
    };
    std::map<int, std::vector<cplx>> out;
    for (int j = r0; j <= r1; ++j) {
        std::vector<cplx> zs(n + 1);
        for (int i = 0; i < n; ++i) {
            int t = g.square(i, j)[0];
            if (!seen[t]) throw std::logic_error("row development did not reach every square");
            zs[i] = corner(t, g.vertex(i, j));
        }
        zs[n] = corner(g.square(n - 1, j)[0], g.vertex(n, j));
        out[j] = zs;
    }
    return out;
}

// flat x where the developed row crosses Re z = xs (mod 1)
double seam_crossing(const std::vector<cplx>& zs, const MobiusMap& N, double xs)
{
    const int n = static_cast<int>(zs.size()) - 1;
    std::vector<double> f(n + 1);
    for (int i = 0; i <= n; ++i) f[i] = N.apply(zs[i]).real() - xs;
    if (std::abs(std::abs(f[n] - f[0]) - 1) > 1e-6) throw MeshError("seam trace: row does not wrap once around the cusp");
    for (int i = 0; i < n; ++i) {
        double a = f[i], b = f[i + 1];
        double k = std::floor(std::max(a, b));
        if (k >= std::min(a, b) && (k > std::min(a, b) || a == k)) {
            double frac = (k - a) / (b - a);
            return (i + frac) / n;
        }
    }
    throw MeshError("seam trace: no crossing found");
}

SeamTrace trace_side(const GraftedMesh& g, bool top, const MobiusMap& cusp_gen, const MobiusMap& other,
                     double origin)
{
    MobiusMap N = cusp_normalizer(cusp_gen);
    GeodesicOrPoint ax = axis(other);
    double xs = N.apply_boundary(ax.p);
    if (!std::isfinite(xs)) throw MeshError("seam trace: both seam ends at the same cusp");
    int r0 = top ? g.base_row : g.row_min, r1 = top ? g.row_max - 1 : g.low_row - 1;
    auto rows = develop_rows(g, r0, r1);
    SeamTrace tr;
    const double base = top ? g.y(g.se_rows) : 0.0;
    std::vector<int> js;
    if (top) for (int j = g.se_rows; j <= g.row_max - 1; ++j) js.push_back(j);
    else for (int j = 0; j >= g.row_min; --j) js.push_back(j);
    if (!top && !rows.count(0)) js.erase(js.begin());
    for (int j : js) {
        auto it = rows.find(j);
        if (it == rows.end()) continue;
        double x = seam_crossing(it->second, N, xs) - origin;
        if (!tr.theta.empty()) x -= std::round(x - tr.theta.back());
        tr.s.push_back(std::abs(g.y(j) - base));
        tr.theta.push_back(x);
    }
    return tr;
}

} // namespace

LimitingAngles limiting_angles(const GraftedMesh& sinf, const SurfaceSpec& spec, double window_from, double max_residual)
{
    if (sinf.periodic) throw std::invalid_argument("limiting_angles: expects an S_inf mesh");
    if (!(window_from > 0 && window_from < 1)) throw std::invalid_argument("limiting_angles: window must lie in (0, 1)");
    MarkedGroup G = holonomy(sinf.mesh, spec.pd);
    const MobiusMap& gp = G.gen("P.0");
    const MobiusMap& gm = G.gen("P.1");
    if (classify(gp).kind != MobiusKind::Parabolic || classify(gm).kind != MobiusKind::Parabolic)
        throw MeshError("limiting_angles: the grafted curve is not pinched in this mesh");
    LimitingAngles r;
    r.trace_plus = trace_side(sinf, false, gp, gm, 0.0);
    r.trace_minus = trace_side(sinf, true, gm, gp, spec.shift);
    const double H = sinf.cylinder;
    r.plus = fit_limit(r.trace_plus, window_from * H, H);
    r.minus = fit_limit(r.trace_minus, window_from * H, H);
    if (r.plus.residual > max_residual || r.minus.residual > max_residual)
        throw ConvergenceError("limiting_angles: fit residual " + std::to_string(std::max(r.plus.residual, r.minus.residual)) +
                               " above threshold");
    r.predicted = half_twist(r.plus.theta_inf - r.minus.theta_inf);
    return r;
}

} // namespace graftlab
