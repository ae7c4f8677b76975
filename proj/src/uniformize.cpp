#include "graftlab/uniformize.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <json.hpp>

#include "graftlab/errors.hpp"

namespace graftlab {

using std::numbers::pi;

namespace {

// forward mode dual number in the three corner factors of one triangle
struct D3 {
    double v = 0;
    std::array<double, 3> d{0, 0, 0};
    D3(double x = 0) : v(x) {}
};

D3 lift(double v, int slot = -1)
{
    D3 r;
    r.v = v;
    if (slot >= 0) r.d[slot] = 1;
    return r;
}

D3 chain(const D3& a, double val, double der)
{
    D3 r;
    r.v = val;
    for (int k = 0; k < 3; ++k) r.d[k] = der * a.d[k];
    return r;
}

D3 operator+(const D3& a, const D3& b)
{
    D3 r;
    r.v = a.v + b.v;
    for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] + b.d[k];
    return r;
}
D3 operator-(const D3& a, const D3& b)
{
    D3 r;
    r.v = a.v - b.v;
    for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] - b.d[k];
    return r;
}
D3 operator*(const D3& a, const D3& b)
{
    D3 r;
    r.v = a.v * b.v;
    for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] * b.v + a.v * b.d[k];
    return r;
}
D3 operator/(const D3& a, const D3& b)
{
    D3 r;
    r.v = a.v / b.v;
    for (int k = 0; k < 3; ++k) r.d[k] = (a.d[k] * b.v - a.v * b.d[k]) / (b.v * b.v);
    return r;
}
D3 operator*(double s, const D3& a)
{
    D3 r = a;
    r.v *= s;
    for (auto& x : r.d) x *= s;
    return r;
}

D3 exp(const D3& a) { double e = std::exp(a.v); return chain(a, e, e); }
D3 sqrt(const D3& a) { double s = std::sqrt(a.v); return chain(a, s, 0.5 / s); }
D3 sinh(const D3& a) { return chain(a, std::sinh(a.v), std::cosh(a.v)); }
D3 cosh(const D3& a) { return chain(a, std::cosh(a.v), std::sinh(a.v)); }
D3 asinh(const D3& a) { return chain(a, std::asinh(a.v), 1 / std::sqrt(1 + a.v * a.v)); }
D3 atan(const D3& a) { return chain(a, std::atan(a.v), 1 / (1 + a.v * a.v)); }
D3 atan2(const D3& y, const D3& x)
{
    D3 r;
    r.v = std::atan2(y.v, x.v);
    double n = x.v * x.v + y.v * y.v;
    for (int k = 0; k < 3; ++k) r.d[k] = (x.v * y.d[k] - y.v * x.d[k]) / n;
    return r;
}

double value(double x) { return x; }
double value(const D3& x) { return x.v; }

// per triangle inputs: edge parameter of the edge opposite each corner plus corner factors
struct TriData {
    std::array<double, 3> lam;
    std::array<double, 3> u;
    int cusp = -1;   // local index of the cusp corner
};

TriData tri_data(const TriMesh& m, const std::vector<double>& u, int t)
{
    TriData d;
    for (int k = 0; k < 3; ++k) {
        int v = m.tris[t][k];
        d.lam[k] = m.lambda[m.tri_edge(t, k)];
        if (m.verts[v].cusp) {
            d.cusp = k;
            d.u[k] = 0;
        } else {
            d.u[k] = u[v];
        }
    }
    return d;
}

// angles for scalar type T, with flag for collapse. Edge parameters already include the factors.
template <class T>
std::array<T, 3> angles_from(const std::array<T, 3>& lt, int cusp, bool& degenerate)
{
    using std::asinh;
    using std::atan;
    using std::atan2;
    using std::cosh;
    using std::exp;
    using std::sinh;
    using std::sqrt;
    std::array<T, 3> a;
    degenerate = false;
    if (cusp < 0) {
        std::array<T, 3> l;
        for (int k = 0; k < 3; ++k) l[k] = 2.0 * asinh(exp(0.5 * lt[k]));
        T s = 0.5 * (l[0] + l[1] + l[2]);
        std::array<T, 3> r;
        for (int k = 0; k < 3; ++k) {
            r[k] = s - l[k];
            if (!(value(r[k]) > 0)) {
                degenerate = true;
                for (int j = 0; j < 3; ++j) a[j] = T(0.0);
                a[k] = T(pi);
                return a;
            }
        }
        T ss = sinh(s);
        for (int k = 0; k < 3; ++k)
            a[k] = 2.0 * atan(sqrt(sinh(r[(k + 1) % 3]) * sinh(r[(k + 2) % 3]) / (ss * sinh(r[k]))));
        return a;
    }
    int i = (cusp + 1) % 3, j = (cusp + 2) % 3;
    // lt[cusp] is the finite edge ij; lt[j] is edge i-cusp; lt[i] is edge j-cusp
    T c = 2.0 * asinh(exp(0.5 * lt[cusp]));
    T D = lt[j] - lt[i];
    double cv = value(c), Dv = value(D);
    a[cusp] = T(0.0);
    if (!(std::abs(Dv) < cv)) {
        degenerate = true;
        a[i] = T(Dv > 0 ? 0.0 : pi);
        a[j] = T(Dv > 0 ? pi : 0.0);
        return a;
    }
    T den = sqrt(2.0 * (cosh(c) - cosh(D)));
    T eh = exp(0.5 * D), emh = exp(-0.5 * D);
    a[i] = atan2(den, eh * cosh(c) - emh);
    a[j] = atan2(den, emh * cosh(c) - eh);
    return a;
}

std::array<double, 3> scaled_params(const TriData& d)
{
    std::array<double, 3> lt;
    for (int k = 0; k < 3; ++k) lt[k] = d.lam[k] + d.u[(k + 1) % 3] + d.u[(k + 2) % 3];
    return lt;
}

double triangle_energy(const TriData& d)
{
    auto lt = scaled_params(d);
    bool deg;
    auto a = angles_from<double>(lt, d.cusp, deg);
    double F = 0;
    double a0 = 0.5 * (pi - a[0] - a[1] - a[2]);
    F += lobachevsky(a0);
    for (int k = 0; k < 3; ++k) {
        double ap = 0.5 * (pi + a[k] - a[(k + 1) % 3] - a[(k + 2) % 3]);
        F += ap * lt[k] + lobachevsky(a[k]) + lobachevsky(ap);
    }
    return F;
}

// angles with derivatives in the three corner factors
std::array<D3, 3> triangle_angles_d(const TriData& d, bool& deg)
{
    std::array<D3, 3> uu;
    for (int k = 0; k < 3; ++k) uu[k] = d.cusp == k ? lift(0.0) : lift(d.u[k], k);
    std::array<D3, 3> lt;
    for (int k = 0; k < 3; ++k) lt[k] = lift(d.lam[k]) + uu[(k + 1) % 3] + uu[(k + 2) % 3];
    return angles_from<D3>(lt, d.cusp, deg);
}

void check_hyperbolic(const TriMesh& m)
{
    if (punctured_euler_characteristic(m) >= 0)
        throw std::invalid_argument("uniformize: surface is not of hyperbolic type");
}

// Cl2(t) = t - t log|t| + sum c_n t^{2n+1}, |t| <= pi
constexpr double kClausen[] = {
    0.013888888888888888889, 0.000069444444444444444444, 7.8735197782816830436e-7,
    1.1482216343327454439e-8, 1.8978869988970999072e-10, 3.3873013709535212723e-12,
    6.3726364431831803966e-14, 1.2462059912950672305e-15, 2.5105444608999545509e-17,
    5.1782588060906235072e-19, 1.0887357368300848844e-20, 2.3257441143020872235e-22,
    5.0351952131473895608e-24, 1.1026499294381215333e-25, 2.4386585509007344735e-27,
    5.4401426788562523156e-29, 1.2228340131217352117e-30, 2.7672634689679505842e-32,
    6.3000905918320139487e-34, 1.4420868388418475211e-35, 3.3170939991595428044e-37,
    7.6639135579206578874e-39, 1.7778714733830657873e-40, 4.1396058982341373449e-42,
};

} // namespace

double clausen2(double theta)
{
    if (!std::isfinite(theta)) throw std::invalid_argument("clausen2: non-finite argument");
    double t = std::remainder(theta, 2 * pi);
    if (t == 0) return 0;
    double t2 = t * t, p = t, s = 0;
    for (double c : kClausen) {
        p *= t2;
        double term = c * p;
        s += term;
        if (std::abs(term) < 1e-18 * std::abs(s)) break;
    }
    return t - t * std::log(std::abs(t)) + s;
}

double lobachevsky(double x) { return 0.5 * clausen2(2 * x); }

int punctured_euler_characteristic(const TriMesh& m) { return m.euler_characteristic() - m.num_cusps(); }

double hyperbolic_length(const TriMesh& m, const std::vector<double>& u, int e)
{
    auto [a, b] = m.edge(e);
    if (m.verts[a].cusp || m.verts[b].cusp) return kInf;
    return 2 * std::asinh(std::exp(0.5 * (m.lambda[e] + u[a] + u[b])));
}

std::array<double, 3> triangle_angles(const TriMesh& m, const std::vector<double>& u, int t)
{
    auto d = tri_data(m, u, t);
    bool deg;
    return angles_from<double>(scaled_params(d), d.cusp, deg);
}

bool triangle_degenerate(const TriMesh& m, const std::vector<double>& u, int t)
{
    auto d = tri_data(m, u, t);
    bool deg;
    angles_from<double>(scaled_params(d), d.cusp, deg);
    return deg;
}

double conformal_energy(const TriMesh& m, const std::vector<double>& u)
{
    const int nt = static_cast<int>(m.tris.size());
    std::vector<int> corners(m.verts.size(), 0);
    long double E = 0;
    for (int t = 0; t < nt; ++t) {
        E += triangle_energy(tri_data(m, u, t));
        for (int v : m.tris[t]) ++corners[v];
    }
    for (size_t v = 0; v < m.verts.size(); ++v)
        if (!m.verts[v].cusp) E -= (pi * corners[v] - 2 * pi) * u[v];
    return static_cast<double>(E);
}

std::vector<double> energy_gradient(const TriMesh& m, const std::vector<double>& u)
{
    std::vector<double> g(m.verts.size(), 0.0);
    for (size_t v = 0; v < m.verts.size(); ++v)
        if (!m.verts[v].cusp) g[v] = 2 * pi;
    for (int t = 0; t < static_cast<int>(m.tris.size()); ++t) {
        auto a = triangle_angles(m, u, t);
        for (int k = 0; k < 3; ++k) {
            int v = m.tris[t][k];
            if (!m.verts[v].cusp) g[v] -= a[k];
        }
    }
    return g;
}

double hyperbolic_area(const TriMesh& m, const std::vector<double>& u)
{
    long double A = 0;
    for (int t = 0; t < static_cast<int>(m.tris.size()); ++t) {
        auto a = triangle_angles(m, u, t);
        A += pi - a[0] - a[1] - a[2];
    }
    return static_cast<double>(A);
}

UniformizeReport uniformize(TriMesh& m, const UniformizeOptions& opt)
{
    m.validate();
    check_hyperbolic(m);
    const int nv = static_cast<int>(m.verts.size());
    const int nt = static_cast<int>(m.tris.size());
    std::vector<int> var(nv, -1);
    int n = 0;
    for (int v = 0; v < nv; ++v)
        if (!m.verts[v].cusp) var[v] = n++;
    std::vector<double> u = m.u;
    u.resize(nv, 0.0);
    for (int v = 0; v < nv; ++v)
        if (m.verts[v].cusp) u[v] = 0;

    auto any_degenerate = [&](const std::vector<double>& x) {
        for (int t = 0; t < nt; ++t)
            if (triangle_degenerate(m, x, t)) return true;
        return false;
    };
    auto max_abs = [](const std::vector<double>& g) {
        double r = 0;
        for (double x : g) r = std::max(r, std::abs(x));
        return r;
    };

    UniformizeReport rep;
    double E = conformal_energy(m, u);
    std::vector<double> g = energy_gradient(m, u);
    double gn = max_abs(g);
    bool degenerate_now = any_degenerate(u);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    bool analysed = false;
    for (int it = 0;; ++it) {
        rep.energies.push_back(E);
        if (opt.diagnostics)
            *opt.diagnostics << nlohmann::json{{"iteration", it}, {"energy", E}, {"gradient", gn}}.dump() << "\n";
        if (gn < opt.tol) {
            rep.iterations = it;
            break;
        }
        if (it >= opt.max_iter)
            throw ConvergenceError("uniformize: no convergence after " + std::to_string(opt.max_iter) +
                                   " iterations (gradient " + std::to_string(gn) + ")");
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(9 * nt + n);
        for (int t = 0; t < nt; ++t) {
            bool deg;
            auto a = triangle_angles_d(tri_data(m, u, t), deg);
            // collapsed triangles have locally constant angles; keep their entries so the
            // sparsity pattern stays fixed
            for (int k = 0; k < 3; ++k) {
                int r = var[m.tris[t][k]];
                if (r < 0) continue;
                for (int j = 0; j < 3; ++j) {
                    int c = var[m.tris[t][j]];
                    if (c < 0) continue;
                    trip.emplace_back(r, c, deg ? 0.0 : -a[k].d[j]);
                }
            }
        }
        for (int i = 0; i < n; ++i) trip.emplace_back(i, i, opt.regularization);
        Eigen::SparseMatrix<double> H(n, n);
        H.setFromTriplets(trip.begin(), trip.end());
        if (!analysed) {
            solver.analyzePattern(H);
            analysed = true;
        }
        solver.factorize(H);
        if (solver.info() != Eigen::Success) throw ConvergenceError("uniformize: Hessian factorization failed");
        Eigen::VectorXd rhs(n);
        for (int v = 0; v < nv; ++v)
            if (var[v] >= 0) rhs[var[v]] = -g[v];
        Eigen::VectorXd p = solver.solve(rhs);
        double slope = -rhs.dot(p);

        double s = 1;
        bool accepted = false;
        std::vector<double> trial(nv), gt;
        double Et = 0;
        for (int ls = 0; ls < 60; ++ls, s *= 0.5) {
            for (int v = 0; v < nv; ++v) trial[v] = var[v] >= 0 ? u[v] + s * p[var[v]] : 0.0;
            if (!degenerate_now && any_degenerate(trial)) continue;
            Et = conformal_energy(m, trial);
            if (Et <= E + 1e-4 * s * slope) {
                accepted = true;
                break;
            }
            // at roundoff level the energy cannot discriminate; fall back to the gradient
            if (std::abs(Et - E) <= 1e-13 * (1 + std::abs(E)) * std::sqrt(double(nv))) {
                gt = energy_gradient(m, trial);
                if (max_abs(gt) < gn) {
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted)
            throw ConvergenceError("uniformize: line search failed (gradient " + std::to_string(gn) + ")");
        u = trial;
        E = Et;
        g = gt.empty() ? energy_gradient(m, u) : gt;
        gn = max_abs(g);
        degenerate_now = any_degenerate(u);
    }
    if (degenerate_now) throw ConvergenceError("uniformize: solution has collapsed triangles");
    m.u = u;
    rep.energy = E;
    rep.grad_norm = gn;
    return rep;
}

std::array<cplx, 3> canonical_placement(const TriMesh& m, int t)
{
    auto d = tri_data(m, m.u, t);
    auto lt = scaled_params(d);
    bool deg;
    auto a = angles_from<double>(lt, d.cusp, deg);
    if (deg) throw MeshError("canonical_placement: collapsed triangle " + std::to_string(t));
    std::array<cplx, 3> P;
    if (d.cusp < 0) {
        // corner 0 at i, corner 1 straight up, corner 2 to the left
        double l01 = 2 * std::asinh(std::exp(0.5 * lt[2]));
        double l02 = 2 * std::asinh(std::exp(0.5 * lt[1]));
        P[0] = cplx(0, 1);
        P[1] = cplx(0, std::exp(l01));
        P[2] = MobiusMap::rotation_about_i(a[0]).apply(cplx(0, std::exp(l02)));
        return P;
    }
    int k = d.cusp, i = (k + 1) % 3, j = (k + 2) % 3;
    double c = 2 * std::asinh(std::exp(0.5 * lt[k]));
    double D = lt[j] - lt[i];
    double rho = std::exp(D);
    double x = std::sqrt(2 * rho * (std::cosh(c) - std::cosh(D)));
    P[i] = cplx(0, 1);
    P[j] = cplx(x, rho);
    P[k] = cplx(kInf, 0);
    return P;
}

namespace {

int local_index(const TriMesh& m, int t, int v)
{
    for (int k = 0; k < 3; ++k)
        if (m.tris[t][k] == v) return k;
    throw MeshError("vertex not in triangle");
}

// isometry taking i to the finite end of edge e in triangle t, pointing along the edge
MobiusMap edge_frame(const TriMesh& m, int t, int e, const std::array<cplx, 3>& P)
{
    auto [a, b] = m.edge(e);
    if (m.verts[a].cusp) std::swap(a, b);
    return MobiusMap::frame(P[local_index(m, t, a)], P[local_index(m, t, b)]);
}

} // namespace

MobiusMap transition(const TriMesh& m, int t, int t2)
{
    int e = m.shared_edge(t, t2);
    return edge_frame(m, t, e, canonical_placement(m, t)) * edge_frame(m, t2, e, canonical_placement(m, t2)).inverse();
}

std::vector<MobiusMap> develop_path(const TriMesh& m, const std::vector<int>& path)
{
    std::vector<MobiusMap> out;
    if (path.empty()) return out;
    out.reserve(path.size());
    out.push_back(MobiusMap());
    for (size_t k = 1; k < path.size(); ++k) out.push_back(out.back() * transition(m, path[k - 1], path[k]));
    return out;
}

MobiusMap loop_holonomy(const TriMesh& m, const std::vector<int>& loop)
{
    if (loop.size() < 2) throw MeshError("loop_holonomy: loop too short");
    MobiusMap h;
    for (size_t k = 0; k < loop.size(); ++k) h = h * transition(m, loop[k], loop[(k + 1) % loop.size()]);
    return h;
}

MarkedGroup holonomy(const TriMesh& m, const PantsDecomposition& pd)
{
    MarkedGroup tmpl = marking_template(pd);
    std::vector<std::string> keep;
    for (const auto& name : tmpl.names) {
        auto it = m.loops.find(name);
        if (it == m.loops.end()) continue;
        tmpl.set(name, loop_holonomy(m, it->second));
        keep.push_back(name);
    }
    if (keep.empty()) throw MeshError("holonomy: mesh carries none of the generator loops");
    MarkedGroup g = tmpl.restrict_to(keep);
    g.basepoint_frame = MobiusMap();
    double res = g.relator_residual();
    if (res > 1e-6)
        throw MeshError("holonomy: development inconsistent, relator residual " + std::to_string(res));
    return g;
}

CurveLength geodesic_length(const TriMesh& m, const std::string& loop)
{
    auto it = m.loops.find(loop);
    if (it == m.loops.end()) throw std::invalid_argument("geodesic_length: no loop named " + loop);
    auto c = classify(loop_holonomy(m, it->second));
    CurveLength r;
    if (c.kind == MobiusKind::Parabolic || c.kind == MobiusKind::Identity) {
        r.cusp = c.kind == MobiusKind::Parabolic;
        return r;
    }
    if (c.kind == MobiusKind::Elliptic) throw MeshError("geodesic_length: elliptic holonomy for " + loop);
    r.length = c.length;
    return r;
}

double shortened_length(const TriMesh& m, const std::vector<int>& loop)
{
    // cancel backtracking, cyclically
    std::vector<int> red;
    for (int t : loop) {
        if (red.size() >= 2 && red[red.size() - 2] == t)
            red.pop_back();
        else
            red.push_back(t);
    }
    while (red.size() > 2 && (red[1] == red.back() || red.front() == red[red.size() - 2])) {
        if (red[1] == red.back()) {
            red.erase(red.begin());
            red.pop_back();
        } else {
            red.pop_back();
            red.pop_back();
        }
    }
    const int n = static_cast<int>(red.size());
    if (n < 2) throw MeshError("shortened_length: loop too short");
    std::vector<int> path(red.begin(), red.end());
    path.push_back(red.front());
    auto dev = develop_path(m, path);
    MobiusMap H = dev.back();
    // frames along each crossed edge, with its length (inf towards a cusp)
    std::vector<MobiusMap> fr(n);
    std::vector<double> len(n);
    for (int k = 0; k < n; ++k) {
        int t = path[k], e = m.shared_edge(t, path[k + 1]);
        fr[k] = dev[k] * edge_frame(m, t, e, canonical_placement(m, t));
        len[k] = hyperbolic_length(m, m.u, e);
        if (!std::isfinite(len[k])) len[k] = 30;
    }
    // start where the axis of the holonomy meets each edge
    std::vector<double> s(n);
    auto ax = axis(H);
    for (int k = 0; k < n; ++k) {
        s[k] = 0.5 * len[k];
        if (ax.is_point) continue;
        auto g = image(fr[k].inverse(), ax);
        if (std::isfinite(g.p) && std::isfinite(g.q) && g.p * g.q < 0)
            s[k] = std::clamp(0.5 * std::log(-g.p * g.q), 0.0, len[k]);
        else if (std::isfinite(g.p) != std::isfinite(g.q))
            s[k] = len[k];
        else
            s[k] = std::abs(g.p) < 1 ? 0.0 : len[k];
    }
    auto point = [&](int k, double x) { return fr[k].apply(cplx(0, std::exp(x))); };
    auto local = [&](int k, double x) {
        cplx q = point(k, x);
        cplx prev = k == 0 ? H.inverse().apply(point(n - 1, s[n - 1])) : point(k - 1, s[k - 1]);
        cplx next = k == n - 1 ? H.apply(point(0, s[0])) : point(k + 1, s[k + 1]);
        return distance(prev, q) + distance(q, next);
    };
    auto total = [&]() {
        double L = 0;
        for (int k = 0; k + 1 < n; ++k) L += distance(point(k, s[k]), point(k + 1, s[k + 1]));
        return L + distance(point(n - 1, s[n - 1]), H.apply(point(0, s[0])));
    };
    const double gr = (std::sqrt(5.0) - 1) / 2;
    double L = total();
    for (int sweep = 0; sweep < 2000; ++sweep) {
        for (int k = 0; k < n; ++k) {
            double lo = 0, hi = len[k];
            double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
            double f1 = local(k, x1), f2 = local(k, x2);
            for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
                if (f1 < f2) {
                    hi = x2; x2 = x1; f2 = f1;
                    x1 = hi - gr * (hi - lo); f1 = local(k, x1);
                } else {
                    lo = x1; x1 = x2; f1 = f2;
                    x2 = lo + gr * (hi - lo); f2 = local(k, x2);
                }
            }
            s[k] = 0.5 * (lo + hi);
        }
        double Ln = total();
        if (L - Ln < 1e-13 * L) {
            L = Ln;
            break;
        }
        L = Ln;
    }
    return L;
}

FNCoords measure_surface(const TriMesh& m, const PantsDecomposition& pd)
{
    MarkedGroup g = holonomy(m, pd);
    FNCoords fn;
    for (const auto& c : pd.curves) {
        auto it = g.curve_map.find(c);
        if (it == g.curve_map.end()) continue;
        auto cl = classify(g.eval(it->second));
        if (cl.kind != MobiusKind::Hyperbolic) {
            fn.length[c] = 0;
            continue;
        }
        if (!g.seam_targets.count(c)) {
            fn.length[c] = cl.length;
            continue;
        }
        PantsDecomposition one = pd;
        one.curves = {c};
        auto r = measure_fn(g, one);
        fn.length[c] = r.length.at(c);
        fn.twist[c] = r.twist.at(c);
    }
    return fn;
}

} // namespace graftlab
