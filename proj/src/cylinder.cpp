#include "graftlab/cylinder.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace graftlab {

using std::numbers::pi;

double collar_width(double l)
{
    if (!(l > 0) || !std::isfinite(l)) throw std::invalid_argument("collar_width: length must be positive");
    return std::asinh(1 / std::sinh(l / 2));
}

CollarModulus collar_modulus_bounds(double l)
{
    if (!(l > 0) || !(l < pi)) throw std::invalid_argument("collar_modulus_bounds: length must lie in (0, pi)");
    CollarModulus m;
    m.lower = pi / l - 1;
    m.upper = pi / l;
    // half height Y of the collar in the band model: tan Y = sinh w = 1/sinh(l/2)
    double Y = pi / 2 - std::atan(std::sinh(l / 2));
    m.exact = 2 * Y / l;
    return m;
}

double pinching_bound(double t)
{
    if (!(t > 0)) throw std::invalid_argument("pinching_bound: modulus must be positive");
    return pi / t;
}

double distance_across_bound(double t, double c)
{
    if (!(c > 0)) throw std::invalid_argument("distance_across_bound: c must be positive");
    double b = t / 2 - 1;
    if (b <= 0) return 0;
    return std::log1p(2 * b / c);
}

GridRegion::GridRegion(int cols, int rows, double y0) : cols_(cols), rows_(rows), y0_(y0)
{
    if (cols < 3 || rows < 3) throw std::invalid_argument("GridRegion: need at least 3 columns and rows");
    mask_.assign(static_cast<size_t>(cols) * rows, 0);
}

int GridRegion::index(int i, int j) const
{
    i = ((i % cols_) + cols_) % cols_;
    if (j < 0 || j >= rows_) throw std::out_of_range("GridRegion: row out of range");
    return j * cols_ + i;
}

int GridRegion::count() const { return static_cast<int>(std::count(mask_.begin(), mask_.end(), 1)); }

bool GridRegion::essential() const
{
    std::vector<int> lift(mask_.size(), 0);
    std::vector<uint8_t> seen(mask_.size(), 0);
    for (int s = 0; s < static_cast<int>(mask_.size()); ++s) {
        if (!mask_[s] || seen[s]) continue;
        std::queue<int> q;
        q.push(s);
        seen[s] = 1;
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            int i = v % cols_, j = v / cols_;
            const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                int ni = i + di[k], nj = j + dj[k];
                if (nj < 0 || nj >= rows_) continue;
                int wrap = ni < 0 ? -1 : (ni >= cols_ ? 1 : 0);
                int w = index(ni, nj);
                if (!mask_[w]) continue;
                int l = lift[v] + wrap;
                if (!seen[w]) {
                    seen[w] = 1;
                    lift[w] = l;
                    q.push(w);
                } else if (lift[w] != l) {
                    return true;
                }
            }
        }
    }
    return false;
}

std::vector<int8_t> GridRegion::boundary_labels() const
{
    std::vector<int8_t> lab(mask_.size(), 2);
    for (size_t v = 0; v < mask_.size(); ++v)
        if (mask_[v]) lab[v] = -1;
    auto flood = [&](int row, int8_t value) {
        std::queue<int> q;
        for (int i = 0; i < cols_; ++i) {
            int v = index(i, row);
            if (lab[v] == 2) { lab[v] = value; q.push(v); }
            else if (lab[v] != -1 && lab[v] != value)
                throw std::invalid_argument("GridRegion: complement joins the two ends; not an annulus");
        }
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            int i = v % cols_, j = v / cols_;
            const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
            for (int k = 0; k < 4; ++k) {
                int nj = j + dj[k];
                if (nj < 0 || nj >= rows_) continue;
                int w = index(i + di[k], nj);
                if (lab[w] == 2) { lab[w] = value; q.push(w); }
                else if (lab[w] != -1 && lab[w] != value)
                    throw std::invalid_argument("GridRegion: complement joins the two ends; not an annulus");
            }
        }
    };
    flood(0, 0);
    flood(rows_ - 1, 1);
    return lab;
}

GridRegion GridRegion::straight(int cols, double modulus)
{
    int k = static_cast<int>(std::lround(modulus * cols));
    if (k < 2) throw std::invalid_argument("GridRegion::straight: modulus below two lattice rows");
    GridRegion r(cols, k + 1);
    for (int j = 1; j < k; ++j)
        for (int i = 0; i < cols; ++i) r.set(i, j, true);
    return r;
}

void GridRegion::write_rle(std::ostream& out) const
{
    out << "graftlab-gridregion 1\n";
    out.precision(17);
    out << "cols " << cols_ << " rows " << rows_ << " y0 " << y0_ << "\n";
    for (int j = 0; j < rows_; ++j) {
        int i = 0;
        bool first = true;
        while (i < cols_) {
            int v = inside(i, j), n = 0;
            while (i < cols_ && inside(i, j) == v) { ++i; ++n; }
            out << (first ? "" : " ") << v << "*" << n;
            first = false;
        }
        out << "\n";
    }
}

GridRegion GridRegion::read_rle(std::istream& in)
{
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != "graftlab-gridregion" || version != 1)
        throw std::invalid_argument("read_rle: bad header (expected 'graftlab-gridregion 1')");
    std::string kc, kr, ky;
    int cols = 0, rows = 0;
    double y0 = 0;
    if (!(in >> kc >> cols >> kr >> rows >> ky >> y0) || kc != "cols" || kr != "rows" || ky != "y0")
        throw std::invalid_argument("read_rle: bad size line (expected 'cols N rows M y0 Y')");
    GridRegion r(cols, rows, y0);
    std::string line;
    std::getline(in, line);
    for (int j = 0; j < rows; ++j) {
        if (!std::getline(in, line)) throw std::invalid_argument("read_rle: missing row " + std::to_string(j));
        std::istringstream ls(line);
        std::string tok;
        int i = 0;
        while (ls >> tok) {
            auto star = tok.find('*');
            if (star == std::string::npos)
                throw std::invalid_argument("read_rle: row " + std::to_string(j) + ": bad token '" + tok + "'");
            int v = std::stoi(tok.substr(0, star)), n = std::stoi(tok.substr(star + 1));
            if ((v != 0 && v != 1) || n <= 0 || i + n > cols)
                throw std::invalid_argument("read_rle: row " + std::to_string(j) + ": bad run '" + tok + "'");
            for (int k = 0; k < n; ++k) r.set(i++, j, v == 1);
        }
        if (i != cols) throw std::invalid_argument("read_rle: row " + std::to_string(j) + " has wrong length");
    }
    return r;
}

namespace {

// The discrete domain is the union of lattice squares with no hole corner and at least
// one region corner; every square carries the P1 energy of its two right triangles,
// i.e. weight 1/2 on each of its four sides.
struct CellDomain {
    int nc = 0, nr = 0;
    std::vector<int8_t> lab;          // -1 region, 0 bottom, 1 top, 2 hole
    std::vector<uint8_t> cell;        // square (i, j) with lower-left corner (i, j)

    int vid(int i, int j) const { return j * nc + ((i % nc) + nc) % nc; }
    bool has_cell(int i, int j) const
    {
        if (j < 0 || j >= nr - 1) return false;
        return cell[vid(i, j)] != 0;
    }
};

CellDomain make_domain(const GridRegion& r)
{
    if (!r.essential()) throw std::invalid_argument("grid_modulus: region is not essential");
    CellDomain d;
    d.nc = r.cols();
    d.nr = r.rows();
    for (int i = 0; i < d.nc; ++i)
        if (r.inside(i, 0) || r.inside(i, d.nr - 1))
            throw std::invalid_argument("grid_modulus: region must not touch the first or last row");
    d.lab = r.boundary_labels();
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    // region components that never see a boundary vertex carry no energy: treat as holes
    std::vector<int> comp(d.lab.size(), -1);
    std::vector<uint8_t> anchored;
    for (int s = 0; s < static_cast<int>(d.lab.size()); ++s) {
        if (d.lab[s] != -1 || comp[s] >= 0) continue;
        int c = static_cast<int>(anchored.size());
        anchored.push_back(0);
        std::queue<int> q;
        q.push(s);
        comp[s] = c;
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            int i = v % d.nc, j = v / d.nc;
            for (int k = 0; k < 4; ++k) {
                int nj = j + dj[k];
                if (nj < 0 || nj >= d.nr) continue;
                int w = d.vid(i + di[k], nj);
                if (d.lab[w] == 0 || d.lab[w] == 1) anchored[c] = 1;
                if (d.lab[w] == -1 && comp[w] < 0) { comp[w] = c; q.push(w); }
            }
        }
    }
    for (size_t v = 0; v < d.lab.size(); ++v)
        if (d.lab[v] == -1 && !anchored[comp[v]]) d.lab[v] = 2;
    d.cell.assign(d.lab.size(), 0);
    for (int j = 0; j + 1 < d.nr; ++j)
        for (int i = 0; i < d.nc; ++i) {
            int c[4] = {d.vid(i, j), d.vid(i + 1, j), d.vid(i, j + 1), d.vid(i + 1, j + 1)};
            bool hole = false, region = false;
            for (int v : c) {
                hole |= d.lab[v] == 2;
                region |= d.lab[v] == -1;
            }
            d.cell[d.vid(i, j)] = (!hole && region) ? 1 : 0;
        }
    return d;
}

double solve_spd(const std::vector<Eigen::Triplet<double>>& trip, int n, const Eigen::VectorXd& rhs, Eigen::VectorXd& x)
{
    Eigen::SparseMatrix<double> L(n, n);
    L.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(L);
    if (solver.info() != Eigen::Success) throw std::runtime_error("grid_modulus: factorisation failed");
    x = solver.solve(rhs);
    return 0;
}

// Dirichlet energy of the harmonic function with u = 0 / 1 on the two boundary parts
double primal_energy(const CellDomain& d)
{
    std::vector<int> unk(d.lab.size(), -1);
    int n = 0;
    for (size_t v = 0; v < d.lab.size(); ++v)
        if (d.lab[v] == -1) unk[v] = n++;
    struct Edge { int a, b; double w; };
    std::vector<Edge> edges;
    for (int j = 0; j + 1 < d.nr; ++j)
        for (int i = 0; i < d.nc; ++i) {
            if (!d.has_cell(i, j)) continue;
            int c00 = d.vid(i, j), c10 = d.vid(i + 1, j), c01 = d.vid(i, j + 1), c11 = d.vid(i + 1, j + 1);
            edges.push_back({c00, c10, 0.5});
            edges.push_back({c01, c11, 0.5});
            edges.push_back({c00, c01, 0.5});
            edges.push_back({c10, c11, 0.5});
        }
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    auto bval = [&](int v) { return d.lab[v] == 1 ? 1.0 : 0.0; };
    for (const auto& e : edges) {
        int ua = unk[e.a], ub = unk[e.b];
        if (ua >= 0) trip.emplace_back(ua, ua, e.w);
        if (ub >= 0) trip.emplace_back(ub, ub, e.w);
        if (ua >= 0 && ub >= 0) {
            trip.emplace_back(ua, ub, -e.w);
            trip.emplace_back(ub, ua, -e.w);
        } else if (ua >= 0) {
            rhs(ua) += e.w * bval(e.b);
        } else if (ub >= 0) {
            rhs(ub) += e.w * bval(e.a);
        }
    }
    Eigen::VectorXd u;
    solve_spd(trip, n, rhs, u);
    auto value = [&](int v) { return unk[v] >= 0 ? u(unk[v]) : bval(v); };
    double energy = 0;
    for (const auto& e : edges) energy += e.w * std::pow(value(e.a) - value(e.b), 2);
    return energy;
}

// Minimal energy of v = x + w with w periodic and free (natural condition) on the whole
// boundary. Boundary vertices are split into one copy per fan of domain squares that
// are joined through region edges, so slits act as two-sided walls.
double conjugate_energy(const CellDomain& d)
{
    const double h = 1.0 / d.nc;
    std::vector<int> rid(d.lab.size(), -1);
    int n = 0;
    for (size_t v = 0; v < d.lab.size(); ++v)
        if (d.lab[v] == -1) rid[v] = n++;
    // fan ids for boundary corners: key (vertex, quadrant) with quadrant 0 LL,1 LR,2 UL,3 UR
    std::vector<std::array<int, 4>> fan(d.lab.size(), {-1, -1, -1, -1});
    for (int j = 0; j < d.nr; ++j)
        for (int i = 0; i < d.nc; ++i) {
            int v = d.vid(i, j);
            if (d.lab[v] == -1 || d.lab[v] == 2) continue;
            bool q[4] = {d.has_cell(i - 1, j - 1), d.has_cell(i, j - 1), d.has_cell(i - 1, j), d.has_cell(i, j)};
            int parent[4] = {0, 1, 2, 3};
            auto find = [&](int x) { while (parent[x] != x) x = parent[x]; return x; };
            auto join = [&](int a, int b) { if (q[a] && q[b]) parent[find(a)] = find(b); };
            auto open = [&](int ni, int nj) { return nj >= 0 && nj < d.nr && d.lab[d.vid(ni, nj)] == -1; };
            if (open(i, j + 1)) join(2, 3);
            if (open(i, j - 1)) join(0, 1);
            if (open(i - 1, j)) join(0, 2);
            if (open(i + 1, j)) join(1, 3);
            int ids[4] = {-1, -1, -1, -1};
            for (int k = 0; k < 4; ++k) {
                if (!q[k]) continue;
                int root = find(k);
                if (ids[root] < 0) ids[root] = n++;
                fan[v][k] = ids[root];
            }
        }
    // dof of corner (ci, cj) as seen from the cell with lower-left (i, j)
    auto dof = [&](int i, int j, int ci, int cj) {
        int v = d.vid(ci, cj);
        if (rid[v] >= 0) return rid[v];
        int quadrant = (cj > j ? 0 : 2) + (ci != i ? 0 : 1);
        return fan[v][quadrant];
    };
    struct Edge { int a, b; double g; };
    std::vector<Edge> edges;
    for (int j = 0; j + 1 < d.nr; ++j)
        for (int i = 0; i < d.nc; ++i) {
            if (!d.has_cell(i, j)) continue;
            int a = dof(i, j, i, j), b = dof(i, j, i + 1, j), c = dof(i, j, i, j + 1), e = dof(i, j, i + 1, j + 1);
            edges.push_back({a, b, h});
            edges.push_back({c, e, h});
            edges.push_back({a, c, 0});
            edges.push_back({b, e, 0});
        }
    // edge term 1/2 (g + w_b - w_a)^2; dof 0 pinned to remove the constant
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    const double w = 0.5;
    for (const auto& e : edges) {
        trip.emplace_back(e.a, e.a, w);
        trip.emplace_back(e.b, e.b, w);
        trip.emplace_back(e.a, e.b, -w);
        trip.emplace_back(e.b, e.a, -w);
        rhs(e.a) += w * e.g;
        rhs(e.b) -= w * e.g;
    }
    trip.emplace_back(0, 0, 1.0);
    Eigen::VectorXd x;
    solve_spd(trip, n, rhs, x);
    double energy = 0;
    for (const auto& e : edges) energy += w * std::pow(e.g + x(e.b) - x(e.a), 2);
    return energy;
}

} // namespace

ModulusBracket grid_modulus_bracket(const GridRegion& r)
{
    CellDomain d = make_domain(r);
    double ep = primal_energy(d);
    if (!(ep > 0)) throw std::runtime_error("grid_modulus: zero energy");
    ModulusBracket m;
    m.lower = 1 / ep;
    m.upper = conjugate_energy(d);
    return m;
}

double grid_modulus(const GridRegion& r) { return grid_modulus_bracket(r).upper; }

double largest_straight_subcylinder(const GridRegion& r)
{
    if (!r.essential()) throw std::invalid_argument("largest_straight_subcylinder: region is not essential");
    int best = 0, run = 0;
    for (int j = 0; j < r.rows(); ++j) {
        bool full = true;
        for (int i = 0; i < r.cols() && full; ++i) full = r.inside(i, j);
        run = full ? run + 1 : 0;
        best = std::max(best, run);
    }
    return best == 0 ? 0.0 : (best + 1) * r.h();
}

GridRegion teichmuller_annulus_region(double b, int cols, double tail)
{
    if (!(b > 0) || !(tail > 0)) throw std::invalid_argument("teichmuller_annulus_region: b and tail must be positive");
    if (cols % 2 != 0) throw std::invalid_argument("teichmuller_annulus_region: need an even number of columns");
    double h = 1.0 / cols;
    int kb = static_cast<int>(std::lround(b / h));
    int kt = static_cast<int>(std::lround(tail / h));
    if (std::abs(kb * h - b) > 1e-12) throw std::invalid_argument("teichmuller_annulus_region: b must be a multiple of 1/cols");
    int rows = kb + 2 * kt + 1;
    GridRegion r(cols, rows, -b - kt * h);
    for (int j = 1; j < rows - 1; ++j)
        for (int i = 0; i < cols; ++i) {
            double y = r.y(j);
            bool slit_low = (i == 0) && y <= -b + 1e-12;
            bool slit_high = (i == cols / 2) && y >= -1e-12;
            r.set(i, j, !(slit_low || slit_high));
        }
    return r;
}

static double agm(double a, double g)
{
    for (int k = 0; k < 64 && std::abs(a - g) > 1e-16 * a; ++k) {
        double an = 0.5 * (a + g);
        g = std::sqrt(a * g);
        a = an;
    }
    return a;
}

double teichmuller_annulus_modulus(double b)
{
    if (!(b > 0)) throw std::invalid_argument("teichmuller_annulus_modulus: b must be positive");
    // ring C \ ([-1,0] u [P, oo)), P = e^{2 pi b}: modulus (1/2pi) 2 mu(1/sqrt(1+P)),
    // mu(r) = (pi/2) K(r')/K(r) = (pi/2) agm(1, r')/agm(1, r)
    double lp = 2 * pi * b;
    double r = std::exp(-0.5 * std::log1p(std::exp(-lp)) - 0.5 * lp);   // 1/sqrt(1+P) without overflow
    double rp = std::sqrt((1 - r) * (1 + r));
    double mu = 0.5 * pi * agm(1, rp) / agm(1, r);
    return 2 * mu / (2 * pi);
}

GridRegion notched_cylinder(int cols, double height, const std::vector<Notch>& notches)
{
    double h = 1.0 / cols;
    int k = static_cast<int>(std::lround(height / h));
    if (k < 2) throw std::invalid_argument("notched_cylinder: height too small");
    double H = k * h;
    auto bump = [&](const Notch& nt, double x) {
        double s = x - (nt.center - nt.width / 2);
        s -= std::floor(s);
        if (s >= nt.width) return 0.0;
        return nt.depth * std::sin(pi * s / nt.width);
    };
    GridRegion r(cols, k + 1);
    for (int i = 0; i < cols; ++i) {
        double x = r.x(i), lo = 0, hi = 0;
        for (const auto& nt : notches) (nt.top ? hi : lo) = std::max(nt.top ? hi : lo, bump(nt, x));
        for (int j = 1; j < k; ++j) {
            double y = r.y(j);
            r.set(i, j, y > lo && y < H - hi);
        }
    }
    return r;
}

NotchedSample random_notches(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(0, 1);
    NotchedSample s;
    s.height = 2.2 + 1.8 * U(rng);
    int n = 1 + static_cast<int>(U(rng) * 5);
    double lo = 0, hi = 0;
    for (int k = 0; k < n; ++k) {
        Notch nt;
        nt.top = U(rng) < 0.5;
        nt.center = U(rng);
        nt.width = 0.1 + 0.5 * U(rng);
        nt.depth = 0.05 + 0.85 * U(rng);
        (nt.top ? hi : lo) = std::max(nt.top ? hi : lo, nt.depth);
        s.notches.push_back(nt);
    }
    // keep a clear band so the region stays essential with modulus above 1
    double room = s.height - 1.2;
    if (lo + hi > room) {
        double f = room / (lo + hi);
        for (auto& nt : s.notches) nt.depth *= f;
    }
    return s;
}

} // namespace graftlab
