#include "graftlab/pants.hpp"
#include "graftlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace graftlab {

std::string Slot::label() const
{
    if (is_cusp()) return cusp;
    return curve + (side > 0 ? "+" : "-");
}

void PantsDecomposition::validate() const
{
    if (pants.empty()) throw AssemblyError("pants decomposition has no pants");
    std::set<std::string> names, curve_set, cusp_set;
    for (const auto& c : curves) {
        if (c.empty()) throw AssemblyError("empty curve label");
        if (!curve_set.insert(c).second) throw AssemblyError("duplicate curve " + c);
    }
    for (const auto& e : grafted)
        if (!curve_set.count(e)) throw AssemblyError("grafted curve " + e + " is not in F");
    std::map<std::string, int> plus, minus;
    for (const auto& p : pants) {
        if (p.name.empty() || !names.insert(p.name).second)
            throw AssemblyError("pants names must be unique and nonempty");
        for (const auto& s : p.slots) {
            if (s.is_cusp()) {
                if (s.cusp.empty()) throw AssemblyError("slot without curve or cusp in " + p.name);
                if (!cusp_set.insert(s.cusp).second) throw AssemblyError("duplicate cusp " + s.cusp);
                continue;
            }
            if (!curve_set.count(s.curve)) throw AssemblyError("unknown curve " + s.curve);
            if (s.side > 0) ++plus[s.curve];
            else if (s.side < 0) ++minus[s.curve];
            else throw AssemblyError("slot side must be + or -");
        }
    }
    for (const auto& c : curves)
        if (plus[c] != 1 || minus[c] != 1)
            throw AssemblyError("curve " + c + " must have exactly one + and one - slot");
    int n = static_cast<int>(cusp_set.size());
    int np = static_cast<int>(pants.size());
    if ((np + 2 - n) % 2 != 0 || np + 2 - n < 0)
        throw AssemblyError("pants count inconsistent with any surface");
    int g = (np + 2 - n) / 2;
    if (static_cast<int>(curves.size()) != 3 * g - 3 + n)
        throw AssemblyError("curve count inconsistent with Euler characteristic");
    // connectivity
    std::vector<int> seen(pants.size(), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    while (!q.empty()) {
        int p = q.front();
        q.pop();
        for (const auto& s : pants[p].slots) {
            if (s.is_cusp()) continue;
            SlotRef other = s.side > 0 ? minus_slot(s.curve) : plus_slot(s.curve);
            if (!seen[other.pants]) { seen[other.pants] = 1; q.push(other.pants); }
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
        throw AssemblyError("pants decomposition is disconnected");
}

int PantsDecomposition::cusps() const
{
    int n = 0;
    for (const auto& p : pants)
        for (const auto& s : p.slots) n += s.is_cusp();
    return n;
}

int PantsDecomposition::genus() const { return (static_cast<int>(pants.size()) + 2 - cusps()) / 2; }

static SlotRef find_slot(const PantsDecomposition& pd, const std::string& curve, int side)
{
    for (int p = 0; p < static_cast<int>(pd.pants.size()); ++p)
        for (int k = 0; k < 3; ++k) {
            const auto& s = pd.pants[p].slots[k];
            if (!s.is_cusp() && s.curve == curve && s.side == side) return {p, k};
        }
    throw AssemblyError("no slot for curve " + curve);
}

SlotRef PantsDecomposition::plus_slot(const std::string& curve) const { return find_slot(*this, curve, +1); }
SlotRef PantsDecomposition::minus_slot(const std::string& curve) const { return find_slot(*this, curve, -1); }

int PantsDecomposition::seam_partner(int p, int k) const
{
    int m1 = (k + 1) % 3, m2 = (k + 2) % 3;
    const auto& sl = pants[p].slots;
    return sl[m1].label() < sl[m2].label() ? m1 : m2;
}

bool PantsDecomposition::is_grafted(const std::string& curve) const
{
    return std::find(grafted.begin(), grafted.end(), curve) != grafted.end();
}

Word parse_word(const std::string& s)
{
    Word w;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) {
        Letter l;
        auto pos = tok.find('^');
        if (pos == std::string::npos) {
            l.gen = tok;
        } else {
            l.gen = tok.substr(0, pos);
            l.power = std::stoi(tok.substr(pos + 1));
        }
        if (l.gen.empty()) throw std::invalid_argument("bad word token '" + tok + "'");
        w.push_back(l);
    }
    return w;
}

std::string format_word(const Word& w)
{
    std::string s;
    for (const auto& l : w) {
        if (!s.empty()) s += ' ';
        s += l.gen;
        if (l.power != 1) s += "^" + std::to_string(l.power);
    }
    return s;
}

const MobiusMap& MarkedGroup::gen(const std::string& name) const
{
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return gens[i];
    throw std::invalid_argument("unknown generator " + name);
}

void MarkedGroup::set(const std::string& name, const MobiusMap& m)
{
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) { gens[i] = m; return; }
    names.push_back(name);
    gens.push_back(m);
}

MobiusMap MarkedGroup::eval(const Word& w) const
{
    MobiusMap r;
    for (const auto& l : w) {
        MobiusMap g = gen(l.gen);
        MobiusMap gi = g.inverse();
        int n = std::abs(l.power);
        for (int i = 0; i < n; ++i) r = r * (l.power > 0 ? g : gi);
    }
    return r;
}

static double identity_deviation(const MobiusMap& m)
{
    Eigen::Matrix2d d = m.matrix();
    double e1 = (d - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();
    double e2 = (d + Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();
    return std::min(e1, e2);
}

double MarkedGroup::relator_residual() const
{
    double r = 0;
    for (const auto& w : relators) {
        double scale = 1;
        for (const auto& l : w) scale *= std::pow(std::max(1.0, gen(l.gen).matrix().cwiseAbs().maxCoeff()), std::abs(l.power));
        r = std::max(r, identity_deviation(eval(w)) / scale);
    }
    return r;
}

MarkedGroup MarkedGroup::restrict_to(const std::vector<std::string>& keep) const
{
    std::set<std::string> k(keep.begin(), keep.end());
    auto ok = [&](const Word& w) {
        return std::all_of(w.begin(), w.end(), [&](const Letter& l) { return k.count(l.gen) > 0; });
    };
    MarkedGroup r;
    for (const auto& n : keep) r.set(n, gen(n));
    for (const auto& w : relators)
        if (ok(w)) r.relators.push_back(w);
    for (const auto& [c, w] : curve_map)
        if (ok(w)) r.curve_map[c] = w;
    for (const auto& [c, st] : seam_targets)
        if (ok(st.first) && ok(st.second) && r.curve_map.count(c)) r.seam_targets[c] = st;
    r.basepoint_frame = basepoint_frame;
    return r;
}

double hexagon_side(double l1, double l2, double l3)
{
    if (l1 < 0 || l2 < 0 || l3 < 0 || !std::isfinite(l1) || !std::isfinite(l2) || !std::isfinite(l3))
        throw std::invalid_argument("hexagon_side: half-lengths must be nonnegative and finite");
    if (l1 == 0 || l2 == 0) return kInf;
    double ch = (std::cosh(l3) + std::cosh(l1) * std::cosh(l2)) / (std::sinh(l1) * std::sinh(l2));
    return std::acosh(ch);
}

double half_twist(double x)
{
    double r = std::fmod(x, 0.5);
    if (r < 0) r += 0.5;
    if (r >= 0.5) r -= 0.5;
    return r;
}

double half_twist_diff(double a, double b)
{
    double d = half_twist(a - b);
    if (d >= 0.25) d -= 0.5;
    return d;
}

namespace {

Eigen::Matrix2d reflection(const Eigen::Vector3d& v)
{
    Eigen::Matrix2d r;
    r << v(0), v(1) + v(2), v(1) - v(2), -v(0);
    return r;
}

GeodesicOrPoint carrier(const MobiusMap& g)
{
    return axis(g);
}

// true when the region containing `other` lies to the left of g travelling forwards
bool left_of(const MobiusMap& g, double other)
{
    auto c = classify(g);
    if (c.kind == MobiusKind::Hyperbolic) {
        MobiusMap n = axis_normalizer(axis(g));
        return n.apply_boundary(other) < 0;
    }
    // parabolic: move the fixed point to infinity, read off the translation
    double p = axis(g).p;
    MobiusMap n = std::isinf(p) ? MobiusMap() : MobiusMap(0, -1, 1, -p);
    MobiusMap h = n * g * n.inverse();
    return h.b() / h.a() < 0;
}

struct LocalPants {
    std::array<MobiusMap, 3> g;
    std::array<MobiusMap, 3> frame;
};

std::array<MobiusMap, 3> pants_generators(const std::array<double, 3>& len)
{
    std::array<double, 3> C, S;
    for (int k = 0; k < 3; ++k) {
        C[k] = std::cosh(len[k] / 2);
        S[k] = std::sinh(len[k] / 2);
    }
    Eigen::Vector3d v0(1, 0, 0);
    double p = (S[2] * S[2] - 1) / 2, q = (S[2] * S[2] + 1) / 2;
    Eigen::Vector3d v1(-C[2], p, q);
    double K = -C[0] - C[1] * C[2];
    double y;
    if (S[2] == 0) {
        y = (K * K - S[1] * S[1] * q * q) / (2 * p * K);
    } else {
        double disc = K * K - S[1] * S[1] * S[2] * S[2];
        y = (-p * K + q * std::sqrt(std::max(disc, 0.0))) / (S[2] * S[2]);
    }
    double z = (p * y - K) / q;
    Eigen::Vector3d v2(-C[1], y, z);
    std::array<Eigen::Matrix2d, 3> R = {reflection(v0), reflection(v1), reflection(v2)};
    std::array<MobiusMap, 3> g;
    for (int k = 0; k < 3; ++k) g[k] = MobiusMap(Eigen::Matrix2d(R[(k + 1) % 3] * R[(k + 2) % 3]));
    return g;
}

double some_fixed_point(const MobiusMap& g)
{
    auto a = axis(g);
    return a.p;
}

MobiusMap mirror(const MobiusMap& m) { return MobiusMap(m.ea(), -m.eb(), -m.ec(), m.ed()); }

} // namespace

std::set<std::string> spanning_curves(const PantsDecomposition& pd)
{
    const int np = static_cast<int>(pd.pants.size());
    std::vector<int> placed(np, 0);
    std::set<std::string> tree;
    std::queue<int> q;
    placed[0] = 1;
    q.push(0);
    while (!q.empty()) {
        int p = q.front();
        q.pop();
        for (int k = 0; k < 3; ++k) {
            const auto& s = pd.pants[p].slots[k];
            if (s.is_cusp()) continue;
            SlotRef other = s.side > 0 ? pd.minus_slot(s.curve) : pd.plus_slot(s.curve);
            if (placed[other.pants]) continue;
            placed[other.pants] = 1;
            tree.insert(s.curve);
            q.push(other.pants);
        }
    }
    return tree;
}

MarkedGroup marking_template(const PantsDecomposition& pd)
{
    pd.validate();
    auto tree = spanning_curves(pd);
    MarkedGroup out;
    auto gname = [&](int p, int k) { return pd.pants[p].name + "." + std::to_string(k); };
    for (int p = 0; p < static_cast<int>(pd.pants.size()); ++p) {
        for (int k = 0; k < 3; ++k) out.set(gname(p, k), MobiusMap());
        out.relators.push_back(parse_word(gname(p, 0) + " " + gname(p, 1) + " " + gname(p, 2)));
    }
    for (const auto& c : pd.curves) {
        SlotRef pl = pd.plus_slot(c), mi = pd.minus_slot(c);
        std::string gp = gname(pl.pants, pl.slot), gm = gname(mi.pants, mi.slot);
        int mp = pd.seam_partner(pl.pants, pl.slot), mm = pd.seam_partner(mi.pants, mi.slot);
        Word plus_target = parse_word(gname(pl.pants, mp));
        Word minus_target;
        if (tree.count(c)) {
            out.relators.push_back(parse_word(gp + " " + gm));
            minus_target = parse_word(gname(mi.pants, mm));
        } else {
            std::string t = "t." + c;
            out.set(t, MobiusMap());
            out.relators.push_back(parse_word(t + " " + gm + " " + t + "^-1 " + gp));
            minus_target = parse_word(t + " " + gname(mi.pants, mm) + " " + t + "^-1");
        }
        out.curve_map[c] = parse_word(gp);
        out.seam_targets[c] = {plus_target, minus_target};
    }
    return out;
}

MarkedGroup build_group(const FNCoords& fn, const PantsDecomposition& pd)
{
    pd.validate();
    const int np = static_cast<int>(pd.pants.size());
    for (const auto& c : pd.curves) {
        auto it = fn.length.find(c);
        if (it == fn.length.end()) throw std::invalid_argument("missing length for curve " + c);
        if (!(it->second > 0) || !std::isfinite(it->second))
            throw std::invalid_argument("length of " + c + " must be positive and finite");
    }
    auto twist_of = [&](const std::string& c) {
        auto it = fn.twist.find(c);
        return it == fn.twist.end() ? 0.0 : it->second;
    };

    std::vector<LocalPants> local(np);
    for (int p = 0; p < np; ++p) {
        std::array<double, 3> len;
        for (int k = 0; k < 3; ++k) {
            const auto& s = pd.pants[p].slots[k];
            len[k] = s.is_cusp() ? 0.0 : fn.length.at(s.curve);
        }
        auto g = pants_generators(len);
        for (int k = 0; k < 3; ++k)
            if (classify(g[k]).kind == MobiusKind::Elliptic || classify(g[k]).kind == MobiusKind::Identity)
                throw AssemblyError("pants " + pd.pants[p].name + " produced a non-boundary element");
        // orient so that the pants lies to the left of every boundary element
        int ref = 0;
        bool left = left_of(g[ref], some_fixed_point(g[(ref + 1) % 3]));
        if (!left)
            for (auto& x : g) x = mirror(x);
        for (int k = 0; k < 3; ++k)
            if (!left_of(g[k], some_fixed_point(g[(k + 1) % 3])))
                throw AssemblyError("inconsistent boundary orientation in pants " + pd.pants[p].name);
        local[p].g = g;
        for (int k = 0; k < 3; ++k) {
            if (pd.pants[p].slots[k].is_cusp()) continue;
            int m = pd.seam_partner(p, k);
            auto ax = carrier(g[k]);
            auto foot = orthogeodesic(ax, carrier(g[m])).foot_a;
            local[p].frame[k] = MobiusMap::frame(foot, cplx(ax.q, 0));
        }
    }

    auto gluing = [&](const std::string& curve) {
        double l = fn.length.at(curve);
        double d = -twist_of(curve) * l;
        return MobiusMap::translation_along_imaginary_axis(d) * MobiusMap::half_turn_about_i();
    };

    std::vector<int> placed(np, 0);
    std::vector<std::string> stable;
    std::set<std::string> tree_curves;
    auto conj_pants = [&](int p, const MobiusMap& n) {
        for (int k = 0; k < 3; ++k) {
            local[p].g[k] = n * local[p].g[k] * n.inverse();
            local[p].frame[k] = n * local[p].frame[k];
        }
    };
    std::queue<int> q;
    placed[0] = 1;
    q.push(0);
    while (!q.empty()) {
        int p = q.front();
        q.pop();
        for (int k = 0; k < 3; ++k) {
            const auto& s = pd.pants[p].slots[k];
            if (s.is_cusp()) continue;
            SlotRef pl = pd.plus_slot(s.curve), mi = pd.minus_slot(s.curve);
            MobiusMap X = gluing(s.curve);
            if (s.side > 0 && !placed[mi.pants]) {
                MobiusMap n = local[pl.pants].frame[pl.slot] * X * local[mi.pants].frame[mi.slot].inverse();
                conj_pants(mi.pants, n);
                placed[mi.pants] = 1;
                tree_curves.insert(s.curve);
                q.push(mi.pants);
            } else if (s.side < 0 && !placed[pl.pants]) {
                MobiusMap n = local[mi.pants].frame[mi.slot] * X.inverse() * local[pl.pants].frame[pl.slot].inverse();
                conj_pants(pl.pants, n);
                placed[pl.pants] = 1;
                tree_curves.insert(s.curve);
                q.push(pl.pants);
            }
        }
    }

    if (tree_curves != spanning_curves(pd)) throw std::logic_error("build_group: spanning tree mismatch");
    MarkedGroup out = marking_template(pd);
    for (int p = 0; p < np; ++p)
        for (int k = 0; k < 3; ++k) out.set(pd.pants[p].name + "." + std::to_string(k), local[p].g[k]);
    for (const auto& c : pd.curves) {
        if (tree_curves.count(c)) continue;
        SlotRef pl = pd.plus_slot(c), mi = pd.minus_slot(c);
        out.set("t." + c, local[pl.pants].frame[pl.slot] * gluing(c) * local[mi.pants].frame[mi.slot].inverse());
    }
    double res = out.relator_residual();
    if (res > 1e-8) throw AssemblyError("assembled group violates its relations (relative residual " + std::to_string(res) + ")");
    return out;
}

FNCoords measure_fn(const MarkedGroup& g, const PantsDecomposition& pd)
{
    FNCoords fn;
    for (const auto& c : pd.curves) {
        auto it = g.curve_map.find(c);
        if (it == g.curve_map.end()) throw std::invalid_argument("group has no word for curve " + c);
        MobiusMap h = g.eval(it->second);
        auto cl = classify(h);
        if (cl.kind != MobiusKind::Hyperbolic)
            throw DegeneracyError("curve " + c + " is " + to_string(cl.kind) + " (surface pinched)");
        auto ax = axis(h);
        const auto& st = g.seam_targets.at(c);
        auto foot = [&](const Word& w) {
            auto target = axis(g.eval(w));
            return orthogeodesic(ax, target).foot_a;
        };
        double sp = position_on_geodesic(ax, foot(st.first));
        double sm = position_on_geodesic(ax, foot(st.second));
        fn.length[c] = cl.length;
        fn.twist[c] = half_twist((sp - sm) / cl.length);
    }
    return fn;
}

double group_distance(const MarkedGroup& g1, const MarkedGroup& g2)
{
    std::set<std::string> a(g1.names.begin(), g1.names.end()), b(g2.names.begin(), g2.names.end());
    if (a != b) throw std::invalid_argument("group_distance: markings differ");
    MobiusMap n1 = g1.basepoint_frame.inverse(), n2 = g2.basepoint_frame.inverse();
    double d = 0;
    for (const auto& name : g1.names) {
        Eigen::Matrix2d m1 = (n1 * g1.gen(name) * n1.inverse()).matrix();
        Eigen::Matrix2d m2 = (n2 * g2.gen(name) * n2.inverse()).matrix();
        double e = std::min((m1 - m2).cwiseAbs().maxCoeff(), (m1 + m2).cwiseAbs().maxCoeff());
        d = std::max(d, e);
    }
    return d;
}

static Slot curve_slot(const std::string& c, int side)
{
    Slot s;
    s.curve = c;
    s.side = side;
    return s;
}

static Slot cusp_slot(const std::string& name)
{
    Slot s;
    s.cusp = name;
    return s;
}

PantsDecomposition one_holed_torus_pd(const std::string& curve, const std::string& cusp)
{
    PantsDecomposition pd;
    pd.curves = {curve};
    pd.grafted = {curve};
    pd.pants.push_back({"P", {curve_slot(curve, +1), curve_slot(curve, -1), cusp_slot(cusp)}});
    return pd;
}

PantsDecomposition twice_punctured_torus_pd()
{
    PantsDecomposition pd;
    pd.curves = {"a", "b"};
    pd.grafted = {"a"};
    pd.pants.push_back({"P", {curve_slot("a", +1), curve_slot("a", -1), curve_slot("b", +1)}});
    pd.pants.push_back({"Q", {curve_slot("b", -1), cusp_slot("p"), cusp_slot("q")}});
    return pd;
}

PantsDecomposition four_punctured_sphere_pd()
{
    PantsDecomposition pd;
    pd.curves = {"a"};
    pd.grafted = {"a"};
    pd.pants.push_back({"P", {curve_slot("a", +1), cusp_slot("p1"), cusp_slot("p2")}});
    pd.pants.push_back({"Q", {curve_slot("a", -1), cusp_slot("p3"), cusp_slot("p4")}});
    return pd;
}

void to_json(nlohmann::json& j, const PantsDecomposition& pd)
{
    j = nlohmann::json{{"schema", 1}, {"curves", pd.curves}, {"grafted", pd.grafted}};
    auto arr = nlohmann::json::array();
    for (const auto& p : pd.pants) {
        auto slots = nlohmann::json::array();
        for (const auto& s : p.slots) {
            if (s.is_cusp()) slots.push_back({{"cusp", s.cusp}});
            else slots.push_back({{"curve", s.curve}, {"side", s.side > 0 ? "+" : "-"}});
        }
        arr.push_back({{"name", p.name}, {"slots", slots}});
    }
    j["pants"] = arr;
}

void from_json(const nlohmann::json& j, PantsDecomposition& pd)
{
    if (j.value("schema", 1) != 1) throw std::invalid_argument("unsupported pants schema");
    pd = PantsDecomposition{};
    pd.curves = j.at("curves").get<std::vector<std::string>>();
    pd.grafted = j.value("grafted", std::vector<std::string>{});
    for (const auto& jp : j.at("pants")) {
        Pants p;
        p.name = jp.at("name").get<std::string>();
        const auto& js = jp.at("slots");
        if (js.size() != 3) throw std::invalid_argument("pants " + p.name + " needs exactly 3 slots");
        for (int k = 0; k < 3; ++k) {
            if (js[k].contains("cusp")) {
                p.slots[k] = cusp_slot(js[k].at("cusp").get<std::string>());
            } else {
                std::string side = js[k].at("side").get<std::string>();
                if (side != "+" && side != "-") throw std::invalid_argument("slot side must be + or -");
                p.slots[k] = curve_slot(js[k].at("curve").get<std::string>(), side == "+" ? 1 : -1);
            }
        }
        pd.pants.push_back(p);
    }
}

void to_json(nlohmann::json& j, const FNCoords& fn)
{
    nlohmann::json cs = nlohmann::json::object();
    for (const auto& [c, l] : fn.length) {
        cs[c]["length"] = l;
        auto it = fn.twist.find(c);
        cs[c]["twist"] = it == fn.twist.end() ? 0.0 : it->second;
    }
    j = nlohmann::json{{"schema", 1}, {"curves", cs}};
}

void from_json(const nlohmann::json& j, FNCoords& fn)
{
    if (j.value("schema", 1) != 1) throw std::invalid_argument("unsupported FN schema");
    fn = FNCoords{};
    for (const auto& [c, v] : j.at("curves").items()) {
        fn.length[c] = v.at("length").get<double>();
        fn.twist[c] = v.value("twist", 0.0);
    }
}

} // namespace graftlab
