#include "graftlab/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "graftlab/cylinder.hpp"
#include "graftlab/distortion.hpp"
#include "graftlab/uniformize.hpp"

namespace graftlab {

namespace {

constexpr double kPi = std::numbers::pi;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

using json = nlohmann::json;

std::string num(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string csv_text(std::string s)
{
    std::replace(s.begin(), s.end(), '\n', ' ');
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string o = "\"";
    for (char c : s) {
        if (c == '"') o += '"';
        o += c;
    }
    return o + "\"";
}

// line and column of a byte offset
std::string where(const std::string& text, std::size_t byte)
{
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

json parse_text(const std::string& text, const std::string& what)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::string msg = e.what();
        auto p = msg.find("syntax error");
        throw ConfigError(what + ": " + where(text, e.byte) + ": " + (p == std::string::npos ? msg : msg.substr(p)));
    }
}

template <class T>
T field(const json& j, const std::string& path, const char* key)
{
    if (!j.contains(key)) throw ConfigError("config field '" + path + key + "': missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config field '" + path + key + "': wrong type (" + j.at(key).type_name() + ")");
    }
}

template <class T>
T field_or(const json& j, const std::string& path, const char* key, T def)
{
    return j.contains(key) ? field<T>(j, path, key) : def;
}

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys)
{
    if (!j.is_object()) throw ConfigError("config field '" + path + "': expected an object");
    for (const auto& [k, v] : j.items()) {
        (void)v;
        if (std::find_if(keys.begin(), keys.end(), [&](const char* s) { return k == s; }) == keys.end())
            throw ConfigError("config field '" + path + k + "': unknown key");
    }
}

std::vector<double> parse_grid(const json& g, const std::string& path)
{
    std::vector<double> out;
    if (g.is_array()) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!g[i].is_number()) throw ConfigError("config field '" + path + "[" + std::to_string(i) + "]': expected a number");
            out.push_back(g[i].get<double>());
        }
        return out;
    }
    only_keys(g, path + ".", {"start", "ratio", "count"});
    double start = field<double>(g, path + ".", "start");
    double ratio = field<double>(g, path + ".", "ratio");
    int count = field<int>(g, path + ".", "count");
    if (!(start > 0) || !(ratio > 1) || count < 1 || count > 64)
        throw ConfigError("config field '" + path + "': need start > 0, ratio > 1, 1 <= count <= 64");
    for (int k = 0; k < count; ++k) out.push_back(start * std::pow(ratio, k));
    return out;
}

// field level type checks so errors can name the key
void check_surface(const json& s)
{
    if (!s.is_object()) throw ConfigError("config field 'surface': expected an object");
    auto want = [&](const json& j, const std::string& path, const char* key, bool number) {
        if (!j.contains(key)) return;
        if (number ? !j.at(key).is_number() : !j.at(key).is_string())
            throw ConfigError("config field '" + path + key + "': expected a " + (number ? "number" : "string") + ", got " +
                              j.at(key).type_name());
    };
    for (const char* k : {"name", "mode", "topology"}) want(s, "surface.", k, false);
    for (const char* k : {"schema", "height", "shift", "columns"}) want(s, "surface.", k, true);
    if (!s.contains("punctures")) return;
    if (!s.at("punctures").is_array()) throw ConfigError("config field 'surface.punctures': expected an array");
    for (std::size_t i = 0; i < s.at("punctures").size(); ++i) {
        const json& p = s.at("punctures")[i];
        std::string path = "surface.punctures[" + std::to_string(i) + "].";
        if (!p.is_object()) throw ConfigError("config field '" + path.substr(0, path.size() - 1) + "': expected an object");
        want(p, path, "name", false);
        want(p, path, "x", true);
        want(p, path, "y", true);
    }
}

SweepConfig from_config_json(const json& j, const std::filesystem::path& base)
{
    only_keys(j, "", {"schema", "surface", "surface_file", "grid", "refine", "H", "window_from",
                      "discrepancy_tolerance", "solver", "output", "seed"});
    if (field_or<int>(j, "", "schema", 1) != 1) throw ConfigError("config field 'schema': unsupported version");
    SweepConfig c;
    json surf;
    if (j.contains("surface") == j.contains("surface_file"))
        throw ConfigError("config field 'surface': give exactly one of surface, surface_file");
    if (j.contains("surface")) {
        surf = j.at("surface");
    } else {
        auto p = base / field<std::string>(j, "", "surface_file");
        std::ifstream in(p);
        if (!in) throw ConfigError("config field 'surface_file': cannot open " + p.string());
        std::stringstream ss;
        ss << in.rdbuf();
        surf = parse_text(ss.str(), p.string());
    }
    check_surface(surf);
    try {
        c.surface = surf.get<SurfaceSpec>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field 'surface': ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config field 'surface': ") + e.what());
    }
    const json& g = j.contains("grid") ? j.at("grid") : throw ConfigError("config field 'grid': missing");
    if (!g.is_object()) throw ConfigError("config field 'grid': expected an object keyed by curve");
    for (const auto& [k, v] : g.items()) c.grid[k] = parse_grid(v, "grid." + k);
    c.refine = field_or<int>(j, "", "refine", 1);
    c.H = field_or<double>(j, "", "H", 8.0);
    c.window_from = field_or<double>(j, "", "window_from", 0.5);
    c.discrepancy_tolerance = field_or<double>(j, "", "discrepancy_tolerance", 1e-2);
    c.seed = field_or<std::uint64_t>(j, "", "seed", 0);
    if (j.contains("solver")) {
        const json& o = j.at("solver");
        only_keys(o, "solver.", {"tol", "max_iter"});
        c.tol = field_or<double>(o, "solver.", "tol", c.tol);
        c.max_iter = field_or<int>(o, "solver.", "max_iter", c.max_iter);
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        only_keys(o, "output.", {"dir", "csv", "plots"});
        c.out_dir = field_or<std::string>(o, "output.", "dir", c.out_dir);
        c.csv_name = field_or<std::string>(o, "output.", "csv", c.csv_name);
        c.plots = field_or<bool>(o, "output.", "plots", c.plots);
    }
    c.validate();
    return c;
}

} // namespace

// ---------------------------------------------------------------- config

std::size_t SweepConfig::size() const { return grid.empty() ? 0 : grid.begin()->second.size(); }

GraftingVector SweepConfig::at(std::size_t k) const
{
    GraftingVector v;
    for (const auto& [c, g] : grid) v.t[c] = g.at(k);
    return v;
}

void SweepConfig::validate() const
{
    try {
        surface.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config field 'surface': ") + e.what());
    }
    if (grid.empty()) throw ConfigError("config field 'grid': empty");
    for (const auto& c : surface.pd.grafted)
        if (!grid.count(c)) throw ConfigError("config field 'grid." + c + "': missing for a grafted curve");
    for (const auto& [c, g] : grid) {
        if (!surface.pd.is_grafted(c)) throw ConfigError("config field 'grid." + c + "': not a grafted curve");
        if (g.empty()) throw ConfigError("config field 'grid." + c + "': empty");
        if (g.size() != size()) throw ConfigError("config field 'grid." + c + "': grids differ in length");
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (!(g[k] >= 0) || !std::isfinite(g[k])) throw ConfigError("config field 'grid." + c + "': values must be >= 0");
            if (k > 0 && !(g[k] > g[k - 1])) throw ConfigError("config field 'grid." + c + "': not strictly increasing");
        }
    }
    try {
        build_St_mesh(surface, at(0), 1);   // grid placement only
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config field 'surface': ") + e.what());
    }
    if (refine < 1 || refine > 4) throw ConfigError("config field 'refine': must be in 1..4");
    if (!(H >= 5 && H <= 16)) throw ConfigError("config field 'H': must be in [5, 16]");
    if (!(window_from > 0 && window_from < 1)) throw ConfigError("config field 'window_from': must be in (0, 1)");
    if (!(discrepancy_tolerance > 0)) throw ConfigError("config field 'discrepancy_tolerance': must be positive");
    if (!(tol > 0 && tol < 1e-4)) throw ConfigError("config field 'solver.tol': must be in (0, 1e-4)");
    if (max_iter < 1 || max_iter > 1000) throw ConfigError("config field 'solver.max_iter': must be in 1..1000");
    if (csv_name.empty()) throw ConfigError("config field 'output.csv': empty");
}

SweepConfig parse_sweep_config(const std::string& text)
{
    return from_config_json(parse_text(text, "config"), std::filesystem::current_path());
}

SweepConfig load_sweep_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    auto base = std::filesystem::path(path).parent_path();
    return from_config_json(parse_text(ss.str(), path), base.empty() ? std::filesystem::path(".") : base);
}

json sweep_config_json(const SweepConfig& c)
{
    json g = json::object();
    for (const auto& [k, v] : c.grid) g[k] = v;
    return json{{"schema", 1},
                {"surface", c.surface},
                {"grid", g},
                {"refine", c.refine},
                {"H", c.H},
                {"window_from", c.window_from},
                {"discrepancy_tolerance", c.discrepancy_tolerance},
                {"solver", {{"tol", c.tol}, {"max_iter", c.max_iter}}},
                {"output", {{"dir", c.out_dir}, {"csv", c.csv_name}, {"plots", c.plots}}},
                {"seed", c.seed}};
}

// ---------------------------------------------------------------- workers

void parallel_for(int n, int threads, const std::function<void(int)>& f)
{
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, std::max(n, 1));
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex mu;
    auto work = [&] {
        for (int k; (k = next++) < n;) {
            try {
                f(k);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------- sweep

bool SweepResult::limits_ok() const
{
    if (!angles || limits.empty()) return false;
    for (const auto& [c, l] : limits)
        if (!(l.discrepancy <= tolerance)) return false;
    return true;
}

TwistLimit extrapolate_twist(const std::vector<double>& t, const std::vector<double>& theta, double predicted)
{
    if (t.size() != theta.size() || t.empty()) throw std::invalid_argument("extrapolate_twist: need matching non-empty data");
    TwistLimit r;
    r.predicted = half_twist(predicted);
    r.last_raw = theta.back();
    const std::size_t n = t.size(), from = n / 2;
    const std::size_t m = n - from;
    if (m < 2) {
        r.extrapolated = theta.back();
        r.fit_points = 1;
    } else {
        Eigen::MatrixXd A(m, 2);
        Eigen::VectorXd b(m);
        double scale = 0;
        for (std::size_t k = 0; k < m; ++k) scale = std::max(scale, std::exp(-kPi * t[from + k]));
        for (std::size_t k = 0; k < m; ++k) {
            A(k, 0) = 1;
            A(k, 1) = std::exp(-kPi * t[from + k]) / scale;
            b(k) = theta[from + k];
        }
        Eigen::Vector2d x = A.colPivHouseholderQr().solve(b);
        r.extrapolated = x(0);
        r.decay = x(1) / scale;
        r.fit_points = static_cast<int>(m);
    }
    r.discrepancy = std::abs(half_twist_diff(r.extrapolated, r.predicted));
    return r;
}

SweepResult graft_sweep(const SweepConfig& cfg, int threads)
{
    cfg.validate();
    const SurfaceSpec& s = cfg.surface;
    const int n = static_cast<int>(cfg.size());
    SweepResult r;
    r.tolerance = cfg.discrepancy_tolerance;
    r.rows.resize(n);
    std::vector<std::optional<MarkedGroup>> groups(n);
    std::optional<MarkedGroup> ginf;
    UniformizeOptions uo;
    uo.tol = cfg.tol;
    uo.max_iter = cfg.max_iter;

    parallel_for(n + 1, threads, [&](int k) {
        if (k == n) {
            try {
                auto g = build_Sinfty_mesh(s, cfg.H, cfg.refine);
                uniformize(g.mesh, uo);
                ginf = holonomy(g.mesh, s.pd);
                r.infinity = measure_surface(g.mesh, s.pd);
                r.angles = limiting_angles(g, s, cfg.window_from);
            } catch (const std::exception& e) {
                r.angles_error = e.what();
            }
            return;
        }
        SweepRow& row = r.rows[k];
        row.t = cfg.at(k);
        try {
            auto g = build_St_mesh(s, row.t, cfg.refine);
            auto rep = uniformize(g.mesh, uo);
            row.iterations = rep.iterations;
            groups[k] = holonomy(g.mesh, s.pd);
            row.fn = measure_surface(g.mesh, s.pd);
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });

    for (const auto& c : s.pd.grafted) {
        std::optional<double> prev_raw, prev;
        std::vector<double> ts, th;
        for (auto& row : r.rows) {
            if (!row.ok) continue;
            double raw = row.fn.twist.count(c) ? row.fn.twist.at(c) : kNaN;
            double u = prev ? *prev + half_twist_diff(raw, *prev_raw) : raw;
            row.unrolled[c] = u;
            prev_raw = raw;
            prev = u;
            ts.push_back(row.t.at(c));
            th.push_back(u);
        }
        if (r.angles && !ts.empty()) r.limits[c] = extrapolate_twist(ts, th, r.angles->predicted);
    }
    for (int k = 0; k < n; ++k) {
        auto& row = r.rows[k];
        row.group_distance = kNaN;
        if (row.ok && ginf) {
            try {
                row.group_distance = group_distance(groups[k]->restrict_to(ginf->names), *ginf);
            } catch (const std::exception&) {
            }
        }
    }
    return r;
}

std::vector<std::string> sweep_columns(const SweepConfig& cfg)
{
    const auto& pd = cfg.surface.pd;
    std::vector<std::string> cols;
    for (const auto& c : pd.grafted) cols.push_back("t_" + c);
    for (const auto& c : pd.grafted) {
        cols.push_back("length_" + c);
        cols.push_back("pinch_bound_" + c);
    }
    for (const auto& c : pd.curves) {
        if (pd.is_grafted(c)) continue;
        cols.push_back("length_" + c);
        cols.push_back("twist_" + c);
    }
    for (const auto& c : pd.grafted) {
        cols.push_back("twist_" + c);
        cols.push_back("twist_unrolled_" + c);
    }
    cols.push_back("group_distance");
    cols.push_back("iterations");
    cols.push_back("status");
    return cols;
}

void write_sweep_csv(const SweepConfig& cfg, const SweepResult& r, std::ostream& out)
{
    const auto& pd = cfg.surface.pd;
    auto cols = sweep_columns(cfg);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
    auto get = [](const std::map<std::string, double>& m, const std::string& k) {
        auto it = m.find(k);
        return it == m.end() ? kNaN : it->second;
    };
    for (const auto& row : r.rows) {
        std::vector<std::string> cells;
        for (const auto& c : pd.grafted) cells.push_back(num(row.t.at(c)));
        for (const auto& c : pd.grafted) {
            double t = row.t.at(c);
            cells.push_back(row.ok ? num(get(row.fn.length, c)) : "nan");
            cells.push_back(num(t > 0 ? pinching_bound(t) : std::numeric_limits<double>::infinity()));
        }
        for (const auto& c : pd.curves) {
            if (pd.is_grafted(c)) continue;
            cells.push_back(row.ok ? num(get(row.fn.length, c)) : "nan");
            cells.push_back(row.ok ? num(get(row.fn.twist, c)) : "nan");
        }
        for (const auto& c : pd.grafted) {
            cells.push_back(row.ok ? num(get(row.fn.twist, c)) : "nan");
            cells.push_back(row.ok ? num(get(row.unrolled, c)) : "nan");
        }
        cells.push_back(num(row.group_distance));
        cells.push_back(std::to_string(row.iterations));
        cells.push_back(row.ok ? "ok" : csv_text("error: " + row.error));
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << "\n";
    }
    auto foot = [&](const std::string& k, const std::string& v) { out << "#" << k << "," << v << "\n"; };
    if (!r.angles) {
        foot("limiting_angles", csv_text("error: " + r.angles_error));
    } else {
        const auto& a = *r.angles;
        const std::string& c = pd.grafted.front();
        foot("theta_plus_inf_" + c, num(a.plus.theta_inf));
        foot("theta_minus_inf_" + c, num(a.minus.theta_inf));
        foot("fit_residual_plus_" + c, num(a.plus.residual));
        foot("fit_residual_minus_" + c, num(a.minus.residual));
    }
    for (const auto& [c, l] : r.limits) {
        foot("predicted_limit_" + c, num(l.predicted));
        foot("extrapolated_limit_" + c, num(l.extrapolated));
        foot("fit_decay_" + c, num(l.decay));
        foot("fit_points_" + c, std::to_string(l.fit_points));
        foot("last_raw_" + c, num(l.last_raw));
        foot("discrepancy_" + c, num(l.discrepancy));
    }
    for (const auto& c : pd.curves)
        if (!pd.is_grafted(c) && r.infinity.length.count(c)) foot("length_inf_" + c, num(r.infinity.length.at(c)));
    foot("discrepancy_tolerance", num(r.tolerance));
    foot("limit_check", r.limits_ok() ? "pass" : "fail");
    foot("seed", std::to_string(cfg.seed));
}

// ---------------------------------------------------------------- plots

namespace {

struct Series {
    std::string label;
    std::vector<double> x, y;
    std::string color;
    bool dashed = false;
    bool markers = true;
};

void svg_plot(std::ostream& out, const std::string& title, const std::string& xl, const std::string& yl,
              const std::vector<Series>& series, bool logx, bool logy)
{
    const double W = 640, Hh = 420, L = 70, R = 20, T = 40, B = 55;
    auto tx = [&](double v) { return logx ? std::log10(v) : v; };
    auto ty = [&](double v) { return logy ? std::log10(v) : v; };
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if ((logx && s.x[i] <= 0) || (logy && s.y[i] <= 0)) continue;
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    if (x0 > x1) x0 = 0, x1 = 1;
    if (y0 > y1) y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-12) y0 -= 0.5 * std::max(1e-6, std::abs(y0)), y1 += 0.5 * std::max(1e-6, std::abs(y1));
    double py = 0.05 * (y1 - y0);
    y0 -= py;
    y1 += py;
    auto X = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
    auto Y = [&](double v) { return Hh - B - (ty(v) - y0) / (y1 - y0) * (Hh - T - B); };
    char buf[256];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                  L, T, W - L - R, Hh - T - B);
    out << buf;
    for (int k = 0; k <= 5; ++k) {
        double u = x0 + (x1 - x0) * k / 5, v = y0 + (y1 - y0) * k / 5;
        double xv = logx ? std::pow(10, u) : u, yv = logy ? std::pow(10, v) : v;
        std::snprintf(buf, sizeof buf,
                      "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%.4g</text>\n"
                      "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.4g</text>\n",
                      X(xv), Hh - B + 18, xv, L - 6, Y(yv) + 4, yv);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%s</text>\n", L + (W - L - R) / 2,
                  Hh - 12, xl.c_str());
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"16\" y=\"%g\" transform=\"rotate(-90 16 %g)\" text-anchor=\"middle\">%s</text>\n",
                  T + (Hh - T - B) / 2, T + (Hh - T - B) / 2, yl.c_str());
    out << buf;
    int li = 0;
    for (const auto& s : series) {
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if ((logx && s.x[i] <= 0) || (logy && s.y[i] <= 0)) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", X(s.x[i]), Y(s.y[i]));
            pts += buf;
        }
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
            << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"" << pts << "\"/>\n";
        if (s.markers)
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
                if ((logx && s.x[i] <= 0) || (logy && s.y[i] <= 0)) continue;
                std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n", X(s.x[i]),
                              Y(s.y[i]), s.color.c_str());
                out << buf;
            }
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"%s\" stroke-width=\"1.5\"%s/>"
                      "<text x=\"%g\" y=\"%g\">%s</text>\n",
                      W - R - 180, T + 16.0 + 16 * li, W - R - 155, T + 16.0 + 16 * li, s.color.c_str(),
                      s.dashed ? " stroke-dasharray=\"6,4\"" : "", W - R - 150, T + 20.0 + 16 * li, s.label.c_str());
        out << buf;
        ++li;
    }
    out << "</svg>\n";
}

} // namespace

void write_twist_svg(const SweepConfig& cfg, const SweepResult& r, std::ostream& out)
{
    const std::string& c = cfg.surface.pd.grafted.front();
    Series m{"measured twist (unrolled)", {}, {}, "#1f77b4"};
    for (const auto& row : r.rows)
        if (row.ok) {
            m.x.push_back(row.t.at(c));
            m.y.push_back(row.unrolled.at(c));
        }
    std::vector<Series> s{m};
    auto it = r.limits.find(c);
    if (it != r.limits.end() && !m.x.empty()) {
        // lift of the prediction closest to the last measured value
        double p = it->second.predicted;
        p += 0.5 * std::round((m.y.back() - p) / 0.5);
        s.push_back({"predicted limit", {m.x.front(), m.x.back()}, {p, p}, "#d62728", true, false});
    }
    svg_plot(out, "twist of " + c + " along the grafting ray", "t", "half-twist", s, false, false);
}

void write_length_svg(const SweepConfig& cfg, const SweepResult& r, std::ostream& out)
{
    const std::string& c = cfg.surface.pd.grafted.front();
    Series m{"length of " + c, {}, {}, "#1f77b4"};
    Series b{"pi / t", {}, {}, "#d62728", true, false};
    for (const auto& row : r.rows) {
        double t = row.t.at(c);
        if (t <= 0) continue;
        b.x.push_back(t);
        b.y.push_back(pinching_bound(t));
        if (row.ok) {
            m.x.push_back(t);
            m.y.push_back(row.fn.length.at(c));
        }
    }
    svg_plot(out, "pinching of " + c, "t (log)", "length (log)", {m, b}, true, true);
}

// ---------------------------------------------------------------- audits

int AuditReport::failures() const
{
    return static_cast<int>(std::count_if(rows.begin(), rows.end(), [](const AuditRow& r) { return !r.pass; }));
}

AuditReport collar_audit(const AuditOptions& opt)
{
    const int n = opt.count < 0 ? 1000 : opt.count;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> U(0.01, kPi - 0.01);
    AuditReport rep{"collar", {}};
    for (int k = 0; k < n; ++k) {
        double l = U(rng);
        auto cm = collar_modulus_bounds(l);
        AuditRow row{"collar_" + std::to_string(k), cm.exact, cm.lower, cm.upper, false, {{"l", l}}};
        row.pass = cm.exact >= cm.lower - 1e-12 && cm.exact <= cm.upper + 1e-12;
        rep.rows.push_back(row);
    }
    return rep;
}

AuditReport nonsqueeze_audit(const AuditOptions& opt, int cols)
{
    const int n = opt.count < 0 ? 50 : opt.count;
    if (cols < 8) throw std::invalid_argument("nonsqueeze_audit: need at least 8 columns");
    std::mt19937_64 rng(opt.seed);
    std::vector<NotchedSample> samples;
    for (int k = 0; k < n; ++k) samples.push_back(random_notches(rng));
    AuditReport rep{"nonsqueeze", std::vector<AuditRow>(2 * n)};
    parallel_for(2 * n, opt.threads, [&](int idx) {
        int k = idx / 2, c = idx % 2 ? 2 * cols : cols;
        auto reg = notched_cylinder(c, samples[k].height, samples[k].notches);
        double h = reg.h();
        AuditRow row;
        row.name = "region_" + std::to_string(k) + "_cols" + std::to_string(c);
        if (!reg.essential()) {
            row.computed = kNaN;
            row.lower = kNaN;
            row.upper = std::numeric_limits<double>::infinity();
            row.extra = {{"h", h}, {"grid_modulus", kNaN}, {"margin", kNaN}, {"height", samples[k].height}};
            rep.rows[idx] = row;
            return;
        }
        double m = grid_modulus(reg), big = largest_straight_subcylinder(reg);
        row.computed = big;
        row.lower = m - 1 - 10 * h;
        row.upper = std::numeric_limits<double>::infinity();
        row.pass = big >= row.lower;
        row.extra = {{"h", h}, {"grid_modulus", m}, {"margin", big - (m - 1)}, {"height", samples[k].height}};
        rep.rows[idx] = row;
    });
    return rep;
}

AuditReport distortion_audit(const AuditOptions& opt, double eps)
{
    const int n = opt.count < 0 ? 100 : opt.count;
    const double c = buffer_for_epsilon(eps);
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> B(4, 8);
    std::vector<StripMapSpec> maps;
    for (int k = 0; k < n; ++k) {
        double b = B(rng);
        maps.push_back(random_strip_map(b, rng));
    }
    AuditReport rep{"distortion", std::vector<AuditRow>(n + 1)};
    auto fill = [&](int k, const StripMapSpec& f, const std::string& name, bool identity) {
        auto rec = audit_strip_map(f, c, eps, k);
        AuditRow row{name, rec.empirical_sup, -std::numeric_limits<double>::infinity(), rec.bound, false,
                     {{"b", rec.b}, {"c", rec.c}, {"margin", rec.margin}, {"violations", double(rec.pointwise_violations)}}};
        row.pass = f.certified() && rec.pointwise_violations == 0 && rec.empirical_sup <= rec.bound;
        if (identity) row.pass = row.pass && rec.margin == rec.bound;
        rep.rows[k] = row;
    };
    parallel_for(n + 1, opt.threads, [&](int k) {
        if (k == n)
            fill(k, StripMapSpec::identity(8), "identity", true);
        else
            fill(k, maps[k], "map_" + std::to_string(k), false);
    });
    return rep;
}

AuditReport modulus_audit(const AuditOptions& opt, int cols)
{
    (void)opt;
    AuditReport rep{"modulus", {}};
    const double lo = 4 * std::log(2.0) / (2 * kPi), hi = 5 * std::log(2.0) / (2 * kPi);
    const std::vector<double> bs{1, 2, 4};
    rep.rows.resize(bs.size());
    parallel_for(static_cast<int>(bs.size()), opt.threads, [&](int k) {
        double b = bs[k];
        auto reg = teichmuller_annulus_region(b, cols, 2.5);
        double m = grid_modulus(reg), exact = teichmuller_annulus_modulus(b);
        double rel = std::abs(m / exact - 1);
        AuditRow row{"teichmuller_b" + num(b), m, b + lo, b + hi, false,
                     {{"b", b}, {"exact", exact}, {"relative_error", rel}, {"h", reg.h()}}};
        row.pass = m >= row.lower && m <= row.upper && rel < 0.01;
        rep.rows[k] = row;
    });
    return rep;
}

void write_audit_csv(const AuditReport& r, std::ostream& out)
{
    std::vector<std::string> keys;
    if (!r.rows.empty())
        for (const auto& [k, v] : r.rows.front().extra) {
            (void)v;
            keys.push_back(k);
        }
    out << "case,computed,lower,upper,pass";
    for (const auto& k : keys) out << "," << k;
    out << "\n";
    for (const auto& row : r.rows) {
        out << csv_text(row.name) << "," << num(row.computed) << "," << num(row.lower) << "," << num(row.upper) << ","
            << (row.pass ? "pass" : "fail");
        for (const auto& k : keys) {
            auto it = row.extra.find(k);
            out << "," << (it == row.extra.end() ? "nan" : num(it->second));
        }
        out << "\n";
    }
}

AuditConfig parse_audit_config(const std::string& text)
{
    json j = parse_text(text, "audit config");
    only_keys(j, "", {"count", "cols", "seed", "eps"});
    AuditConfig c;
    if (j.contains("count")) c.count = field<int>(j, "", "count");
    if (j.contains("cols")) c.cols = field<int>(j, "", "cols");
    if (j.contains("seed")) c.seed = field<std::uint64_t>(j, "", "seed");
    if (j.contains("eps")) c.eps = field<double>(j, "", "eps");
    if (c.count && *c.count < 0) throw ConfigError("config field 'count': must be >= 0");
    if (c.cols && *c.cols < 8) throw ConfigError("config field 'cols': must be >= 8");
    if (c.eps && !(*c.eps > 0 && *c.eps < 1)) throw ConfigError("config field 'eps': must be in (0, 1)");
    return c;
}

} // namespace graftlab
