#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <numbers>
#include <sstream>

#include "graftlab/lab.hpp"

using namespace graftlab;

namespace {

const char* kConfig = R"({
  "schema": 1,
  "surface": {"schema": 1, "topology": "punctured-torus", "height": 1, "shift": 0,
              "columns": 16, "punctures": [{"name": "p", "x": 0, "y": 0.5}]},
  "grid": {"a": {"start": 1, "ratio": 2, "count": 3}},
  "H": 6,
  "seed": 42
})";

std::string error_of(const std::string& text)
{
    try {
        parse_sweep_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

} // namespace

TEST_CASE("sweep config parsing")
{
    auto c = parse_sweep_config(kConfig);
    REQUIRE(c.size() == 3);
    CHECK(c.grid.at("a") == std::vector<double>{1, 2, 4});
    CHECK(c.at(2).at("a") == 4);
    CHECK(c.H == 6);
    CHECK(c.seed == 42);
    CHECK(c.surface.columns == 16);

    auto again = parse_sweep_config(sweep_config_json(c).dump());
    CHECK(sweep_config_json(again) == sweep_config_json(c));
}

TEST_CASE("config errors name the line or the field")
{
    CHECK(error_of("{\n  \"schema\": 1,\n  \"grid\": [1,,2]\n}").find("line 3") != std::string::npos);
    std::string j = kConfig;
    auto swap = [&](const std::string& a, const std::string& b) {
        std::string s = j;
        s.replace(s.find(a), a.size(), b);
        return s;
    };
    CHECK(error_of(swap("\"height\": 1", "\"height\": \"1\"")).find("surface.height") != std::string::npos);
    CHECK(error_of(swap("\"x\": 0", "\"x\": []")).find("surface.punctures[0].x") != std::string::npos);
    CHECK(error_of(swap("\"H\": 6", "\"H\": 3")).find("'H'") != std::string::npos);
    CHECK(error_of(swap("\"H\": 6", "\"depth\": 6")).find("'depth'") != std::string::npos);
    CHECK(error_of(swap("{\"start\": 1, \"ratio\": 2, \"count\": 3}", "[1, 3, 2]")).find("strictly increasing") !=
          std::string::npos);
    CHECK(error_of(swap("\"a\": {", "\"b\": {")).find("grid.a") != std::string::npos);
    CHECK(error_of(swap("\"ratio\": 2", "\"ratio\": 0.5")).find("grid.a") != std::string::npos);
    CHECK(error_of(swap("\"shift\": 0", "\"shift\": 0.3")).find("surface") != std::string::npos);
    CHECK_THROWS_AS(load_sweep_config("/nonexistent/cfg.json"), ConfigError);
}

TEST_CASE("twist extrapolation")
{
    std::vector<double> t{1, 2, 3, 4, 6, 8}, th;
    for (double x : t) th.push_back(0.6 + 0.3 * std::exp(-std::numbers::pi * x));
    auto r = extrapolate_twist(t, th, 0.1);
    CHECK(r.extrapolated == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(r.decay == doctest::Approx(0.3).epsilon(1e-4));
    CHECK(r.fit_points == 3);
    CHECK(r.discrepancy < 1e-9);   // 0.6 and 0.1 agree mod 1/2
    auto one = extrapolate_twist({2}, {0.2}, 0.3);
    CHECK(one.extrapolated == 0.2);
    CHECK(one.discrepancy == doctest::Approx(0.1));
    CHECK_THROWS_AS(extrapolate_twist({}, {}, 0), std::invalid_argument);
}

TEST_CASE("sweep table: columns, bounds, symmetry, determinism")
{
    auto c = parse_sweep_config(kConfig);
    auto r1 = graft_sweep(c, 1);
    auto r2 = graft_sweep(c, 3);
    std::ostringstream a, b;
    write_sweep_csv(c, r1, a);
    write_sweep_csv(c, r2, b);
    CHECK(a.str() == b.str());

    std::istringstream in(a.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t_a,length_a,pinch_bound_a,twist_a,twist_unrolled_a,group_distance,iterations,status");
    int rows = 0;
    bool saw_check = false;
    double prev_gd = 1e300;
    while (std::getline(in, line)) {
        if (line[0] == '#') {
            if (line.rfind("#limit_check,", 0) == 0) {
                saw_check = true;
                CHECK(line == "#limit_check,pass");
            }
            continue;
        }
        auto cells = split(line);
        REQUIRE(cells.size() == 8);
        double t = std::stod(cells[0]), l = std::stod(cells[1]);
        CHECK(l * t <= std::numbers::pi);
        CHECK(std::stod(cells[2]) == doctest::Approx(std::numbers::pi / t));
        // symmetric spec: the twist vanishes mod 1/2
        CHECK(std::abs(half_twist_diff(std::stod(cells[3]), 0)) < 1e-6);
        double gd = std::stod(cells[5]);
        CHECK(gd < prev_gd);
        prev_gd = gd;
        CHECK(cells[7] == "ok");
        ++rows;
    }
    CHECK(rows == 3);
    CHECK(saw_check);
    CHECK(r1.limits_ok());

    std::ostringstream svg1, svg2;
    write_twist_svg(c, r1, svg1);
    write_length_svg(c, r1, svg2);
    CHECK(svg1.str().rfind("<svg", 0) == 0);
    CHECK(svg2.str().find("</svg>") != std::string::npos);
}

TEST_CASE("a failed row does not abort the sweep")
{
    auto c = parse_sweep_config(kConfig);
    c.max_iter = 1;
    auto r = graft_sweep(c, 1);
    REQUIRE(r.rows.size() == 3);
    for (const auto& row : r.rows) {
        CHECK_FALSE(row.ok);
        CHECK(row.error.find("no convergence") != std::string::npos);
    }
    std::ostringstream out;
    write_sweep_csv(c, r, out);
    CHECK(out.str().find("2,nan,1.57079632679,nan,nan,nan,0,error: uniformize: no convergence") != std::string::npos);

    // limiting angles that cannot be fitted are reported, rows still come out
    c = parse_sweep_config(kConfig);
    c.window_from = 0.99;
    auto q = graft_sweep(c, 1);
    CHECK(q.rows[0].ok);
    CHECK_FALSE(q.angles);
    CHECK_FALSE(q.angles_error.empty());
    CHECK_FALSE(q.limits_ok());
    std::ostringstream o2;
    write_sweep_csv(c, q, o2);
    CHECK(o2.str().find("#limiting_angles,") != std::string::npos);
    CHECK(o2.str().find("#limit_check,fail") != std::string::npos);
}

TEST_CASE("audits")
{
    AuditOptions opt;
    opt.count = 200;
    auto col = collar_audit(opt);
    CHECK(col.rows.size() == 200);
    CHECK(col.failures() == 0);
    std::ostringstream csv;
    write_audit_csv(col, csv);
    CHECK(csv.str().rfind("case,computed,lower,upper,pass,l\n", 0) == 0);

    opt.count = 3;
    auto ns = nonsqueeze_audit(opt, 32);
    CHECK(ns.rows.size() == 6);
    CHECK(ns.failures() == 0);

    opt.count = 10;
    auto d = distortion_audit(opt);
    CHECK(d.rows.size() == 11);
    CHECK(d.failures() == 0);
    CHECK(d.rows.back().name == "identity");

    auto m = modulus_audit(opt, 32);
    CHECK(m.rows.size() == 3);

    // same seed, same table
    opt.count = 20;
    std::ostringstream x, y;
    write_audit_csv(collar_audit(opt), x);
    write_audit_csv(collar_audit(opt), y);
    CHECK(x.str() == y.str());
}

TEST_CASE("audit config")
{
    auto c = parse_audit_config(R"({"count": 5, "seed": 3, "eps": 0.01})");
    CHECK(*c.count == 5);
    CHECK(*c.seed == 3);
    CHECK(*c.eps == 0.01);
    CHECK_FALSE(c.cols);
    CHECK_THROWS_AS(parse_audit_config(R"({"count": -1})"), ConfigError);
    CHECK_THROWS_AS(parse_audit_config(R"({"colour": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_audit_config("{\"count\": 5,\n}"), ConfigError);
}

TEST_CASE("worker pool")
{
    std::vector<int> hit(100, 0);
    std::atomic<int> total{0};
    parallel_for(100, 4, [&](int k) {
        hit[k] += 1;
        total += k;
    });
    CHECK(total == 4950);
    CHECK(std::count(hit.begin(), hit.end(), 1) == 100);
    CHECK_THROWS_AS(parallel_for(10, 2, [](int k) {
                        if (k == 7) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
}
