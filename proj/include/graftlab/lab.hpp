#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "graftlab/grafting.hpp"
#include "graftlab/pants.hpp"

namespace graftlab {

// Thrown for unreadable or inconsistent configuration files; the message names the line or field.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SweepConfig {
    SurfaceSpec surface;
    // grid per grafted curve; all grids have the same length and are read in lockstep
    std::map<std::string, std::vector<double>> grid;
    int refine = 1;                // 1..4
    double H = 8;                  // truncation depth of S_inf, 5..16
    double window_from = 0.5;      // angle fit window [window_from H, H]
    double discrepancy_tolerance = 1e-2;
    double tol = 1e-10;            // Newton stopping tolerance
    int max_iter = 100;
    std::string out_dir = ".";
    std::string csv_name = "sweep.csv";
    bool plots = true;
    std::uint64_t seed = 0;

    std::size_t size() const;
    GraftingVector at(std::size_t k) const;
    void validate() const;   // throws ConfigError
};

// parse JSON text; errors carry line and column or the offending field path
SweepConfig parse_sweep_config(const std::string& text);
SweepConfig load_sweep_config(const std::string& path);
nlohmann::json sweep_config_json(const SweepConfig& cfg);

struct SweepRow {
    GraftingVector t;
    bool ok = false;
    std::string error;
    int iterations = 0;
    FNCoords fn;                              // lengths and twists of every curve
    std::map<std::string, double> unrolled;   // continuous lift of the grafted twists
    double group_distance = 0;
};

struct TwistLimit {
    double predicted = 0;      // theta+ - theta- mod 1/2
    double extrapolated = 0;   // theta_lim of the fit, unrolled
    double decay = 0;          // B in theta_lim + B exp(-pi t)
    double last_raw = 0;
    double discrepancy = 0;    // |extrapolated - predicted| mod 1/2
    int fit_points = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::optional<LimitingAngles> angles;   // empty when S_inf could not be measured
    std::string angles_error;
    FNCoords infinity;                      // measured on S_inf
    std::map<std::string, TwistLimit> limits;
    double tolerance = 1e-2;
    bool limits_ok() const;
};

// rows are solved on `threads` workers (0: hardware concurrency); output order is grid order
SweepResult graft_sweep(const SweepConfig& cfg, int threads = 1);

// fit theta = theta_lim + B exp(-pi t) on the upper half of the successful rows
TwistLimit extrapolate_twist(const std::vector<double>& t, const std::vector<double>& theta, double predicted);

// frozen column layout, see README
std::vector<std::string> sweep_columns(const SweepConfig& cfg);
void write_sweep_csv(const SweepConfig& cfg, const SweepResult& r, std::ostream& out);
void write_twist_svg(const SweepConfig& cfg, const SweepResult& r, std::ostream& out);
void write_length_svg(const SweepConfig& cfg, const SweepResult& r, std::ostream& out);

// ---- audits ----

struct AuditRow {
    std::string name;
    double computed = 0;
    double lower = 0;   // -inf when one-sided
    double upper = 0;   // +inf when one-sided
    bool pass = false;
    std::map<std::string, double> extra;   // audit specific columns, same keys on every row
};

struct AuditReport {
    std::string audit;
    std::vector<AuditRow> rows;
    int failures() const;
};

struct AuditOptions {
    std::uint64_t seed = 1;
    int count = -1;   // -1: audit default
    int threads = 1;
};

// collar modulus sandwich for random l in (0.01, pi - 0.01); default 1000 cases
AuditReport collar_audit(const AuditOptions& opt);
// straight subcylinder of random notched cylinders at h = 1/128 and 1/256; default 50 regions
AuditReport nonsqueeze_audit(const AuditOptions& opt, int cols = 128);
// random certified strip maps, b in [4, 8], c = buffer_for_epsilon(eps); default 100 maps plus the identity
AuditReport distortion_audit(const AuditOptions& opt, double eps = 1e-3);
// Teichmuller annulus at b in {1, 2, 4} against the two-sided bounds and the elliptic integral oracle
AuditReport modulus_audit(const AuditOptions& opt, int cols = 64);

void write_audit_csv(const AuditReport& r, std::ostream& out);

// overrides from a JSON object {"count": .., "seed": .., "cols": .., "eps": ..}
struct AuditConfig {
    std::optional<int> count, cols;
    std::optional<std::uint64_t> seed;
    std::optional<double> eps;
};
AuditConfig parse_audit_config(const std::string& text);

// run f(0..n-1) on a pool of workers
void parallel_for(int n, int threads, const std::function<void(int)>& f);

} // namespace graftlab
