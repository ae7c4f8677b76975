#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "graftlab/lab.hpp"

using namespace graftlab;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

std::string read_file(const std::string& p)
{
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open config " + p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_sweep(const std::string& config, const std::string& out_dir, int threads, std::optional<std::uint64_t> seed)
{
    SweepConfig cfg = load_sweep_config(config);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed) cfg.seed = *seed;
    fs::create_directories(cfg.out_dir);
    auto res = graft_sweep(cfg, threads);

    std::ostringstream csv;
    write_sweep_csv(cfg, res, csv);
    write_file(fs::path(cfg.out_dir) / cfg.csv_name, csv.str());
    if (cfg.plots) {
        std::ostringstream a, b;
        write_twist_svg(cfg, res, a);
        write_length_svg(cfg, res, b);
        write_file(fs::path(cfg.out_dir) / "twist.svg", a.str());
        write_file(fs::path(cfg.out_dir) / "length.svg", b.str());
    }
    int failed = 0;
    for (const auto& r : res.rows)
        if (!r.ok) {
            ++failed;
            std::cerr << "row failed: " << r.error << "\n";
        }
    if (!res.angles) std::cerr << "limiting angles unavailable: " << res.angles_error << "\n";
    for (const auto& [c, l] : res.limits)
        std::cout << c << ": predicted " << l.predicted << ", extrapolated " << l.extrapolated << ", discrepancy "
                  << l.discrepancy << "\n";
    std::cout << "wrote " << (fs::path(cfg.out_dir) / cfg.csv_name).string() << "\n";
    return failed == 0 && res.limits_ok() ? 0 : 1;
}

int run_audit(const std::string& which, const std::string& config, const std::string& out_dir, int threads,
              std::optional<std::uint64_t> seed, std::optional<int> count)
{
    AuditConfig ac;
    if (!config.empty()) ac = parse_audit_config(read_file(config));
    AuditOptions opt;
    opt.threads = threads;
    if (ac.seed) opt.seed = *ac.seed;
    if (seed) opt.seed = *seed;
    if (ac.count) opt.count = *ac.count;
    if (count) opt.count = *count;

    AuditReport rep;
    if (which == "collar")
        rep = collar_audit(opt);
    else if (which == "nonsqueeze")
        rep = nonsqueeze_audit(opt, ac.cols.value_or(128));
    else if (which == "distortion")
        rep = distortion_audit(opt, ac.eps.value_or(1e-3));
    else
        rep = modulus_audit(opt, ac.cols.value_or(64));

    std::ostringstream csv;
    write_audit_csv(rep, csv);
    if (out_dir.empty()) {
        std::cout << csv.str();
    } else {
        fs::create_directories(out_dir);
        auto p = fs::path(out_dir) / (which + "-audit.csv");
        write_file(p, csv.str());
        std::cout << which << ": " << rep.rows.size() << " cases, " << rep.failures() << " failed, wrote " << p.string()
                  << "\n";
    }
    return rep.failures() == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"graftlab: grafting experiments and audits"};
    app.require_subcommand(1);

    std::string out_dir, config;
    int threads = 1;
    std::optional<std::uint64_t> seed;
    std::optional<int> count;

    auto* sweep = app.add_subcommand("sweep", "run a grafting sweep from a JSON config");
    sweep->add_option("--config", config, "sweep config (JSON)")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", out_dir, "output directory (overrides the config)");
    sweep->add_option("--threads", threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
    sweep->add_option("--seed", seed, "seed recorded with the output");

    auto* audit = app.add_subcommand("audit", "check a bound on randomized cases");
    std::string which;
    audit->add_option("kind", which, "collar | nonsqueeze | distortion | modulus")
        ->required()
        ->check(CLI::IsMember({"collar", "nonsqueeze", "distortion", "modulus"}));
    audit->add_option("--config", config, "optional JSON overrides: count, cols, seed, eps")->check(CLI::ExistingFile);
    audit->add_option("--out", out_dir, "output directory; CSV goes to stdout when omitted");
    audit->add_option("--threads", threads, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
    audit->add_option("--seed", seed, "random seed");
    audit->add_option("--count", count, "number of random cases")->check(CLI::NonNegativeNumber);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*sweep) return run_sweep(config, out_dir, threads, seed);
        return run_audit(which, config, out_dir, threads, seed, count);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
