// qcurv command line: solve / volume / scan / shoot / threshold / verify.
//
// Exit codes: 0 ok, 2 blow-up, 3 step underflow, 4 bracketing failure,
// 64 usage or configuration error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qcurv/config.hpp"
#include "qcurv/io.hpp"
#include "qcurv/shooting.hpp"
#include "qcurv/verify.hpp"
#include "qcurv/volume.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBlowUp = 2;
constexpr int kExitUnderflow = 3;
constexpr int kExitBracketing = 4;
constexpr int kExitUsage = 64;

std::vector<double> parse_csv_doubles(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        const double v = std::stod(item, &pos);
        while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
        if (pos != item.size()) throw std::invalid_argument("malformed number '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw std::invalid_argument("empty value list");
    return out;
}

int parse_sign(const std::string& text) {
    if (text == "+1" || text == "1" || text == "+") return +1;
    if (text == "-1" || text == "-") return -1;
    throw std::invalid_argument("sign must be +1 or -1, got '" + text + "'");
}

std::vector<double> parse_grid(const std::string& text) {
    // lo:hi:n inclusive
    const auto p1 = text.find(':');
    const auto p2 = text.find(':', p1 == std::string::npos ? p1 : p1 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos)
        throw std::invalid_argument("grid must be lo:hi:n, got '" + text + "'");
    const double lo = std::stod(text.substr(0, p1));
    const double hi = std::stod(text.substr(p1 + 1, p2 - p1 - 1));
    const int n = std::stoi(text.substr(p2 + 1));
    if (n < 1) throw std::invalid_argument("grid needs n >= 1");
    std::vector<double> grid;
    if (n == 1) {
        grid.push_back(lo);
    } else {
        for (int i = 0; i < n; ++i)
            grid.push_back(lo + (hi - lo) * static_cast<double>(i) / (n - 1));
    }
    return grid;
}

void write_file(const std::string& dir, const std::string& name, const std::string& body) {
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/" + name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << body;
}

struct CommonFlags {
    std::string config_path;
    std::optional<double> rel_tol, abs_tol, r_max, vol_tol;
    std::optional<std::string> out_dir, format;
    std::optional<std::uint64_t> seed;

    [[nodiscard]] qcurv::CliConfig resolve() const {
        qcurv::CliConfig cfg = qcurv::resolve_config(config_path);
        if (rel_tol) cfg.controls.rel_tol = *rel_tol;
        if (abs_tol) cfg.controls.abs_tol = *abs_tol;
        if (r_max) cfg.controls.r_max = *r_max;
        if (vol_tol) cfg.vol_tol = *vol_tol;
        if (out_dir) cfg.out_dir = *out_dir;
        if (format) cfg.format = *format;
        if (seed) cfg.seed = *seed;
        cfg.validate();
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config file");
    cmd->add_option("--rel-tol", flags.rel_tol, "integrator relative tolerance");
    cmd->add_option("--abs-tol", flags.abs_tol, "integrator absolute tolerance");
    cmd->add_option("--rmax", flags.r_max, "integration radius");
    cmd->add_option("--vol-tol", flags.vol_tol, "relative volume tolerance");
    cmd->add_option("--out-dir", flags.out_dir, "output directory");
    cmd->add_option("--format", flags.format, "output format: csv or json");
    cmd->add_option("--seed", flags.seed, "seed for the verify suites");
}

struct SpecFlags {
    int m = 2;
    std::optional<int> dim;
    std::string sign = "-1";
    std::string a_text;

    [[nodiscard]] qcurv::ProblemSpec resolve() const {
        qcurv::ProblemSpec spec;
        spec.m = m;
        spec.N = dim.value_or(2 * m);
        spec.sigma = parse_sign(sign);
        spec.a = parse_csv_doubles(a_text);
        spec.validate();
        return spec;
    }
};

qcurv::PathSpec load_path_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open path file '" + path + "'");
    nlohmann::json j;
    in >> j;
    qcurv::PathSpec out;
    out.m = j.at("m").get<int>();
    out.N = j.value("N", 2 * out.m);
    out.sigma = j.value("sigma", -1);
    out.vertices = j.at("vertices").get<std::vector<std::vector<double>>>();
    out.validate();
    return out;
}

int cmd_solve(const CommonFlags& common, const SpecFlags& sflags, const std::string& out_file) {
    const qcurv::CliConfig cfg = common.resolve();
    const qcurv::ProblemSpec spec = sflags.resolve();
    const qcurv::Trajectory traj = qcurv::integrate(spec, cfg.controls);

    std::ostringstream csv;
    qcurv::write_trajectory_csv(traj, csv);
    if (out_file.find('/') != std::string::npos) {
        std::filesystem::create_directories(
            std::filesystem::path(out_file).parent_path().string());
        std::ofstream out(out_file);
        if (!out) throw std::runtime_error("cannot write '" + out_file + "'");
        out << csv.str();
    } else {
        write_file(cfg.out_dir, out_file, csv.str());
    }

    const auto last = traj.node(traj.size() - 1);
    qcurv::JsonObject o;
    o.field("outcome", std::string(qcurv::to_string(traj.outcome.kind)))
        .field("r", traj.outcome.r)
        .raw("w", qcurv::json_array_of(last.w))
        .raw("dw", qcurv::json_array_of(last.dw))
        .field("nodes", static_cast<int>(traj.size()));
    std::cout << o.str() << "\n";

    switch (traj.outcome.kind) {
        case qcurv::OutcomeKind::GlobalToRmax: return kExitOk;
        case qcurv::OutcomeKind::BlowUp: return kExitBlowUp;
        case qcurv::OutcomeKind::StepUnderflow: return kExitUnderflow;
    }
    return kExitOk;
}

int cmd_volume(const CommonFlags& common, const SpecFlags& sflags) {
    const qcurv::CliConfig cfg = common.resolve();
    const qcurv::ProblemSpec spec = sflags.resolve();
    try {
        const qcurv::VolumeReport rep = qcurv::total_volume(spec, cfg.controls, cfg.vol_tol);
        const std::string body = qcurv::volume_report_json(rep);
        std::cout << body << "\n";
        write_file(cfg.out_dir, "volume.json", body + "\n");
        return std::isfinite(rep.rel_err) ? kExitOk : 1;
    } catch (const qcurv::VolumeUndefinedError& e) {
        qcurv::JsonObject o;
        o.field("error", std::string("blow_up")).field("r_star", e.r_star());
        std::cout << o.str() << "\n";
        return kExitBlowUp;
    }
}

int cmd_scan(const CommonFlags& common, int m, std::optional<int> dim,
             const std::string& branch_text, const std::string& grid_text,
             const std::string& a_text) {
    const qcurv::CliConfig cfg = common.resolve();
    qcurv::Branch branch;
    if (branch_text == "plus_c0")
        branch = qcurv::Branch::PlusC0;
    else if (branch_text == "minus_c0")
        branch = qcurv::Branch::MinusC0;
    else if (branch_text == "alpha")
        branch = qcurv::Branch::Alpha;
    else
        throw std::invalid_argument("branch must be plus_c0, minus_c0 or alpha");

    qcurv::ProblemSpec tmpl;
    tmpl.m = m;
    tmpl.N = dim.value_or(2 * m);
    if (branch == qcurv::Branch::Alpha) {
        if (a_text.empty())
            throw std::invalid_argument("alpha branch needs --a with the base data");
        tmpl.sigma = +1;
        tmpl.a = parse_csv_doubles(a_text);
        tmpl.validate();
    } else {
        tmpl.sigma = -1;
        tmpl.a.assign(static_cast<std::size_t>(m), 0.0);
    }
    const std::vector<double> grid = parse_grid(grid_text);
    for (double g : grid)
        if (branch == qcurv::Branch::Alpha && g < 0.0)
            throw std::invalid_argument("alpha grid must be >= 0");

    const qcurv::ScanTable table =
        qcurv::scan_branch(branch, grid, tmpl, cfg.controls, cfg.vol_tol);

    if (cfg.format == "json") {
        std::string body = "[";
        for (std::size_t i = 0; i < table.size(); ++i) {
            if (i) body += ",";
            qcurv::JsonObject o;
            o.field("param", table[i].param)
                .field("total", table[i].report.total)
                .field("rel_err", table[i].report.rel_err)
                .field("tail_mode", std::string(qcurv::to_string(table[i].report.tail_mode)))
                .field("ell_estimate", table[i].report.ell_estimate)
                .field("outcome", std::string(qcurv::to_string(table[i].outcome)));
            body += o.str();
        }
        body += "]";
        std::cout << body << "\n";
        write_file(cfg.out_dir, "scan.json", body + "\n");
    } else {
        std::ostringstream csv;
        qcurv::write_scan_csv(table, csv);
        std::cout << csv.str();
        write_file(cfg.out_dir, "scan.csv", csv.str());
    }
    return kExitOk;
}

int cmd_shoot(const CommonFlags& common, int m, const std::string& sign_text, double target,
              double tol, const std::string& path_file, const std::string& a_text) {
    const qcurv::CliConfig cfg = common.resolve();
    const int sigma = parse_sign(sign_text);
    try {
        qcurv::ShootResult res;
        if (!path_file.empty()) {
            res = qcurv::solve_for_volume(target, load_path_file(path_file), tol, cfg.controls,
                                          cfg.vol_tol);
        } else if (sigma == -1) {
            res = qcurv::solve_for_volume(target, m, tol, cfg.controls, cfg.vol_tol);
        } else {
            if (a_text.empty())
                throw std::invalid_argument("shoot with --sign +1 needs --a (base data u0)");
            qcurv::ProblemSpec u0;
            u0.m = m;
            u0.N = 2 * m;
            u0.sigma = +1;
            u0.a = parse_csv_doubles(a_text);
            u0.validate();
            res = qcurv::alpha_family(u0, target, tol, cfg.controls, cfg.vol_tol);
        }
        const std::string body = qcurv::shoot_result_json(res);
        std::cout << body << "\n";
        write_file(cfg.out_dir, "shoot.json", body + "\n");
        return kExitOk;
    } catch (const qcurv::BracketingError& e) {
        std::ostringstream csv;
        qcurv::write_scan_csv(e.table(), csv);
        write_file(cfg.out_dir, "shoot_scan_failure.csv", csv.str());
        std::cerr << "bracketing failure: " << e.what() << " (scanned table in " << cfg.out_dir
                  << "/shoot_scan_failure.csv)\n";
        return kExitBracketing;
    }
}

int cmd_threshold(const CommonFlags& common, int m, std::optional<double> a0,
                  const std::string& prefix_text, double resolution, double rmax_proxy) {
    const qcurv::CliConfig cfg = common.resolve();
    std::vector<double> prefix;
    if (!prefix_text.empty())
        prefix = parse_csv_doubles(prefix_text);
    else if (a0)
        prefix.assign(1, *a0);
    else
        throw std::invalid_argument("threshold needs --a0 or --a-prefix");
    if (static_cast<int>(prefix.size()) != m - 1)
        throw std::invalid_argument("threshold prefix must have length m-1");
    try {
        const qcurv::ThresholdResult res =
            qcurv::threshold_finder(m, prefix, resolution, rmax_proxy, cfg.controls);
        const std::string body = qcurv::threshold_result_json(res);
        std::cout << body << "\n";
        write_file(cfg.out_dir, "threshold.json", body + "\n");
        return kExitOk;
    } catch (const qcurv::BracketingError& e) {
        std::cerr << "threshold search failure: " << e.what() << "\n";
        return kExitBracketing;
    }
}

int cmd_verify(const CommonFlags& common, const std::string& suite) {
    const qcurv::CliConfig cfg = common.resolve();
    const auto reports = qcurv::run_suite(suite, cfg.seed, cfg.controls, cfg.vol_tol);
    const std::string body = qcurv::suite_json(reports);
    std::cout << body << "\n";
    write_file(cfg.out_dir, "verify.json", body + "\n");
    bool all_passed = true;
    for (const auto& rep : reports) {
        std::cerr << (rep.passed ? "[pass] " : "[FAIL] ") << rep.name
                  << " (worst margin " << qcurv::fmt17(rep.worst_violation) << ")\n";
        all_passed = all_passed && rep.passed;
    }
    return all_passed ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radial polyharmonic solver for Lap^m u = +/- e^u with volume prescription"};
    app.require_subcommand(1);

    CommonFlags common;

    auto* solve = app.add_subcommand("solve", "integrate one IVP and export the trajectory");
    SpecFlags solve_spec;
    std::string solve_out = "trajectory.csv";
    add_common(solve, common);
    solve->add_option("--m", solve_spec.m, "order m")->required();
    solve->add_option("--dim", solve_spec.dim, "dimension N (default 2m)");
    solve->add_option("--sign", solve_spec.sign, "sign of the source, +1 or -1")->required();
    solve->add_option("--a", solve_spec.a_text, "initial data a0,a1,...")->required();
    solve->add_option("--out", solve_out, "trajectory CSV path");

    auto* volume = app.add_subcommand("volume", "total volume with tail bound");
    SpecFlags volume_spec;
    add_common(volume, common);
    volume->add_option("--m", volume_spec.m, "order m")->required();
    volume->add_option("--dim", volume_spec.dim, "dimension N (default 2m)");
    volume->add_option("--sign", volume_spec.sign, "sign of the source")->required();
    volume->add_option("--a", volume_spec.a_text, "initial data a0,a1,...")->required();

    auto* scan = app.add_subcommand("scan", "volume table over a branch parameter grid");
    int scan_m = 2;
    std::optional<int> scan_dim;
    std::string scan_branch_text, scan_grid_text, scan_a_text;
    add_common(scan, common);
    scan->add_option("--m", scan_m, "order m")->required();
    scan->add_option("--dim", scan_dim, "dimension N (default 2m)");
    scan->add_option("--branch", scan_branch_text, "plus_c0 | minus_c0 | alpha")->required();
    scan->add_option("--grid", scan_grid_text, "parameter grid lo:hi:n")->required();
    scan->add_option("--a", scan_a_text, "base data for the alpha branch");

    auto* shoot = app.add_subcommand("shoot", "locate initial data with prescribed volume");
    int shoot_m = 2;
    std::string shoot_sign = "-1", shoot_path, shoot_a;
    double shoot_target = 0.0, shoot_tol = 1e-3;
    add_common(shoot, common);
    shoot->add_option("--m", shoot_m, "order m");
    shoot->add_option("--sign", shoot_sign, "equation sign (default -1)");
    shoot->add_option("--target", shoot_target, "target volume")->required();
    shoot->add_option("--tol", shoot_tol, "relative volume tolerance of the result");
    shoot->add_option("--path", shoot_path, "JSON path file overriding the default polyline");
    shoot->add_option("--a", shoot_a, "base data u0 for --sign +1 (alpha family)");

    auto* threshold = app.add_subcommand("threshold", "sigma=+1 global-existence threshold");
    int thr_m = 2;
    std::optional<double> thr_a0;
    std::string thr_prefix;
    double thr_resolution = 0.05, thr_rmax_proxy = 1e3;
    add_common(threshold, common);
    threshold->add_option("--m", thr_m, "order m")->required();
    threshold->add_option("--a0", thr_a0, "a_0 (for m = 2)");
    threshold->add_option("--a-prefix", thr_prefix, "a_0,..,a_{m-2}");
    threshold->add_option("--resolution", thr_resolution, "bracket width target");
    threshold->add_option("--rmax-proxy", thr_rmax_proxy, "radius standing in for infinity");

    auto* verify = app.add_subcommand("verify", "run the lemma-check suites");
    std::string verify_suite = "all";
    add_common(verify, common);
    verify->add_option("--suite", verify_suite,
                       "all|comparison|barrier|scaling|conversion|first-zero|limit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << app.help();
        return kExitUsage;
    }

    try {
        if (solve->parsed()) return cmd_solve(common, solve_spec, solve_out);
        if (volume->parsed()) return cmd_volume(common, volume_spec);
        if (scan->parsed())
            return cmd_scan(common, scan_m, scan_dim, scan_branch_text, scan_grid_text,
                            scan_a_text);
        if (shoot->parsed())
            return cmd_shoot(common, shoot_m, shoot_sign, shoot_target, shoot_tol, shoot_path,
                             shoot_a);
        if (threshold->parsed())
            return cmd_threshold(common, thr_m, thr_a0, thr_prefix, thr_resolution,
                                 thr_rmax_proxy);
        if (verify->parsed()) return cmd_verify(common, verify_suite);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
