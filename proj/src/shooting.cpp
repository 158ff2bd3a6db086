#include "qcurv/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <ostream>

#include "qcurv/io.hpp"

namespace qcurv {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kBHiCap = 16384.0;
constexpr int kMaxDoublings = 60;

}  // namespace

const char* to_string(Branch b) {
    switch (b) {
        case Branch::PlusC0: return "plus_c0";
        case Branch::MinusC0: return "minus_c0";
        case Branch::Alpha: return "alpha";
    }
    return "unknown";
}

ProblemSpec branch_spec(Branch branch, double param, const ProblemSpec& tmpl) {
    ProblemSpec s = tmpl;
    const int m = tmpl.m;
    switch (branch) {
        case Branch::PlusC0:
        case Branch::MinusC0: {
            s.sigma = -1;
            s.a.assign(static_cast<std::size_t>(m), 0.0);
            s.a[0] = -param;
            const double c = c0(m);
            s.a[static_cast<std::size_t>(m - 1)] = (branch == Branch::PlusC0) ? c : -c;
            break;
        }
        case Branch::Alpha: {
            if (param < 0.0) throw std::invalid_argument("branch_spec: alpha must be >= 0");
            s.sigma = +1;
            s.a = tmpl.a;
            s.a[static_cast<std::size_t>(m - 1)] -= param;
            break;
        }
    }
    s.validate();
    return s;
}

ScanTable scan_branch(Branch branch, const std::vector<double>& grid, const ProblemSpec& tmpl,
                      const IntegratorControls& controls, double vol_tol, bool parallel) {
    const auto eval_one = [&](std::size_t i) -> ScanRow {
        ScanRow row;
        row.param = grid[i];
        try {
            const ProblemSpec spec = branch_spec(branch, grid[i], tmpl);
            row.report = total_volume(spec, controls, vol_tol);
            row.outcome = OutcomeKind::GlobalToRmax;
        } catch (const VolumeUndefinedError&) {
            row.failed = true;
            row.outcome = OutcomeKind::BlowUp;
            row.report.total = kNan;
            row.report.rel_err = kNan;
            row.report.ell_estimate = kNan;
        } catch (const std::runtime_error&) {
            row.failed = true;
            row.outcome = OutcomeKind::StepUnderflow;
            row.report.total = kNan;
            row.report.rel_err = kNan;
            row.report.ell_estimate = kNan;
        }
        return row;
    };

    ScanTable table(grid.size());
    if (parallel && grid.size() > 1) {
        std::vector<std::future<ScanRow>> futs;
        futs.reserve(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            futs.push_back(std::async(std::launch::async, eval_one, i));
        for (std::size_t i = 0; i < grid.size(); ++i) table[i] = futs[i].get();
    } else {
        for (std::size_t i = 0; i < grid.size(); ++i) table[i] = eval_one(i);
    }
    std::stable_sort(table.begin(), table.end(),
                     [](const ScanRow& a, const ScanRow& b) { return a.param < b.param; });
    return table;
}

void write_scan_csv(const ScanTable& table, std::ostream& os) {
    os << "param,total,rel_err,tail_mode,ell_estimate,outcome\n";
    for (const ScanRow& row : table) {
        os << fmt17(row.param) << "," << fmt17(row.report.total) << ","
           << fmt17(row.report.rel_err) << "," << to_string(row.report.tail_mode) << ","
           << fmt17(row.report.ell_estimate) << "," << to_string(row.outcome) << "\n";
    }
}

void PathSpec::validate() const {
    if (m < 2) throw std::invalid_argument("PathSpec: m must be >= 2");
    if (N < 3) throw std::invalid_argument("PathSpec: N must be >= 3");
    if (sigma != 1 && sigma != -1) throw std::invalid_argument("PathSpec: bad sigma");
    if (vertices.size() < 2) throw std::invalid_argument("PathSpec: need >= 2 vertices");
    for (const auto& v : vertices) {
        if (static_cast<int>(v.size()) != m)
            throw std::invalid_argument("PathSpec: vertex length must equal m");
        if (m >= 3 && sigma == -1 && v[static_cast<std::size_t>(m - 2)] != 0.0)
            throw std::invalid_argument("PathSpec: vertices must satisfy a_{m-2} = 0");
    }
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i)
        if (vertices[i] == vertices[i + 1])
            throw std::invalid_argument("PathSpec: consecutive vertices must differ");
}

std::vector<double> PathSpec::data_at(double s) const {
    const int K = segments();
    s = std::clamp(s, 0.0, static_cast<double>(K));
    int seg = std::min(static_cast<int>(std::floor(s)), K - 1);
    const double t = s - seg;
    const auto& lo = vertices[static_cast<std::size_t>(seg)];
    const auto& hi = vertices[static_cast<std::size_t>(seg + 1)];
    std::vector<double> out(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i) out[i] = (1.0 - t) * lo[i] + t * hi[i];
    return out;
}

ProblemSpec PathSpec::spec_at(double s) const {
    ProblemSpec spec;
    spec.m = m;
    spec.N = N;
    spec.sigma = sigma;
    spec.a = data_at(s);
    return spec;
}

PathSpec default_path(int m, double b_hi) {
    PathSpec path;
    path.m = m;
    path.N = 2 * m;
    path.sigma = -1;
    const double c = c0(m);
    std::vector<double> v(static_cast<std::size_t>(m), 0.0);
    auto vertex = [&](double a0, double am1) {
        v[0] = a0;
        v[static_cast<std::size_t>(m - 1)] = am1;
        return v;
    };
    path.vertices = {vertex(-b_hi, -c), vertex(0.0, -c), vertex(0.0, +c), vertex(-b_hi, +c)};
    return path;
}

std::string shoot_result_json(const ShootResult& res) {
    JsonObject o;
    o.raw("found_data", json_array_of(res.found_data))
        .field("achieved_volume", res.achieved_volume)
        .field("target_volume", res.target_volume)
        .field("bracket_lo", res.bracket_lo)
        .field("bracket_hi", res.bracket_hi)
        .field("evaluations", res.evaluations);
    return o.str();
}

namespace {

// One volume probe along a path or family; Invalid tails are retried once at
// tighter vol_tol, then fatal.
double probe_volume(const ProblemSpec& spec, const IntegratorControls& controls, double vol_tol) {
    VolumeReport rep = total_volume(spec, controls, vol_tol);
    if (rep.tail_mode == TailMode::Invalid) {
        rep = total_volume(spec, controls, vol_tol / 10.0);
        if (rep.tail_mode == TailMode::Invalid)
            throw std::runtime_error("probe_volume: invalid tail bound at probe");
    }
    return rep.total;
}

ScanTable history_table(const std::vector<std::pair<double, double>>& history) {
    ScanTable table;
    for (const auto& [s, v] : history) {
        ScanRow row;
        row.param = s;
        row.report.total = v;
        row.report.tail_mode = TailMode::CascadeCertified;
        table.push_back(row);
    }
    return table;
}

ShootResult shoot_on_path(double target, const PathSpec& path, double tol,
                          const IntegratorControls& controls, double vol_tol) {
    if (!(target > 0.0)) throw std::invalid_argument("solve_for_volume: target must be > 0");
    if (!(tol > 0.0)) throw std::invalid_argument("solve_for_volume: tol must be > 0");
    path.validate();

    const double vtol = std::min(vol_tol, tol / 10.0);
    ShootResult res;
    res.target_volume = target;

    const auto eval_at = [&](double s) {
        const double v = probe_volume(path.spec_at(s), controls, vtol);
        ++res.evaluations;
        res.history.emplace_back(s, v);
        return v;
    };
    const auto finish = [&](double s, double v, double lo, double hi) {
        res.found_data = path.data_at(s);
        res.achieved_volume = v;
        res.bracket_lo = lo;
        res.bracket_hi = hi;
        return res;
    };

    // initial scan: 9 points per segment, shared endpoints evaluated once
    std::vector<double> sv;
    std::vector<double> vv;
    const int K = path.segments();
    for (int seg = 0; seg < K; ++seg) {
        for (int j = (seg == 0 ? 0 : 1); j <= 8; ++j) {
            const double s = seg + j / 8.0;
            const double v = eval_at(s);
            if (std::abs(v - target) <= tol * target) return finish(s, v, s, s);
            sv.push_back(s);
            vv.push_back(v);
        }
    }

    const auto leftmost_straddle = [&](const std::vector<double>& ss,
                                       const std::vector<double>& vs) -> int {
        for (std::size_t i = 0; i + 1 < ss.size(); ++i)
            if ((vs[i] - target) * (vs[i + 1] - target) < 0.0) return static_cast<int>(i);
        return -1;
    };

    int idx = leftmost_straddle(sv, vv);
    if (idx < 0)
        throw BracketingError("solve_for_volume: no straddle of target " + std::to_string(target),
                              history_table(res.history));

    // refine once inside the straddling cell
    double lo = sv[static_cast<std::size_t>(idx)], hi = sv[static_cast<std::size_t>(idx) + 1];
    double v_lo = vv[static_cast<std::size_t>(idx)], v_hi = vv[static_cast<std::size_t>(idx) + 1];
    {
        std::vector<double> rs{lo}, rv{v_lo};
        for (int j = 1; j <= 7; ++j) {
            const double s = lo + (hi - lo) * j / 8.0;
            const double v = eval_at(s);
            if (std::abs(v - target) <= tol * target) return finish(s, v, s, s);
            rs.push_back(s);
            rv.push_back(v);
        }
        rs.push_back(hi);
        rv.push_back(v_hi);
        const int rdx = leftmost_straddle(rs, rv);
        if (rdx >= 0) {
            lo = rs[static_cast<std::size_t>(rdx)];
            hi = rs[static_cast<std::size_t>(rdx) + 1];
            v_lo = rv[static_cast<std::size_t>(rdx)];
        }
    }

    for (int it = 0; it < 200; ++it) {
        const double s_mid = 0.5 * (lo + hi);
        const double v_mid = eval_at(s_mid);
        if (std::abs(v_mid - target) <= tol * target) return finish(s_mid, v_mid, lo, hi);
        if ((v_lo - target) * (v_mid - target) < 0.0) {
            hi = s_mid;
        } else {
            lo = s_mid;
            v_lo = v_mid;
        }
        if (hi - lo < 1e-13 * std::max(1.0, std::abs(hi))) break;
    }
    throw std::runtime_error("solve_for_volume: bisection stalled before reaching tolerance");
}

}  // namespace

ShootResult solve_for_volume(double target, const PathSpec& path, double tol,
                             const IntegratorControls& controls, double vol_tol) {
    return shoot_on_path(target, path, tol, controls, vol_tol);
}

ShootResult solve_for_volume(double target, int m, double tol,
                             const IntegratorControls& controls, double vol_tol) {
    double b_hi = 16.0;
    while (true) {
        try {
            return shoot_on_path(target, default_path(m, b_hi), tol, controls, vol_tol);
        } catch (const BracketingError&) {
            if (b_hi >= kBHiCap) throw;
            b_hi *= 2.0;
        }
    }
}

ShootResult alpha_family(const ProblemSpec& u0, double target, double tol,
                         const IntegratorControls& controls, double vol_tol) {
    u0.validate();
    if (u0.sigma != +1) throw std::invalid_argument("alpha_family: u0 must have sigma = +1");
    if (!(tol > 0.0)) throw std::invalid_argument("alpha_family: tol must be > 0");
    const double vtol = std::min(vol_tol, tol / 10.0);

    const double v0 = probe_volume(u0, controls, vtol);
    if (!(target > 0.0) || target >= v0)
        throw std::domain_error("alpha_family: target must lie in (0, V0), V0 = " +
                                std::to_string(v0));

    ShootResult res;
    res.target_volume = target;
    const auto eval_at = [&](double alpha) {
        const double v = probe_volume(branch_spec(Branch::Alpha, alpha, u0), controls, vtol);
        ++res.evaluations;
        res.history.emplace_back(alpha, v);
        return v;
    };
    const auto finish = [&](double alpha, double v, double lo, double hi) {
        res.found_data = u0.a;
        res.found_data[static_cast<std::size_t>(u0.m - 1)] -= alpha;
        res.achieved_volume = v;
        res.bracket_lo = lo;
        res.bracket_hi = hi;
        return res;
    };

    // geometric expansion from alpha = 1 until the target is straddled
    double alpha = 1.0;
    double v = eval_at(alpha);
    if (std::abs(v - target) <= tol * target) return finish(alpha, v, alpha, alpha);
    double a_lo, a_hi;  // V(a_lo) > target > V(a_hi); volume decreases in alpha
    if (v > target) {
        a_lo = alpha;
        for (int i = 0;; ++i) {
            if (i >= kMaxDoublings)
                throw std::runtime_error("alpha_family: bracket expansion failed");
            alpha *= 4.0;
            v = eval_at(alpha);
            if (std::abs(v - target) <= tol * target) return finish(alpha, v, a_lo, alpha);
            if (v < target) break;
            a_lo = alpha;
        }
        a_hi = alpha;
    } else {
        a_hi = alpha;
        for (int i = 0;; ++i) {
            if (i >= kMaxDoublings)
                throw std::runtime_error("alpha_family: bracket expansion failed");
            alpha /= 4.0;
            v = eval_at(alpha);
            if (std::abs(v - target) <= tol * target) return finish(alpha, v, alpha, a_hi);
            if (v > target) break;
            a_hi = alpha;
        }
        a_lo = alpha;
    }

    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a_lo + a_hi);
        const double vm = eval_at(mid);
        if (std::abs(vm - target) <= tol * target) return finish(mid, vm, a_lo, a_hi);
        if (vm > target)
            a_lo = mid;
        else
            a_hi = mid;
        if (a_hi - a_lo < 1e-13 * std::max(1.0, a_hi)) break;
    }
    throw std::runtime_error("alpha_family: bisection stalled before reaching tolerance");
}

std::string threshold_result_json(const ThresholdResult& res) {
    JsonObject o;
    o.field("bracket_lo", res.bracket_lo)
        .field("bracket_hi", res.bracket_hi)
        .field("threshold_mid", res.mid)
        .field("bracket_width", res.width)
        .field("r_max_proxy", res.r_max_proxy)
        .field("evaluations", res.evaluations);
    return o.str();
}

ThresholdResult threshold_finder(int m, const std::vector<double>& a_prefix, double resolution,
                                 double r_max_proxy, const IntegratorControls& controls) {
    if (m < 2) throw std::invalid_argument("threshold_finder: m must be >= 2");
    if (static_cast<int>(a_prefix.size()) != m - 1)
        throw std::invalid_argument("threshold_finder: a_prefix must have length m-1");
    if (!(resolution > 0.0))
        throw std::invalid_argument("threshold_finder: resolution must be > 0");

    IntegratorControls ctl = controls;
    ctl.r_max = r_max_proxy;
    ThresholdResult res;
    res.r_max_proxy = r_max_proxy;

    const auto is_global = [&](double beta) {
        ProblemSpec spec;
        spec.m = m;
        spec.N = 2 * m;
        spec.sigma = +1;
        spec.a = a_prefix;
        spec.a.push_back(beta);
        const Trajectory traj = integrate(spec, ctl);
        ++res.evaluations;
        if (traj.outcome.kind == OutcomeKind::StepUnderflow)
            throw std::runtime_error("threshold_finder: step underflow at beta = " +
                                     std::to_string(beta));
        return traj.outcome.kind == OutcomeKind::GlobalToRmax;
    };

    // upper end: a beta whose trajectory blows up
    double hi = 0.0;
    if (is_global(hi)) {
        double step = 1.0;
        int i = 0;
        for (;; ++i, step *= 2.0) {
            if (i >= kMaxDoublings)
                throw BracketingError("threshold_finder: no blow-up found above initial probe",
                                      {});
            if (!is_global(step)) break;
        }
        hi = step;
    }
    // lower end: a beta whose trajectory reaches r_max
    double lo = std::min(hi, 0.0) - 1.0;
    for (int i = 0; !is_global(lo); ++i) {
        if (i >= kMaxDoublings)
            throw BracketingError("threshold_finder: no global trajectory found", {});
        lo = hi - 2.0 * (hi - lo);
    }

    while (hi - lo > resolution) {
        const double mid = 0.5 * (lo + hi);
        if (is_global(mid))
            lo = mid;
        else
            hi = mid;
    }
    res.bracket_lo = lo;
    res.bracket_hi = hi;
    res.mid = 0.5 * (lo + hi);
    res.width = hi - lo;
    return res;
}

}  // namespace qcurv
