#include "qcurv/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "qcurv/io.hpp"
#include "qcurv/shooting.hpp"

namespace qcurv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Global-error proxy for pointwise trajectory comparisons: the per-step
// tolerance scaled by the number of accepted steps up to the probe radius.
double pointwise_tol(const IntegratorControls& c, double value_scale, std::size_t steps) {
    return 10.0 * (c.abs_tol + c.rel_tol * std::max(1.0, value_scale)) *
           std::max<std::size_t>(steps, 10);
}

std::size_t steps_before(const Trajectory& traj, double r) {
    const auto& nr = traj.node_radii();
    return static_cast<std::size_t>(std::upper_bound(nr.begin(), nr.end(), r) - nr.begin());
}

}  // namespace

CheckReport make_report(std::string name, std::vector<CheckProbe> probes) {
    CheckReport rep;
    rep.name = std::move(name);
    rep.details = std::move(probes);
    rep.tolerance = 0.0;
    rep.passed = true;
    double worst = kInf;
    for (const CheckProbe& p : rep.details) {
        if (p.inconclusive) continue;
        if (p.margin < 0.0) rep.passed = false;
        worst = std::min(worst, p.margin / std::max(p.scale, 1e-300));
    }
    rep.worst_violation = std::isfinite(worst) ? worst : 0.0;
    return rep;
}

CheckReport comparison_check(const ProblemSpec& u_spec, const ProblemSpec& v_spec, double R,
                             const IntegratorControls& controls) {
    u_spec.validate();
    v_spec.validate();
    if (u_spec.sigma != +1 || v_spec.sigma != +1)
        throw std::invalid_argument("comparison_check: both specs must have sigma = +1");
    if (u_spec.m != v_spec.m || u_spec.N != v_spec.N)
        throw std::invalid_argument("comparison_check: specs must share m and N");
    for (int k = 0; k < u_spec.m; ++k)
        if (u_spec.a[static_cast<std::size_t>(k)] < v_spec.a[static_cast<std::size_t>(k)])
            throw std::invalid_argument(
                "comparison_check: requires Lap^k u(0) >= Lap^k v(0) for all k");

    IntegratorControls ctl = controls;
    ctl.r_max = R;
    const Trajectory tu = integrate(u_spec, ctl);
    const Trajectory tv = integrate(v_spec, ctl);
    const double r_cmp = std::min(tu.r_last(), tv.r_last());

    // merged node radii of both trajectories up to the common range
    std::vector<double> grid;
    grid.reserve(tu.size() + tv.size());
    for (double r : tu.node_radii())
        if (r <= r_cmp) grid.push_back(r);
    for (double r : tv.node_radii())
        if (r <= r_cmp) grid.push_back(r);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    double worst_slack = kInf;
    double worst_r = 0.0;
    for (double r : grid) {
        const double uu = tu.u(r);
        const double vv = tv.u(r);
        const double tol =
            pointwise_tol(controls, std::max(std::abs(uu), std::abs(vv)), steps_before(tu, r));
        const double slack = (uu - vv) + tol;
        if (slack < worst_slack) {
            worst_slack = slack;
            worst_r = r;
        }
    }
    CheckProbe probe;
    probe.label = "min (u - v) over common radii";
    probe.margin = worst_slack;
    probe.scale = pointwise_tol(controls, 1.0, tu.size());
    probe.note = "worst at r = " + fmt17(worst_r) + ", compared up to r = " + fmt17(r_cmp);
    return make_report("comparison", {probe});
}

CheckReport barrier_check(const Trajectory& traj) {
    if (traj.spec.sigma != -1)
        throw std::invalid_argument("barrier_check: requires sigma = -1");

    // barrier layers Lap^i Phi for the data-matching polynomial
    std::vector<EvenPolynomial> layers;
    layers.push_back(matching_polynomial(traj.spec));
    for (int i = 1; i < traj.spec.m; ++i)
        layers.push_back(laplacian_of_even_poly(layers.back(), traj.spec.N));

    std::vector<CheckProbe> probes;
    for (int i = 0; i < traj.spec.m; ++i) {
        double worst_slack = kInf;
        double worst_r = 0.0;
        double scale = 1.0;
        for (std::size_t j = 0; j < traj.size(); ++j) {
            const double r = traj.node_radii()[j];
            const double w = traj.node_w(j, i);
            const double tol =
                pointwise_tol(traj.controls, std::abs(w), j + 1);
            const double slack = (layers[static_cast<std::size_t>(i)].eval(r) - w) + tol;
            if (slack < worst_slack) {
                worst_slack = slack;
                worst_r = r;
                scale = tol;
            }
        }
        CheckProbe probe;
        probe.label = "Lap^" + std::to_string(i) + "(u - Phi) <= 0";
        probe.margin = worst_slack;
        probe.scale = scale;
        probe.note = "worst at r = " + fmt17(worst_r);
        probes.push_back(probe);
    }
    return make_report("barrier", probes);
}

CheckReport scaling_check(const ProblemSpec& spec, double lambda,
                          const IntegratorControls& controls, double vol_tol) {
    spec.validate();
    if (spec.sigma != -1)
        throw std::invalid_argument("scaling_check: requires a finite-volume sigma = -1 spec");
    if (spec.m >= 3 && spec.a[static_cast<std::size_t>(spec.m - 2)] != 0.0)
        throw std::invalid_argument("scaling_check: m >= 3 requires a_{m-2} = 0");
    if (!(lambda > 0.0)) throw std::invalid_argument("scaling_check: lambda must be > 0");

    const int m = spec.m;
    ProblemSpec scaled = spec;
    scaled.a[0] = spec.a[0] + 2.0 * m * std::log(lambda);
    double pw = 1.0;
    for (int k = 1; k < m; ++k) {
        pw *= lambda * lambda;
        scaled.a[static_cast<std::size_t>(k)] = pw * spec.a[static_cast<std::size_t>(k)];
    }

    IntegratorControls ctl_base = controls;
    IntegratorControls ctl_scaled = controls;
    ctl_scaled.r_max = controls.r_max / lambda;
    const Trajectory tb = integrate(spec, ctl_base);
    const Trajectory ts = integrate(scaled, ctl_scaled);

    std::vector<CheckProbe> probes;
    {
        const double shift = 2.0 * m * std::log(lambda);
        const double r_hi = std::min(ts.r_last(), tb.r_last() / lambda);
        double worst_slack = kInf;
        double worst_r = 0.0;
        double scale = 1.0;
        const int kPoints = 200;
        for (int i = 1; i <= kPoints; ++i) {
            const double r = r_hi * i / kPoints;
            const double lhs = ts.u(r);
            const double rhs = tb.u(lambda * r) + shift;
            const double tol = pointwise_tol(controls, std::max(std::abs(lhs), std::abs(rhs)),
                                             steps_before(tb, lambda * r));
            const double slack = tol - std::abs(lhs - rhs);
            if (slack < worst_slack) {
                worst_slack = slack;
                worst_r = r;
                scale = tol;
            }
        }
        CheckProbe probe;
        probe.label = "pointwise u_lambda(r) = u(lambda r) + 2m ln lambda";
        probe.margin = worst_slack;
        probe.scale = scale;
        probe.note = "worst at r = " + fmt17(worst_r);
        probes.push_back(probe);
    }
    {
        const double v_base = total_volume(spec, controls, vol_tol).total;
        const double v_scaled = total_volume(scaled, controls, vol_tol).total;
        const double expected = std::pow(lambda, 2.0 * m - spec.N);
        const double tol = 10.0 * vol_tol * expected;
        CheckProbe probe;
        probe.label = "volume ratio = lambda^{2m-N}";
        probe.margin = tol - std::abs(v_scaled / v_base - expected);
        probe.scale = tol;
        probe.note = "ratio = " + fmt17(v_scaled / v_base) + ", expected = " + fmt17(expected);
        probes.push_back(probe);
    }
    return make_report("scaling", probes);
}

CheckReport conversion_check(const ProblemSpec& spec, const std::vector<double>& probe_radii,
                             const IntegratorControls& controls, double vol_tol) {
    spec.validate();
    const int m = spec.m;
    double fact = 1.0;
    for (int k = 2; k <= 2 * m; ++k) fact *= k;
    const double log_fact = std::log(fact);

    const VolumeSolve vs = solve_volume(spec, controls, vol_tol);
    const Trajectory& traj = vs.traj;

    std::vector<CheckProbe> probes;
    for (double r : probe_radii) {
        if (r > traj.r_last()) continue;
        const double uu = traj.u(r);
        const double lhs = std::exp(2.0 * m * ((uu - log_fact) / (2.0 * m)));
        const double rhs = std::exp(uu) / fact;
        const double rel = std::abs(lhs - rhs) / std::max(rhs, 1e-300);
        const double tol = 1e-13;
        CheckProbe probe;
        probe.label = "pointwise e^{2mv} = e^u/(2m)! at r = " + fmt17(r);
        probe.margin = tol - rel;
        probe.scale = tol;
        probes.push_back(probe);
    }
    {
        // volume of the converted metric through the same quadrature pipeline
        const auto g = [m, log_fact](double uu) {
            return std::exp(2.0 * m * ((uu - log_fact) / (2.0 * m)));
        };
        const double quad_v = quad_radial(traj, vs.report.split_radius, g).first;
        const double tail_v =
            std::isfinite(vs.report.tail_upper) ? vs.report.tail_upper / fact : 0.0;
        const double v_conv = quad_v + 0.5 * tail_v;
        const double ratio = v_conv / vs.report.total;
        const double expected = 1.0 / fact;
        const double tol = 10.0 * vol_tol * expected;
        CheckProbe probe;
        probe.label = "volume ratio = 1/(2m)!";
        probe.margin = tol - std::abs(ratio - expected);
        probe.scale = tol;
        probe.note = "ratio = " + fmt17(ratio) + ", expected = " + fmt17(expected);
        probes.push_back(probe);
    }
    return make_report("conversion", probes);
}

CheckReport first_zero_check(const std::vector<double>& b_grid, int m,
                             const IntegratorControls& controls, double vol_tol) {
    if (m < 2) throw std::invalid_argument("first_zero_check: m must be >= 2");
    ProblemSpec tmpl;
    tmpl.m = m;
    tmpl.N = 2 * m;
    tmpl.sigma = -1;
    tmpl.a.assign(static_cast<std::size_t>(m), 0.0);
    const double omega = sphere_area(2 * m);

    std::vector<double> grid = b_grid;
    std::sort(grid.begin(), grid.end());

    std::vector<CheckProbe> probes;
    std::vector<double> gaps;  // r0 - R0 along the grid
    for (double b : grid) {
        if (b == 0.0) {
            CheckProbe probe;
            probe.label = "b = 0: r0 = 0";
            probe.margin = 0.0;
            probe.scale = 1.0;
            probe.note = "u(0) = 0 at the origin";
            probes.push_back(probe);
            continue;
        }
        const ProblemSpec spec = branch_spec(Branch::PlusC0, b, tmpl);
        const VolumeSolve vs = solve_volume(spec, controls, vol_tol);
        const auto r0_opt = first_crossing(vs.traj, 0, 0.0);
        const double R0 = std::pow(b, 1.0 / (2.0 * m - 2.0));
        if (!r0_opt) {
            CheckProbe probe;
            probe.label = "b = " + fmt17(b) + ": r0";
            probe.inconclusive = true;
            probe.note = "u never reaches 0 before r_max; r0 = +inf";
            probes.push_back(probe);
            continue;
        }
        const double r0 = *r0_opt;
        gaps.push_back(r0 - R0);
        const double dm1 = vs.traj.eval_component(r0, m - 1);
        if (dm1 > 0.0) {
            const double bound = (2.0 * m - 2.0) * omega * std::pow(r0, 2.0 * m - 2.0) * dm1;
            CheckProbe probe;
            probe.label = "b = " + fmt17(b) + ": V(b) > (2m-2) omega r0^{2m-2} Lap^{m-1}u(r0)";
            probe.margin = vs.report.total - bound;
            probe.scale = bound;
            probe.note = "V = " + fmt17(vs.report.total) + ", bound = " + fmt17(bound) +
                         ", r0 = " + fmt17(r0) + ", R0 = " + fmt17(R0);
            probes.push_back(probe);
        } else {
            CheckProbe probe;
            probe.label = "b = " + fmt17(b) + ": Lap^{m-1}u(r0) > 0";
            probe.inconclusive = true;
            probe.note = "Lap^{m-1}u(r0) = " + fmt17(dm1) + "; lower bound not applicable";
            probes.push_back(probe);
        }
    }
    for (std::size_t j = 0; j + 1 < gaps.size(); ++j) {
        CheckProbe probe;
        probe.label = "r0 - R0 decreasing, step " + std::to_string(j);
        probe.margin = gaps[j] - gaps[j + 1] + 1e-6;
        probe.scale = std::max(std::abs(gaps[j]), 1e-6);
        probe.note = "gap " + fmt17(gaps[j]) + " -> " + fmt17(gaps[j + 1]);
        probes.push_back(probe);
    }
    if (!gaps.empty()) {
        CheckProbe probe;
        probe.label = "r0 - R0 < 1 at largest b";
        probe.margin = 1.0 - gaps.back();
        probe.scale = 1.0;
        probe.note = "gap = " + fmt17(gaps.back());
        probes.push_back(probe);
    }
    return make_report("first-zero", probes);
}

CheckReport limit_estimate_check(const std::vector<ProblemSpec>& specs,
                                 const IntegratorControls& controls, double vol_tol) {
    std::vector<CheckProbe> probes;
    for (const ProblemSpec& spec : specs) {
        spec.validate();
        if (spec.sigma != -1)
            throw std::invalid_argument("limit_estimate_check: requires sigma = -1");
        if (spec.m >= 3 && spec.a[static_cast<std::size_t>(spec.m - 2)] != 0.0)
            throw std::invalid_argument("limit_estimate_check: m >= 3 requires a_{m-2} = 0");
        const VolumeReport rep = total_volume(spec, controls, vol_tol);
        CheckProbe probe;
        std::string label = "ell < 0 for a = (";
        for (int k = 0; k < spec.m; ++k)
            label += (k ? "," : "") + fmt17(spec.a[static_cast<std::size_t>(k)]);
        probe.label = label + "), m = " + std::to_string(spec.m);
        probe.margin = -rep.ell_estimate;
        probe.scale = std::max(std::abs(rep.ell_estimate), 1e-12);
        probes.push_back(probe);
    }
    return make_report("limit", probes);
}

std::vector<ProblemSpec> random_negative_specs(int count, int m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    std::vector<ProblemSpec> out;
    for (int i = 0; i < count; ++i) {
        ProblemSpec spec;
        spec.m = m;
        spec.N = 2 * m;
        spec.sigma = -1;
        spec.a.resize(static_cast<std::size_t>(m));
        for (int k = 0; k < m; ++k) spec.a[static_cast<std::size_t>(k)] = dist(rng);
        if (m >= 3) spec.a[static_cast<std::size_t>(m - 2)] = 0.0;
        out.push_back(spec);
    }
    return out;
}

std::vector<std::pair<ProblemSpec, ProblemSpec>> random_ordered_pairs(int count, int m,
                                                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> data(-5.0, 5.0);
    std::uniform_real_distribution<double> bump(0.0, 2.0);
    std::vector<std::pair<ProblemSpec, ProblemSpec>> out;
    for (int i = 0; i < count; ++i) {
        ProblemSpec lo;
        lo.m = m;
        lo.N = 2 * m;
        lo.sigma = +1;
        lo.a.resize(static_cast<std::size_t>(m));
        for (int k = 0; k < m; ++k) lo.a[static_cast<std::size_t>(k)] = data(rng);
        ProblemSpec hi = lo;
        for (int k = 0; k < m; ++k) hi.a[static_cast<std::size_t>(k)] += bump(rng);
        out.emplace_back(hi, lo);
    }
    return out;
}

namespace {

CheckReport merge_reports(const std::string& name, const std::vector<CheckReport>& parts) {
    std::vector<CheckProbe> probes;
    for (const CheckReport& part : parts)
        probes.insert(probes.end(), part.details.begin(), part.details.end());
    return make_report(name, probes);
}

CheckReport suite_comparison(std::uint64_t seed, const IntegratorControls& controls) {
    std::vector<CheckReport> parts;
    {
        const ProblemSpec u0 = spherical_spec(2);
        ProblemSpec v = u0;
        v.a[1] -= 1.0;
        parts.push_back(comparison_check(u0, v, 20.0, controls));
        parts.push_back(comparison_check(u0, u0, 20.0, controls));
    }
    for (int m : {2, 3}) {
        const auto pairs = random_ordered_pairs(100, m, seed + static_cast<std::uint64_t>(m));
        for (const auto& [hi, lo] : pairs)
            parts.push_back(comparison_check(hi, lo, 20.0, controls));
    }
    CheckReport rep = merge_reports("comparison", parts);
    for (auto& probe : rep.details)
        if (probe.note.empty()) probe.note = "seed = " + std::to_string(seed);
    return rep;
}

CheckReport suite_barrier(std::uint64_t seed, const IntegratorControls& controls) {
    std::vector<CheckReport> parts;
    IntegratorControls ctl = controls;
    ctl.r_max = 30.0;
    const auto run = [&](const ProblemSpec& spec) {
        parts.push_back(barrier_check(integrate(spec, ctl)));
    };
    run({2, 4, -1, {-10.0, 8.0}});
    run({3, 6, -1, {-5.0, 0.0, 384.0}});
    for (int m : {2, 3, 4})
        for (const ProblemSpec& spec :
             random_negative_specs(4, m, seed + static_cast<std::uint64_t>(10 + m)))
            run(spec);
    return merge_reports("barrier", parts);
}

CheckReport suite_scaling(const IntegratorControls& controls, double vol_tol) {
    std::vector<CheckReport> parts;
    parts.push_back(scaling_check({2, 4, -1, {-5.0, 8.0}}, 2.0, controls, vol_tol));
    parts.push_back(scaling_check({2, 3, -1, {-5.0, 8.0}}, 2.0, controls, vol_tol));
    parts.push_back(scaling_check({2, 4, -1, {-5.0, 8.0}}, 1.0, controls, vol_tol));
    return merge_reports("scaling", parts);
}

CheckReport suite_conversion(const IntegratorControls& controls, double vol_tol) {
    std::vector<CheckReport> parts;
    parts.push_back(conversion_check(spherical_spec(2), {0.5, 1.0, 2.0}, controls, vol_tol));
    parts.push_back(
        conversion_check({3, 6, -1, {-5.0, 0.0, 384.0}}, {0.5, 1.0, 2.0}, controls, vol_tol));
    return merge_reports("conversion", parts);
}

CheckReport suite_first_zero(const IntegratorControls& controls, double vol_tol) {
    std::vector<CheckReport> parts;
    parts.push_back(first_zero_check({10.0, 25.0, 50.0, 100.0}, 2, controls, vol_tol));
    parts.push_back(first_zero_check({10.0, 50.0, 100.0}, 3, controls, vol_tol));
    return merge_reports("first-zero", parts);
}

CheckReport suite_limit(std::uint64_t seed, const IntegratorControls& controls,
                        double vol_tol) {
    std::vector<ProblemSpec> specs = {
        {2, 4, -1, {3.0, 7.0}},        {2, 4, -1, {0.0, 0.0}},
        {2, 4, -1, {-5.0, 8.0}},       {3, 6, -1, {0.0, 0.0, 0.0}},
        {3, 6, -1, {-1.0, 0.0, 5.0}},  {4, 8, -1, {-1.0, 2.0, 0.0, 5.0}},
    };
    for (int m : {2, 3, 4})
        for (const ProblemSpec& spec :
             random_negative_specs(2, m, seed + static_cast<std::uint64_t>(20 + m)))
            specs.push_back(spec);
    return limit_estimate_check(specs, controls, vol_tol);
}

}  // namespace

std::vector<CheckReport> run_suite(const std::string& selector, std::uint64_t seed,
                                   const IntegratorControls& controls, double vol_tol) {
    std::vector<CheckReport> out;
    const bool all = selector == "all";
    if (all || selector == "comparison") out.push_back(suite_comparison(seed, controls));
    if (all || selector == "barrier") out.push_back(suite_barrier(seed, controls));
    if (all || selector == "scaling") out.push_back(suite_scaling(controls, vol_tol));
    if (all || selector == "conversion") out.push_back(suite_conversion(controls, vol_tol));
    if (all || selector == "first-zero") out.push_back(suite_first_zero(controls, vol_tol));
    if (all || selector == "limit") out.push_back(suite_limit(seed, controls, vol_tol));
    if (out.empty())
        throw std::invalid_argument("run_suite: unknown suite selector '" + selector + "'");
    return out;
}

std::string suite_json(const std::vector<CheckReport>& reports) {
    std::string out = "[";
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const CheckReport& rep = reports[i];
        if (i) out += ",";
        std::string details = "[";
        for (std::size_t j = 0; j < rep.details.size(); ++j) {
            const CheckProbe& p = rep.details[j];
            if (j) details += ",";
            JsonObject po;
            po.field("label", p.label)
                .field("margin", p.margin)
                .field("scale", p.scale)
                .field("inconclusive", p.inconclusive)
                .field("note", p.note);
            details += po.str();
        }
        details += "]";
        JsonObject o;
        o.field("name", rep.name)
            .field("passed", rep.passed)
            .field("worst_violation", rep.worst_violation)
            .field("tolerance", rep.tolerance)
            .raw("details", details);
        out += o.str();
    }
    out += "]";
    return out;
}

}  // namespace qcurv
