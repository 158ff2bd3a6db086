#include "qcurv/volume.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "qcurv/io.hpp"

namespace qcurv {

const char* to_string(TailMode m) {
    switch (m) {
        case TailMode::CascadeCertified: return "cascade_certified";
        case TailMode::LogDecayHeuristic: return "log_decay_heuristic";
        case TailMode::Invalid: return "invalid";
    }
    return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Gauss-Kronrod 15(7) nodes and weights.
constexpr double kXgk[8] = {0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
                            0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
                            0.2077849550078985, 0.0};
constexpr double kWgk[8] = {0.0229353220105292, 0.0630920926299785, 0.1047900103222502,
                            0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
                            0.2044329400752989, 0.2094821410847278};
constexpr double kWg[4] = {0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
                           0.4179591836734694};

struct QuadCell {
    double val = 0.0;
    double err = 0.0;
};

template <class F>
QuadCell gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double hl = 0.5 * (b - a);
    const double fc = f(c);
    double resg = fc * kWg[3];
    double resk = fc * kWgk[7];
    for (int j = 0; j < 3; ++j) {
        const double x = hl * kXgk[2 * j + 1];
        const double fs = f(c - x) + f(c + x);
        resg += kWg[j] * fs;
        resk += kWgk[2 * j + 1] * fs;
    }
    for (int j = 0; j < 4; ++j) {
        const double x = hl * kXgk[2 * j];
        resk += kWgk[2 * j] * (f(c - x) + f(c + x));
    }
    return {resk * hl, std::abs(resk - resg) * hl};
}

template <class F>
QuadCell adapt(const F& f, double a, double b, double tol, int depth = 0) {
    const QuadCell cell = gk15(f, a, b);
    if (cell.err <= tol || depth >= 25 || (b - a) <= 1e-15 * (1.0 + std::abs(a)))
        return cell;
    const double mid = 0.5 * (a + b);
    const QuadCell left = adapt(f, a, mid, 0.5 * tol, depth + 1);
    const QuadCell right = adapt(f, mid, b, 0.5 * tol, depth + 1);
    return {left.val + right.val, left.err + right.err};
}

double clamped_exp(double x) { return std::exp(std::min(x, 709.0)); }

// r^{N-1} g(u(r)) on the dense output.
template <class G>
struct RadialIntegrand {
    const Trajectory* traj;
    int N;
    G g;
    double operator()(double r) const {
        return std::pow(r, N - 1) * g(traj->eval_component(r, 0));
    }
};

struct Prefix {
    std::vector<double> cum;      // cumulative integral at each node (no omega factor)
    std::vector<double> err_cum;  // cumulative quadrature error estimate
};

// Two-pass adaptive composite quadrature over the node intervals up to r_hi:
// a rough Gauss-Kronrod pass fixes the tolerance (slaved to the integrator
// tolerance), a refinement pass subdivides the intervals that exceed their
// share of it.
template <class F>
QuadCell composite_quad(const Trajectory& traj, double r_lo, double r_hi, const F& f) {
    const auto& nr = traj.node_radii();
    struct Seg {
        double a, b;
        QuadCell rough;
    };
    std::vector<Seg> segs;
    double total_rough = 0.0;
    for (std::size_t i = 0; i + 1 < nr.size(); ++i) {
        const double a = std::max(nr[i], r_lo);
        const double b = std::min(nr[i + 1], r_hi);
        if (b <= a) continue;
        Seg s{a, b, gk15(f, a, b)};
        total_rough += s.rough.val;
        segs.push_back(s);
    }
    if (segs.empty()) return {0.0, 0.0};
    const double len_total = r_hi - r_lo;
    const double tol_total =
        traj.controls.abs_tol + traj.controls.rel_tol * std::abs(total_rough);
    QuadCell out;
    for (const Seg& s : segs) {
        const double share = tol_total * (s.b - s.a) / len_total;
        const QuadCell cell = (s.rough.err <= share) ? s.rough : adapt(f, s.a, s.b, share);
        out.val += cell.val;
        out.err += cell.err;
    }
    return out;
}

Prefix quad_prefix(const Trajectory& traj) {
    const RadialIntegrand<double (*)(double)> f{&traj, traj.spec.N, &clamped_exp};
    const auto& nr = traj.node_radii();
    Prefix p;
    p.cum.assign(nr.size(), 0.0);
    p.err_cum.assign(nr.size(), 0.0);
    std::vector<QuadCell> rough(nr.size() > 0 ? nr.size() - 1 : 0);
    double total_rough = 0.0;
    for (std::size_t i = 0; i + 1 < nr.size(); ++i) {
        rough[i] = gk15(f, nr[i], nr[i + 1]);
        total_rough += rough[i].val;
    }
    const double len_total = std::max(nr.back() - nr.front(), 1e-300);
    const double tol_total =
        traj.controls.abs_tol + traj.controls.rel_tol * std::abs(total_rough);
    for (std::size_t i = 0; i + 1 < nr.size(); ++i) {
        const double share = tol_total * (nr[i + 1] - nr[i]) / len_total;
        const QuadCell cell =
            (rough[i].err <= share) ? rough[i] : adapt(f, nr[i], nr[i + 1], share);
        p.cum[i + 1] = p.cum[i] + cell.val;
        p.err_cum[i + 1] = p.err_cum[i] + cell.err;
    }
    return p;
}

// Upper envelopes E_k >= Lap^k u on [R, inf) built from the constant envelope
// for Lap^{m-1}u (valid for sigma = -1 by monotonicity) through the exact
// radial integral identity; only sign-definite remainder terms are dropped.
EvenPolynomial cascade_envelope(const RadialState& at_R, int N) {
    const int m = static_cast<int>(at_R.w.size());
    const double R = at_R.r;
    EvenPolynomial env;
    env.coeffs = {at_R.w[static_cast<std::size_t>(m - 1)]};
    for (int k = m - 2; k >= 0; --k) {
        const auto& c = env.coeffs;
        double A = std::pow(R, N - 1) * at_R.dw[static_cast<std::size_t>(k)];
        for (std::size_t j = 0; j < c.size(); ++j) {
            const double p = static_cast<double>(N + 2 * j);
            A -= c[j] * std::pow(R, p) / p;
        }
        EvenPolynomial next;
        next.coeffs.assign(c.size() + 1, 0.0);
        next.coeffs[0] = at_R.w[static_cast<std::size_t>(k)];
        if (A > 0.0) next.coeffs[0] += A * std::pow(R, 2 - N) / (N - 2);
        for (std::size_t j = 0; j < c.size(); ++j) {
            const double denom = static_cast<double>(N + 2 * j) * static_cast<double>(2 * j + 2);
            next.coeffs[j + 1] += c[j] / denom;
            next.coeffs[0] -= c[j] * std::pow(R, static_cast<double>(2 * j + 2)) / denom;
        }
        env = std::move(next);
    }
    return env;
}

// Integral of r^{N-1} e^{q(r)} over [R, inf) by doubling the upper limit
// until the increment is below 1e-3 of the running tail.
double envelope_tail_integral(const EvenPolynomial& q, int N, double R) {
    const auto f = [&](double r) { return std::pow(r, N - 1) * clamped_exp(q.eval(r)); };
    double acc = 0.0;
    double a = R;
    for (int t = 0; t < 60; ++t) {
        const double b = 2.0 * a;
        const QuadCell cell = adapt(f, a, b, 1e-10 * std::max(acc, 1.0) + 1e-300);
        acc += cell.val;
        if (!std::isfinite(acc)) return kInf;
        if (t >= 1 && cell.val <= 1e-3 * acc) return acc;
        if (acc == 0.0 && t >= 3) return 0.0;
        a = b;
    }
    return kInf;  // did not settle within the doubling budget
}

struct LogFit {
    double c = 0.0;      // intercept at ln r = 0
    double kappa = 0.0;  // u ~ c - kappa ln r
};

std::optional<LogFit> log_decay_fit(const Trajectory& traj) {
    const auto& nr = traj.node_radii();
    if (nr.size() < 6) return std::nullopt;
    const double r_last = nr.back();
    const double r_lo = r_last / 10.0;
    std::size_t first = nr.size() - 1;
    while (first > 1 && nr[first - 1] >= r_lo) --first;
    // at least 20 nodes when available
    while (first > 1 && nr.size() - first < 20) --first;
    const std::size_t count = nr.size() - first;
    if (count < 5) return std::nullopt;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = first; i < nr.size(); ++i) {
        if (nr[i] <= 0.0) continue;
        const double x = std::log(nr[i]);
        const double y = traj.node_w(i, 0);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double nn = static_cast<double>(count);
    const double det = nn * sxx - sx * sx;
    if (std::abs(det) < 1e-30) return std::nullopt;
    const double slope = (nn * sxy - sx * sy) / det;
    const double intercept = (sy - slope * sx) / nn;
    return LogFit{intercept, -slope};
}

}  // namespace

std::pair<double, double> quad_volume_with_error(const Trajectory& traj, double R) {
    if (traj.outcome.kind != OutcomeKind::GlobalToRmax)
        throw std::invalid_argument("quad_volume: trajectory must reach r_max");
    if (R < 0.0 || R > traj.r_last() * (1.0 + 1e-14))
        throw std::out_of_range("quad_volume: R beyond trajectory");
    if (R == 0.0) return {0.0, 0.0};
    const double omega = sphere_area(traj.spec.N);
    const RadialIntegrand<double (*)(double)> f{&traj, traj.spec.N, &clamped_exp};
    const QuadCell cell = composite_quad(traj, 0.0, std::min(R, traj.r_last()), f);
    return {omega * cell.val, omega * cell.err};
}

double quad_volume(const Trajectory& traj, double R) {
    return quad_volume_with_error(traj, R).first;
}

std::pair<double, double> quad_radial(const Trajectory& traj, double R,
                                      const std::function<double(double)>& g) {
    if (traj.outcome.kind != OutcomeKind::GlobalToRmax)
        throw std::invalid_argument("quad_radial: trajectory must reach r_max");
    if (R < 0.0 || R > traj.r_last() * (1.0 + 1e-14))
        throw std::out_of_range("quad_radial: R beyond trajectory");
    if (R == 0.0) return {0.0, 0.0};
    const double omega = sphere_area(traj.spec.N);
    const RadialIntegrand<const std::function<double(double)>&> f{&traj, traj.spec.N, g};
    const QuadCell cell = composite_quad(traj, 0.0, std::min(R, traj.r_last()), f);
    return {omega * cell.val, omega * cell.err};
}

TailEstimate tail_bound(const Trajectory& traj, double R) {
    if (traj.outcome.kind != OutcomeKind::GlobalToRmax)
        throw std::invalid_argument("tail_bound: trajectory must reach r_max");
    if (R < 0.0 || R > traj.r_last() * (1.0 + 1e-14))
        throw std::out_of_range("tail_bound: R beyond trajectory");
    const int m = traj.spec.m;
    const int N = traj.spec.N;
    const double omega = sphere_area(N);
    const RadialState at_R = traj.state_at(std::min(R, traj.r_last()));

    if (traj.spec.sigma == -1 && at_R.w[static_cast<std::size_t>(m - 1)] < 0.0 && R > 0.0) {
        TailEstimate est;
        est.envelope = cascade_envelope(at_R, N);
        const double raw = envelope_tail_integral(est.envelope, N, R);
        if (std::isfinite(raw)) {
            est.upper = omega * raw;
            est.mode = TailMode::CascadeCertified;
            return est;
        }
        // cascade numerically useless at this R; fall through
    }

    if (const auto fit = log_decay_fit(traj); fit && fit->kappa > N && R > 0.0) {
        // omega e^c R^{N-kappa} / (kappa - N), in logs to dodge over/underflow
        const double log_tail = std::log(omega) + fit->c + (N - fit->kappa) * std::log(R) -
                                std::log(fit->kappa - N);
        if (log_tail < 700.0) {
            TailEstimate est;
            est.upper = std::exp(log_tail);
            est.mode = TailMode::LogDecayHeuristic;
            est.kappa = fit->kappa;
            return est;
        }
    }

    TailEstimate est;
    est.upper = kInf;
    est.mode = TailMode::Invalid;
    return est;
}

namespace {

VolumeReport build_report(double quad, double qerr, const TailEstimate& te, double R,
                          double ell) {
    VolumeReport rep;
    rep.quad_part = quad;
    rep.tail_upper = te.upper;
    rep.tail_mode = te.mode;
    rep.split_radius = R;
    if (std::isfinite(te.upper)) {
        rep.total = quad + 0.5 * te.upper;
        rep.rel_err = (0.5 * te.upper + qerr) / std::max(rep.total, 1e-300);
    } else {
        rep.total = quad;
        rep.rel_err = kInf;
    }
    rep.ell_estimate = ell;
    return rep;
}

}  // namespace

VolumeSolve solve_volume(const ProblemSpec& spec, const IntegratorControls& controls,
                         double vol_tol) {
    spec.validate();
    controls.validate();
    if (!(vol_tol > 0.0)) throw std::invalid_argument("solve_volume: vol_tol must be positive");

    IntegratorControls ctl = controls;
    const int m = spec.m;
    const double omega = sphere_area(spec.N);

    bool have_best = false;
    double best_score = kInf;
    VolumeReport best_rep;
    Trajectory best_traj;

    while (true) {
        Trajectory traj = integrate(spec, ctl);
        if (traj.outcome.kind == OutcomeKind::BlowUp)
            throw VolumeUndefinedError(traj.outcome.r);
        if (traj.outcome.kind == OutcomeKind::StepUnderflow)
            throw std::runtime_error("solve_volume: step underflow at r = " +
                                     std::to_string(traj.outcome.r));

        const Prefix prefix = quad_prefix(traj);
        const auto& nr = traj.node_radii();
        const std::size_t last = nr.size() - 1;
        const double ell = traj.node_w(last, m - 1);

        double w_absmax = 0.0;
        for (std::size_t i = 0; i < nr.size(); ++i)
            w_absmax = std::max(w_absmax, std::abs(traj.node_w(i, m - 1)));

        // candidate split nodes: the first node satisfying the policy, then
        // geometrically later qualifying nodes, then the last node
        std::vector<std::size_t> cand;
        double next_r = 0.0;
        for (std::size_t i = 1; i < nr.size(); ++i) {
            if (traj.node_w(i, m - 1) <= -0.1 * w_absmax && traj.node_w(i, 0) <= -20.0 &&
                nr[i] >= next_r) {
                cand.push_back(i);
                next_r = 2.0 * nr[i];
            }
        }
        if (cand.empty() || cand.back() != last) cand.push_back(last);

        for (std::size_t idx : cand) {
            const double R = nr[idx];
            const double quad = omega * prefix.cum[idx];
            const double qerr = omega * prefix.err_cum[idx];
            const TailEstimate te = tail_bound(traj, R);
            const double score =
                std::isfinite(te.upper) ? te.upper / std::max(quad, 1e-300) : kInf;
            if (te.mode != TailMode::Invalid && te.upper <= vol_tol * std::max(quad, 1e-300)) {
                VolumeReport rep = build_report(quad, qerr, te, R, ell);
                return {rep, std::move(traj)};
            }
            if (!have_best || score < best_score) {
                have_best = true;
                best_score = score;
                best_rep = build_report(quad, qerr, te, R, ell);
                best_traj = traj;
            }
        }

        if (ctl.r_max >= kRMaxCap) break;
        ctl.r_max = std::min(2.0 * ctl.r_max, kRMaxCap);
    }

    best_rep.warning = true;
    return {best_rep, std::move(best_traj)};
}

VolumeReport total_volume(const ProblemSpec& spec, const IntegratorControls& controls,
                          double vol_tol) {
    return solve_volume(spec, controls, vol_tol).report;
}

std::string volume_report_json(const VolumeReport& rep) {
    JsonObject o;
    o.field("quad_part", rep.quad_part)
        .field("tail_upper", rep.tail_upper)
        .field("tail_mode", std::string(to_string(rep.tail_mode)))
        .field("split_radius", rep.split_radius)
        .field("total", rep.total)
        .field("rel_err", rep.rel_err)
        .field("ell_estimate", rep.ell_estimate);
    return o.str();
}

}  // namespace qcurv
