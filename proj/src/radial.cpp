#include "qcurv/radial.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "qcurv/io.hpp"

namespace qcurv {

void ProblemSpec::validate() const {
    if (m < 2) throw std::invalid_argument("ProblemSpec: m must be >= 2");
    if (N < 3) throw std::invalid_argument("ProblemSpec: N must be >= 3");
    if (sigma != 1 && sigma != -1)
        throw std::invalid_argument("ProblemSpec: sigma must be +1 or -1");
    if (static_cast<int>(a.size()) != m)
        throw std::invalid_argument("ProblemSpec: a must have length m");
    for (double ak : a)
        if (!std::isfinite(ak)) throw std::invalid_argument("ProblemSpec: a entries must be finite");
}

void IntegratorControls::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
        throw std::invalid_argument("IntegratorControls: tolerances must be positive");
    if (!(h_min > 0.0) || !(h_min < h_init) || !(h_init <= h_max))
        throw std::invalid_argument("IntegratorControls: need 0 < h_min < h_init <= h_max");
    if (!(u_underflow < 0.0) || !(u_blow > 0.0))
        throw std::invalid_argument("IntegratorControls: need u_underflow < 0 < u_blow");
    if (!(r_max > 0.0)) throw std::invalid_argument("IntegratorControls: r_max must be positive");
}

const char* to_string(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::GlobalToRmax: return "global_to_rmax";
        case OutcomeKind::BlowUp: return "blow_up";
        case OutcomeKind::StepUnderflow: return "step_underflow";
    }
    return "unknown";
}

namespace {

constexpr double kExpArgCap = 709.0;   // keeps the source finite in trial stages
constexpr double kOriginEps = 1e-12;   // below this radius use the r -> 0 limit

inline double source_term(double w0, int sigma, double u_underflow) {
    if (w0 < u_underflow) return 0.0;
    return sigma * std::exp(std::min(w0, kExpArgCap));
}

// y = (w_0..w_{m-1}, dw_0..dw_{m-1}); dy likewise.
inline void rhs(double r, const double* y, double* dy, int m, int N, int sigma,
                double u_underflow) {
    const double* w = y;
    const double* dw = y + m;
    for (int k = 0; k < m; ++k) dy[k] = dw[k];
    double* ddw = dy + m;
    const double f_last = source_term(w[0], sigma, u_underflow);
    if (r < kOriginEps) {
        const double inv_n = 1.0 / N;
        for (int k = 0; k + 1 < m; ++k) ddw[k] = w[k + 1] * inv_n;
        ddw[m - 1] = f_last * inv_n;
    } else {
        const double c = (N - 1.0) / r;
        for (int k = 0; k + 1 < m; ++k) ddw[k] = w[k + 1] - c * dw[k];
        ddw[m - 1] = f_last - c * dw[m - 1];
    }
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                 b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// 4th-order dense-output weights.
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

// Step-size ceiling: h_max while r is moderate, proportional to r far out so
// node counts stay bounded when the tail logic extends r_max toward the cap.
inline double step_ceiling(double r, const IntegratorControls& c) {
    return std::max(c.h_max, 2.5e-5 * r);
}

constexpr std::size_t kMaxNodes = 10'000'000;

}  // namespace

RadialState Trajectory::node(std::size_t i) const {
    RadialState s;
    s.r = node_r_[i];
    const int m = spec.m;
    s.w.assign(node_y_.begin() + static_cast<std::ptrdiff_t>(i * dim()),
               node_y_.begin() + static_cast<std::ptrdiff_t>(i * dim() + m));
    s.dw.assign(node_y_.begin() + static_cast<std::ptrdiff_t>(i * dim() + m),
                node_y_.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim()));
    return s;
}

std::size_t Trajectory::interval_of(double r) const {
    if (node_r_.empty()) throw std::out_of_range("Trajectory: empty");
    const double last = node_r_.back();
    if (r < 0.0 || r > last * (1.0 + 1e-14) + 1e-300)
        throw std::out_of_range("Trajectory: radius outside stored range");
    auto it = std::upper_bound(node_r_.begin(), node_r_.end(), r);
    std::size_t idx = static_cast<std::size_t>(it - node_r_.begin());
    if (idx > 0) --idx;
    if (idx + 1 >= node_r_.size()) idx = node_r_.size() - 2;
    return idx;
}

void Trajectory::eval(double r, std::span<double> y_out) const {
    const int n = dim();
    if (size() == 1) {
        for (int i = 0; i < n; ++i) y_out[static_cast<std::size_t>(i)] = node_y_[static_cast<std::size_t>(i)];
        return;
    }
    const std::size_t iv = interval_of(r);
    const double theta = std::clamp((r - node_r_[iv]) / dense_h_[iv], 0.0, 1.0);
    const double th1 = 1.0 - theta;
    const double* yl = node_y_.data() + iv * static_cast<std::size_t>(n);
    const double* blk = dense_.data() + iv * 4 * static_cast<std::size_t>(n);
    const double* cc2 = blk;
    const double* cc3 = blk + n;
    const double* cc4 = blk + 2 * n;
    const double* cc5 = blk + 3 * n;
    for (int i = 0; i < n; ++i) {
        y_out[static_cast<std::size_t>(i)] =
            yl[i] + theta * (cc2[i] + th1 * (cc3[i] + theta * (cc4[i] + th1 * cc5[i])));
    }
}

double Trajectory::eval_component(double r, int comp) const {
    const int n = dim();
    if (size() == 1) return node_y_[static_cast<std::size_t>(comp)];
    const std::size_t iv = interval_of(r);
    const double theta = std::clamp((r - node_r_[iv]) / dense_h_[iv], 0.0, 1.0);
    const double th1 = 1.0 - theta;
    const double* yl = node_y_.data() + iv * static_cast<std::size_t>(n);
    const double* blk = dense_.data() + iv * 4 * static_cast<std::size_t>(n);
    return yl[comp] + theta * (blk[comp] + th1 * (blk[n + comp] +
                               theta * (blk[2 * n + comp] + th1 * blk[3 * n + comp])));
}

RadialState Trajectory::state_at(double r) const {
    const int m = spec.m;
    std::vector<double> y(static_cast<std::size_t>(dim()));
    eval(r, y);
    RadialState s;
    s.r = r;
    s.w.assign(y.begin(), y.begin() + m);
    s.dw.assign(y.begin() + m, y.end());
    return s;
}

std::vector<double> reduce_rhs(const RadialState& state, const ProblemSpec& spec) {
    spec.validate();
    const int m = spec.m;
    if (static_cast<int>(state.w.size()) != m || static_cast<int>(state.dw.size()) != m)
        throw std::invalid_argument("reduce_rhs: state length mismatch");
    if (state.r < 0.0) throw std::invalid_argument("reduce_rhs: r must be >= 0");
    std::vector<double> y(static_cast<std::size_t>(2 * m));
    std::copy(state.w.begin(), state.w.end(), y.begin());
    std::copy(state.dw.begin(), state.dw.end(), y.begin() + m);
    std::vector<double> dy(static_cast<std::size_t>(2 * m));
    rhs(state.r, y.data(), dy.data(), m, spec.N, spec.sigma, IntegratorControls{}.u_underflow);
    return dy;
}

Trajectory integrate(const ProblemSpec& spec, const IntegratorControls& controls) {
    spec.validate();
    controls.validate();
    const int m = spec.m;
    const int n = 2 * m;

    Trajectory traj;
    traj.spec = spec;
    traj.controls = controls;

    std::vector<double> y(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < m; ++k) y[static_cast<std::size_t>(k)] = spec.a[static_cast<std::size_t>(k)];
    traj.node_r_.push_back(0.0);
    traj.node_y_.insert(traj.node_y_.end(), y.begin(), y.end());

    if (y[0] >= controls.u_blow) {
        traj.outcome = {OutcomeKind::BlowUp, 0.0};
        return traj;
    }

    std::vector<double> k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), k5(y.size()),
        k6(y.size()), k7(y.size()), ytmp(y.size()), ynew(y.size());
    const auto f = [&](double rr, const std::vector<double>& yy, std::vector<double>& out) {
        rhs(rr, yy.data(), out.data(), m, spec.N, spec.sigma, controls.u_underflow);
    };

    double r = 0.0;
    f(r, y, k1);
    double h = std::min({controls.h_init, step_ceiling(r, controls), controls.r_max});
    double facold = 1e-4;
    bool rejected = false;
    int increasing_run = 0;
    double prev_w0 = y[0];

    constexpr double safe = 0.9, fac_lo = 0.2, fac_hi = 10.0;
    constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75;

    while (true) {
        bool last = false;
        if (r + h >= controls.r_max) {
            h = controls.r_max - r;
            last = true;
        }

        // stages
        for (int i = 0; i < n; ++i) ytmp[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] + h * a21 * k1[static_cast<std::size_t>(i)];
        f(r + c2 * h, ytmp, k2);
        for (int i = 0; i < n; ++i) ytmp[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] + h * (a31 * k1[static_cast<std::size_t>(i)] + a32 * k2[static_cast<std::size_t>(i)]);
        f(r + c3 * h, ytmp, k3);
        for (int i = 0; i < n; ++i) ytmp[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] + h * (a41 * k1[static_cast<std::size_t>(i)] + a42 * k2[static_cast<std::size_t>(i)] + a43 * k3[static_cast<std::size_t>(i)]);
        f(r + c4 * h, ytmp, k4);
        for (int i = 0; i < n; ++i) ytmp[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] + h * (a51 * k1[static_cast<std::size_t>(i)] + a52 * k2[static_cast<std::size_t>(i)] + a53 * k3[static_cast<std::size_t>(i)] + a54 * k4[static_cast<std::size_t>(i)]);
        f(r + c5 * h, ytmp, k5);
        for (int i = 0; i < n; ++i) ytmp[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] + h * (a61 * k1[static_cast<std::size_t>(i)] + a62 * k2[static_cast<std::size_t>(i)] + a63 * k3[static_cast<std::size_t>(i)] + a64 * k4[static_cast<std::size_t>(i)] + a65 * k5[static_cast<std::size_t>(i)]);
        f(r + h, ytmp, k6);
        for (int i = 0; i < n; ++i) ynew[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] + h * (b1 * k1[static_cast<std::size_t>(i)] + b3 * k3[static_cast<std::size_t>(i)] + b4 * k4[static_cast<std::size_t>(i)] + b5 * k5[static_cast<std::size_t>(i)] + b6 * k6[static_cast<std::size_t>(i)]);
        f(r + h, ynew, k7);

        double err_sq = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            const double ei = h * (e1 * k1[ii] + e3 * k3[ii] + e4 * k4[ii] + e5 * k5[ii] +
                                   e6 * k6[ii] + e7 * k7[ii]);
            const double sc = controls.abs_tol +
                              controls.rel_tol * std::max(std::abs(y[ii]), std::abs(ynew[ii]));
            err_sq += (ei / sc) * (ei / sc);
        }
        double err = std::sqrt(err_sq / n);
        if (!std::isfinite(err)) err = 1e10;

        const double fac11 = std::pow(err, expo1);
        if (err <= 1.0) {
            // accept
            facold = std::max(err, 1e-4);
            const double r_new = last ? controls.r_max : r + h;

            // dense block: cont2..cont5
            const std::size_t base = traj.dense_.size();
            traj.dense_.resize(base + 4 * static_cast<std::size_t>(n));
            double* blk = traj.dense_.data() + base;
            for (int i = 0; i < n; ++i) {
                const std::size_t ii = static_cast<std::size_t>(i);
                const double ydiff = ynew[ii] - y[ii];
                const double bspl = h * k1[ii] - ydiff;
                blk[i] = ydiff;
                blk[n + i] = bspl;
                blk[2 * n + i] = ydiff - h * k7[ii] - bspl;
                blk[3 * n + i] = h * (d1 * k1[ii] + d3 * k3[ii] + d4 * k4[ii] + d5 * k5[ii] +
                                      d6 * k6[ii] + d7 * k7[ii]);
            }
            traj.dense_h_.push_back(h);
            traj.node_r_.push_back(r_new);
            traj.node_y_.insert(traj.node_y_.end(), ynew.begin(), ynew.end());

            if (ynew[0] >= controls.u_blow) {
                // locate the crossing of w0 = u_blow inside this step
                const std::size_t iv = traj.dense_h_.size() - 1;
                double lo = 0.0, hi = 1.0;
                for (int it = 0; it < 100; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double rr = traj.node_r_[iv] + mid * h;
                    if (traj.eval_component(rr, 0) >= controls.u_blow)
                        hi = mid;
                    else
                        lo = mid;
                }
                const double r_star = traj.node_r_[iv] + hi * h;
                std::vector<double> ystar(static_cast<std::size_t>(n));
                traj.eval(r_star, ystar);
                traj.node_r_.back() = r_star;
                std::copy(ystar.begin(), ystar.end(),
                          traj.node_y_.end() - static_cast<std::ptrdiff_t>(n));
                traj.outcome = {OutcomeKind::BlowUp, r_star};
                return traj;
            }

            if (last) {
                traj.outcome = {OutcomeKind::GlobalToRmax, controls.r_max};
                return traj;
            }

            increasing_run = (ynew[0] > prev_w0) ? increasing_run + 1 : 0;
            prev_w0 = ynew[0];
            r = r_new;
            std::swap(y, ynew);
            std::swap(k1, k7);  // FSAL

            if (traj.size() >= kMaxNodes) {
                if (spec.sigma == +1 && increasing_run >= 10)
                    traj.outcome = {OutcomeKind::BlowUp, r};
                else
                    traj.outcome = {OutcomeKind::StepUnderflow, r};
                return traj;
            }

            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(1.0 / fac_hi, std::min(1.0 / fac_lo, fac / safe));
            double h_new = h / fac;
            if (rejected) h_new = std::min(h_new, h);
            rejected = false;
            h = std::clamp(h_new, controls.h_min, step_ceiling(r, controls));
        } else {
            // reject and shrink
            rejected = true;
            const double h_new = h / std::min(1.0 / fac_lo, fac11 / safe);
            if (h_new < controls.h_min) {
                if (spec.sigma == +1 && increasing_run >= 10)
                    traj.outcome = {OutcomeKind::BlowUp, r};
                else
                    traj.outcome = {OutcomeKind::StepUnderflow, r};
                return traj;
            }
            h = h_new;
        }
    }
}

std::optional<double> first_crossing(const Trajectory& traj, int comp, double level,
                                     double r_from) {
    if (traj.size() == 0) return std::nullopt;
    const double r_last = traj.r_last();
    if (r_from > r_last) return std::nullopt;
    double lo = std::max(r_from, traj.r_first());
    double g_lo = traj.eval_component(lo, comp) - level;
    if (g_lo == 0.0) return lo;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double rn = traj.node_radii()[i];
        if (rn <= lo) continue;
        const double g = traj.node_component(i, comp) - level;
        if (g == 0.0) return rn;
        if (g_lo * g < 0.0) {
            double a = lo, b = rn;
            while (b - a > 1e-10) {
                const double mid = 0.5 * (a + b);
                const double gm = traj.eval_component(mid, comp) - level;
                if (gm == 0.0) return mid;
                if (g_lo * gm < 0.0)
                    b = mid;
                else
                    a = mid;
            }
            return 0.5 * (a + b);
        }
        lo = rn;
        g_lo = g;
    }
    return std::nullopt;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
    const int m = traj.spec.m;
    os << "r";
    for (int k = 0; k < m; ++k) os << ",w" << k;
    for (int k = 0; k < m; ++k) os << ",dw" << k;
    os << ",source\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        os << fmt17(traj.node_radii()[i]);
        for (int c = 0; c < 2 * m; ++c) os << "," << fmt17(traj.node_component(i, c));
        os << ","
           << fmt17(source_term(traj.node_w(i, 0), traj.spec.sigma, traj.controls.u_underflow))
           << "\n";
    }
}

}  // namespace qcurv
