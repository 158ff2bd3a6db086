#pragma once

// Conformal volume V = integral of e^u over R^N, computed as
// omega_{N-1} * int_0^R r^{N-1} e^{u(r)} dr plus a tail bound on [R, inf).
//
// The tail is certified by cascading the exact radial identity
//   r^{N-1} (Lap^k u)'(r) = R^{N-1} (Lap^k u)'(R) + int_R^r s^{N-1} Lap^{k+1}u ds
// into polynomial upper envelopes, starting from the constant envelope that
// monotonicity of Lap^{m-1}u provides when sigma = -1.  When the cascade does
// not apply, a log-decay fit u ~ c - kappa ln r gives a heuristic tail.

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>

#include "qcurv/poly.hpp"
#include "qcurv/radial.hpp"

namespace qcurv {

enum class TailMode { CascadeCertified, LogDecayHeuristic, Invalid };

const char* to_string(TailMode m);

struct VolumeReport {
    double quad_part = 0.0;     // omega_{N-1} * int_0^R
    double tail_upper = 0.0;    // upper bound on omega_{N-1} * int_R^inf
    TailMode tail_mode = TailMode::Invalid;
    double split_radius = 0.0;  // R
    double total = 0.0;         // quad_part + tail midpoint
    double rel_err = 0.0;       // estimated relative error of total
    double ell_estimate = 0.0;  // Lap^{m-1} u at the last node
    bool warning = false;       // extension cap hit before tol was met
};

/// Sum of power terms c * r^p with real exponents; the cascade envelopes
/// live on [R, inf) and may carry negative exponents.
struct PowerSum {
    struct Term {
        double coef = 0.0;
        double expo = 0.0;
    };
    std::vector<Term> terms;

    [[nodiscard]] double eval(double r) const;
    /// Coefficient of the highest exponent (the growth-controlling term).
    [[nodiscard]] Term leading() const;
};

struct TailEstimate {
    double upper = 0.0;
    TailMode mode = TailMode::Invalid;
    double kappa = 0.0;    // log-decay exponent, heuristic mode only
    PowerSum envelope;     // u <= envelope on [R, inf), cascade mode only
};

/// Thrown by total_volume when the trajectory blows up at finite radius.
class VolumeUndefinedError : public std::runtime_error {
public:
    explicit VolumeUndefinedError(double r_star)
        : std::runtime_error("volume undefined: solution blows up at r* = " +
                             std::to_string(r_star)),
          r_star_(r_star) {}
    [[nodiscard]] double r_star() const { return r_star_; }

private:
    double r_star_;
};

/// omega_{N-1} * int_0^R r^{N-1} e^{u(r)} dr by adaptive Gauss-Kronrod
/// quadrature on the dense output.  Throws std::out_of_range if R exceeds
/// the trajectory.
double quad_volume(const Trajectory& traj, double R);

/// Same integral together with the quadrature error estimate.
std::pair<double, double> quad_volume_with_error(const Trajectory& traj, double R);

/// omega_{N-1} * int_0^R r^{N-1} g(u(r)) dr for an arbitrary transform g of
/// the dense solution values, same adaptive scheme as quad_volume.
std::pair<double, double> quad_radial(const Trajectory& traj, double R,
                                      const std::function<double(double)>& g);

/// Tail bound for the volume integral on [R, inf).  Invalid mode carries
/// upper = +inf and is a value, not an error.
TailEstimate tail_bound(const Trajectory& traj, double R);

struct VolumeSolve {
    VolumeReport report;
    Trajectory traj;
};

/// Full volume computation: integrates the spec, chooses the split radius,
/// and doubles r_max (up to a cap) until tail_upper <= vol_tol * quad_part.
VolumeReport total_volume(const ProblemSpec& spec, const IntegratorControls& controls = {},
                          double vol_tol = 1e-6);

/// total_volume variant that also returns the final trajectory.
VolumeSolve solve_volume(const ProblemSpec& spec, const IntegratorControls& controls = {},
                         double vol_tol = 1e-6);

/// VolumeReport JSON with fixed key order:
/// quad_part, tail_upper, tail_mode, split_radius, total, rel_err, ell_estimate.
std::string volume_report_json(const VolumeReport& rep);

inline constexpr double kRMaxCap = 1e6;       // geometric extension cap
inline constexpr double kDefaultVolTol = 1e-6;

}  // namespace qcurv
