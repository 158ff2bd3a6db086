#pragma once

// Machine checks of the lemma-level claims on concrete trajectories:
// comparison ordering, polynomial barriers, scaling covariance, the
// Q-curvature normalization identity, first-zero asymptotics, and the
// negativity of lim Lap^{m-1} u.

#include <cstdint>
#include <string>
#include <vector>

#include "qcurv/volume.hpp"

namespace qcurv {

struct CheckProbe {
    std::string label;
    // Signed slack after the probe's own tolerance has been folded in:
    // >= 0 means the probe holds, negative means violation beyond tolerance.
    double margin = 0.0;
    double scale = 1.0;  // normalization for worst_violation
    bool inconclusive = false;
    std::string note;
};

struct CheckReport {
    std::string name;
    bool passed = false;
    // min margin/scale over conclusive probes; passed iff >= -tolerance (= 0)
    double worst_violation = 0.0;
    double tolerance = 0.0;
    std::vector<CheckProbe> details;
};

CheckReport make_report(std::string name, std::vector<CheckProbe> probes);

/// Lemma comp: ordered initial data implies u >= v up to the first blow-up.
/// Both specs must have sigma = +1 and Lap^k u(0) >= Lap^k v(0) for all k.
CheckReport comparison_check(const ProblemSpec& u_spec, const ProblemSpec& v_spec, double R,
                             const IntegratorControls& controls = {});

/// sigma = -1 barrier: u <= Phi at every node where Phi matches the initial
/// data, and layer-wise Lap^i(u - Phi) <= 0 for all i.
CheckReport barrier_check(const Trajectory& traj);

/// Covariance under u_lambda(x) = u(lambda x) + 2m ln(lambda): pointwise
/// identity and volume ratio lambda^{2m-N}.
CheckReport scaling_check(const ProblemSpec& spec, double lambda,
                          const IntegratorControls& controls = {},
                          double vol_tol = kDefaultVolTol);

/// v = (u - ln((2m)!)) / (2m): pointwise e^{2mv} = e^u/(2m)! and volume
/// ratio 1/(2m)!.
CheckReport conversion_check(const ProblemSpec& spec, const std::vector<double>& probe_radii,
                             const IntegratorControls& controls = {},
                             double vol_tol = kDefaultVolTol);

/// plus_c0 branch: r0 - R0 decreasing along the b grid and < 1 at the largest
/// b; the volume lower bound V(b) > (2m-2) omega_{2m-1} r0^{2m-2} Lap^{m-1}u(r0)
/// wherever Lap^{m-1}u(r0) > 0.
CheckReport first_zero_check(const std::vector<double>& b_grid, int m,
                             const IntegratorControls& controls = {},
                             double vol_tol = kDefaultVolTol);

/// lim Lap^{m-1} u < 0 for every probe spec (sigma = -1; m >= 3 probes must
/// have a_{m-2} = 0).
CheckReport limit_estimate_check(const std::vector<ProblemSpec>& specs,
                                 const IntegratorControls& controls = {},
                                 double vol_tol = kDefaultVolTol);

/// Suite selector: all | comparison | barrier | scaling | conversion |
/// first-zero | limit.  Aggregated deterministically by check name.
std::vector<CheckReport> run_suite(const std::string& selector, std::uint64_t seed,
                                   const IntegratorControls& controls = {},
                                   double vol_tol = kDefaultVolTol);

/// JSON array of CheckReports.
std::string suite_json(const std::vector<CheckReport>& reports);

/// Random spec generators used by the property suites (fixed seed).
std::vector<ProblemSpec> random_negative_specs(int count, int m, std::uint64_t seed);
std::vector<std::pair<ProblemSpec, ProblemSpec>> random_ordered_pairs(int count, int m,
                                                                      std::uint64_t seed);

}  // namespace qcurv
