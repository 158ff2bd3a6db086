#pragma once

// Volume prescription by shooting over initial data: branch scans, bisection
// along polyline paths in data space, the decreasing alpha-family for
// sigma = +1, and the global-existence threshold search.

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qcurv/volume.hpp"

namespace qcurv {

enum class Branch { PlusC0, MinusC0, Alpha };

const char* to_string(Branch b);

/// Initial data for a branch parameter value.
///   PlusC0:  a = (-b, 0, .., 0, +c0(m)),  sigma = -1
///   MinusC0: a = (-b, 0, .., 0, -c0(m)),  sigma = -1
///   Alpha:   base data with a_{m-1} - alpha, sigma = +1
ProblemSpec branch_spec(Branch branch, double param, const ProblemSpec& tmpl);

struct ScanRow {
    double param = 0.0;
    VolumeReport report;
    OutcomeKind outcome = OutcomeKind::GlobalToRmax;
    bool failed = false;  // volume undefined at this parameter
};

using ScanTable = std::vector<ScanRow>;

ScanTable scan_branch(Branch branch, const std::vector<double>& grid, const ProblemSpec& tmpl,
                      const IntegratorControls& controls = {}, double vol_tol = kDefaultVolTol,
                      bool parallel = true);

/// CSV: param,total,rel_err,tail_mode,ell_estimate,outcome
void write_scan_csv(const ScanTable& table, std::ostream& os);

struct PathSpec {
    int m = 2;
    int N = 4;
    int sigma = -1;
    std::vector<std::vector<double>> vertices;  // >= 2, each length m

    void validate() const;
    [[nodiscard]] std::vector<double> data_at(double s) const;  // s in [0, segments]
    [[nodiscard]] ProblemSpec spec_at(double s) const;
    [[nodiscard]] int segments() const { return static_cast<int>(vertices.size()) - 1; }
};

/// The default sigma = -1 polyline connecting the small-volume branch
/// (-b,0,..,0,-c0) to the large-volume branch (-b,0,..,0,+c0) through Sigma_0.
PathSpec default_path(int m, double b_hi = 16.0);

struct ShootResult {
    std::vector<double> found_data;
    double achieved_volume = 0.0;
    double target_volume = 0.0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int evaluations = 0;
    std::vector<std::pair<double, double>> history;  // (path parameter, volume)
};

std::string shoot_result_json(const ShootResult& res);

class BracketingError : public std::runtime_error {
public:
    BracketingError(std::string msg, ScanTable table)
        : std::runtime_error(std::move(msg)), table_(std::move(table)) {}
    [[nodiscard]] const ScanTable& table() const { return table_; }

private:
    ScanTable table_;
};

/// Locate initial data on the path whose solution has the target volume,
/// within tol relative.  The default path auto-extends its end vertices by
/// doubling b until the scanned volumes straddle the target.
ShootResult solve_for_volume(double target, const PathSpec& path, double tol = 1e-3,
                             const IntegratorControls& controls = {},
                             double vol_tol = kDefaultVolTol);

/// Overload using default_path(m); auto-extension enabled.
ShootResult solve_for_volume(double target, int m, double tol = 1e-3,
                             const IntegratorControls& controls = {},
                             double vol_tol = kDefaultVolTol);

/// Theorem-1.4-style prescription: bisect alpha > 0 in the decreasing family
///   Lap^{m-1}u(0) = Lap^{m-1}u0(0) - alpha
/// for a target in (0, V0).  Throws std::domain_error when target >= V0.
ShootResult alpha_family(const ProblemSpec& u0, double target, double tol = 1e-3,
                         const IntegratorControls& controls = {},
                         double vol_tol = kDefaultVolTol);

struct ThresholdResult {
    double bracket_lo = 0.0;  // last beta_{m-1} whose solution reached r_max
    double bracket_hi = 0.0;  // first beta_{m-1} whose solution blew up
    double mid = 0.0;
    double width = 0.0;
    double r_max_proxy = 0.0;  // "global" means GlobalToRmax at this radius
    int evaluations = 0;
};

std::string threshold_result_json(const ThresholdResult& res);

/// Bisect beta_{m-1} between global existence and blow-up for sigma = +1 with
/// fixed a_0..a_{m-2}.  Globality is proxied by reaching r_max_proxy; the true
/// threshold may differ, hence the bracket is reported rather than a point.
ThresholdResult threshold_finder(int m, const std::vector<double>& a_prefix,
                                 double resolution = 0.05, double r_max_proxy = 1e3,
                                 const IntegratorControls& controls = {});

}  // namespace qcurv
