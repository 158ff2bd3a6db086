#pragma once

// Radial reduction and adaptive integration of the polyharmonic IVP
//
//   Lap^m u = sigma * e^u  in R^N,   u radial,
//   Lap^k u(0) = a_k,  (Lap^k u)'(0) = 0,   k = 0..m-1,
//
// written as the first-order system in w_k = Lap^k u and its radial
// derivative dw_k.  The radial Laplacian is Lap v = v'' + (N-1) v'/r,
// with the r -> 0 limit v''(0) = f(0)/N when Lap v = f.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace qcurv {

struct ProblemSpec {
    int m = 2;               // order of the polyharmonic operator, >= 2
    int N = 4;               // space dimension, >= 3 (conformal case N = 2m)
    int sigma = -1;          // sign of the source: Lap^m u = sigma * e^u
    std::vector<double> a;   // initial data a_k = Lap^k u(0), length m

    // Throws std::invalid_argument on violated invariants.
    void validate() const;
};

struct IntegratorControls {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double h_init = 1e-3;
    double h_min = 1e-14;
    double h_max = 0.5;
    double u_blow = 50.0;        // blow-up threshold on w0
    double u_underflow = -745.0; // below this the source is exactly 0
    double r_max = 50.0;

    void validate() const;
};

struct RadialState {
    double r = 0.0;
    std::vector<double> w;   // w_k = Lap^k u at r
    std::vector<double> dw;  // dw_k = (Lap^k u)' at r
};

enum class OutcomeKind { GlobalToRmax, BlowUp, StepUnderflow };

struct Outcome {
    OutcomeKind kind = OutcomeKind::GlobalToRmax;
    double r = 0.0;  // rMax reached, blow-up radius r*, or last valid radius
};

const char* to_string(OutcomeKind k);

/// Dense-output trajectory of one IVP integration.  Nodes are every accepted
/// step; between adjacent nodes a 4th-order interpolant is available.
/// The flat state vector is y = (w_0..w_{m-1}, dw_0..dw_{m-1}), length 2m.
class Trajectory {
public:
    ProblemSpec spec;
    IntegratorControls controls;
    Outcome outcome;

    [[nodiscard]] std::size_t size() const { return node_r_.size(); }
    [[nodiscard]] int dim() const { return 2 * spec.m; }
    [[nodiscard]] double r_first() const { return node_r_.front(); }
    [[nodiscard]] double r_last() const { return node_r_.back(); }
    [[nodiscard]] const std::vector<double>& node_radii() const { return node_r_; }

    [[nodiscard]] double node_component(std::size_t i, int comp) const {
        return node_y_[i * dim() + comp];
    }
    [[nodiscard]] double node_w(std::size_t i, int k) const { return node_component(i, k); }
    [[nodiscard]] double node_dw(std::size_t i, int k) const {
        return node_component(i, spec.m + k);
    }
    [[nodiscard]] RadialState node(std::size_t i) const;

    /// Dense-output evaluation at radius r in [0, r_last()].
    void eval(double r, std::span<double> y_out) const;
    [[nodiscard]] double eval_component(double r, int comp) const;
    [[nodiscard]] double u(double r) const { return eval_component(r, 0); }
    [[nodiscard]] RadialState state_at(double r) const;

    // Raw storage, used by the integrator and by bit-identity tests.
    std::vector<double> node_r_;   // strictly increasing, node_r_[0] = 0
    std::vector<double> node_y_;   // size() * 2m
    std::vector<double> dense_;    // (size()-1) * 4 * 2m interpolation blocks
    std::vector<double> dense_h_;  // integration step of each interval

private:
    [[nodiscard]] std::size_t interval_of(double r) const;
};

/// Right-hand side of the first-order radial system at one state.
/// Returns (dw_0..dw_{m-1}, ddw_0..ddw_{m-1}) with
///   ddw_k = f_k - (N-1)/r * dw_k,  f_k = w_{k+1} (k < m-1),  f_{m-1} = sigma e^{w_0},
/// and the r -> 0 limit ddw_k = f_k / N.
std::vector<double> reduce_rhs(const RadialState& state, const ProblemSpec& spec);

/// Integrate the IVP from r = 0.  Pure and deterministic: identical inputs
/// produce bit-identical trajectories.
Trajectory integrate(const ProblemSpec& spec, const IntegratorControls& controls = {});

/// First radius > r_from where component comp crosses the given level,
/// located on dense output by bisection.  Empty if no crossing.
std::optional<double> first_crossing(const Trajectory& traj, int comp, double level,
                                     double r_from = 0.0);

/// CSV export: header r,w0,..,w{m-1},dw0,..,dw{m-1},source with 17
/// significant digits, source = sigma * e^{w0}.
void write_trajectory_csv(const Trajectory& traj, std::ostream& os);

}  // namespace qcurv
