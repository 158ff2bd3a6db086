#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "qcurv/poly.hpp"
#include "qcurv/radial.hpp"

using namespace qcurv;

namespace {

IntegratorControls tight_controls(double r_max) {
    IntegratorControls c;
    c.rel_tol = 1e-12;
    c.abs_tol = 1e-14;
    c.r_max = r_max;
    return c;
}

}  // namespace

TEST_CASE("reduce_rhs at the origin uses the f/N limit") {
    ProblemSpec spec{2, 4, -1, {-3.0, 5.0}};
    RadialState s{0.0, {-3.0, 5.0}, {0.0, 0.0}};
    const auto dy = reduce_rhs(s, spec);
    REQUIRE(dy.size() == 4);
    CHECK(dy[0] == 0.0);
    CHECK(dy[1] == 0.0);
    CHECK(dy[2] == doctest::Approx(5.0 / 4.0).epsilon(1e-15));
    CHECK(dy[3] == doctest::Approx(-std::exp(-3.0) / 4.0).epsilon(1e-15));
}

TEST_CASE("reduce_rhs away from the origin by direct substitution") {
    ProblemSpec spec{2, 4, -1, {0.0, 0.0}};
    RadialState s{1.0, {0.0, 0.0}, {1.0, 0.0}};
    const auto dy = reduce_rhs(s, spec);
    CHECK(dy[0] == 1.0);
    CHECK(dy[1] == 0.0);
    CHECK(dy[2] == doctest::Approx(-3.0).epsilon(1e-15));
    CHECK(dy[3] == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("reduce_rhs matches a finite-difference of the dense output (m=3)") {
    ProblemSpec spec{3, 6, -1, {0.5, -0.3, 2.0}};
    const Trajectory traj = integrate(spec, tight_controls(2.0));
    REQUIRE(traj.outcome.kind == OutcomeKind::GlobalToRmax);

    const double r = 0.7, h = 1e-4;
    const RadialState s = traj.state_at(r);
    const auto dy = reduce_rhs(s, spec);

    std::vector<double> yp(6), ym(6);
    traj.eval(r + h, yp);
    traj.eval(r - h, ym);
    for (int c = 0; c < 6; ++c) {
        const double fd = (yp[static_cast<std::size_t>(c)] - ym[static_cast<std::size_t>(c)]) /
                          (2.0 * h);
        CHECK(dy[static_cast<std::size_t>(c)] ==
              doctest::Approx(fd).epsilon(1e-6).scale(std::max(1.0, std::abs(fd))));
    }
}

TEST_CASE("spherical closed-form oracle (m=2, sigma=+1)") {
    const ProblemSpec spec = spherical_spec(2);
    const Trajectory traj = integrate(spec, tight_controls(100.0));
    REQUIRE(traj.outcome.kind == OutcomeKind::GlobalToRmax);
    CHECK(traj.u(1.0) == doctest::Approx(std::log(24.0)).epsilon(1e-10));
    for (double r : {0.5, 1.0, 2.0, 10.0, 50.0}) {
        CHECK(std::abs(traj.u(r) - spherical_solution(2, r)) < 1e-8);
    }
}

TEST_CASE("sigma=-1 never blows up and w_{m-1} decreases") {
    for (const ProblemSpec& spec :
         {ProblemSpec{2, 4, -1, {0.0, 0.0}}, ProblemSpec{2, 4, -1, {3.0, 7.0}},
          ProblemSpec{3, 6, -1, {-5.0, 0.0, 384.0}}}) {
        const Trajectory traj = integrate(spec, tight_controls(50.0));
        CHECK(traj.outcome.kind == OutcomeKind::GlobalToRmax);
        const int m = spec.m;
        for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
            CHECK(traj.node_w(i + 1, m - 1) <= traj.node_w(i, m - 1) + 1e-12);
        }
    }
}

TEST_CASE("sigma=-1 barrier u <= Phi along the trajectory") {
    ProblemSpec spec{2, 4, -1, {-10.0, 8.0}};
    IntegratorControls ctl = tight_controls(30.0);
    const Trajectory traj = integrate(spec, ctl);
    const EvenPolynomial phi = matching_polynomial(spec);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double r = traj.node_radii()[i];
        const double tol = 10.0 * (ctl.abs_tol + ctl.rel_tol * std::abs(traj.node_w(i, 0)));
        CHECK(traj.node_w(i, 0) <= phi.eval(r) + tol);
    }
}

TEST_CASE("blow-up for sigma=+1 with a=(0,0)") {
    ProblemSpec spec{2, 4, +1, {0.0, 0.0}};
    IntegratorControls ctl;
    ctl.r_max = 100.0;
    const Trajectory traj = integrate(spec, ctl);
    REQUIRE(traj.outcome.kind == OutcomeKind::BlowUp);
    CHECK(traj.outcome.r > 0.0);
    CHECK(traj.outcome.r < 100.0);
    // final node sits at the u_blow crossing
    CHECK(traj.node_w(traj.size() - 1, 0) == doctest::Approx(ctl.u_blow).epsilon(1e-6));
}

TEST_CASE("integration is bit-identical across calls") {
    ProblemSpec spec{3, 6, -1, {0.2, 0.0, -1.0}};
    IntegratorControls ctl;
    ctl.r_max = 10.0;
    const Trajectory t1 = integrate(spec, ctl);
    const Trajectory t2 = integrate(spec, ctl);
    REQUIRE(t1.size() == t2.size());
    CHECK(std::memcmp(t1.node_y_.data(), t2.node_y_.data(),
                      t1.node_y_.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(t1.node_r_.data(), t2.node_r_.data(),
                      t1.node_r_.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(t1.dense_.data(), t2.dense_.data(),
                      t1.dense_.size() * sizeof(double)) == 0);
}

TEST_CASE("dense output matches nodes at interval endpoints") {
    ProblemSpec spec{2, 4, -1, {-1.0, 2.0}};
    const Trajectory traj = integrate(spec, tight_controls(10.0));
    std::vector<double> y(4);
    for (std::size_t i = 0; i < traj.size(); i += std::max<std::size_t>(1, traj.size() / 17)) {
        traj.eval(traj.node_radii()[i], y);
        for (int c = 0; c < 4; ++c) {
            CHECK(y[static_cast<std::size_t>(c)] ==
                  doctest::Approx(traj.node_component(i, c)).epsilon(1e-12));
        }
    }
}

TEST_CASE("r=0 regularity: numerical second derivative equals f_k/N") {
    ProblemSpec spec{2, 4, -1, {-3.0, 5.0}};
    const Trajectory traj = integrate(spec, tight_controls(5.0));
    const auto dy0 = reduce_rhs(traj.node(0), spec);
    const double h = 1e-3;
    for (int k = 0; k < 2; ++k) {
        // Richardson-extrapolated even-symmetric second difference
        const double w0 = traj.node_w(0, k);
        const double dh = 2.0 * (traj.eval_component(h, k) - w0) / (h * h);
        const double dh2 = 2.0 * (traj.eval_component(h / 2.0, k) - w0) / (h * h / 4.0);
        const double second = (4.0 * dh2 - dh) / 3.0;
        const double expected = dy0[static_cast<std::size_t>(2 + k)];
        CHECK(second == doctest::Approx(expected).epsilon(1e-7).scale(
                            std::max(1.0, std::abs(expected))));
    }
}

TEST_CASE("trajectory CSV schema") {
    ProblemSpec spec{2, 4, -1, {0.0, 0.0}};
    IntegratorControls ctl;
    ctl.r_max = 1.0;
    const Trajectory traj = integrate(spec, ctl);
    std::ostringstream os;
    write_trajectory_csv(traj, os);
    std::istringstream is(os.str());
    std::string header;
    std::getline(is, header);
    CHECK(header == "r,w0,w1,dw0,dw1,source");
    std::string first_row;
    std::getline(is, first_row);
    CHECK(first_row == "0,0,0,0,0,-1");
    std::size_t rows = 1;
    std::string line;
    while (std::getline(is, line))
        if (!line.empty()) ++rows;
    CHECK(rows == traj.size());
}

TEST_CASE("first_crossing locates the first zero of u") {
    // plus_c0 branch with b = 25: R0 = 5 and r0 in (5, 6)
    ProblemSpec spec{2, 4, -1, {-25.0, 8.0}};
    const Trajectory traj = integrate(spec, tight_controls(20.0));
    const auto r0 = first_crossing(traj, 0, 0.0);
    REQUIRE(r0.has_value());
    CHECK(*r0 > 5.0);
    CHECK(*r0 < 6.0);
    // b = 0 would mean u(0) = 0 already
    ProblemSpec at_zero{2, 4, -1, {0.0, 8.0}};
    const Trajectory tz = integrate(at_zero, tight_controls(1.0));
    const auto rz = first_crossing(tz, 0, 0.0);
    REQUIRE(rz.has_value());
    CHECK(*rz == 0.0);
}

TEST_CASE("invalid controls are rejected") {
    ProblemSpec spec{2, 4, -1, {0.0, 0.0}};
    IntegratorControls bad;
    bad.h_min = 1.0;  // violates h_min < h_init
    CHECK_THROWS_AS(integrate(spec, bad), std::invalid_argument);
    IntegratorControls bad2;
    bad2.rel_tol = -1.0;
    CHECK_THROWS_AS(integrate(spec, bad2), std::invalid_argument);
}
