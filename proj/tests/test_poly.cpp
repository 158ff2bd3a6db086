#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <numbers>

#include "qcurv/poly.hpp"

using namespace qcurv;

TEST_CASE("laplacian of even polynomials") {
    SUBCASE("r^2 in N=4 gives the constant 8") {
        EvenPolynomial p{{0.0, 1.0}};
        const auto lp = laplacian_of_even_poly(p, 4);
        REQUIRE(lp.coeffs.size() == 1);
        CHECK(lp.coeffs[0] == 8.0);
    }
    SUBCASE("constant maps to zero") {
        EvenPolynomial p{{3.5}};
        const auto lp = laplacian_of_even_poly(p, 7);
        CHECK(lp.degree() == -1);
        CHECK(lp.eval(2.0) == 0.0);
    }
    SUBCASE("r^4 in N=6 gives 32 r^2") {
        EvenPolynomial p{{0.0, 0.0, 1.0}};
        const auto lp = laplacian_of_even_poly(p, 6);
        REQUIRE(lp.coeffs.size() == 2);
        CHECK(lp.coeffs[0] == 0.0);
        CHECK(lp.coeffs[1] == 32.0);
    }
}

TEST_CASE("matching polynomial reproduces the initial data") {
    SUBCASE("m=2, a=(-b, 8) gives r^2 - b") {
        ProblemSpec spec{2, 4, -1, {-10.0, 8.0}};
        const auto phi = matching_polynomial(spec);
        CHECK(phi.coeffs[0] == -10.0);
        CHECK(phi.coeffs[1] == 1.0);
    }
    SUBCASE("m=3, a=(-b, 0, 384) gives r^4 - b") {
        ProblemSpec spec{3, 6, -1, {-7.0, 0.0, 384.0}};
        const auto phi = matching_polynomial(spec);
        CHECK(phi.coeffs[0] == -7.0);
        CHECK(phi.coeffs[1] == 0.0);
        CHECK(phi.coeffs[2] == 1.0);
    }
    SUBCASE("constant data gives the constant polynomial") {
        ProblemSpec spec{3, 6, -1, {4.25, 0.0, 0.0}};
        const auto phi = matching_polynomial(spec);
        CHECK(phi.eval(3.0) == 4.25);
        CHECK(phi.degree() == 0);
    }
    SUBCASE("Lap^i Phi(0) = a_i by iterated laplacian, all i") {
        ProblemSpec spec{4, 8, -1, {-1.5, 2.0, -3.0, 46080.0}};
        EvenPolynomial phi = matching_polynomial(spec);
        for (int i = 0; i < spec.m; ++i) {
            CHECK(phi.eval(0.0) == doctest::Approx(spec.a[static_cast<std::size_t>(i)])
                                       .epsilon(1e-14));
            phi = laplacian_of_even_poly(phi, spec.N);
        }
    }
}

TEST_CASE("c0 closed form") {
    CHECK(c0(2) == 8.0);
    CHECK(c0(3) == 384.0);
    CHECK(c0(4) == 46080.0);
}

TEST_CASE("c0 equals the (m-1)-fold laplacian of r^{2m-2} at N=2m, exactly") {
    for (int m = 2; m <= 8; ++m) {
        EvenPolynomial p;
        p.coeffs.assign(static_cast<std::size_t>(m), 0.0);
        p.coeffs.back() = 1.0;  // r^{2m-2}
        for (int i = 0; i < m - 1; ++i) p = laplacian_of_even_poly(p, 2 * m);
        REQUIRE(p.degree() == 0);
        CHECK(p.coeffs[0] == c0(m));

        // independent integer oracle
        std::uint64_t prod = 1;
        for (int k = 1; k <= m - 1; ++k)
            prod *= 4ull * static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(m - 1 + k);
        CHECK(p.coeffs[0] == static_cast<double>(prod));
    }
}

TEST_CASE("sphere areas") {
    CHECK(sphere_area(2) == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-15));
    CHECK(sphere_area(4) ==
          doctest::Approx(2.0 * std::numbers::pi * std::numbers::pi).epsilon(1e-14));
    CHECK(sphere_area(6) == doctest::Approx(std::pow(std::numbers::pi, 3)).epsilon(1e-14));
}

TEST_CASE("spherical data") {
    SUBCASE("m=2 closed form data") {
        const ProblemSpec spec = spherical_spec(2);
        CHECK(spec.sigma == +1);
        CHECK(spec.N == 4);
        CHECK(spec.a[0] == doctest::Approx(std::log(384.0)).epsilon(1e-15));
        CHECK(spec.a[1] == doctest::Approx(-32.0).epsilon(1e-15));
    }
    SUBCASE("odd m is rejected") {
        CHECK_THROWS_AS(spherical_spec(3), std::invalid_argument);
    }
    SUBCASE("closed-form value and volume") {
        CHECK(spherical_solution(2, 1.0) == doctest::Approx(std::log(24.0)).epsilon(1e-15));
        const double pi2 = std::numbers::pi * std::numbers::pi;
        CHECK(spherical_volume(2) == doctest::Approx(64.0 * pi2).epsilon(1e-13));
    }
}

TEST_CASE("spec validation") {
    ProblemSpec bad{1, 4, -1, {0.0}};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    ProblemSpec bad2{2, 4, 0, {0.0, 0.0}};
    CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
    ProblemSpec bad3{2, 4, -1, {0.0}};
    CHECK_THROWS_AS(bad3.validate(), std::invalid_argument);
}
