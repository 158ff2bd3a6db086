#pragma once

// Exact Laplacian calculus on even polynomials Phi(r) = sum_j alpha_j r^{2j}
// and the closed-form constants tied to the special initial-data branches.

#include <vector>

#include "qcurv/radial.hpp"

namespace qcurv {

struct EvenPolynomial {
    // coeffs[j] multiplies r^{2j}
    std::vector<double> coeffs;

    [[nodiscard]] double eval(double r) const;
    /// Degree in r (2 * highest nonzero index), -1 for the zero polynomial.
    [[nodiscard]] int degree() const;
};

/// Exact coefficient transform of the radial Laplacian in dimension N:
/// Lap r^{2j} = 2j (2j + N - 2) r^{2j-2}.
EvenPolynomial laplacian_of_even_poly(const EvenPolynomial& p, int N);

/// The even polynomial Phi with Lap^i Phi(0) = a_i for i = 0..m-1.
EvenPolynomial matching_polynomial(const ProblemSpec& spec);

/// c0(m) = 4^{m-1} * prod_{k=1}^{m-1} k (m-1+k); equals Lap^{m-1} r^{2m-2}
/// in dimension N = 2m.
double c0(int m);

/// Surface measure of the unit sphere S^{N-1} in R^N: 2 pi^{N/2} / Gamma(N/2).
double sphere_area(int N);

/// Initial data whose solution is the closed form
///   u(r) = 2m ln(2/(1+r^2)) + ln((2m)!)
/// solving Lap^m u = e^u in R^{2m}; requires m even.
ProblemSpec spherical_spec(int m);

/// The closed form above evaluated at radius r.
double spherical_solution(int m, double r);

/// Exact volume integral e^u over R^{2m} of the closed form:
/// (2m)! * area(S^{2m}).  For m = 2 this is 64 pi^2.
double spherical_volume(int m);

}  // namespace qcurv
