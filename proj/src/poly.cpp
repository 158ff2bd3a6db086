#include "qcurv/poly.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qcurv {

double EvenPolynomial::eval(double r) const {
    // Horner in r^2
    const double r2 = r * r;
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * r2 + *it;
    return acc;
}

int EvenPolynomial::degree() const {
    for (int j = static_cast<int>(coeffs.size()) - 1; j >= 0; --j)
        if (coeffs[static_cast<std::size_t>(j)] != 0.0) return 2 * j;
    return -1;
}

EvenPolynomial laplacian_of_even_poly(const EvenPolynomial& p, int N) {
    if (N < 1) throw std::invalid_argument("laplacian_of_even_poly: N must be >= 1");
    EvenPolynomial out;
    if (p.coeffs.size() <= 1) {
        out.coeffs.assign(1, 0.0);
        return out;
    }
    out.coeffs.assign(p.coeffs.size() - 1, 0.0);
    for (std::size_t j = 1; j < p.coeffs.size(); ++j) {
        const double tj = 2.0 * static_cast<double>(j);
        out.coeffs[j - 1] = p.coeffs[j] * tj * (tj + N - 2);
    }
    return out;
}

EvenPolynomial matching_polynomial(const ProblemSpec& spec) {
    spec.validate();
    // Lap^i Phi(0) keeps only the r^{2i} coefficient:
    //   Lap^i (alpha_i r^{2i}) (0) = alpha_i * prod_{s=1}^{i} 2s (2s + N - 2),
    // so the system is diagonal in this basis.
    EvenPolynomial phi;
    phi.coeffs.assign(static_cast<std::size_t>(spec.m), 0.0);
    double factor = 1.0;
    for (int i = 0; i < spec.m; ++i) {
        if (i > 0) {
            const double ti = 2.0 * i;
            factor *= ti * (ti + spec.N - 2);
        }
        phi.coeffs[static_cast<std::size_t>(i)] = spec.a[static_cast<std::size_t>(i)] / factor;
    }
    return phi;
}

double c0(int m) {
    if (m < 2) throw std::invalid_argument("c0: m must be >= 2");
    double acc = 1.0;
    for (int k = 1; k <= m - 1; ++k) acc *= 4.0 * k * (m - 1 + k);
    return acc;
}

double sphere_area(int N) {
    if (N < 2) throw std::invalid_argument("sphere_area: N must be >= 2");
    const double half = 0.5 * N;
    return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

namespace {

double log_factorial(int n) {
    double acc = 0.0;
    for (int k = 2; k <= n; ++k) acc += std::log(static_cast<double>(k));
    return acc;
}

}  // namespace

ProblemSpec spherical_spec(int m) {
    if (m < 2 || m % 2 != 0)
        throw std::invalid_argument("spherical_spec: requires even m >= 2");
    const int N = 2 * m;
    ProblemSpec spec;
    spec.m = m;
    spec.N = N;
    spec.sigma = +1;
    spec.a.assign(static_cast<std::size_t>(m), 0.0);
    // u = 2m ln 2 + ln((2m)!) - 2m ln(1 + r^2); expanding the log gives
    // Lap^k u(0) = 2m (-1)^k P_k / k with P_k = Lap^k r^{2k}.
    spec.a[0] = log_factorial(2 * m) + 2.0 * m * std::numbers::ln2;
    double pk = 1.0;
    for (int k = 1; k < m; ++k) {
        const double tk = 2.0 * k;
        pk *= tk * (tk + N - 2);
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        spec.a[static_cast<std::size_t>(k)] = sign * 2.0 * m * pk / k;
    }
    return spec;
}

double spherical_solution(int m, double r) {
    return 2.0 * m * std::log(2.0 / (1.0 + r * r)) + log_factorial(2 * m);
}

double spherical_volume(int m) {
    double fact = 1.0;
    for (int k = 2; k <= 2 * m; ++k) fact *= k;
    return fact * sphere_area(2 * m + 1);
}

}  // namespace qcurv
