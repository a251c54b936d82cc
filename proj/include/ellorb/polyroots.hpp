#pragma once

#include <array>
#include <complex>
#include <vector>

namespace ellorb {

// All roots of c[0] + c[1] x + ... + c[n] x^n via the companion-matrix
// eigenvalue problem.  Leading zero coefficients are trimmed.
std::vector<std::complex<double>> companion_roots(
    const std::vector<double>& coeffs_ascending);

// Real roots only (imaginary part below tol relative to coefficient scale),
// sorted ascending.
std::vector<double> companion_real_roots(
    const std::vector<double>& coeffs_ascending, double imag_tol = 1e-9);

// Roots of the depressed cubic t^3 + p t + q (closed form: trigonometric for
// three real roots, Cardano otherwise).
std::array<std::complex<double>, 3> depressed_cubic_roots(double p, double q);

// Roots of a x^3 + b x^2 + c x + d, a != 0.
std::array<std::complex<double>, 3> cubic_roots_general(double a, double b,
                                                        double c, double d);

}  // namespace ellorb
