#pragma once

#include <functional>

namespace ellorb {

// Adaptive Gauss-Kronrod (G7, K15) quadrature on a finite interval.
// Bisects until the local K15-G7 error estimate summed over the active
// subintervals is below abs_tol.  Throws ConvergenceError if the interval
// stack is exhausted without reaching the tolerance.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12, int max_depth = 48);

// Integral of f over [a, +inf) via the rational substitution
// t = a + u/(1-u), u in (0,1).
double integrate_to_inf(const std::function<double(double)>& f, double a,
                        double abs_tol = 1e-12);

// Integral of f over (-inf, b] via t = b - u/(1-u).
double integrate_from_minus_inf(const std::function<double(double)>& f,
                                double b, double abs_tol = 1e-12);

// The 1/sqrt(P) integrals below take the polynomial P by its ascending
// power-basis coefficients.  The substitution t = a + v^2 (or b - v^2)
// removes a simple endpoint zero; the shifted Taylor coefficients of P are
// used so the integrand is evaluated without cancellation at the root.

#include <vector>

// \int_a^inf dt / sqrt(P(t)), P > 0 on (a, inf), P(a) >= 0 (possibly a
// simple root).
double integrate_inv_sqrt_to_inf(const std::vector<double>& poly, double a,
                                 double abs_tol = 1e-12);

// \int_{-inf}^{b} dt / sqrt(P(t)), P > 0 on (-inf, b), P(b) >= 0.
double integrate_inv_sqrt_from_minus_inf(const std::vector<double>& poly,
                                         double b, double abs_tol = 1e-12);

// \int_a^b dt / sqrt(P(t)), P > 0 inside, simple zeros allowed at both ends.
double integrate_inv_sqrt(const std::vector<double>& poly, double a, double b,
                          double abs_tol = 1e-12);

// Taylor coefficients of the polynomial about x = a (synthetic division):
// returns s with P(a + h) = sum_k s[k] h^k.
std::vector<double> poly_shift(const std::vector<double>& poly, double a);

}  // namespace ellorb
