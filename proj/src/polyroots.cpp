#include "ellorb/polyroots.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "ellorb/errors.hpp"

namespace ellorb {

std::vector<std::complex<double>> companion_roots(
    const std::vector<double>& coeffs) {
    std::vector<double> c = coeffs;
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
    const int n = static_cast<int>(c.size()) - 1;
    if (n < 1) throw DomainError("companion_roots: polynomial is constant");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) m(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) m(i, n - 1) = -c[i] / c[n];
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
    std::vector<std::complex<double>> roots(n);
    for (int i = 0; i < n; ++i) roots[i] = solver.eigenvalues()[i];
    return roots;
}

std::vector<double> companion_real_roots(const std::vector<double>& coeffs,
                                         double imag_tol) {
    double scale = 0.0;
    for (double c : coeffs) scale = std::max(scale, std::abs(c));
    std::vector<double> out;
    for (const auto& r : companion_roots(coeffs)) {
        if (std::abs(r.imag()) <= imag_tol * std::max(1.0, std::abs(r.real())))
            out.push_back(r.real());
    }
    std::sort(out.begin(), out.end());
    (void)scale;
    return out;
}

std::array<std::complex<double>, 3> depressed_cubic_roots(double p, double q) {
    using C = std::complex<double>;
    const double disc = -4.0 * p * p * p - 27.0 * q * q;
    std::array<C, 3> roots;
    if (disc > 0.0) {
        // Three distinct real roots: Vieta's trigonometric form.
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg =
            std::clamp(3.0 * q / (p * m), -1.0, 1.0);  // = cos(3 phi)
        const double phi = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k)
            roots[k] = m * std::cos(phi - 2.0 * M_PI * k / 3.0);
    } else {
        // One real root (or repeated): Cardano with complex arithmetic.
        const C s = std::sqrt(C(q * q / 4.0 + p * p * p / 27.0));
        C u = std::pow(-q / 2.0 + s, 1.0 / 3.0);
        if (std::abs(u) < 1e-300) u = std::pow(-q / 2.0 - s, 1.0 / 3.0);
        const C w(-0.5, std::sqrt(3.0) / 2.0);
        for (int k = 0; k < 3; ++k) {
            const C uk = u * std::pow(w, k);
            roots[k] = uk - p / (3.0 * uk);
        }
    }
    // Newton polish removes the last few ulps of Cardano cancellation.
    for (auto& r : roots) {
        for (int it = 0; it < 3; ++it) {
            const C f = (r * r + p) * r + q;
            const C df = 3.0 * r * r + p;
            if (std::abs(df) < 1e-300) break;
            r -= f / df;
        }
    }
    return roots;
}

std::array<std::complex<double>, 3> cubic_roots_general(double a, double b,
                                                        double c, double d) {
    if (a == 0.0) throw DomainError("cubic_roots_general: leading coeff zero");
    const double shift = b / (3.0 * a);
    const double p = c / a - b * b / (3.0 * a * a);
    const double q =
        2.0 * b * b * b / (27.0 * a * a * a) - b * c / (3.0 * a * a) + d / a;
    auto roots = depressed_cubic_roots(p, q);
    for (auto& r : roots) r -= shift;
    return roots;
}

}  // namespace ellorb
