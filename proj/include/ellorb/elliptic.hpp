#pragma once

#include <array>
#include <complex>
#include <vector>

namespace ellorb {

using cplx = std::complex<double>;

// Binary-quartic coefficients in the binomial normalisation
//   f(x) = a0 x^4 + 4 a1 x^3 + 6 a2 x^2 + 4 a3 x + a4.
struct QuarticCoeffs {
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0, a4 = 0;

    double operator()(double x) const;
    cplx operator()(cplx x) const;
    // k-th derivative, k in 0..4.
    double deriv(double x, int k) const;
    // Plain power-basis coefficients {a4, 4a3, 6a2, 4a1, a0}, ascending.
    std::array<double, 5> power_basis() const;
};

struct QuarticInvariants {
    double g2 = 0;     // a0 a4 - 4 a1 a3 + 3 a2^2
    double g3 = 0;     // det [[a0,a1,a2],[a1,a2,a3],[a2,a3,a4]]
    double delta = 0;  // g2^3 - 27 g3^2
};

QuarticInvariants quartic_invariants(const QuarticCoeffs& f);

// Roots of the modular cubic 4 t^3 - g2 t - g3, sorted by descending real
// part.  With delta > 0 all three are real (e1 > e2 > e3); with delta < 0 one
// is real and two form a conjugate pair.  Throws DegenerateCubic when two
// roots coincide within tolerance.
std::array<cplx, 3> cubic_roots(double g2, double g3);

// Everything needed to evaluate the lattice functions of (g2, g3).
struct WeierstrassContext {
    double g2 = 0, g3 = 0, delta = 0;
    std::array<cplx, 3> e;   // roots of the modular cubic, desc. real part
    double e_top = 0;        // largest real root (branch point of wp on R)
    double omega = 0;        // real half-period
    double omega_im = 0;     // magnitude of the conjugate period direction
    double lattice_min = 0;  // min distance from 0 to a nonzero lattice point
    std::vector<double> c;   // Laurent coefficients c_k (c[0], c[1] unused)

    static WeierstrassContext create(double g2, double g3);
};

// Real half-period: integral of 1/sqrt(4t^3 - g2 t - g3) from the largest
// real root to infinity.
double half_period(double g2, double g3);

// Lattice functions at complex argument.  All use the Laurent series inside
// the safe disc followed by duplication-identity ascent; exact identities,
// valid for any z off the lattice.
cplx wp(cplx z, const WeierstrassContext& ctx);
cplx wp_prime(cplx z, const WeierstrassContext& ctx);
cplx zeta(cplx z, const WeierstrassContext& ctx);
cplx sigma(cplx z, const WeierstrassContext& ctx);

// Inverse on the real branch: for s >= e_top returns z in (0, omega] with
// wp(z) = s, computed as the integral of 1/sqrt(4t^3-g2 t-g3) from s to
// infinity.  Throws OutOfBranch for s < e_top.
double wp_inverse(double s, const WeierstrassContext& ctx);

// Inverse for real s below the branch point.  The preimage lies on the
// boundary of the period rectangle, where wp is real: z = omega + i y for s
// in [e2, e1], z = x + i omega_im for s in [e3, e2] (rectangular lattice),
// or z = i y for s below those bands.  Resolved by bisection on the
// exactly-evaluated wp.
cplx wp_inverse_complex(double s, const WeierstrassContext& ctx);

// Incomplete Legendre integrals, modulus convention F(phi, k) =
// int_0^phi dt / sqrt(1 - k^2 sin^2 t).  Carlson symmetric forms.
double legendre_F(double phi, double k);
double legendre_E(double phi, double k);

// Complete integrals K(k), E(k).
double legendre_K(double k);
double legendre_Ecomp(double k);

}  // namespace ellorb
