#pragma once

#include <utility>
#include <vector>

#include "ellorb/elliptic.hpp"

namespace ellorb {

// Parameters of the charged-dipole central-force problem: reduced radial
// dynamics rdot^2 = f(1/r) with f quartic.
struct KLMNParams {
    double mu = 1.0;  // gravitational mass parameter, > 0
    double B = 0.0;   // magnetic dipole strength
    double C = 1.0;   // constant of motion r^2 thetadot + B/r
    double E = -0.1;  // total energy
};

// f(u) = 2(E + mu u - u^2/2 (C - B u)^2), u = 1/r.
double f_radial(double u, const KLMNParams& p);

// Binomial-normalised coefficients of f.
QuarticCoeffs as_quartic(const KLMNParams& p);

// Effective potential V_eff(r) = E - f(1/r)/2 (independent of E).
double v_eff(double r, const KLMNParams& p);

enum class WellCase { OneWell, TwoWell, CriticalRepeated, Escape };
enum class CriticalKind { Min, Max };

struct WellClassification {
    WellCase case_id = WellCase::OneWell;
    // (radius, min/max), ascending radius.
    std::vector<std::pair<double, CriticalKind>> critical_radii;
    // (u_lo, u_hi) with f > 0 on the interior, for the given E.
    std::vector<std::pair<double, double>> accessible_intervals;
};

WellClassification classify_wells(const KLMNParams& p);

// Closed-form critical radii for the three-real-root regime
// (C^6 > 108 mu^2 B^2): reciprocals of
// u_k = C/(2B) + |C|/(sqrt(3)|B|) cos(1/3 arccos(6 sqrt(3) mu |B|/|C|^3)
//        + 2 pi k/3).
// Sign conventions are validated against the cubic-root oracle in the
// tests, not trusted.
std::vector<double> critical_radii_trig_three(const KLMNParams& p);

// Closed-form single critical radius for the one-real-root regime: same
// expression with the cos branch analytically continued through cosh when
// the arccos argument exceeds 1.
double critical_radius_trig_one(const KLMNParams& p);

// Positive real roots of the resolvent cubic
// l^3 - (C^2/B^2) l^2 + (4/B^3)(mu C + 2 B E) l - 4 mu^2/B^4 = 0, ascending.
std::vector<double> lambda_resolvent(const KLMNParams& p);

// The four radical-formula roots of f(u) = 0 for a given resolvent value:
// u = (1/2B){C + B sqrt(l) +- sqrt(C^2 - B^2 l + 4 mu/sqrt(l))} and
// u = (1/2B){C - B sqrt(l) +- sqrt(C^2 - B^2 l - 4 mu/sqrt(l))}.
std::array<cplx, 4> quartic_roots_lambda(const KLMNParams& p, double lambda);

// Small-|B/C| approximate quartic u'^2 = Q_B(u) in binomial coefficients.
QuarticCoeffs qb_quartic(const KLMNParams& p);

// Leading Puiseux pair u1 +- sqrt(-2E/Q_B''(u1)) around an unstable circular
// orbit u1 (double root of Q_B at E=0).
std::pair<double, double> puiseux_escape_roots(const KLMNParams& p, double u1);

// Legendre reduction of int_u^a dt/sqrt((a-t)(t-b)(t-c)(t-d)), four real
// roots a > b > c > d, u in [b, a].
struct LegendreFourReal {
    double lambda_angle = 0;
    double k = 0;
    double value = 0;
};
LegendreFourReal legendre_theta_four_real(double a, double b, double c,
                                          double d, double u);

// Legendre reduction of int_b^u dt/sqrt((a-t)(t-b)((t-m)^2+n^2)), two real
// roots a > b plus a complex pair m +- i n, u in [b, a].
struct LegendreTwoReal {
    double phi = 0;
    double h = 0;
    double g = 0;
    double value = 0;
};
LegendreTwoReal legendre_theta_two_real(double a, double b, double m, double n,
                                        double u);

}  // namespace ellorb
