#pragma once

#include <array>

#include "ellorb/elliptic.hpp"

namespace ellorb {

// A quartic together with a base point from which well-times are measured.
struct WellTimeMap {
    QuarticCoeffs quartic;
    double a = 0.0;          // base point (lower limit of the well-time)
    bool is_root = false;    // f(a) ~ 0
    int sqrt_sign = -1;      // sign of sqrt(f(a)) in the closed forms;
                             // default gives du/dz > 0 at z = 0+
    WeierstrassContext ctx;  // lattice context of the quartic invariants

    static WellTimeMap create(const QuarticCoeffs& f, double a,
                              int sqrt_sign = -1);
};

// z(u) = int_a^u dt/sqrt(f(t)), the reference oracle for the closed forms.
// Endpoint square-root singularities are removed by substitution.
double well_time(double u, const WellTimeMap& map);

// Inversion when a is a root of f:
// u(z) = a + f'(a) / (4 (wp(z) - f''(a)/24)).
double u_from_z_root(double z, const WellTimeMap& map);

// General base point: the Biermann-Weierstrass closed form
//   u = a + [sqrt(f(a)) wp' + (wp - f''/24) f'/2 + f f'''/24]
//         / [2 (wp - f''/24)^2 - f f''''/48],
// and Mordell's equivalent rearrangement.  Both throw ZeroDenominator when
// their denominator vanishes within tolerance.
double u_from_z_biermann(double z, const WellTimeMap& map);
double u_from_z_mordell(double z, const WellTimeMap& map);

// Dispatcher: Biermann first, Mordell on denominator failure.
double u_from_z(double z, const WellTimeMap& map);

// Auxiliary integration variable of the closed-form derivation:
// s(t) = (F(t) + sqrt(f(t)) sqrt(f(a))) / (2 (t-a)^2), with F the symmetric
// quadri-quadric truncation of f about a.  Satisfies s(t) = wp(z(t)).
double s_substitution(double t, const WellTimeMap& map);

// The derivative factor G with (t-a)^6 G^2 = (t-a)^6 (4s^3 - g2 s - g3);
// exposed for the numerical verification of that identity.
double g_substitution(double t, const WellTimeMap& map);

// Fractional-linear map s(x) built from four distinct real roots
// (alpha, beta, gamma, delta) of the quartic with leading binomial
// coefficient a0, together with the factorised differences s - e_i.
struct RussellMap {
    double s = 0;
    std::array<double, 3> s_minus_e;
};
RussellMap russell_root_map(double x, const std::array<double, 4>& roots,
                            double a0);

// Transform the binary quartic under x = l X + m Y, y = l' X + m' Y and
// return (G2/g2, G3/g3); unimodular maps give (1, 1), determinant D gives
// (D^4, D^6).
std::pair<double, double> flt_invariance_check(const QuarticCoeffs& q, double l,
                                               double m, double lp, double mp);

// Transformed binomial coefficients themselves (for the Copson reduction
// tests: A0 = A2 = 0 for the root-based unimodular substitution).
std::array<double, 5> flt_transform(const QuarticCoeffs& q, double l, double m,
                                    double lp, double mp);

}  // namespace ellorb
