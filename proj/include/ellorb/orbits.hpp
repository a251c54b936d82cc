#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "ellorb/elliptic.hpp"
#include "ellorb/quartic_klmn.hpp"

namespace ellorb {

// One orbit sample: lattice parameter z, physical time t, polar coordinates.
struct OrbitSample {
    double z = 0, t = 0, r = 0, theta = 0;
};

struct OrbitTrace {
    std::vector<OrbitSample> samples;
    // max |rdot^2 - f(u)| over the samples, rdot from finite differences of
    // r(t); measures the self-consistency of the closed-form orbit.
    double invariant_drift = 0;
};

// Everything needed to evaluate the closed-form dipole orbit started at an
// apse u0 (a root of f).  Caches the lattice context and the two auxiliary
// lattice arguments:
//   z0    with wp(z0)    = f''(u0)/24                      (angle formula)
//   alpha with wp(alpha) = f''(u0)/24 - f'(u0)/(4 u0)      (time formula)
// Both usually lie off the real axis (on i y or omega + i y) for bounded
// motion; they are found by inverting wp on the lines where it is real.
class KLMNOrbitMap {
  public:
    KLMNParams params;
    double u0 = 0;
    QuarticCoeffs f;
    double f0p = 0, f0pp = 0;  // f'(u0), f''(u0)
    bool kepler = false;       // B == 0: angle is linear, u is harmonic in z
    double omega = 0;          // half period of the radial oscillation in z
    WeierstrassContext ctx;    // unused when kepler
    cplx z0, alpha;
    cplx pp_z0;                 // wp'(z0)
    cplx zeta_z0;               // zeta(z0)
    cplx wp_a, pp_a, zeta_a;    // wp(alpha), wp'(alpha), zeta(alpha)

    static KLMNOrbitMap create(const KLMNParams& p, double u0);

    // u(z) = u0 + f'(u0) / (4 (wp(z) - f''(u0)/24)); harmonic when kepler.
    double u_of_z(double z) const;

    // Polar angle theta(z) with theta(0) = 0, continuous in z:
    //   theta = (C - B u0) z
    //         - (B f'(u0)/(4 wp'(z0))) [2 zeta(z0) z
    //              + log(sigma(z - z0)/sigma(z + z0)) - log(-1)],
    // the sigma-log followed continuously from z = 0 (where the ratio is
    // exactly -1).  The result is real for bounded motion; a residual
    // imaginary part beyond tolerance raises BranchError.
    double theta_of_z(double z) const;

    // Physical time t(z) = int_0^z du'/u(z')^2 in closed form:
    //   t = (z - (f'0/(2 u0)) I1 + (f'0^2/(16 u0^2)) I2) / u0^2
    // with I1 = int dz/(wp - wp(alpha)) via the standard sigma/zeta
    // antiderivative and I2 = (1/wp'(alpha)) dI1/dalpha evaluated through
    // zeta(z - alpha) + zeta(z + alpha).
    double time_of_z(double z) const;

    // Same quantity with dI1/dalpha grouped term by term (coefficients of
    // z, of the sigma-log, and of the zeta pair collected separately);
    // cross-checks the compact form.
    double time_of_z_expanded(double z) const;
};

// Convenience wrappers building the map per call.
double klmn_theta_of_z(double z, const KLMNParams& p, double u0);
double physical_time(double z, const KLMNParams& p, double u0);
double physical_time_expanded(double z, const KLMNParams& p, double u0);

// Apse-to-apse angle theta(omega).
double klmn_delta_theta(const KLMNParams& p, double u0);

// If delta_theta/pi is (numerically) a rational p/q with q <= q_max, the
// orbit closes after q radial periods and p half-turns; detected through
// continued-fraction convergents with |x q - p| < 1e-9 q^2.
std::optional<std::pair<long, long>> klmn_periodicity(const KLMNParams& p,
                                                      double u0,
                                                      long q_max = 64);

// Character of the apsidal motion: the transverse velocity C - B u changes
// sign inside the well (loops), vanishes exactly at an apse (cusps), or
// keeps one sign (sinusoidal-like oscillation).
enum class MotionCharacter { Loopy, Cusped, Sinusoidal };
MotionCharacter motion_character(const KLMNParams& p, double u_lo,
                                 double u_hi, double tol = 1e-9);

// n + 1 samples of the orbit over z in [0, omega] (one apse-to-apse leg).
OrbitTrace klmn_orbit_trace(const KLMNParams& p, double u0, int n = 64);

// ---------------------------------------------------------------------------
// Planar two-centre problem, elliptic coordinates X + iY = c cosh(xi + i eta)
// with foci (+-c, 0), masses mu1 at (+c, 0) and mu2 at (-c, 0).

struct TwoCentreParams {
    double mu1 = 1.0;
    double mu2 = 0.0;
    double c = 1.0;      // half focal separation
    double gamma = 0.0;  // separation constant
    double E = -0.5;     // energy per unit mass
};

// Quartics governing the separated motion in the variables t = cosh(xi) and
// t = cos(eta):
//   Q_xi(t)  = (t^2 - 1) (E t^2 + ((mu1 + mu2)/c) t - gamma)
//   Q_eta(t) = (1 - t^2) (-E t^2 + ((mu1 - mu2)/c) t + gamma)
// so that (d cosh xi / d zeta)^2 = Q_xi(cosh xi) and likewise for cos eta,
// zeta the common separating parameter.
QuarticCoeffs two_centre_qxi(const TwoCentreParams& p);
QuarticCoeffs two_centre_qeta(const TwoCentreParams& p);

// Closed-form two-centre orbit started at a simultaneous apse: t0_xi a root
// of Q_xi, t0_eta a root of Q_eta.  Each coordinate is uniformised by its
// own lattice through t(zeta) = t0 + Q'(t0)/(4(wp(zeta) - Q''(t0)/24)).
class TwoCentreOrbitMap {
  public:
    TwoCentreParams params;
    QuarticCoeffs qxi, qeta;
    double t0_xi = 1, t0_eta = 1;
    bool xi_frozen = false;  // Q_xi'(t0_xi) = 0: circular-in-xi (ellipse)
    WeierstrassContext cxi, ceta;

    static TwoCentreOrbitMap create(const TwoCentreParams& p, double t0_xi,
                                    double t0_eta);

    // (cosh xi, cos eta) at parameter zeta.  RangeError if |cos eta| leaves
    // [-1, 1] by more than 1e-9 (it is clamped within that band).
    std::pair<double, double> state(double zeta) const;

    // The cos(eta) leg may be evaluated with a phase offset, so orbits need
    // not start at a simultaneous apse of both coordinates.
    double eta_shift = 0;

    // Physical time t(zeta) = int_0^zeta (c/sqrt(2)) (cosh^2 xi - cos^2 eta)
    // d zeta', by quadrature on the closed-form state.
    double time_of(double zeta, double abs_tol = 1e-10) const;
};

struct TwoCentreEllipse {
    double A = 0;        // semi-major axis
    double e = 0;        // eccentricity (= 1/cosh xi0)
    double E_ellipse = 0;  // energy of the elliptical solution
    double xi0 = 0;      // frozen coordinate value
};

// Elliptical solution with both centres at the foci: requires the xi
// quadratic to have a repeated root cosh xi0 = 2 c gamma/(mu1 + mu2) >= 1.
// Throws NoEllipse otherwise.  On the ellipse E = -(mu1 + mu2)/(2A), A = c
// cosh xi0, e = 1/cosh xi0.
TwoCentreEllipse two_centre_ellipse(const TwoCentreParams& p);

// Speed-squared of the elliptical two-centre orbit at elliptic coordinate
// eta, and the two superposed one-centre contributions 2(E_i + mu_i/r_i)
// with E_i = -mu_i/(2A); their sum equals the total (Bonnet superposition).
struct BonnetSplit {
    double v2_total = 0, v2_centre1 = 0, v2_centre2 = 0;
};
BonnetSplit bonnet_split(const TwoCentreParams& p, double eta);

}  // namespace ellorb
