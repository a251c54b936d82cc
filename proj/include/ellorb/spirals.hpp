#pragma once

#include <array>
#include <memory>
#include <utility>
#include <vector>

#include "ellorb/quartic_klmn.hpp"

namespace ellorb {

// ---------------------------------------------------------------------------
// Planar elliptic chart X + iY = c cosh(xi + i eta), foci (+-c, 0).

struct EllipticPoint {
    double xi = 0;   // >= 0 on the principal branch
    double eta = 0;  // angle-like, multivalued mod 2 pi
    double c = 1;    // half focal separation
};

std::pair<double, double> elliptic_to_cart(const EllipticPoint& pt);

// Inverse chart on the cut plane (cut = open focal segment).  cut_side picks
// the eta sign limit for points on the cut (+1 from above, -1 from below);
// without it such points raise OnCut.  Foci raise ScaleFactorZero.
EllipticPoint cart_to_elliptic(double X, double Y, double c,
                               int cut_side = 0);

// ---------------------------------------------------------------------------
// Semi-classical two-centre spiral: drift of the dynamical system
// dX/dt = grad(R + S) in elliptic coordinates, with separated fields
// R = R(xi), S = S(eta) at the special energy E = -(mu1+mu2)^2/(4 alpha^2).

struct SemiClassicalParams {
    double mu1 = 1, mu2 = 0.5;
    double c = 1;
    double alpha2 = 1;   // alpha^2, separation constant gamma = alpha^2/c^2
    double eps2 = 1e-3;  // epsilon^2 = hbar/m

    double energy() const;    // -(mu1+mu2)^2/(4 alpha^2)
    double cosh_xi0() const;  // 2 alpha^2/(c (mu1+mu2)), limiting ellipse
};

// Radial/angular field amplitudes and their first quantum corrections:
//   v0^2 = (c^2 (mu1+mu2)^2 / 2 alpha^2) (cosh xi - cosh xi0)^2
//   u0^2 = (c^2 (mu1+mu2)^2 / 2 alpha^2)
//              (cos eta + 2 alpha^2 (mu1-mu2)/(c (mu1+mu2)^2))^2
//          + 8 alpha^2 mu1 mu2/(mu1+mu2)^2
//   v1 = -v0'/(2 v0), u1 = -u0'/(2 u0)
// with v0 < 0 for xi > xi0 so that R increases toward the limiting ellipse.
// The v1 correction is switched off within 1e-8 of the v0 zero.
struct TwoCentreFields {
    double v0 = 0, u0 = 0, v1 = 0, u1 = 0;
};
TwoCentreFields two_centre_fields(const EllipticPoint& pt,
                                  const SemiClassicalParams& sp);

// (xi_dot, eta_dot) = (v0 + eps^2 v1, u0 + eps^2 u1)/(c (cosh^2 - cos^2)).
std::pair<double, double> two_centre_drift(const EllipticPoint& pt,
                                           const SemiClassicalParams& sp);

// Residual of the quantum Liouville condition
// 2 |f'(w)|^2 (V - E) = v0^2 - u0^2, identically zero for the fields above.
double dqlc_residual(const EllipticPoint& pt, const SemiClassicalParams& sp);

// R(xi) to zeroth order (integral of v0), monotone along trajectories.
double two_centre_R0(double xi, const SemiClassicalParams& sp);

// ---------------------------------------------------------------------------
// Two centres plus a central linear restoring force (frequency omega):
//   v0^2 = w^2 c^4 ch^4 - c^2 (2E + w^2 c^2) ch^2 - 2 c (mu1+mu2) ch + gamma2
//   u0^2 = w^2 c^4 cs^4 - c^2 (2E + w^2 c^2) cs^2 + 2 c (mu1-mu2) cs + gamma2
// At E = -w^2 c^2/2, gamma2 = 3 a^4 w^2 c^4 the radial amplitude factorises,
//   v0^2 = w^2 c^4 (ch - a)^2 ((ch + a)^2 + 2 a^2),
// a = (1/c)((mu1+mu2)/(2 w^2))^{1/3}, and the flow converges to cosh xi = a.

struct RestoringForceParams {
    double mu1 = 1, mu2 = 0.5;
    double c = 1;
    double omega = 1;   // restoring-force frequency
    double E = -0.5;    // energy
    double gamma2 = 0;  // separation constant (the printed gamma^2 literal)

    double a() const;  // limiting cosh value of the special case
};

double restoring_v0sq(double cosh_xi, const RestoringForceParams& rp);
double restoring_u0sq(double cos_eta, const RestoringForceParams& rp);
std::pair<double, double> restoring_drift(const EllipticPoint& pt,
                                          const RestoringForceParams& rp);

// ---------------------------------------------------------------------------
// Fixed-step RK4 integration of the spiral fields.

struct SpiralSample {
    double t = 0, xi = 0, eta = 0;
};
struct TrajectoryTrace {
    std::vector<SpiralSample> samples;
    bool cut_crossing = false;      // xi hit 0 and was reflected
    double terminal_cosh_gap = 0;   // |cosh xi(T) - cosh xi_limit|
};

TrajectoryTrace two_centre_spiral_integrate(const EllipticPoint& start,
                                            const SemiClassicalParams& sp,
                                            double T, double dt);
TrajectoryTrace restoring_spiral_integrate(const EllipticPoint& start,
                                           const RestoringForceParams& rp,
                                           double T, double dt);

// ---------------------------------------------------------------------------
// Circular galaxy spiral: drift field of the Schroedinger-heat /
// Burgers-Zeldovich circular state, E = -mu^2/(2 lambda^2), 0 < sigma2 <
// lambda.

struct GalaxySpiralParams {
    double mu = 1;
    double lambda = 1;
    double sigma2 = 0.2;  // sigma^2

    double r_c() const;    // lambda (lambda - sigma2)/mu, limit circle
    double alpha() const;  // (lambda - sigma2)/(lambda + sigma2)
};

// The 3-d drift field (AxisSingularity on the z axis).
std::array<double, 3> galaxy_spiral_rhs(double x, double y, double z,
                                        const GalaxySpiralParams& gp);

// Effective potential with dv/dt = -grad V_eff along the flow.
double galaxy_veff(double x, double y, double z,
                   const GalaxySpiralParams& gp);

// r(t) from the implicit law |r_c - r| = |r_c - r0| exp(-mu t/(lambda r_c)
// + (r0 - r)/r_c), resolved by bisection between r0 and r_c.
double galaxy_r_of_t(double t, const GalaxySpiralParams& gp, double r0);

// |z| law expressed through r and t.
double galaxy_z_of(double r, double t, const GalaxySpiralParams& gp,
                   double r0, double z0);

// Outer-branch polar spiral rho(phi) = r_c/(1 - b e^{-alpha phi}),
// b = (rho0 - r_c)/rho0; BranchError unless rho0 > r_c.
double galaxy_rho_of_phi(double phi, const GalaxySpiralParams& gp,
                         double rho0);

// Closed-form arc length of the spiral arm between phi = 0 and phi.
double galaxy_arc_length(double phi, const GalaxySpiralParams& gp,
                         double rho0);

// ---------------------------------------------------------------------------
// Entropies of the gaussian cloud wavefunctions about the conic
// l/r = 1 + e cos(theta) (l = a(1-e^2) resp. A(1-e^2)), and normalisation
// constants, reported as N^{-2}.

double kepler_entropy(double r, double theta, double mu, double a, double e,
                      double eps2);
double two_centre_entropy(double r, double theta, double msum, double A,
                          double e, double eps2);

// Eccentric-anomaly integral form and the elliptic-integral closed form of
// the Kepler normalisation.
double kepler_norm_inv_sq_integral(double a, double mu, double e, double eps);
double kepler_norm_inv_sq(double a, double mu, double e, double eps);
double two_centre_norm_inv_sq(double A, double msum, double e, double eps);

// ---------------------------------------------------------------------------
// Ring statistics of the gaussian tube about a closed KLMN orbit (apse-to-
// apse angle pi, e.g. the dipole-free conics): invariant density, gaussian
// width, curvature correction and the momentum-space peak.

struct RingStatistics {
    double r0 = 0;            // orbit radius at theta
    double rho = 0;           // invariant density (rho(0) = 1)
    double R0 = 0;            // transverse second derivative of R (< 0)
    double width = 0;         // radial tube width eps/|R0|^{1/2}
    double K_correction = 0;  // (K_Q - K_C0)/(r - r0) bracket
    double p2_peak = 0;       // squared momentum-peak modulus
    double alpha_peak = 0;    // angle of the momentum peak to the radius
};

class RingModel {
  public:
    KLMNParams params;
    double u0 = 0;
    double eps = 1e-3;
    double D = 0;  // ring mass constant; 0 selects eps * rho v sin at theta=0
    bool circular = false;

    // NotPeriodic unless the orbit closes with apse-to-apse angle pi.
    static RingModel create(const KLMNParams& p, double u0, double eps = 1e-3,
                            double D = 0, int n = 96);

    RingStatistics eval(double theta) const;

  private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
};

}  // namespace ellorb
