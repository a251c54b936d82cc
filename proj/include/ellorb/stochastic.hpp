#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "ellorb/errors.hpp"

namespace ellorb {

// ---------------------------------------------------------------------------
// Semiclassical heat kernels.
//
// The parabolic problem treated here is
//     du/dt = (sigma^2/2) lap u + (V/sigma^2) u,
//     u(x, 0) = T0(x) exp(-S0(x)/sigma^2),
// whose logarithmic transform v = -sigma^2 grad(ln u) obeys a viscous
// Burgers equation with force -grad V.  As sigma -> 0 the solution is
// carried by the characteristics of the inviscid Hamilton-Jacobi equation
//     dS/dt + |grad S|^2/2 + V = 0,  S(x, 0) = S0(x),
// namely the Newtonian trajectories xddot = -grad V launched with velocity
// grad S0.  The routines below integrate that flow and its linearisation,
// evaluate the action, and estimate u itself by a stochastic representation:
// paths of dY = -grad S(Y, t-s) ds + sigma dB weighted by
// T0(Y_t) exp(-1/2 int_0^t lap S(Y_s, t-s) ds), all multiplied by
// exp(-S(x,t)/sigma^2).
// ---------------------------------------------------------------------------

using Point2 = std::array<double, 2>;
using Point3 = std::array<double, 3>;

// Potential, initial phase S0 and initial amplitude T0 for a unit-mass
// particle in 1 or 2 dimensions.  The callbacks always receive a Point2;
// one-dimensional models must ignore (and return 0 in) the second slot.
// T0 must be positive with int T0^2 = 1.
struct MechanicalModel {
    int dim = 1;
    std::function<double(const Point2&)> potential;
    std::function<Point2(const Point2&)> grad_potential;
    std::function<double(const Point2&)> initial_action;        // S0
    std::function<Point2(const Point2&)> grad_initial_action;   // grad S0
    std::function<double(const Point2&)> initial_amplitude;     // T0
    // Half-width of the working box [-L, L]^dim used to seed multi-start
    // Newton inversion of the flow and the Monte Carlo field cache.
    double box_halfwidth = 6.0;
    // First focal time of the flow, if known (infinity otherwise); routines
    // that need an invertible flow refuse t at or beyond it.
    double caustic_time = std::numeric_limits<double>::infinity();
};

// V = 0, S0 = curvature |x|^2 / 2, T0 a normalised Gaussian of width w.
MechanicalModel make_free_model(int dim, double s0_curvature = 0.0,
                                double t0_width = 1.0);
// V = omega^2 |x|^2 / 2, S0 = 0; first focal time pi/(2 omega).
MechanicalModel make_harmonic_model(int dim, double omega,
                                    double t0_width = 1.0);
// V = x^2/2 + beta x^4/4 in one dimension, S0 = 0.
MechanicalModel make_quartic_model(double beta, double t0_width = 1.0);

// State of the characteristic started at x0 after time t.
struct FlowPoint {
    Point2 x{};              // position Phi_t(x0)
    Point2 p{};              // velocity
    double action = 0;       // S0(x0) + int_0^t (|p|^2/2 - V) ds
    double det_jacobian = 1; // det D Phi_t(x0)
};

// Integrate the characteristic (RK4, fixed step <= 1e-3) together with its
// linearisation, started from (x0, grad S0(x0)).
FlowPoint flow(const Point2& x0, double t, const MechanicalModel& m);

// Solve Phi_t(y) = x by damped Newton iteration seeded from x itself and
// from an 8^dim grid over the working box.  Throws CausticReached when the
// only roots found have |det D Phi_t| < 1e-10, InverseNotFound when no
// start converges to a trustworthy root.
Point2 flow_inverse(const Point2& x, double t, const MechanicalModel& m);

// S(x, t): action of the characteristic arriving at x at time t.  Solves
// the Hamilton-Jacobi equation above; S(x, 0) = S0(x).
double action(const Point2& x, double t, const MechanicalModel& m);

struct JacobiReport {
    double det_jacobian = 1;     // det D Phi_t(x0)
    double trace_integral = 0;   // int_0^t tr S''(Phi_s(x0), s) ds
    // |det - exp(trace integral)|: the two sides are computed by
    // independent quadratures of the same variational system, so the
    // residual measures the Jacobi-field/Van-Vleck determinant identity.
    double identity_residual = 0;
};

// Jacobi field along the characteristic from x0: J(s) = D Phi_s(x0) obeys
// Jdot = S''(s) J with S'' the Hessian of the action along the path, so
// det J(t) = exp(int_0^t tr S'').  Throws CausticReached if det J vanishes
// before t.
JacobiReport jacobi_field(const Point2& x0, double t, const MechanicalModel& m);

// Smallest zero of det D Phi_t over starting points sampled from the
// working box, located by bisection; infinity if none occurs before t_max.
double estimate_caustic_time(const MechanicalModel& m, double t_max);

struct HeatKernelReport {
    double log_prefactor = 0;    // -S(x,t)/sigma^2
    double expectation_mean = 0; // Monte Carlo mean of the path weights
    double std_error = 0;
    std::size_t n_paths = 0;
    double step = 0;             // drift time step actually used
    std::uint64_t seed = 0;
};

// Stochastic representation of u(x, t) (one-dimensional models):
//     u = exp(-S(x,t)/sigma^2) E[ T0(Y_t) exp(-1/2 int lap S(Y_s, t-s) ds) ]
// with dY = -grad S(Y, t-s) ds + sigma dB, Y_0 = x.  grad S and lap S are
// finite differences of the action on a cached grid (values transported
// along characteristics, cubic interpolation in space, linear in time).
// Paths use a Heun drift step with Euler-Maruyama noise; each path draws
// from its own generator seeded from (seed, path index), and the weights
// are reduced in a fixed pairwise order, so reruns are bit-identical.
// The run is repeated with the step halved; if the mean shifts by more
// than three combined standard errors, throws StepTooCoarse.  step_override
// replaces the default step min(1e-3, t/1000) when positive.
HeatKernelReport elementary_formula_mc(double x, double t, double sigma,
                                       std::size_t n_paths, std::uint64_t seed,
                                       const MechanicalModel& m,
                                       double step_override = 0.0);

// v = -sigma^2 d/dx ln u on a uniform grid (central differences inside,
// one-sided at the ends).  Throws NonPositiveField if any u <= 0.
std::vector<double> hopf_cole_velocity(const std::vector<double>& u,
                                       double dx, double sigma);

// Max interior residual of the viscous Burgers equation
//     dv/dt + v dv/dx + V'(x) - (sigma^2/2) d2v/dx2 = 0
// from three consecutive time slices of v on the grid x_left + i dx.
double burgers_residual(const std::vector<double>& v_prev,
                        const std::vector<double>& v_now,
                        const std::vector<double>& v_next, double dt,
                        double x_left, double dx, double sigma,
                        const std::function<double(double)>& grad_potential);

// ---------------------------------------------------------------------------
// Diffusion kinematics of states written as exp((R + iS)/eps2): density
// rho = exp(2R/eps2), drift b = grad(R + S), osmotic velocity
// eps2 grad ln sqrt(rho) = grad R, current velocity grad S.
// ---------------------------------------------------------------------------

struct NelsonState {
    std::function<double(const Point3&)> amplitude_exponent;  // R
    std::function<double(const Point3&)> phase;               // S
    double eps2 = 1.0;
};

// Stationary continuity residual div(rho grad S)/rho evaluated by central
// differences: (2/eps2) grad R . grad S + lap S.  Vanishes identically for
// densities transported by their own current velocity.
double nelson_continuity_residual(const NelsonState& st, const Point3& x,
                                  double fd_step = 1e-4);

// Max |continuity residual| over the supplied points.
double nelson_drift_check(const NelsonState& st,
                          const std::vector<Point3>& points,
                          double fd_step = 1e-4);

// eps2 grad ln sqrt(rho) with rho = exp(2R/eps2), by finite differences of
// the reconstructed density (equals grad R up to rounding).
Point3 osmotic_velocity(const NelsonState& st, const Point3& x,
                        double fd_step = 1e-4);
// grad S by finite differences.
Point3 current_velocity(const NelsonState& st, const Point3& x,
                        double fd_step = 1e-4);

// Stationary spiral-galaxy state of the Coulomb heat flow with angular
// momentum lambda > sigma2 > 0 and energy -mu^2/(2 lambda^2).  In the heat
// transcription the amplitude exponent is
//     lambda atan2(y,x) - (sigma2/2) ln(x^2+y^2)
// and the phase is
//     mu r / lambda - (lambda/2) ln(x^2+y^2) - sigma2 atan2(y,x),
// with eps2 = sigma2; the continuity residual vanishes identically off the
// z-axis (AxisSingularity on it).  Its drift field is the spiral flow whose
// limit circle has radius lambda (lambda - sigma2) / mu.
NelsonState galaxy_stationary_state(double mu, double lambda, double sigma2);

}  // namespace ellorb
