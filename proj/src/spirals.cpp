#include "ellorb/spirals.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "ellorb/errors.hpp"
#include "ellorb/orbits.hpp"
#include "ellorb/quadrature.hpp"

namespace ellorb {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sq(double x) { return x * x; }

// ---------------------------------------------------------------------
// Cyclic tridiagonal solve (Sherman-Morrison around the plain Thomas
// algorithm) for the periodic-spline moment equations.

std::vector<double> thomas(std::vector<double> sub, std::vector<double> diag,
                           std::vector<double> sup, std::vector<double> rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    std::vector<double> x(n);
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        x[i] = (rhs[i] - sup[i] * x[i + 1]) / diag[i];
    return x;
}

std::vector<double> cyclic_thomas(const std::vector<double>& sub,
                                  std::vector<double> diag,
                                  const std::vector<double>& sup,
                                  const std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    const double cn = sup[n - 1];   // corner (n-1, 0)
    const double c0 = sub[0];       // corner (0, n-1)
    const double gamma = -diag[0];
    diag[0] -= gamma;
    diag[n - 1] -= c0 * cn / gamma;
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = cn;
    const auto y = thomas(sub, diag, sup, rhs);
    const auto q = thomas(sub, diag, sup, u);
    const double fact = (y[0] + c0 * y[n - 1] / gamma) /
                        (1.0 + q[0] + c0 * q[n - 1] / gamma);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] - fact * q[i];
    return x;
}

// Periodic cubic spline on strictly increasing knots x in [x0, x0 + P).
struct PeriodicSpline {
    std::vector<double> x, y, M;  // M = second derivatives at the knots
    double P = 2 * kPi;

    void build() {
        const std::size_t n = x.size();
        std::vector<double> h(n);
        for (std::size_t i = 0; i < n; ++i)
            h[i] = (i + 1 < n ? x[i + 1] : x[0] + P) - x[i];
        std::vector<double> sub(n), diag(n), sup(n), rhs(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t im = (i + n - 1) % n;
            const std::size_t ip = (i + 1) % n;
            sub[i] = h[im] / 6.0;
            diag[i] = (h[im] + h[i]) / 3.0;
            sup[i] = h[i] / 6.0;
            rhs[i] = (y[ip] - y[i]) / h[i] - (y[i] - y[im]) / h[im];
        }
        M = cyclic_thomas(sub, diag, sup, rhs);
    }

    // Interval index and local offsets for a wrapped argument.
    void locate(double t, std::size_t& i, double& h, double& A,
                double& B) const {
        const std::size_t n = x.size();
        double u = std::fmod(t - x[0], P);
        if (u < 0) u += P;
        u += x[0];
        i = std::upper_bound(x.begin(), x.end(), u) - x.begin();
        i = (i == 0) ? n - 1 : i - 1;
        const double xr = (i + 1 < n ? x[i + 1] : x[0] + P);
        h = xr - x[i];
        A = (xr - u) / h;
        B = (u - x[i]) / h;
    }

    double eval(double t) const {
        std::size_t i;
        double h, A, B;
        locate(t, i, h, A, B);
        const std::size_t ip = (i + 1) % x.size();
        return A * y[i] + B * y[ip] +
               ((A * A * A - A) * M[i] + (B * B * B - B) * M[ip]) * h * h /
                   6.0;
    }
    double deriv1(double t) const {
        std::size_t i;
        double h, A, B;
        locate(t, i, h, A, B);
        const std::size_t ip = (i + 1) % x.size();
        return (y[ip] - y[i]) / h +
               ((1.0 - 3.0 * A * A) * M[i] + (3.0 * B * B - 1.0) * M[ip]) *
                   h / 6.0;
    }
    double deriv2(double t) const {
        std::size_t i;
        double h, A, B;
        locate(t, i, h, A, B);
        return A * M[i] + B * M[(i + 1) % x.size()];
    }
};

// Shared fixed-step RK4 driver in the (xi, eta) half plane; crossing the
// focal cut reflects (xi, eta) -> (-xi, -eta), which fixes the cartesian
// image.
template <class Field>
TrajectoryTrace rk4_spiral(const EllipticPoint& start, Field&& field,
                           double T, double dt, double cosh_limit) {
    if (!(dt > 0) || !(T >= 0)) throw DomainError("need T >= 0 and dt > 0");
    const long nsteps = std::lround(T / dt);
    TrajectoryTrace out;
    out.samples.reserve(nsteps + 1);
    double xi = start.xi, eta = start.eta;
    out.samples.push_back({0.0, xi, eta});
    for (long k = 0; k < nsteps; ++k) {
        const auto [k1x, k1e] = field(xi, eta);
        const auto [k2x, k2e] = field(xi + 0.5 * dt * k1x, eta + 0.5 * dt * k1e);
        const auto [k3x, k3e] = field(xi + 0.5 * dt * k2x, eta + 0.5 * dt * k2e);
        const auto [k4x, k4e] = field(xi + dt * k3x, eta + dt * k3e);
        xi += dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
        eta += dt / 6.0 * (k1e + 2 * k2e + 2 * k3e + k4e);
        if (xi < 0) {
            xi = -xi;
            eta = -eta;
            out.cut_crossing = true;
        }
        out.samples.push_back({dt * (k + 1), xi, eta});
    }
    out.terminal_cosh_gap = std::abs(std::cosh(xi) - cosh_limit);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Elliptic chart.

std::pair<double, double> elliptic_to_cart(const EllipticPoint& pt) {
    return {pt.c * std::cosh(pt.xi) * std::cos(pt.eta),
            pt.c * std::sinh(pt.xi) * std::sin(pt.eta)};
}

EllipticPoint cart_to_elliptic(double X, double Y, double c, int cut_side) {
    if (!(c > 0)) throw DomainError("focal half-distance c must be > 0");
    if (std::hypot(X - c, Y) < 1e-13 * c || std::hypot(X + c, Y) < 1e-13 * c)
        throw ScaleFactorZero("chart scale factor vanishes at a focus");
    if (std::abs(Y) <= 1e-12 * c && std::abs(X) < c * (1.0 - 1e-12)) {
        if (cut_side == 0)
            throw OnCut("point lies on the focal segment; pass a side");
        EllipticPoint pt;
        pt.xi = 0;
        pt.eta = (cut_side > 0 ? 1.0 : -1.0) * std::acos(X / c);
        pt.c = c;
        return pt;
    }
    // sqrt(z^2/c^2 - 1) = al + i be from the real and imaginary parts
    // a + i b of z^2/c^2 - 1, with the cancellation-free branch.
    const double a = (X * X - Y * Y - c * c) / (c * c);
    const double b = 2.0 * X * Y / (c * c);
    const double m = std::hypot(a, b);
    double al, be;
    if (a >= 0) {
        al = std::sqrt(0.5 * (m + a));
        be = (al > 0) ? b / (2.0 * al) : 0.0;
    } else {
        be = std::copysign(std::sqrt(0.5 * (m - a)), b == 0 ? 1.0 : b);
        al = b / (2.0 * be);
    }
    // e^{xi + i eta} = z/c +- (al + i be); the two candidates have product
    // of moduli 1, the principal branch is the one outside the unit circle.
    const std::complex<double> zc(X / c, Y / c);
    const std::complex<double> s(al, be);
    const std::complex<double> w =
        (std::abs(zc + s) >= std::abs(zc - s)) ? zc + s : zc - s;
    EllipticPoint pt;
    pt.xi = std::max(0.0, std::log(std::abs(w)));
    pt.eta = std::arg(w);
    pt.c = c;
    return pt;
}

// ---------------------------------------------------------------------------
// Semi-classical two-centre drift.

double SemiClassicalParams::energy() const {
    return -sq(mu1 + mu2) / (4.0 * alpha2);
}

double SemiClassicalParams::cosh_xi0() const {
    return 2.0 * alpha2 / (c * (mu1 + mu2));
}

TwoCentreFields two_centre_fields(const EllipticPoint& pt,
                                  const SemiClassicalParams& sp) {
    const double msum = sp.mu1 + sp.mu2;
    if (!(msum > 0) || !(sp.alpha2 > 0) || !(sp.c > 0))
        throw DomainError("need mu1 + mu2 > 0, alpha2 > 0, c > 0");
    const double K = sq(sp.c * msum) / (2.0 * sp.alpha2);
    const double rK = std::sqrt(K);
    const double ch0 = sp.cosh_xi0();
    const double shift = 2.0 * sp.alpha2 * (sp.mu1 - sp.mu2) /
                         (sp.c * sq(msum));
    const double ch = std::cosh(pt.xi), sh = std::sinh(pt.xi);
    const double cs = std::cos(pt.eta), sn = std::sin(pt.eta);

    TwoCentreFields f;
    f.v0 = -rK * (ch - ch0);
    const double u0sq =
        K * sq(cs + shift) + 8.0 * sp.alpha2 * sp.mu1 * sp.mu2 / sq(msum);
    f.u0 = std::sqrt(u0sq);
    // v1 = -(d v0^2/d xi)/(4 v0^2); switched off at the v0 zero.
    if (std::abs(ch - ch0) > 1e-8 * std::max(1.0, ch0))
        f.v1 = -sh / (2.0 * (ch - ch0));
    f.u1 = K * (cs + shift) * sn / (2.0 * u0sq);
    return f;
}

std::pair<double, double> two_centre_drift(const EllipticPoint& pt,
                                           const SemiClassicalParams& sp) {
    const auto f = two_centre_fields(pt, sp);
    const double delta = sq(std::cosh(pt.xi)) - sq(std::cos(pt.eta));
    if (delta < 1e-14)
        throw ScaleFactorZero("drift undefined at a focus of the chart");
    const double den = pt.c * delta;
    return {(f.v0 + sp.eps2 * f.v1) / den, (f.u0 + sp.eps2 * f.u1) / den};
}

double dqlc_residual(const EllipticPoint& pt, const SemiClassicalParams& sp) {
    const auto f = two_centre_fields(pt, sp);
    const double ch = std::cosh(pt.xi), cs = std::cos(pt.eta);
    const double r1 = sp.c * (ch - cs), r2 = sp.c * (ch + cs);
    const double V = -sp.mu1 / r1 - sp.mu2 / r2;
    const double delta = ch * ch - cs * cs;
    return 2.0 * sq(sp.c) * delta * (V - sp.energy()) -
           (sq(f.v0) - sq(f.u0));
}

double two_centre_R0(double xi, const SemiClassicalParams& sp) {
    const double msum = sp.mu1 + sp.mu2;
    const double rK = sp.c * msum / std::sqrt(2.0 * sp.alpha2);
    return -rK * (std::sinh(xi) - sp.cosh_xi0() * xi);
}

// ---------------------------------------------------------------------------
// Restoring-force variant.

double RestoringForceParams::a() const {
    return std::cbrt((mu1 + mu2) / (2.0 * omega * omega)) / c;
}

double restoring_v0sq(double cosh_xi, const RestoringForceParams& rp) {
    const double w2c4 = sq(rp.omega * rp.c * rp.c);
    const double b2 = sq(rp.c) * (2.0 * rp.E + sq(rp.omega * rp.c));
    return w2c4 * sq(sq(cosh_xi)) - b2 * sq(cosh_xi) -
           2.0 * rp.c * (rp.mu1 + rp.mu2) * cosh_xi + rp.gamma2;
}

double restoring_u0sq(double cos_eta, const RestoringForceParams& rp) {
    const double w2c4 = sq(rp.omega * rp.c * rp.c);
    const double b2 = sq(rp.c) * (2.0 * rp.E + sq(rp.omega * rp.c));
    return w2c4 * sq(sq(cos_eta)) - b2 * sq(cos_eta) +
           2.0 * rp.c * (rp.mu1 - rp.mu2) * cos_eta + rp.gamma2;
}

std::pair<double, double> restoring_drift(const EllipticPoint& pt,
                                          const RestoringForceParams& rp) {
    const double ch = std::cosh(pt.xi);
    const double a = rp.a();
    const double w2c4 = sq(rp.omega * rp.c * rp.c);
    const double special_gap =
        std::abs(2.0 * rp.E + sq(rp.omega * rp.c)) +
        std::abs(rp.gamma2 - 3.0 * sq(sq(a)) * w2c4);
    double v0;
    if (special_gap < 1e-10 * (std::abs(rp.gamma2) + w2c4)) {
        // Factorised special case: smooth through the cosh xi = a zero.
        v0 = -rp.omega * sq(rp.c) * (ch - a) *
             std::sqrt(sq(ch + a) + 2.0 * a * a);
    } else {
        const double v0sq = restoring_v0sq(ch, rp);
        if (v0sq < 0)
            throw NonPositiveField("radial amplitude v0^2 < 0");
        v0 = -std::sqrt(v0sq);
    }
    const double u0sq = restoring_u0sq(std::cos(pt.eta), rp);
    if (u0sq < 0) throw NonPositiveField("angular amplitude u0^2 < 0");
    const double delta = ch * ch - sq(std::cos(pt.eta));
    if (delta < 1e-14)
        throw ScaleFactorZero("drift undefined at a focus of the chart");
    const double den = rp.c * delta;
    return {v0 / den, std::sqrt(u0sq) / den};
}

// ---------------------------------------------------------------------------
// RK4 wrappers.

TrajectoryTrace two_centre_spiral_integrate(const EllipticPoint& start,
                                            const SemiClassicalParams& sp,
                                            double T, double dt) {
    auto field = [&](double xi, double eta) {
        EllipticPoint p{xi, eta, sp.c};
        return two_centre_drift(p, sp);
    };
    return rk4_spiral(start, field, T, dt, sp.cosh_xi0());
}

TrajectoryTrace restoring_spiral_integrate(const EllipticPoint& start,
                                           const RestoringForceParams& rp,
                                           double T, double dt) {
    auto field = [&](double xi, double eta) {
        EllipticPoint p{xi, eta, rp.c};
        return restoring_drift(p, rp);
    };
    return rk4_spiral(start, field, T, dt, rp.a());
}

// ---------------------------------------------------------------------------
// Galaxy spiral.

double GalaxySpiralParams::r_c() const {
    return lambda * (lambda - sigma2) / mu;
}

double GalaxySpiralParams::alpha() const {
    return (lambda - sigma2) / (lambda + sigma2);
}

namespace {
void galaxy_validate(const GalaxySpiralParams& gp) {
    if (!(gp.mu > 0) || !(gp.lambda > 0) || !(gp.sigma2 > 0) ||
        !(gp.sigma2 < gp.lambda))
        throw DomainError("need mu > 0, lambda > 0, 0 < sigma2 < lambda");
}
}  // namespace

std::array<double, 3> galaxy_spiral_rhs(double x, double y, double z,
                                        const GalaxySpiralParams& gp) {
    galaxy_validate(gp);
    const double rho2 = x * x + y * y;
    if (rho2 < 1e-28)
        throw AxisSingularity("drift field undefined on the z axis");
    const double r = std::sqrt(rho2 + z * z);
    const double grav = -gp.mu / (gp.lambda * r);
    const double lp = gp.lambda + gp.sigma2, lm = gp.lambda - gp.sigma2;
    return {grav * x + (lm * x - lp * y) / rho2,
            grav * y + (lp * x + lm * y) / rho2, grav * z};
}

double galaxy_veff(double x, double y, double z,
                   const GalaxySpiralParams& gp) {
    galaxy_validate(gp);
    const double rho2 = x * x + y * y;
    if (rho2 < 1e-28)
        throw AxisSingularity("effective potential undefined on the z axis");
    const double r = std::sqrt(rho2 + z * z);
    return gp.mu * (gp.lambda - gp.sigma2) / (gp.lambda * r) -
           (sq(gp.lambda) + sq(gp.sigma2)) / rho2 -
           sq(gp.mu / gp.lambda) / 2.0;
}

double galaxy_r_of_t(double t, const GalaxySpiralParams& gp, double r0) {
    galaxy_validate(gp);
    if (!(r0 > 0)) throw DomainError("need r0 > 0");
    if (t < 0) throw DomainError("the radial law is used for t >= 0");
    const double rc = gp.r_c();
    if (std::abs(r0 - rc) < 1e-300) return rc;
    // g(r) = log|rc - r| - log|rc - r0| + mu t/(lambda rc) - (r0 - r)/rc
    // decreases from g(r0) > 0 to -inf as r -> rc; bisect.
    auto g = [&](double r) {
        return std::log(std::abs(rc - r) / std::abs(rc - r0)) +
               gp.mu * t / (gp.lambda * rc) - (r0 - r) / rc;
    };
    double lo = r0, hi = rc;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double galaxy_z_of(double r, double t, const GalaxySpiralParams& gp,
                   double r0, double z0) {
    galaxy_validate(gp);
    const double lm = gp.lambda * (gp.lambda - gp.sigma2);
    return z0 * std::exp(-gp.mu * (r - r0) / lm) *
           std::exp(-sq(gp.mu) * t / (gp.lambda * lm));
}

double galaxy_rho_of_phi(double phi, const GalaxySpiralParams& gp,
                         double rho0) {
    galaxy_validate(gp);
    const double rc = gp.r_c();
    if (!(rho0 > rc))
        throw BranchError("polar spiral branch requires rho0 > r_c");
    const double b = (rho0 - rc) / rho0;
    return rc / (1.0 - b * std::exp(-gp.alpha() * phi));
}

double galaxy_arc_length(double phi, const GalaxySpiralParams& gp,
                         double rho0) {
    galaxy_validate(gp);
    const double rc = gp.r_c();
    if (!(rho0 > rc))
        throw BranchError("polar spiral branch requires rho0 > r_c");
    if (!(phi >= 0)) throw DomainError("need phi >= 0");
    const double al = gp.alpha();
    const double b = (rho0 - rc) / rho0;
    // Antiderivative in x = 1 - s = b e^{-alpha phi}; this form avoids the
    // catastrophic 1 - s cancellation as the arm winds onto the circle.
    auto term = [&](double x) {
        const double W =
            std::sqrt(1.0 - 2.0 * x + (1.0 + al * al) * x * x);
        return std::asinh((1.0 - x) / (al * x)) - W / (1.0 - x);
    };
    return rc / al * (term(b * std::exp(-al * phi)) - term(b));
}

// ---------------------------------------------------------------------------
// Entropies and normalisation constants.

double kepler_entropy(double r, double theta, double mu, double a, double e,
                      double eps2) {
    if (!(a > 0) || !(mu > 0) || !(e >= 0) || !(e < 1) || !(eps2 > 0))
        throw DomainError("need a, mu, eps2 > 0 and 0 <= e < 1");
    const double cs = std::cos(theta);
    const double r0 = a * (1.0 - e * e) / (1.0 + e * cs);
    const double num = std::pow(1.0 + e * cs, 3);
    const double den =
        (1.0 - e * e) * (1.0 + 3.0 * e * e + e * (3.0 + e * e) * cs);
    return -0.5 / eps2 * std::sqrt(mu / (a * a * a)) * num / den * sq(r - r0);
}

double two_centre_entropy(double r, double theta, double msum, double A,
                          double e, double eps2) {
    if (!(A > 0) || !(msum > 0) || !(e >= 0) || !(e < 1) || !(eps2 > 0))
        throw DomainError("need A, msum, eps2 > 0 and 0 <= e < 1");
    const double cs = std::cos(theta);
    const double r0 = A * (1.0 - e * e) / (1.0 + e * cs);
    const double num = std::pow(1.0 + e * cs, 4);
    const double den =
        std::sqrt(1.0 - e * e) * sq(1.0 + e * e + 2.0 * e * cs);
    return -0.5 / eps2 * std::sqrt(msum / (A * A * A)) * num / den *
           sq(r - r0);
}

double kepler_norm_inv_sq_integral(double a, double mu, double e,
                                   double eps) {
    if (!(a > 0) || !(mu > 0) || !(e >= 0) || !(e < 1) || !(eps > 0))
        throw DomainError("need a, mu, eps > 0 and 0 <= e < 1");
    const double I = integrate(
        [&](double v) {
            return (1.0 - e * std::cos(v)) *
                   std::sqrt(1.0 + e * e + 2.0 * e * std::cos(v));
        },
        0.0, kPi, 1e-13);
    return 2.0 * std::sqrt(2.0 * kPi) * a *
           std::pow(a * a * a / mu, 0.25) * eps * I;
}

double kepler_norm_inv_sq(double a, double mu, double e, double eps) {
    if (!(a > 0) || !(mu > 0) || !(e >= 0) || !(e < 1) || !(eps > 0))
        throw DomainError("need a, mu, eps > 0 and 0 <= e < 1");
    const double k = 2.0 * std::sqrt(e) / (1.0 + e);
    const double brace = sq(1.0 - e) * legendre_F(kPi / 2.0, k) +
                         (5.0 - e * e) * legendre_E(kPi / 2.0, k);
    return 2.0 * std::sqrt(2.0 * kPi) / 3.0 * a *
           std::pow(a * a * a / mu, 0.25) * (1.0 + e) * eps * brace;
}

double two_centre_norm_inv_sq(double A, double msum, double e, double eps) {
    if (!(A > 0) || !(msum > 0) || !(e >= 0) || !(e < 1) || !(eps > 0))
        throw DomainError("need A, msum, eps > 0 and 0 <= e < 1");
    return std::pow(2.0 * kPi, 1.5) * A *
           std::pow(A * A * A / msum, 0.25) *
           std::pow(1.0 - e * e, 0.75) * eps;
}

// ---------------------------------------------------------------------------
// Ring statistics.

struct RingModel::Impl {
    KLMNParams p;
    double u0 = 0, eps = 0, D = 0;
    bool circular = false;
    double v_circ = 0;         // speed on a circular ring
    double r_circ = 0;
    PeriodicSpline r0s, rhos, R0s;

    double speed(double u) const {
        return std::sqrt(std::max(0.0, 2.0 * p.E + 2.0 * p.mu * u));
    }

    // Laplacian of the radial eikonal S0(r) = int sqrt(f(1/r')) dr'.
    double laplace_S(double r) const {
        const auto q = as_quartic(p);
        const double u = 1.0 / r;
        const double F = std::sqrt(std::max(q(u), 1e-300));
        return -u * u * q.deriv(u, 1) / (2.0 * F) + F / r;
    }
};

RingModel RingModel::create(const KLMNParams& p, double u0, double eps,
                            double D, int n) {
    if (!(u0 > 0) || !(eps > 0) || n < 16)
        throw DomainError("need u0 > 0, eps > 0 and n >= 16");
    auto impl = std::make_shared<Impl>();
    impl->p = p;
    impl->u0 = u0;
    impl->eps = eps;
    const auto q = as_quartic(p);
    const double fp = q.deriv(u0, 1);
    const double fp_scale = 4.0 * std::abs(q.a0) * u0 * u0 * u0 +
                            12.0 * std::abs(q.a1) * u0 * u0 +
                            12.0 * std::abs(q.a2) * u0 +
                            4.0 * std::abs(q.a3) + 1e-300;
    impl->circular = std::abs(fp) < 1e-8 * fp_scale;

    if (impl->circular) {
        impl->r_circ = 1.0 / u0;
        impl->v_circ = impl->speed(u0);
        impl->D = (D > 0) ? D : eps * impl->v_circ;
    } else {
        const double dth = klmn_delta_theta(p, u0);
        if (std::abs(dth - kPi) > 1e-9)
            throw NotPeriodic("ring statistics need apse-to-apse angle pi");
        // Half-cycle orbit curve mirrored about the apse line gives the
        // closed 2 pi-periodic ring radius r0(theta).
        const auto trace = klmn_orbit_trace(p, u0, n);
        auto& r0s = impl->r0s;
        for (const auto& s : trace.samples) {
            if (!r0s.x.empty() && s.theta <= r0s.x.back()) continue;
            if (s.theta >= kPi) break;
            r0s.x.push_back(s.theta);
            r0s.y.push_back(s.r);
        }
        r0s.x.push_back(kPi);
        r0s.y.push_back(trace.samples.back().r);
        for (std::size_t i = r0s.x.size() - 1; i-- > 1;) {
            r0s.x.push_back(2.0 * kPi - r0s.x[i]);
            r0s.y.push_back(r0s.y[i]);
        }
        r0s.build();

        // Invariant density from d(log rho)/ds = -Lap S0 / speed along the
        // ring, integrated by the midpoint rule; the apse points, where the
        // single-branch S0 is only C^1, never coincide with a midpoint.  A
        // linear-in-theta calibration of log rho removes quadrature drift
        // and enforces rho(2 pi) = rho(0) = 1 exactly.
        const int nf = 1024;
        const double h = 2.0 * kPi / nf;
        std::vector<double> logrho(nf, 0.0);
        double acc = 0.0;
        for (int k = 0; k < nf; ++k) {
            double gmid = 0.0;
            for (int j = 0; j < 4; ++j) {
                const double th = (k + (2.0 * j + 1.0) / 8.0) * h;
                const double r = r0s.eval(th);
                const double rp = r0s.deriv1(th);
                // The radial eikonal branch follows the orbit: S0' =
                // sign(rdot) sqrt(f), so the Laplacian flips sign with r0'.
                const double branch = (rp >= 0) ? 1.0 : -1.0;
                gmid += branch * impl->laplace_S(r) /
                        impl->speed(1.0 / r) * std::hypot(r, rp) / 4.0;
            }
            if (k > 0) logrho[k] = -acc;
            acc += gmid * h;
        }
        const double drift = acc;  // -log rho(2 pi) before calibration
        auto& rhos = impl->rhos;
        for (int k = 0; k < nf; ++k) {
            rhos.x.push_back(k * h);
            rhos.y.push_back(std::exp(logrho[k] +
                                      drift * (k * h) / (2.0 * kPi)));
        }
        rhos.build();

        const double sin0 = impl->r0s.eval(0.0) /
                            std::hypot(impl->r0s.eval(0.0),
                                       impl->r0s.deriv1(0.0));
        impl->D = (D > 0) ? D : eps * impl->speed(u0) * sin0;

        auto& R0s = impl->R0s;
        for (int k = 0; k < nf; ++k) {
            const double th = k * h;
            const double r = r0s.eval(th);
            const double rp = r0s.deriv1(th);
            const double sinpsi = r / std::hypot(r, rp);
            const double amp =
                rhos.y[k] * impl->speed(1.0 / r) * sinpsi / impl->D;
            R0s.x.push_back(th);
            R0s.y.push_back(-amp * amp);
        }
        R0s.build();
    }

    RingModel model;
    model.params = p;
    model.u0 = u0;
    model.eps = eps;
    model.D = impl->D;
    model.circular = impl->circular;
    model.impl_ = std::move(impl);
    return model;
}

RingStatistics RingModel::eval(double theta) const {
    const auto& im = *impl_;
    RingStatistics st;
    double r, rp, rpp, R0, R0p, R0pp;
    if (im.circular) {
        r = im.r_circ;
        rp = rpp = 0.0;
        const double amp = im.v_circ / im.D;
        R0 = -amp * amp;
        R0p = R0pp = 0.0;
        st.rho = 1.0;
    } else {
        r = im.r0s.eval(theta);
        rp = im.r0s.deriv1(theta);
        rpp = im.r0s.deriv2(theta);
        R0 = im.R0s.eval(theta);
        R0p = im.R0s.deriv1(theta);
        R0pp = im.R0s.deriv2(theta);
        st.rho = im.rhos.eval(theta);
    }
    st.r0 = r;
    st.R0 = R0;
    st.width = im.eps / std::sqrt(std::abs(R0));

    const double g2 = rp * rp;
    const double num =
        (2.0 * r * r - g2) * rpp - (4.0 * g2 + r * r) * r +
        r * (r * r + g2) / 4.0 * (2.0 * R0pp / R0 - 3.0 * sq(R0p / R0)) +
        rp * (2.0 * g2 - 3.0 * r * rpp - r * r) / 2.0 * (R0p / R0);
    st.K_correction = num / std::pow(r * r + g2, 2.5);

    const auto q = as_quartic(im.p);
    const double F = std::sqrt(std::max(0.0, q(1.0 / r)));
    // The curvature radius of the ring enters only through
    // rho_c/(rho_c - r0) = r0/r0'', so the momentum peak reduces to
    //   p^2 = F^2 + C^2/r0''^2,   tan(alpha) = -C/(r0'' F),
    // with the exact on-ring value C^2/r0^2 substituted when r0'' ~ 0.
    st.alpha_peak = std::atan2(-im.p.C, rpp * F);
    if (std::abs(rpp) < 1e-9 * r)
        st.p2_peak = F * F + sq(im.p.C / r);
    else
        st.p2_peak = F * F + sq(im.p.C / rpp);
    return st;
}

}  // namespace ellorb
