#include "ellorb/orbits.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "ellorb/errors.hpp"
#include "ellorb/quadrature.hpp"

namespace ellorb {

namespace {

constexpr double kPi = 3.14159265358979323846;
const cplx kIPi(0.0, kPi);

// Preimage of a real value s under wp: real for s above the branch point,
// on the period-rectangle boundary otherwise.
cplx invert_wp(double s, const WeierstrassContext& ctx) {
    if (s >= ctx.e_top) return cplx(wp_inverse(s, ctx), 0.0);
    return wp_inverse_complex(s, ctx);
}

// Continuous branch of log(sigma(z' - q)/sigma(z' + q)) followed along the
// real segment z': 0 -> z, starting from the exact value log(-1) = +i pi at
// z' = 0 (sigma is odd).  The modulus never vanishes for q off the real
// lattice, so only the argument needs unwrapping.
cplx log_sigma_ratio(double z, cplx q, const WeierstrassContext& ctx) {
    if (z == 0.0) return kIPi;
    const int n = std::max(
        16, static_cast<int>(std::ceil(std::abs(z) / (ctx.lattice_min / 8))));
    double arg_prev = kPi;  // principal arg of -1, chosen branch at z' = 0
    double arg_cont = kPi;
    cplx w(0.0, 0.0);
    for (int k = 1; k <= n; ++k) {
        const double zk = z * k / n;
        w = sigma(cplx(zk, 0.0) - q, ctx) / sigma(cplx(zk, 0.0) + q, ctx);
        const double a = std::arg(w);
        double d = a - arg_prev;
        while (d > kPi) d -= 2 * kPi;
        while (d <= -kPi) d += 2 * kPi;
        arg_cont += d;
        arg_prev = a;
    }
    return cplx(std::log(std::abs(w)), arg_cont);
}

double real_checked(cplx v, const char* what) {
    if (std::abs(v.imag()) > 1e-9 * (1.0 + std::abs(v.real())))
        throw BranchError(std::string(what) +
                          ": residual imaginary part " +
                          std::to_string(v.imag()));
    return v.real();
}

// Binomial coefficients from ascending power-basis coefficients.
QuarticCoeffs binomial_from_power(const std::array<double, 5>& c) {
    return {c[4], c[3] / 4, c[2] / 6, c[1] / 4, c[0]};
}

}  // namespace

KLMNOrbitMap KLMNOrbitMap::create(const KLMNParams& p, double u0) {
    KLMNOrbitMap m;
    m.params = p;
    m.u0 = u0;
    m.f = as_quartic(p);
    const double scale =
        std::max({1.0, std::abs(m.f.a0) * std::pow(u0, 4),
                  std::abs(4 * m.f.a3 * u0), std::abs(m.f.a4)});
    if (std::abs(m.f(u0)) > 1e-8 * scale)
        throw DomainError("KLMNOrbitMap: u0 is not a root of f");
    if (u0 <= 0.0) throw DomainError("KLMNOrbitMap: u0 must be positive");
    m.f0p = m.f.deriv(u0, 1);
    m.f0pp = m.f.deriv(u0, 2);
    if (p.B == 0.0) {
        if (p.C == 0.0)
            throw DomainError("KLMNOrbitMap: B = C = 0 has no angular motion");
        m.kepler = true;
        m.omega = kPi / std::abs(p.C);
        return m;
    }
    const QuarticInvariants inv = quartic_invariants(m.f);
    m.ctx = WeierstrassContext::create(inv.g2, inv.g3);
    m.omega = m.ctx.omega;
    m.z0 = invert_wp(m.f0pp / 24, m.ctx);
    m.alpha = invert_wp(m.f0pp / 24 - m.f0p / (4 * u0), m.ctx);
    m.pp_z0 = wp_prime(m.z0, m.ctx);
    m.zeta_z0 = zeta(m.z0, m.ctx);
    m.wp_a = cplx(m.f0pp / 24 - m.f0p / (4 * u0), 0.0);
    m.pp_a = wp_prime(m.alpha, m.ctx);
    m.zeta_a = zeta(m.alpha, m.ctx);
    return m;
}

double KLMNOrbitMap::u_of_z(double z) const {
    if (kepler) {
        const double uc = params.mu / (params.C * params.C);
        return uc + (u0 - uc) * std::cos(params.C * z);
    }
    if (z == 0.0) return u0;
    const double x = wp(cplx(z, 0.0), ctx).real() - f0pp / 24;
    if (x == 0.0) throw ZeroDenominator("u_of_z: wp(z) = f''(u0)/24");
    return u0 + f0p / (4 * x);
}

double KLMNOrbitMap::theta_of_z(double z) const {
    if (kepler) return params.C * z;
    if (z == 0.0) return 0.0;
    const cplx bracket =
        2.0 * zeta_z0 * z + log_sigma_ratio(z, z0, ctx) - kIPi;
    const cplx th = (params.C - params.B * u0) * z -
                    (params.B * f0p / (4.0 * pp_z0)) * bracket;
    return real_checked(th, "theta_of_z");
}

double KLMNOrbitMap::time_of_z(double z) const {
    if (z == 0.0) return 0.0;
    if (kepler) {
        return integrate(
            [&](double s) {
                const double u = u_of_z(s);
                return 1.0 / (u * u);
            },
            0.0, z, 1e-12);
    }
    const cplx lam = 2.0 * zeta_a * z + log_sigma_ratio(z, alpha, ctx) - kIPi;
    const cplx i1 = lam / pp_a;
    const cplx ppp_a = 6.0 * wp_a * wp_a - ctx.g2 / 2.0;
    const cplx zsum =
        zeta(cplx(z, 0.0) - alpha, ctx) + zeta(cplx(z, 0.0) + alpha, ctx);
    const cplx i2 = (-(ppp_a / (pp_a * pp_a)) * lam +
                     (-2.0 * wp_a * z - zsum) / pp_a) /
                    pp_a;
    const cplx t = (z - f0p / (2 * u0) * i1 +
                    f0p * f0p / (16 * u0 * u0) * i2) /
                   (u0 * u0);
    return real_checked(t, "time_of_z");
}

double KLMNOrbitMap::time_of_z_expanded(double z) const {
    if (z == 0.0) return 0.0;
    if (kepler) return time_of_z(z);
    // Same antiderivative with the z, sigma-log and zeta-pair terms
    // collected separately.
    const cplx ppp_a = 6.0 * wp_a * wp_a - ctx.g2 / 2.0;
    const double b1 = f0p / (2 * u0);
    const double b2 = f0p * f0p / (16 * u0 * u0);
    const cplx pp2 = pp_a * pp_a, pp3 = pp2 * pp_a;
    const cplx logpart = log_sigma_ratio(z, alpha, ctx) - kIPi;
    const cplx zsum =
        zeta(cplx(z, 0.0) - alpha, ctx) + zeta(cplx(z, 0.0) + alpha, ctx);
    const cplx coef_z = 1.0 - 2.0 * b1 * zeta_a / pp_a -
                        b2 * (2.0 * zeta_a * ppp_a / pp3 + 2.0 * wp_a / pp2);
    const cplx coef_log = -b1 / pp_a - b2 * ppp_a / pp3;
    const cplx coef_zsum = -b2 / pp2;
    const cplx t =
        (coef_z * z + coef_log * logpart + coef_zsum * zsum) / (u0 * u0);
    return real_checked(t, "time_of_z_expanded");
}

double klmn_theta_of_z(double z, const KLMNParams& p, double u0) {
    return KLMNOrbitMap::create(p, u0).theta_of_z(z);
}

double physical_time(double z, const KLMNParams& p, double u0) {
    return KLMNOrbitMap::create(p, u0).time_of_z(z);
}

double physical_time_expanded(double z, const KLMNParams& p, double u0) {
    return KLMNOrbitMap::create(p, u0).time_of_z_expanded(z);
}

double klmn_delta_theta(const KLMNParams& p, double u0) {
    const KLMNOrbitMap m = KLMNOrbitMap::create(p, u0);
    return m.theta_of_z(m.omega);
}

std::optional<std::pair<long, long>> klmn_periodicity(const KLMNParams& p,
                                                      double u0, long q_max) {
    const double x = klmn_delta_theta(p, u0) / kPi;
    // Continued-fraction convergents p_k/q_k of x; accept the first with
    // |x q - p| < 1e-9 q^2.
    double frac = x;
    long p_prev = 1, q_prev = 0;
    long p_cur = static_cast<long>(std::floor(frac));
    long q_cur = 1;
    for (int it = 0; it < 64; ++it) {
        if (q_cur > q_max) break;
        const double err = std::abs(x * q_cur - p_cur);
        if (err < 1e-9 * q_cur * q_cur)
            return std::make_pair(p_cur, q_cur);
        const double rem = frac - std::floor(frac);
        if (rem < 1e-15) break;
        frac = 1.0 / rem;
        const long a = static_cast<long>(std::floor(frac));
        const long p_next = a * p_cur + p_prev;
        const long q_next = a * q_cur + q_prev;
        p_prev = p_cur;
        q_prev = q_cur;
        p_cur = p_next;
        q_cur = q_next;
    }
    return std::nullopt;
}

MotionCharacter motion_character(const KLMNParams& p, double u_lo, double u_hi,
                                 double tol) {
    if (u_hi <= u_lo) throw OrderingError("motion_character: u_lo >= u_hi");
    if (p.B == 0.0) return MotionCharacter::Sinusoidal;
    const double u_star = p.C / p.B;  // transverse velocity zero
    const double scale = std::max({1.0, std::abs(u_lo), std::abs(u_hi)});
    if (std::abs(u_star - u_lo) < tol * scale ||
        std::abs(u_star - u_hi) < tol * scale)
        return MotionCharacter::Cusped;
    if (u_star > u_lo && u_star < u_hi) return MotionCharacter::Loopy;
    return MotionCharacter::Sinusoidal;
}

OrbitTrace klmn_orbit_trace(const KLMNParams& p, double u0, int n) {
    if (n < 2) throw DomainError("klmn_orbit_trace: need n >= 2");
    const KLMNOrbitMap m = KLMNOrbitMap::create(p, u0);
    OrbitTrace tr;
    tr.samples.reserve(n + 1);
    const double h_fd = 1e-4 * m.omega;
    for (int i = 0; i <= n; ++i) {
        const double z = m.omega * i / n;
        OrbitSample s;
        s.z = z;
        s.r = 1.0 / m.u_of_z(z);
        s.theta = m.theta_of_z(z);
        s.t = m.time_of_z(z);
        tr.samples.push_back(s);
        if (i > 0 && i < n) {
            // rdot = -du/dz along the orbit; check rdot^2 = f(u) with a
            // fourth-order central difference.
            const double du =
                (8 * (m.u_of_z(z + h_fd) - m.u_of_z(z - h_fd)) -
                 (m.u_of_z(z + 2 * h_fd) - m.u_of_z(z - 2 * h_fd))) /
                (12 * h_fd);
            const double res = std::abs(du * du - m.f(m.u_of_z(z)));
            tr.invariant_drift = std::max(tr.invariant_drift, res);
        }
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Two-centre problem.

namespace {

// Ascending power coefficients of (s2 t^2 + s1 t + s0)(r2 t^2 + r1 t + r0).
std::array<double, 5> quad_product(double r0, double r1, double r2, double s0,
                                   double s1, double s2) {
    return {r0 * s0, r0 * s1 + r1 * s0, r0 * s2 + r1 * s1 + r2 * s0,
            r1 * s2 + r2 * s1, r2 * s2};
}

}  // namespace

QuarticCoeffs two_centre_qxi(const TwoCentreParams& p) {
    if (p.c <= 0.0) throw DomainError("two_centre_qxi: need c > 0");
    const double b = (p.mu1 + p.mu2) / p.c;
    return binomial_from_power(quad_product(-1, 0, 1, -p.gamma, b, p.E));
}

QuarticCoeffs two_centre_qeta(const TwoCentreParams& p) {
    if (p.c <= 0.0) throw DomainError("two_centre_qeta: need c > 0");
    const double b = (p.mu1 - p.mu2) / p.c;
    return binomial_from_power(quad_product(1, 0, -1, p.gamma, b, -p.E));
}

TwoCentreOrbitMap TwoCentreOrbitMap::create(const TwoCentreParams& p,
                                            double t0_xi, double t0_eta) {
    TwoCentreOrbitMap m;
    m.params = p;
    m.qxi = two_centre_qxi(p);
    m.qeta = two_centre_qeta(p);
    m.t0_xi = t0_xi;
    m.t0_eta = t0_eta;
    const double scale =
        std::max({1.0, std::abs(p.E), std::abs(p.gamma),
                  (p.mu1 + p.mu2) / p.c});
    if (std::abs(m.qxi(t0_xi)) > 1e-8 * scale)
        throw DomainError("TwoCentreOrbitMap: t0_xi is not a root of Q_xi");
    if (std::abs(m.qeta(t0_eta)) > 1e-8 * scale)
        throw DomainError("TwoCentreOrbitMap: t0_eta is not a root of Q_eta");
    m.xi_frozen = std::abs(m.qxi.deriv(t0_xi, 1)) < 1e-9 * scale;
    if (!m.xi_frozen) {
        const QuarticInvariants ix = quartic_invariants(m.qxi);
        m.cxi = WeierstrassContext::create(ix.g2, ix.g3);
    }
    const QuarticInvariants ie = quartic_invariants(m.qeta);
    m.ceta = WeierstrassContext::create(ie.g2, ie.g3);
    return m;
}

std::pair<double, double> TwoCentreOrbitMap::state(double zeta) const {
    // At a lattice point wp has a pole and the coordinate sits exactly at
    // its apse value t0.
    const auto leg = [](double z, double t0, const QuarticCoeffs& q,
                        const WeierstrassContext& ctx) {
        if (z == 0.0) return t0;
        double w;
        try {
            w = wp(cplx(z, 0.0), ctx).real();
        } catch (const PoleAt&) {
            return t0;
        }
        return t0 + q.deriv(t0, 1) / (4 * (w - q.deriv(t0, 2) / 24));
    };
    double ch = xi_frozen ? t0_xi : leg(zeta, t0_xi, qxi, cxi);
    double cs = leg(zeta + eta_shift, t0_eta, qeta, ceta);
    if (std::abs(cs) > 1.0 + 1e-9)
        throw RangeError("TwoCentreOrbitMap: |cos eta| = " +
                         std::to_string(std::abs(cs)));
    cs = std::clamp(cs, -1.0, 1.0);
    if (ch < 1.0) {
        if (ch < 1.0 - 1e-9)
            throw RangeError("TwoCentreOrbitMap: cosh xi = " +
                             std::to_string(ch));
        ch = 1.0;
    }
    return {ch, cs};
}

double TwoCentreOrbitMap::time_of(double zeta, double abs_tol) const {
    if (zeta == 0.0) return 0.0;
    const double c = params.c;
    return integrate(
        [&](double s) {
            const auto [ch, cs] = state(s);
            return c / std::sqrt(2.0) * (ch * ch - cs * cs);
        },
        0.0, zeta, abs_tol);
}

TwoCentreEllipse two_centre_ellipse(const TwoCentreParams& p) {
    const double msum = p.mu1 + p.mu2;
    if (msum <= 0.0 || p.c <= 0.0)
        throw DomainError("two_centre_ellipse: need mu1 + mu2 > 0, c > 0");
    // Repeated root of the xi quadratic: discriminant of
    // E t^2 + (msum/c) t - gamma must vanish, and the root must reach
    // cosh xi0 >= 1.
    const double b = msum / p.c;
    const double disc = b * b + 4 * p.E * p.gamma;
    const double scale = std::max({b * b, std::abs(4 * p.E * p.gamma), 1.0});
    if (std::abs(disc) > 1e-9 * scale)
        throw NoEllipse("two_centre_ellipse: xi quadratic has distinct roots");
    const double ch0 = 2 * p.c * p.gamma / msum;
    if (ch0 < 1.0)
        throw NoEllipse("two_centre_ellipse: cosh xi0 = " +
                        std::to_string(ch0) + " < 1");
    TwoCentreEllipse out;
    out.xi0 = std::acosh(ch0);
    out.A = p.c * ch0;
    out.e = 1.0 / ch0;
    out.E_ellipse = -msum / (2 * out.A);
    return out;
}

BonnetSplit bonnet_split(const TwoCentreParams& p, double eta) {
    const TwoCentreEllipse ell = two_centre_ellipse(p);
    const double ch0 = std::cosh(ell.xi0);
    const double cs = std::cos(eta);
    const double r1 = p.c * (ch0 - cs);
    const double r2 = p.c * (ch0 + cs);
    if (r1 <= 0.0 || r2 <= 0.0)
        throw DomainError("bonnet_split: degenerate ellipse touches a focus");
    BonnetSplit out;
    out.v2_centre1 = 2 * (-p.mu1 / (2 * ell.A) + p.mu1 / r1);
    out.v2_centre2 = 2 * (-p.mu2 / (2 * ell.A) + p.mu2 / r2);
    // Total speed from the separated closed form: with xi frozen the whole
    // kinetic energy sits in eta, v^2 = 2 quad_eta(cos eta)/(cosh^2 xi0 -
    // cos^2 eta).
    const double beta = (p.mu1 - p.mu2) / p.c;
    const double quad_eta = -p.E * cs * cs + beta * cs + p.gamma;
    out.v2_total = 2 * quad_eta / (ch0 * ch0 - cs * cs);
    return out;
}

}  // namespace ellorb
