#include "ellorb/elliptic.hpp"

#include <algorithm>
#include <cmath>

#include "ellorb/errors.hpp"
#include "ellorb/polyroots.hpp"
#include "ellorb/quadrature.hpp"

namespace ellorb {

namespace {

constexpr int kLaurentTerms = 40;  // c_2 .. c_39
constexpr double kSafeFraction = 0.4;  // series used for |z| <= frac * lattice_min

double modular_cubic(double g2, double g3, double t) {
    return ((4.0 * t) * t - g2) * t - g3;
}

}  // namespace

double QuarticCoeffs::operator()(double x) const {
    return (((a0 * x + 4.0 * a1) * x + 6.0 * a2) * x + 4.0 * a3) * x + a4;
}

cplx QuarticCoeffs::operator()(cplx x) const {
    return (((a0 * x + 4.0 * a1) * x + 6.0 * a2) * x + 4.0 * a3) * x + a4;
}

double QuarticCoeffs::deriv(double x, int k) const {
    switch (k) {
        case 0:
            return (*this)(x);
        case 1:
            return ((4.0 * a0 * x + 12.0 * a1) * x + 12.0 * a2) * x + 4.0 * a3;
        case 2:
            return (12.0 * a0 * x + 24.0 * a1) * x + 12.0 * a2;
        case 3:
            return 24.0 * a0 * x + 24.0 * a1;
        case 4:
            return 24.0 * a0;
        default:
            throw DomainError("QuarticCoeffs::deriv: k must be 0..4");
    }
}

std::array<double, 5> QuarticCoeffs::power_basis() const {
    return {a4, 4.0 * a3, 6.0 * a2, 4.0 * a1, a0};
}

QuarticInvariants quartic_invariants(const QuarticCoeffs& f) {
    QuarticInvariants inv;
    inv.g2 = f.a0 * f.a4 - 4.0 * f.a1 * f.a3 + 3.0 * f.a2 * f.a2;
    // Determinant of the symmetric catalecticant matrix.
    inv.g3 = f.a0 * (f.a2 * f.a4 - f.a3 * f.a3) -
             f.a1 * (f.a1 * f.a4 - f.a2 * f.a3) +
             f.a2 * (f.a1 * f.a3 - f.a2 * f.a2);
    inv.delta = inv.g2 * inv.g2 * inv.g2 - 27.0 * inv.g3 * inv.g3;
    return inv;
}

std::array<cplx, 3> cubic_roots(double g2, double g3) {
    // 4 t^3 - g2 t - g3 = 0  <=>  t^3 - (g2/4) t - (g3/4) = 0.
    auto roots = depressed_cubic_roots(-g2 / 4.0, -g3 / 4.0);
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    double scale = 0.0;
    for (const auto& r : roots) scale = std::max(scale, std::abs(r));
    const double tol = 1e-9 * std::max(scale, 1e-150);
    if (std::abs(roots[0] - roots[1]) < tol ||
        std::abs(roots[1] - roots[2]) < tol ||
        std::abs(roots[0] - roots[2]) < tol)
        throw DegenerateCubic("modular cubic has a repeated root");
    return roots;
}

WeierstrassContext WeierstrassContext::create(double g2, double g3) {
    WeierstrassContext ctx;
    ctx.g2 = g2;
    ctx.g3 = g3;
    ctx.delta = g2 * g2 * g2 - 27.0 * g3 * g3;
    ctx.e = cubic_roots(g2, g3);

    // Largest (resp. smallest) real root bounds the positive (negative)
    // branch of the cubic on the real axis.
    if (ctx.delta > 0.0) {
        ctx.e_top = ctx.e[0].real();
    } else {
        // The single real root is the one with negligible imaginary part.
        ctx.e_top = ctx.e[0].real();
        double best = std::abs(ctx.e[0].imag());
        for (const auto& r : ctx.e) {
            if (std::abs(r.imag()) < best) {
                best = std::abs(r.imag());
                ctx.e_top = r.real();
            }
        }
    }

    const std::vector<double> q_poly = {-g3, -g2, 0.0, 4.0};
    const std::vector<double> mq_poly = {g3, g2, 0.0, -4.0};
    ctx.omega = integrate_inv_sqrt_to_inf(q_poly, ctx.e_top, 1e-13);

    const double e_bottom =
        (ctx.delta > 0.0) ? ctx.e[2].real() : ctx.e_top;
    ctx.omega_im = integrate_inv_sqrt_from_minus_inf(mq_poly, e_bottom, 1e-13);

    // Conservative estimate of the shortest nonzero lattice vector.  With
    // three real branch roots the lattice is rectangular with generators
    // 2*omega and 2i*omega_im; otherwise it is rhombic and omega_im is the
    // imaginary half-period of the dual invariants (g2, -g3), so the lattice
    // contains 2*omega and omega +/- i*omega_im scale vectors.
    if (ctx.delta > 0.0)
        ctx.lattice_min = 2.0 * std::min(ctx.omega, ctx.omega_im);
    else
        ctx.lattice_min = std::min(2.0 * ctx.omega, ctx.omega_im);

    // Laurent coefficients of wp about the origin:
    //   wp(z) = z^-2 + sum_{k>=2} c_k z^{2k-2},
    //   c_2 = g2/20, c_3 = g3/28,
    //   c_k = 3/((2k+1)(k-3)) sum_{m=2}^{k-2} c_m c_{k-m}.
    ctx.c.assign(kLaurentTerms, 0.0);
    ctx.c[2] = g2 / 20.0;
    ctx.c[3] = g3 / 28.0;
    for (int k = 4; k < kLaurentTerms; ++k) {
        double s = 0.0;
        for (int m = 2; m <= k - 2; ++m) s += ctx.c[m] * ctx.c[k - m];
        ctx.c[k] = 3.0 * s / ((2.0 * k + 1.0) * (k - 3.0));
    }
    return ctx;
}

double half_period(double g2, double g3) {
    return WeierstrassContext::create(g2, g3).omega;
}

namespace {

struct LatticeValues {
    cplx p, pp, zt, sg;
};

// All four lattice functions from the Laurent series; valid for small |z|.
LatticeValues series_values(cplx z, const WeierstrassContext& ctx) {
    const cplx z2 = z * z;
    cplx p = 0.0, pp = 0.0, zt_sum = 0.0, ln_sum = 0.0;
    cplx zpow = 1.0;  // z^{2k-4} running power, starts at k=2 -> z^0
    for (int k = 2; k < kLaurentTerms; ++k) {
        const double ck = ctx.c[k];
        const cplx term_p = ck * zpow * z2;  // c_k z^{2k-2}
        p += term_p;
        pp += (2.0 * k - 2.0) * ck * zpow * z;       // d/dz of term_p
        zt_sum += term_p * z / (2.0 * k - 1.0);      // c_k z^{2k-1}/(2k-1)
        ln_sum += term_p * z2 / ((2.0 * k) * (2.0 * k - 1.0));
        zpow *= z2;
    }
    LatticeValues v;
    v.p = 1.0 / z2 + p;
    v.pp = -2.0 / (z2 * z) + pp;
    v.zt = 1.0 / z - zt_sum;
    v.sg = z * std::exp(-ln_sum);
    return v;
}

// One duplication step z -> 2z using exact identities:
//   wp(2z)  = (wp''/(2wp'))^2 - 2wp
//   wp'(2z) = A A' - wp',  A = wp''/(2wp'), A' = (wp' wp''' - wp''^2)/(2wp'^2)
//   zeta(2z) = 2 zeta(z) + A
//   sigma(2z) = -sigma(z)^4 wp'(z)
LatticeValues duplicate(const LatticeValues& v, const WeierstrassContext& ctx) {
    const cplx p = v.p, pp = v.pp;
    const cplx p2d = 6.0 * p * p - ctx.g2 / 2.0;  // wp''
    const cplx p3d = 12.0 * p * pp;               // wp'''
    if (std::abs(pp) == 0.0)
        throw PoleAt(cplx(0.0, 0.0));  // cannot happen off the lattice
    const cplx A = p2d / (2.0 * pp);
    const cplx Ap = (pp * p3d - p2d * p2d) / (2.0 * pp * pp);
    LatticeValues w;
    w.p = A * A - 2.0 * p;
    w.pp = A * Ap - pp;
    w.zt = 2.0 * v.zt + A;
    w.sg = -v.sg * v.sg * v.sg * v.sg * pp;
    return w;
}

LatticeValues lattice_values(cplx z, const WeierstrassContext& ctx) {
    const double r = std::abs(z);
    if (r < 1e-12 * ctx.lattice_min) throw PoleAt(z);
    // Real-axis lattice points 2 m omega are the ones a real-branch caller
    // can hit; reject them explicitly.
    if (std::abs(z.imag()) < 1e-12 * ctx.lattice_min) {
        const double d =
            z.real() - 2.0 * ctx.omega * std::round(z.real() / (2.0 * ctx.omega));
        if (std::abs(d) < 1e-12 * ctx.lattice_min && r > ctx.omega * 0.5)
            throw PoleAt(z);
    }
    const double r_safe = kSafeFraction * ctx.lattice_min;
    int n = 0;
    double rr = r;
    while (rr > r_safe) {
        rr *= 0.5;
        ++n;
    }
    LatticeValues v = series_values(z / std::pow(2.0, n), ctx);
    for (int i = 0; i < n; ++i) v = duplicate(v, ctx);
    return v;
}

}  // namespace

cplx wp(cplx z, const WeierstrassContext& ctx) { return lattice_values(z, ctx).p; }
cplx wp_prime(cplx z, const WeierstrassContext& ctx) {
    return lattice_values(z, ctx).pp;
}
cplx zeta(cplx z, const WeierstrassContext& ctx) {
    return lattice_values(z, ctx).zt;
}
cplx sigma(cplx z, const WeierstrassContext& ctx) {
    return lattice_values(z, ctx).sg;
}

double wp_inverse(double s, const WeierstrassContext& ctx) {
    if (s < ctx.e_top - 1e-12 * std::max(1.0, std::abs(ctx.e_top)))
        throw OutOfBranch("wp_inverse: argument below the branch point");
    if (s <= ctx.e_top) return ctx.omega;
    return integrate_inv_sqrt_to_inf({-ctx.g3, -ctx.g2, 0.0, 4.0}, s, 1e-13);
}

namespace {

// Bisection for wp(z(y)) = s along a line where wp is real and monotone.
double bisect_wp(const WeierstrassContext& ctx, double s, double y_lo,
                 double y_hi, const std::function<cplx(double)>& z_of_y) {
    double f_lo = wp(z_of_y(y_lo), ctx).real() - s;
    double f_hi = wp(z_of_y(y_hi), ctx).real() - s;
    if (f_lo * f_hi > 0.0)
        throw BranchError("wp_inverse_complex: target not bracketed");
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (y_lo + y_hi);
        const double f_mid = wp(z_of_y(mid), ctx).real() - s;
        if (f_lo * f_mid <= 0.0) {
            y_hi = mid;
            f_hi = f_mid;
        } else {
            y_lo = mid;
            f_lo = f_mid;
        }
        if (y_hi - y_lo < 1e-16 * std::max(1.0, std::abs(y_hi))) break;
    }
    return 0.5 * (y_lo + y_hi);
}

}  // namespace

cplx wp_inverse_complex(double s, const WeierstrassContext& ctx) {
    if (s >= ctx.e_top) return cplx(wp_inverse(s, ctx), 0.0);
    const double y_eps = 1e-9 * ctx.omega_im;
    if (ctx.delta > 0.0) {
        const double e1 = ctx.e[0].real(), e2 = ctx.e[1].real(),
                     e3 = ctx.e[2].real();
        const double tol = 1e-10 * std::max({1.0, std::abs(e1), std::abs(e3)});
        if (s >= e2 - tol) {
            // wp(omega + i y) decreases from e1 to e2 as y: 0 -> omega_im.
            const double y =
                bisect_wp(ctx, std::clamp(s, e2, e1), y_eps, ctx.omega_im,
                          [&](double t) { return cplx(ctx.omega, t); });
            return cplx(ctx.omega, y);
        }
        if (s <= e3 + tol) {
            // wp(i y) increases from -inf to e3 as y: 0 -> omega_im.
            const double y =
                bisect_wp(ctx, std::min(s, e3), y_eps, ctx.omega_im,
                          [&](double t) { return cplx(0.0, t); });
            return cplx(0.0, y);
        }
        // Remaining band (e3, e2): preimage on the top edge of the period
        // rectangle, wp(x + i omega_im) increasing from e3 to e2 as
        // x: 0 -> omega.
        {
            const double x_eps = 1e-9 * ctx.omega;
            const double x = bisect_wp(
                ctx, s, x_eps, ctx.omega - x_eps,
                [&](double t) { return cplx(t, ctx.omega_im); });
            return cplx(x, ctx.omega_im);
        }
    }
    // One real branch root: wp(i y) covers (-inf, e_top] as y: 0 -> omega_im.
    const double y = bisect_wp(ctx, s, y_eps, ctx.omega_im,
                               [&](double t) { return cplx(0.0, t); });
    return cplx(0.0, y);
}

namespace {

// Carlson symmetric integrals, duplication algorithm.
double carlson_rf(double x, double y, double z) {
    const double tol = 1e-4;
    for (int i = 0; i < 200; ++i) {
        const double lam =
            std::sqrt(x) * std::sqrt(y) + std::sqrt(y) * std::sqrt(z) +
            std::sqrt(z) * std::sqrt(x);
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        const double mu = (x + y + z) / 3.0;
        const double eps = std::max({std::abs(x - mu), std::abs(y - mu),
                                     std::abs(z - mu)}) /
                           mu;
        if (eps < tol) {
            const double dx = 1.0 - x / mu, dy = 1.0 - y / mu,
                         dz = 1.0 - z / mu;
            const double e2 = dx * dy + dy * dz + dz * dx;
            const double e3 = dx * dy * dz;
            return (1.0 - e2 / 10.0 + e3 / 14.0 + e2 * e2 / 24.0 -
                    3.0 * e2 * e3 / 44.0) /
                   std::sqrt(mu);
        }
    }
    throw ConvergenceError("carlson_rf failed to converge");
}

double carlson_rd(double x, double y, double z) {
    const double tol = 1e-4;
    double sum = 0.0, fac = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double lam =
            std::sqrt(x) * std::sqrt(y) + std::sqrt(y) * std::sqrt(z) +
            std::sqrt(z) * std::sqrt(x);
        sum += fac / (std::sqrt(z) * (z + lam));
        fac *= 0.25;
        x = 0.25 * (x + lam);
        y = 0.25 * (y + lam);
        z = 0.25 * (z + lam);
        const double mu = (x + y + 3.0 * z) / 5.0;
        const double eps = std::max({std::abs(x - mu), std::abs(y - mu),
                                     std::abs(z - mu)}) /
                           mu;
        if (eps < tol) {
            const double dx = 1.0 - x / mu, dy = 1.0 - y / mu,
                         dz = 1.0 - z / mu;
            const double ea = dx * dy, eb = dz * dz;
            const double ec = ea - eb, ed = ea - 6.0 * eb;
            const double ee = ed + 2.0 * ec;
            return 3.0 * sum +
                   fac *
                       (1.0 + ed * (-3.0 / 14.0 + 9.0 / 88.0 * ed -
                                    4.5 / 26.0 * dz * ee) +
                        dz * (ee / 6.0 + dz * (-9.0 / 22.0 * ec +
                                               3.0 / 26.0 * dz * ea))) /
                       (mu * std::sqrt(mu));
        }
    }
    throw ConvergenceError("carlson_rd failed to converge");
}

}  // namespace

double legendre_F(double phi, double k) {
    if (phi < 0.0) return -legendre_F(-phi, k);
    if (phi > M_PI + 1e-12) throw DomainError("legendre_F: phi outside [0, pi]");
    if (k < 0.0 || k > 1.0) throw DomainError("legendre_F: modulus outside [0,1]");
    if (phi > M_PI / 2.0 + 1e-15)
        return 2.0 * legendre_F(M_PI / 2.0, k) - legendre_F(M_PI - phi, k);
    phi = std::min(phi, M_PI / 2.0);
    const double s = std::sin(phi), c = std::cos(phi);
    if (k == 1.0) {
        if (phi >= M_PI / 2.0)
            throw DomainError("legendre_F: complete integral diverges at k=1");
        return std::asinh(std::tan(phi));
    }
    return s * carlson_rf(c * c, 1.0 - k * k * s * s, 1.0);
}

double legendre_E(double phi, double k) {
    if (phi < 0.0) return -legendre_E(-phi, k);
    if (phi > M_PI + 1e-12) throw DomainError("legendre_E: phi outside [0, pi]");
    if (k < 0.0 || k > 1.0) throw DomainError("legendre_E: modulus outside [0,1]");
    if (phi > M_PI / 2.0 + 1e-15)
        return 2.0 * legendre_E(M_PI / 2.0, k) - legendre_E(M_PI - phi, k);
    phi = std::min(phi, M_PI / 2.0);
    const double s = std::sin(phi), c = std::cos(phi);
    if (k == 1.0) return s;
    const double q = 1.0 - k * k * s * s;
    return s * carlson_rf(c * c, q, 1.0) -
           (k * k / 3.0) * s * s * s * carlson_rd(c * c, q, 1.0);
}

double legendre_K(double k) { return legendre_F(M_PI / 2.0, k); }
double legendre_Ecomp(double k) { return legendre_E(M_PI / 2.0, k); }

}  // namespace ellorb
