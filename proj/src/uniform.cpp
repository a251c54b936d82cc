#include "ellorb/uniform.hpp"

#include <cmath>

#include "ellorb/errors.hpp"
#include "ellorb/quadrature.hpp"

namespace ellorb {

WellTimeMap WellTimeMap::create(const QuarticCoeffs& f, double a,
                                int sqrt_sign) {
    WellTimeMap map;
    map.quartic = f;
    map.a = a;
    map.sqrt_sign = sqrt_sign;
    double scale = 0.0;
    for (double v : {f.a0, 4.0 * f.a1, 6.0 * f.a2, 4.0 * f.a3, f.a4})
        scale = std::max(scale, std::abs(v) * std::max(1.0, std::pow(a, 4)));
    map.is_root = std::abs(f(a)) < 1e-10 * std::max(scale, 1e-150);
    const auto inv = quartic_invariants(f);
    map.ctx = WeierstrassContext::create(inv.g2, inv.g3);
    return map;
}

double well_time(double u, const WellTimeMap& map) {
    if (u == map.a) return 0.0;
    if (u < map.a) throw DomainError("well_time: u < base point");
    const auto pb = map.quartic.power_basis();
    return integrate_inv_sqrt({pb.begin(), pb.end()}, map.a, u, 1e-12);
}

double u_from_z_root(double z, const WellTimeMap& map) {
    const QuarticCoeffs& f = map.quartic;
    const double den =
        wp(cplx(z, 0.0), map.ctx).real() - f.deriv(map.a, 2) / 24.0;
    if (std::abs(den) < 1e-12 * std::max(1.0, std::abs(f.deriv(map.a, 2))))
        throw PoleAt(cplx(z, 0.0));
    return map.a + f.deriv(map.a, 1) / (4.0 * den);
}

namespace {

struct BaseData {
    double fa, f1, f2, f3, f4, sfa;
};

BaseData base_data(const WellTimeMap& map) {
    const QuarticCoeffs& f = map.quartic;
    BaseData b;
    b.fa = f(map.a);
    b.f1 = f.deriv(map.a, 1);
    b.f2 = f.deriv(map.a, 2);
    b.f3 = f.deriv(map.a, 3);
    b.f4 = f.deriv(map.a, 4);
    if (b.fa < 0.0)
        throw DomainError("u_from_z: f(a) < 0, no real sqrt branch");
    b.sfa = map.sqrt_sign * std::sqrt(std::max(b.fa, 0.0));
    return b;
}

}  // namespace

double u_from_z_biermann(double z, const WellTimeMap& map) {
    const BaseData b = base_data(map);
    const double p = wp(cplx(z, 0.0), map.ctx).real();
    const double pp = wp_prime(cplx(z, 0.0), map.ctx).real();
    const double X = p - b.f2 / 24.0;
    const double num = b.sfa * pp + 0.5 * X * b.f1 + b.fa * b.f3 / 24.0;
    const double den = 2.0 * X * X - b.fa * b.f4 / 48.0;
    const double scale = std::max({1.0, p * p, std::abs(b.fa * b.f4)});
    if (std::abs(den) < 1e-10 * scale)
        throw ZeroDenominator("u_from_z_biermann: denominator ~ 0");
    return map.a + num / den;
}

double u_from_z_mordell(double z, const WellTimeMap& map) {
    const BaseData b = base_data(map);
    const double p = wp(cplx(z, 0.0), map.ctx).real();
    const double pp = wp_prime(cplx(z, 0.0), map.ctx).real();
    const double num = 8.0 * (12.0 * p + b.f2) * b.fa - 6.0 * b.f1 * b.f1;
    const double den = 48.0 * b.sfa * pp - (24.0 * p - b.f2) * b.f1 -
                       2.0 * b.fa * b.f3;
    const double scale =
        std::max({1.0, std::abs(pp), std::abs(p * b.f1), std::abs(b.fa * b.f3)});
    if (std::abs(den) < 1e-10 * scale)
        throw ZeroDenominator("u_from_z_mordell: denominator ~ 0");
    return map.a + num / den;
}

double u_from_z(double z, const WellTimeMap& map) {
    if (map.is_root) return u_from_z_root(z, map);
    try {
        return u_from_z_biermann(z, map);
    } catch (const ZeroDenominator&) {
        return u_from_z_mordell(z, map);
    }
}

namespace {

// F(t) = f(a) + f'(a)(t-a)/2 + f''(a)(t-a)^2/12: the symmetric
// quadri-quadric of the closed-form derivation, written about a.
double quadri_quadric(const BaseData& b, double dt) {
    return b.fa + 0.5 * b.f1 * dt + b.f2 * dt * dt / 12.0;
}

}  // namespace

double s_substitution(double t, const WellTimeMap& map) {
    if (t == map.a) throw DomainError("s_substitution: t equals base point");
    const BaseData b = base_data(map);
    const double ft = map.quartic(t);
    if (ft < 0.0) throw DomainError("s_substitution: f(t) < 0");
    const double dt = t - map.a;
    // The branch pairing +sqrt(f(t))sqrt(f(a)) is the one with
    // s -> infinity as t -> a, matching wp(z -> 0).
    return (quadri_quadric(b, dt) + std::sqrt(ft) * std::sqrt(b.fa)) /
           (2.0 * dt * dt);
}

double g_substitution(double t, const WellTimeMap& map) {
    if (t == map.a) throw DomainError("g_substitution: t equals base point");
    const QuarticCoeffs& f = map.quartic;
    const double fa = f(map.a), f1a = f.deriv(map.a, 1);
    const double ft = f(t), f1t = f.deriv(t, 1);
    if (ft < 0.0 || fa < 0.0) throw DomainError("g_substitution: f < 0");
    const double dt = t - map.a;
    return (f1t / (4.0 * dt * dt) - ft / (dt * dt * dt)) * std::sqrt(fa) -
           (fa / (dt * dt * dt) + f1a / (4.0 * dt * dt)) * std::sqrt(ft);
}

RussellMap russell_root_map(double x, const std::array<double, 4>& roots,
                            double a0) {
    const double al = roots[0], be = roots[1], ga = roots[2], de = roots[3];
    if (std::abs(x - al) < 1e-12 * std::max(1.0, std::abs(al)))
        throw PoleAt(cplx(x, 0.0));
    RussellMap out;
    out.s = a0 / 12.0 * (al - be) * (al - ga) * (al - de) / (x - al) *
            ((x - be) / (al - be) + (x - ga) / (al - ga) + (x - de) / (al - de));
    out.s_minus_e = {
        a0 / 4.0 * (al - ga) * (al - de) * (x - be) / (x - al),
        a0 / 4.0 * (al - de) * (al - be) * (x - ga) / (x - al),
        a0 / 4.0 * (al - be) * (al - ga) * (x - de) / (x - al),
    };
    return out;
}

std::array<double, 5> flt_transform(const QuarticCoeffs& q, double l, double m,
                                    double lp, double mp) {
    if (l * mp - lp * m == 0.0)
        throw SingularTransform("flt_transform: l m' - l' m = 0");
    // Plain coefficients of f(x,y) = sum_j c_j x^{4-j} y^j.
    const double c[5] = {q.a0, 4.0 * q.a1, 6.0 * q.a2, 4.0 * q.a3, q.a4};
    // Expand f(lX+mY, l'X+m'Y) by binomial convolution.
    double out[5] = {0, 0, 0, 0, 0};
    auto binom = [](int n, int k) {
        double r = 1.0;
        for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
        return r;
    };
    for (int j = 0; j <= 4; ++j) {
        // c_j (lX+mY)^{4-j} (l'X+m'Y)^j: collect X^{4-k} Y^k terms.
        for (int r = 0; r <= 4 - j; ++r) {
            for (int s = 0; s <= j; ++s) {
                const double term = c[j] * binom(4 - j, r) *
                                    std::pow(l, 4 - j - r) * std::pow(m, r) *
                                    binom(j, s) * std::pow(lp, j - s) *
                                    std::pow(mp, s);
                out[r + s] += term;
            }
        }
    }
    // Back to binomial normalisation A0..A4.
    return {out[0], out[1] / 4.0, out[2] / 6.0, out[3] / 4.0, out[4]};
}

std::pair<double, double> flt_invariance_check(const QuarticCoeffs& q, double l,
                                               double m, double lp, double mp) {
    const auto inv = quartic_invariants(q);
    if (inv.g2 == 0.0 || inv.g3 == 0.0)
        throw DomainError("flt_invariance_check: vanishing invariant ratio");
    const auto A = flt_transform(q, l, m, lp, mp);
    QuarticCoeffs Q{A[0], A[1], A[2], A[3], A[4]};
    const auto INV = quartic_invariants(Q);
    return {INV.g2 / inv.g2, INV.g3 / inv.g3};
}

}  // namespace ellorb
