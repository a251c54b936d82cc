#include "ellorb/quartic_klmn.hpp"

#include <algorithm>
#include <cmath>

#include "ellorb/errors.hpp"
#include "ellorb/polyroots.hpp"

namespace ellorb {

namespace {

void check_params(const KLMNParams& p) {
    if (!(p.mu > 0.0)) throw DomainError("KLMNParams: mu must be > 0");
}

// Real solution c of 4c^3 - 3c = x, i.e. cos(arccos(x)/3) analytically
// continued through |x| > 1.
double cos_third_arccos(double x) {
    if (x >= 1.0) return std::cosh(std::acosh(x) / 3.0);
    if (x <= -1.0) return -std::cosh(std::acosh(-x) / 3.0);
    return std::cos(std::acos(x) / 3.0);
}

// Newton refinement of a root of f.
double polish_root(const QuarticCoeffs& f, double u) {
    for (int i = 0; i < 6; ++i) {
        const double fv = f(u), d = f.deriv(u, 1);
        if (std::abs(d) < 1e-300) break;
        const double step = fv / d;
        u -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(u))) break;
    }
    return u;
}

}  // namespace

double f_radial(double u, const KLMNParams& p) {
    check_params(p);
    const double h = p.C - p.B * u;
    return 2.0 * (p.E + p.mu * u - 0.5 * u * u * h * h);
}

QuarticCoeffs as_quartic(const KLMNParams& p) {
    check_params(p);
    // f(u) = -B^2 u^4 + 2BC u^3 - C^2 u^2 + 2mu u + 2E in the power basis.
    QuarticCoeffs q;
    q.a0 = -p.B * p.B;
    q.a1 = p.B * p.C / 2.0;
    q.a2 = -p.C * p.C / 6.0;
    q.a3 = p.mu / 2.0;
    q.a4 = 2.0 * p.E;
    return q;
}

double v_eff(double r, const KLMNParams& p) {
    if (!(r > 0.0)) throw DomainError("v_eff: r must be > 0");
    return p.E - 0.5 * f_radial(1.0 / r, p);
}

std::vector<double> critical_radii_trig_three(const KLMNParams& p) {
    check_params(p);
    if (p.B == 0.0) throw DomainError("critical_radii_trig_three: B = 0");
    const double absB = std::abs(p.B), absC = std::abs(p.C);
    const double xi =
        6.0 * std::sqrt(3.0) * p.mu * absB / (absC * absC * absC);
    if (xi > 1.0)
        throw DomainError("critical_radii_trig_three: only one real root");
    // Depressed stability cubic y^3 - (C^2/4B^2) y - mu/2B^2 = 0 with
    // u = C/(2B) + y; trig solution y_k = (|C|/sqrt(3)|B|) cos(beta + 2pi k/3).
    const double beta = std::acos(xi) / 3.0;
    std::vector<double> r;
    for (int k = 0; k < 3; ++k) {
        const double u = p.C / (2.0 * p.B) +
                         absC / (std::sqrt(3.0) * absB) *
                             std::cos(beta + 2.0 * M_PI * k / 3.0);
        if (u > 0.0) r.push_back(1.0 / u);
    }
    return r;
}

double critical_radius_trig_one(const KLMNParams& p) {
    check_params(p);
    if (p.B == 0.0) throw DomainError("critical_radius_trig_one: B = 0");
    const double absB = std::abs(p.B), absC = std::abs(p.C);
    const double xi =
        6.0 * std::sqrt(3.0) * p.mu * absB / (absC * absC * absC);
    // Same cubic; for xi > 1 the single real branch is the cosh
    // continuation of cos(arccos(xi)/3).
    const double u = p.C / (2.0 * p.B) +
                     absC / (std::sqrt(3.0) * absB) * cos_third_arccos(xi);
    if (u == 0.0) throw ZeroDenominator("critical_radius_trig_one");
    return 1.0 / u;
}

WellClassification classify_wells(const KLMNParams& p) {
    check_params(p);
    WellClassification out;

    // Critical points of V_eff: roots of 2B^2 u^3 - 3BC u^2 + C^2 u - mu = 0
    // (for B=0 this degenerates to the Kepler circular radius C^2/mu).
    std::vector<double> crit_r;
    if (p.B == 0.0) {
        if (p.C != 0.0) crit_r.push_back(p.C * p.C / p.mu);
        out.case_id = WellCase::OneWell;
    } else {
        const auto roots = cubic_roots_general(
            2.0 * p.B * p.B, -3.0 * p.B * p.C, p.C * p.C, -p.mu);
        for (const auto& rt : roots) {
            if (std::abs(rt.imag()) < 1e-9 * std::max(1.0, std::abs(rt)) &&
                rt.real() > 0.0)
                crit_r.push_back(1.0 / rt.real());
        }
        const double ratio =
            std::pow(p.C, 6) / (108.0 * p.mu * p.mu * p.B * p.B);
        if (std::abs(ratio - 1.0) <= 1e-9)
            out.case_id = WellCase::CriticalRepeated;
        else if (ratio < 1.0)
            out.case_id = WellCase::OneWell;
        else
            out.case_id = WellCase::TwoWell;
    }
    std::sort(crit_r.begin(), crit_r.end());

    // Label minima/maxima by the sign of V_eff'' (central difference; the
    // potential part is E-independent so the step scale is geometric).
    for (double r : crit_r) {
        const double h = 1e-5 * r;
        const double v2 =
            (v_eff(r + h, p) - 2.0 * v_eff(r, p) + v_eff(r - h, p)) / (h * h);
        out.critical_radii.emplace_back(
            r, v2 >= 0.0 ? CriticalKind::Min : CriticalKind::Max);
    }

    // Escape configuration: the barrier top sits at zero effective
    // potential, i.e. C^6 = (27/2)^2 mu^2 B^2, detected via V_eff(r_max)~0.
    if (out.case_id == WellCase::TwoWell) {
        double v_barrier = 0.0, v_scale = 0.0;
        for (const auto& [r, kind] : out.critical_radii) {
            const double v = v_eff(r, p) - p.E;  // potential part only
            if (kind == CriticalKind::Max)
                v_barrier = v;
            else
                v_scale = std::max(v_scale, std::abs(v));
        }
        if (std::abs(v_barrier) < 1e-6 * std::max(v_scale, 1e-12))
            out.case_id = WellCase::Escape;
    }

    // Accessible u-intervals for the given E: consecutive positive real
    // roots of f with f > 0 between them.
    const QuarticCoeffs f = as_quartic(p);
    std::vector<double> u_roots;
    if (p.B == 0.0) {
        // Kepler quadratic 2E + 2mu u - C^2 u^2.
        const double disc = p.mu * p.mu + 2.0 * p.E * p.C * p.C;
        if (disc >= 0.0 && p.C != 0.0) {
            u_roots.push_back((p.mu - std::sqrt(disc)) / (p.C * p.C));
            u_roots.push_back((p.mu + std::sqrt(disc)) / (p.C * p.C));
        }
    } else {
        for (double lam : lambda_resolvent(p)) {
            for (const auto& rt : quartic_roots_lambda(p, lam)) {
                if (std::abs(rt.imag()) <
                    1e-7 * std::max(1.0, std::abs(rt.real())))
                    u_roots.push_back(polish_root(f, rt.real()));
            }
            if (!u_roots.empty()) break;
        }
    }
    std::sort(u_roots.begin(), u_roots.end());
    u_roots.erase(std::unique(u_roots.begin(), u_roots.end(),
                              [](double a, double b) {
                                  return std::abs(a - b) <
                                         1e-9 * std::max(1.0, std::abs(a));
                              }),
                  u_roots.end());
    for (size_t i = 0; i + 1 < u_roots.size(); ++i) {
        const double lo = u_roots[i], hi = u_roots[i + 1];
        if (lo <= 0.0) continue;
        if (f_radial(0.5 * (lo + hi), p) > 0.0)
            out.accessible_intervals.emplace_back(lo, hi);
    }
    return out;
}

std::vector<double> lambda_resolvent(const KLMNParams& p) {
    check_params(p);
    if (p.B == 0.0) throw DomainError("lambda_resolvent: B = 0");
    const double B = p.B;
    const auto roots = cubic_roots_general(
        1.0, -p.C * p.C / (B * B), 4.0 / (B * B * B) * (p.mu * p.C + 2.0 * B * p.E),
        -4.0 * p.mu * p.mu / (B * B * B * B));
    std::vector<double> out;
    for (const auto& r : roots) {
        if (std::abs(r.imag()) < 1e-9 * std::max(1.0, std::abs(r)) &&
            r.real() > 0.0)
            out.push_back(r.real());
    }
    std::sort(out.begin(), out.end());
    if (out.empty())
        throw NoPositiveRoot("lambda_resolvent: no positive real root");
    return out;
}

std::array<cplx, 4> quartic_roots_lambda(const KLMNParams& p, double lambda) {
    check_params(p);
    if (p.B == 0.0) throw DomainError("quartic_roots_lambda: B = 0");
    if (!(lambda > 0.0)) throw DomainError("quartic_roots_lambda: lambda <= 0");
    const double B = p.B, C = p.C;
    const double sl = std::sqrt(lambda);
    const cplx rad_p = std::sqrt(
        cplx(C * C - B * B * lambda + 4.0 * p.mu / sl, 0.0));
    const cplx rad_m = std::sqrt(
        cplx(C * C - B * B * lambda - 4.0 * p.mu / sl, 0.0));
    const double inv = 1.0 / (2.0 * B);
    return {inv * (C + B * sl + rad_p), inv * (C + B * sl - rad_p),
            inv * (C - B * sl + rad_m), inv * (C - B * sl - rad_m)};
}

QuarticCoeffs qb_quartic(const KLMNParams& p) {
    check_params(p);
    if (p.C == 0.0) throw DomainError("qb_quartic: C = 0");
    const double B = p.B, C = p.C, mu = p.mu, E = p.E;
    const double a1 = 2.0 * B * E / C + mu;
    const double a2 = 3.0 * B * B * E / (C * C) + 2.0 * B * mu / C - C * C / 2.0;
    const double a3 = 3.0 * B * B * mu / (C * C) + 4.0 * B * B * B * E / (C * C * C);
    const double a4 = 4.0 * B * B * B * mu / (C * C * C);
    const double s = 2.0 / (C * C);
    QuarticCoeffs q;
    q.a0 = s * a4;
    q.a1 = s * a3 / 4.0;
    q.a2 = s * a2 / 6.0;
    q.a3 = s * a1 / 4.0;
    q.a4 = s * E;
    return q;
}

std::pair<double, double> puiseux_escape_roots(const KLMNParams& p, double u1) {
    const QuarticCoeffs qb = qb_quartic(p);
    const double q2 = qb.deriv(u1, 2);
    const double rad = -2.0 * p.E / q2;
    if (rad < 0.0)
        throw DomainError("puiseux_escape_roots: -2E/Q_B''(u1) < 0");
    const double d = std::sqrt(rad);
    return {u1 - d, u1 + d};
}

LegendreFourReal legendre_theta_four_real(double a, double b, double c,
                                          double d, double u) {
    if (!(a > b && b > c && c > d))
        throw OrderingError("legendre_theta_four_real: need a > b > c > d");
    if (u < b - 1e-12 * std::max(1.0, std::abs(b)) || u > a)
        throw RangeError("legendre_theta_four_real: u outside [b, a]");
    u = std::clamp(u, b, a);
    LegendreFourReal out;
    out.k = std::sqrt(((a - b) * (c - d)) / ((a - c) * (b - d)));
    // Substitution for int_u^a with four real roots:
    // sin^2(angle) = (b-d)(a-u) / ((a-b)(u-d)); u=a -> 0, u=b -> complete.
    const double s2 = ((b - d) * (a - u)) / ((a - b) * (u - d));
    out.lambda_angle = std::asin(std::sqrt(std::clamp(s2, 0.0, 1.0)));
    out.value =
        2.0 * legendre_F(out.lambda_angle, out.k) / std::sqrt((a - c) * (b - d));
    return out;
}

LegendreTwoReal legendre_theta_two_real(double a, double b, double m, double n,
                                        double u) {
    if (!(a > b)) throw OrderingError("legendre_theta_two_real: need a > b");
    if (n == 0.0) throw DomainError("legendre_theta_two_real: n = 0");
    if (u < b - 1e-12 * std::max(1.0, std::abs(b)) || u > a)
        throw RangeError("legendre_theta_two_real: u outside [b, a]");
    u = std::clamp(u, b, a);
    LegendreTwoReal out;
    const double A = std::hypot(a - m, n);
    const double Bt = std::hypot(b - m, n);
    out.g = 1.0 / std::sqrt(A * Bt);
    const double h2 = ((a - b) * (a - b) - (A - Bt) * (A - Bt)) / (4.0 * A * Bt);
    out.h = std::sqrt(std::clamp(h2, 0.0, 1.0));
    // cos(phi) form of the standard substitution: u=b -> phi=0, u=a -> pi.
    const double num = (a - u) * Bt - (u - b) * A;
    const double den = (a - u) * Bt + (u - b) * A;
    out.phi = std::acos(std::clamp(num / den, -1.0, 1.0));
    out.value = out.g * legendre_F(out.phi, out.h);
    return out;
}

}  // namespace ellorb
