#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "ellorb/elliptic.hpp"
#include "ellorb/errors.hpp"
#include "ellorb/orbits.hpp"
#include "ellorb/quadrature.hpp"
#include "ellorb/quartic_klmn.hpp"
#include "ellorb/spirals.hpp"

using namespace ellorb;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Least-squares slope of y against x.
double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// One RK4 step of the 3-d galaxy field.
std::array<double, 3> galaxy_rk4_step(const std::array<double, 3>& s,
                                      double h,
                                      const GalaxySpiralParams& gp) {
    auto f = [&](const std::array<double, 3>& q) {
        return galaxy_spiral_rhs(q[0], q[1], q[2], gp);
    };
    auto add = [](const std::array<double, 3>& a,
                  const std::array<double, 3>& b, double w) {
        return std::array<double, 3>{a[0] + w * b[0], a[1] + w * b[1],
                                     a[2] + w * b[2]};
    };
    const auto k1 = f(s);
    const auto k2 = f(add(s, k1, h / 2));
    const auto k3 = f(add(s, k2, h / 2));
    const auto k4 = f(add(s, k3, h));
    std::array<double, 3> out = s;
    for (int i = 0; i < 3; ++i)
        out[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return out;
}

}  // namespace

TEST_CASE("elliptic chart: examples, round trips, cut and foci") {
    const double c = 1.3;
    // (c cosh 1, 0) and (0, c sinh 1) are the standard check points.
    auto p1 = cart_to_elliptic(c * std::cosh(1.0), 0.0, c);
    CHECK(p1.xi == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p1.eta == doctest::Approx(0.0).epsilon(1e-12));
    auto p2 = cart_to_elliptic(0.0, c * std::sinh(1.0), c);
    CHECK(p2.xi == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p2.eta == doctest::Approx(kPi / 2).epsilon(1e-12));

    std::mt19937 rng(20260826);
    std::uniform_real_distribution<double> uxi(1e-3, 3.0),
        ueta(-kPi + 1e-6, kPi - 1e-6);
    for (double cc : {0.5, 1.0, std::sqrt(2.0)}) {
        for (int k = 0; k < 60; ++k) {
            EllipticPoint in{uxi(rng), ueta(rng), cc};
            const auto [X, Y] = elliptic_to_cart(in);
            EllipticPoint out;
            try {
                out = cart_to_elliptic(X, Y, cc);
            } catch (const OnCut&) {
                out = cart_to_elliptic(X, Y, cc, in.eta > 0 ? +1 : -1);
            }
            // Forward residual in cartesian coordinates.
            const auto [X2, Y2] = elliptic_to_cart(out);
            CHECK(std::hypot(X2 - X, Y2 - Y) < 1e-10 * cc);
            CHECK(out.xi == doctest::Approx(in.xi).epsilon(1e-9));
            // Cross-check against the principal complex acosh branch.
            const auto w = std::acosh(std::complex<double>(X, Y) / cc);
            CHECK(out.xi == doctest::Approx(w.real()).epsilon(1e-9));
            CHECK(std::cos(out.eta) ==
                  doctest::Approx(std::cos(w.imag())).epsilon(1e-9));
            CHECK(std::abs(std::sin(out.eta) - std::sin(w.imag())) < 1e-9);
        }
    }

    // The focal segment is a branch cut: a side hint selects the limit.
    CHECK_THROWS_AS(cart_to_elliptic(0.4 * c, 0.0, c), OnCut);
    auto up = cart_to_elliptic(0.4 * c, 0.0, c, +1);
    CHECK(up.xi == doctest::Approx(0.0));
    CHECK(up.eta == doctest::Approx(std::acos(0.4)).epsilon(1e-12));
    auto dn = cart_to_elliptic(0.4 * c, 0.0, c, -1);
    CHECK(dn.eta == doctest::Approx(-std::acos(0.4)).epsilon(1e-12));
    CHECK(up.eta ==
          doctest::Approx(std::atan(std::sqrt(c * c - 0.16 * c * c) /
                                    (0.4 * c)))
              .epsilon(1e-12));
    CHECK_THROWS_AS(cart_to_elliptic(c, 0.0, c), ScaleFactorZero);
    CHECK_THROWS_AS(cart_to_elliptic(-c, 0.0, c), ScaleFactorZero);
}

TEST_CASE("two-centre drift satisfies the quantum Liouville condition") {
    SemiClassicalParams sp;
    sp.mu1 = 1.0;
    sp.mu2 = 0.6;
    sp.c = 1.1;
    sp.alpha2 = 1.2;
    sp.eps2 = 1e-3;

    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uxi(0.05, 3.0), ueta(-kPi, kPi);
    for (int k = 0; k < 100; ++k) {
        EllipticPoint pt{uxi(rng), ueta(rng), sp.c};
        CHECK(std::abs(dqlc_residual(pt, sp)) < 1e-9);
    }

    // The fields separate: v depends on xi only, u on eta only, so the
    // gradients of R(xi) and S(eta) are orthogonal in the conformal chart.
    const auto fa = two_centre_fields({0.8, 0.3, sp.c}, sp);
    const auto fb = two_centre_fields({0.8, 2.1, sp.c}, sp);
    const auto fc = two_centre_fields({1.7, 0.3, sp.c}, sp);
    CHECK(fa.v0 == doctest::Approx(fb.v0).epsilon(1e-14));
    CHECK(fa.u0 == doctest::Approx(fc.u0).epsilon(1e-14));

    // v1 and u1 against finite differences of the amplitudes.
    {
        const double h = 1e-6;
        auto v0 = [&](double xi) {
            return two_centre_fields({xi, 0.3, sp.c}, sp).v0;
        };
        auto u0 = [&](double eta) {
            return two_centre_fields({0.8, eta, sp.c}, sp).u0;
        };
        const double v0p = (v0(0.8 + h) - v0(0.8 - h)) / (2 * h);
        const double u0p = (u0(0.3 + h) - u0(0.3 - h)) / (2 * h);
        CHECK(fa.v1 == doctest::Approx(-v0p / (2 * v0(0.8))).epsilon(1e-6));
        CHECK(fa.u1 == doctest::Approx(-u0p / (2 * u0(0.3))).epsilon(1e-6));
    }

    CHECK_THROWS_AS(two_centre_drift({0.0, 0.0, sp.c}, sp),
                    ScaleFactorZero);
}

TEST_CASE("two-centre spiral: monotone R and linear quantum correction") {
    SemiClassicalParams sp;
    sp.mu1 = 1.0;
    sp.mu2 = 0.6;
    sp.c = 1.0;
    sp.alpha2 = 1.2;  // limiting ellipse at cosh xi = 1.5

    const EllipticPoint start{2.0, 0.3, sp.c};

    sp.eps2 = 1e-3;
    const auto tr = two_centre_spiral_integrate(start, sp, 2.5, 1e-3);
    for (std::size_t k = 1; k < tr.samples.size(); ++k) {
        CHECK(two_centre_R0(tr.samples[k].xi, sp) >=
              two_centre_R0(tr.samples[k - 1].xi, sp) - 1e-10);
    }
    // xi decreases toward the limiting ellipse.
    CHECK(tr.samples.back().xi < start.xi);
    CHECK(tr.terminal_cosh_gap <
          std::cosh(start.xi) - sp.cosh_xi0() - 1e-3);

    // The deviation from the classical (eps2 = 0) trajectory scales
    // linearly with eps2.
    sp.eps2 = 0.0;
    const auto base = two_centre_spiral_integrate(start, sp, 2.5, 1e-3);
    std::vector<double> le, ld;
    for (double e2 : {4e-3, 2e-3, 1e-3}) {
        sp.eps2 = e2;
        const auto t = two_centre_spiral_integrate(start, sp, 2.5, 1e-3);
        double dev = 0;
        for (std::size_t k = 0; k < t.samples.size(); ++k)
            dev = std::max(dev,
                           std::hypot(t.samples[k].xi - base.samples[k].xi,
                                      t.samples[k].eta -
                                          base.samples[k].eta));
        le.push_back(std::log(e2));
        ld.push_back(std::log(dev));
    }
    const double slope = lsq_slope(le, ld);
    CHECK(slope > 0.8);
    CHECK(slope < 1.2);
}

TEST_CASE("two-centre spiral crossing the focal cut is reflected") {
    SemiClassicalParams sp;
    sp.mu1 = 0.8;
    sp.mu2 = 0.8;
    sp.c = 1.0;
    sp.alpha2 = 0.2;  // cosh xi0 < 1: the inward drift reaches the cut
    sp.eps2 = 0.0;
    const auto tr =
        two_centre_spiral_integrate({0.5, 1.3, sp.c}, sp, 0.45, 5e-4);
    CHECK(tr.cut_crossing);
    for (const auto& s : tr.samples) CHECK(s.xi >= 0.0);
}

TEST_CASE("restoring force: factorised special case and convergence") {
    RestoringForceParams rp;
    rp.mu1 = 2.0;
    rp.mu2 = 1.0;
    rp.c = 1.0;
    rp.omega = 0.7;
    rp.E = -0.5 * rp.omega * rp.omega * rp.c * rp.c;
    const double a = rp.a();
    rp.gamma2 = 3.0 * std::pow(a, 4) *
                std::pow(rp.omega * rp.c * rp.c, 2);
    CHECK(a > 1.0);

    // At the special energy the radial quartic factorises exactly.
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> uch(1.0, 6.0);
    for (int k = 0; k < 40; ++k) {
        const double ch = uch(rng);
        const double fact = std::pow(rp.omega * rp.c * rp.c, 2) *
                            (ch - a) * (ch - a) *
                            ((ch + a) * (ch + a) + 2 * a * a);
        CHECK(restoring_v0sq(ch, rp) ==
              doctest::Approx(fact).epsilon(1e-12));
    }
    // The angular amplitude stays positive everywhere on the ring.
    for (int k = 0; k <= 256; ++k)
        CHECK(restoring_u0sq(std::cos(2 * kPi * k / 256.0), rp) > 0.0);

    // The flow converges to the ellipse cosh xi = a.
    const auto tr =
        restoring_spiral_integrate({2.5, 0.4, rp.c}, rp, 25.0, 2e-3);
    CHECK(tr.terminal_cosh_gap < 1e-3);
    for (std::size_t k = 1; k < tr.samples.size(); ++k)
        CHECK(tr.samples[k].xi <= tr.samples[k - 1].xi + 1e-12);
}

TEST_CASE("galaxy field: invariants and effective potential") {
    GalaxySpiralParams gp;
    gp.mu = 1.0;
    gp.lambda = 1.4;
    gp.sigma2 = 0.5;

    CHECK_THROWS_AS(galaxy_spiral_rhs(0.0, 0.0, 1.0, gp), AxisSingularity);

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.6, 2.5), uz(-1.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const double x = u(rng), y = u(rng), z = uz(rng);
        const double r = std::sqrt(x * x + y * y + z * z);
        const auto v = galaxy_spiral_rhs(x, y, z, gp);
        // Planar angular momentum x vy - y vx = lambda + sigma2.
        CHECK(x * v[1] - y * v[0] ==
              doctest::Approx(gp.lambda + gp.sigma2).epsilon(1e-12));
        // Radial law dr/dt = (lambda(lambda - sigma2) - mu r)/(lambda r).
        const double rdot = (x * v[0] + y * v[1] + z * v[2]) / r;
        CHECK(rdot == doctest::Approx(
                          (gp.lambda * (gp.lambda - gp.sigma2) -
                           gp.mu * r) /
                          (gp.lambda * r))
                          .epsilon(1e-12));
    }

    // The field is curl-free, so (v . grad) v = -grad V_eff; both sides by
    // central differences.
    const double h = 1e-5;
    for (int k = 0; k < 20; ++k) {
        const std::array<double, 3> q{u(rng), u(rng), uz(rng)};
        const auto v = galaxy_spiral_rhs(q[0], q[1], q[2], gp);
        for (int i = 0; i < 3; ++i) {
            double acc = 0;
            for (int j = 0; j < 3; ++j) {
                auto qp = q, qm = q;
                qp[j] += h;
                qm[j] -= h;
                acc += v[j] *
                       (galaxy_spiral_rhs(qp[0], qp[1], qp[2], gp)[i] -
                        galaxy_spiral_rhs(qm[0], qm[1], qm[2], gp)[i]) /
                       (2 * h);
            }
            auto qp = q, qm = q;
            qp[i] += h;
            qm[i] -= h;
            const double gv = (galaxy_veff(qp[0], qp[1], qp[2], gp) -
                               galaxy_veff(qm[0], qm[1], qm[2], gp)) /
                              (2 * h);
            CHECK(std::abs(acc + gv) < 1e-6);
        }
    }
}

TEST_CASE("galaxy closed forms match the integrated flow") {
    GalaxySpiralParams gp;
    gp.mu = 1.0;
    gp.lambda = 1.4;
    gp.sigma2 = 0.5;
    const double rc = gp.r_c();
    CHECK(rc == doctest::Approx(1.26).epsilon(1e-15));
    CHECK_THROWS_AS(galaxy_rho_of_phi(1.0, gp, 0.5 * rc), BranchError);

    // Planar run: r(t) and the polar spiral rho(phi).
    {
        const double rho0 = 3.0;
        std::array<double, 3> s{rho0, 0.0, 0.0};
        double phi = 0.0, t = 0.0;
        const double h = 5e-4;
        while (t < 50.0 - 0.5 * h) {
            s = galaxy_rk4_step(s, h, gp);
            t += h;
            double raw = std::atan2(s[1], s[0]);
            while (raw < phi - kPi) raw += 2 * kPi;
            while (raw > phi + kPi) raw -= 2 * kPi;
            phi = raw;
            if (std::abs(t - std::round(t / 5.0) * 5.0) < 0.25 * h &&
                t > 1.0) {
                const double r_num = std::hypot(s[0], s[1]);
                CHECK(galaxy_r_of_t(t, gp, rho0) ==
                      doctest::Approx(r_num).epsilon(1e-6));
                CHECK(galaxy_rho_of_phi(phi, gp, rho0) ==
                      doctest::Approx(r_num).epsilon(1e-6));
            }
        }
    }

    // 3-d run: the |z| law in terms of r and t.
    {
        const double r0 = std::sqrt(2.5 * 2.5 + 0.8 * 0.8);
        std::array<double, 3> s{2.5, 0.0, 0.8};
        double t = 0.0;
        const double h = 5e-4;
        while (t < 15.0 - 0.5 * h) {
            s = galaxy_rk4_step(s, h, gp);
            t += h;
            if (std::abs(t - std::round(t / 3.0) * 3.0) < 0.25 * h &&
                t > 1.0) {
                const double r =
                    std::sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2]);
                CHECK(galaxy_z_of(r, t, gp, r0, 0.8) ==
                      doctest::Approx(s[2]).epsilon(1e-6));
                CHECK(galaxy_r_of_t(t, gp, r0) ==
                      doctest::Approx(r).epsilon(1e-6));
            }
        }
    }

    // Fitted decay exponent of |rho - r_c| against phi equals alpha.
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> ul(1.0, 1.8), us(0.2, 0.6);
    for (int draw = 0; draw < 3; ++draw) {
        GalaxySpiralParams g2;
        g2.mu = 1.0;
        g2.lambda = ul(rng);
        g2.sigma2 = us(rng) * g2.lambda;
        const double rc2 = g2.r_c();
        std::array<double, 3> s{2.2 * rc2, 0.0, 0.0};
        double t = 0.0, phi = 0.0;
        const double h = 1e-3;
        std::vector<double> xs, ys;
        double gap = 1.2 * rc2;
        while (t < 400.0 && gap > 1e-10 * rc2) {
            s = galaxy_rk4_step(s, h, g2);
            t += h;
            double raw = std::atan2(s[1], s[0]);
            while (raw < phi - kPi) raw += 2 * kPi;
            while (raw > phi + kPi) raw -= 2 * kPi;
            phi = raw;
            gap = std::hypot(s[0], s[1]) - rc2;
            // Late window where the transient has died off.
            if (gap > 0 && gap < 1e-3 * rc2) {
                xs.push_back(phi);
                ys.push_back(std::log(gap));
            }
        }
        REQUIRE(xs.size() > 100);
        const double rate = -lsq_slope(xs, ys);
        CHECK(rate == doctest::Approx(g2.alpha()).epsilon(0.01));
    }
}

TEST_CASE("galaxy arc length: closed form against quadrature") {
    GalaxySpiralParams gp;
    gp.mu = 0.9;
    gp.lambda = 1.2;
    gp.sigma2 = 0.4;
    const double rho0 = 2.0 * gp.r_c();
    auto integrand = [&](double phi) {
        const double h = 1e-6;
        const double rp = (galaxy_rho_of_phi(phi + h, gp, rho0) -
                           galaxy_rho_of_phi(phi - h, gp, rho0)) /
                          (2 * h);
        const double r = galaxy_rho_of_phi(phi, gp, rho0);
        return std::hypot(r, rp);
    };
    for (double phi : {1.0, 5.0, 20.0}) {
        // 1e-9 absolute: the finite-difference slope limits the integrand
        // accuracy below that.
        const double ref = integrate(integrand, 0.0, phi, 1e-9);
        const double closed = galaxy_arc_length(phi, gp, rho0);
        CHECK(closed == doctest::Approx(ref).epsilon(1e-8));
    }
    // dL/dphi tends to r_c as the arm winds onto the limit circle.
    const double dL = (galaxy_arc_length(40.0 + 1e-4, gp, rho0) -
                       galaxy_arc_length(40.0 - 1e-4, gp, rho0)) /
                      2e-4;
    CHECK(dL == doctest::Approx(gp.r_c()).epsilon(1e-6));
}

TEST_CASE("cloud entropies vanish on the conic and are negative off it") {
    const double mu = 1.0, a = 1.7, e = 0.4, eps2 = 1e-3;
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> uth(0.0, 2 * kPi),
        ur(0.3, 3.0);
    for (int k = 0; k < 60; ++k) {
        const double th = uth(rng);
        const double r0 = a * (1 - e * e) / (1 + e * std::cos(th));
        CHECK(kepler_entropy(r0, th, mu, a, e, eps2) ==
              doctest::Approx(0.0));
        CHECK(two_centre_entropy(r0, th, mu, a, e, eps2) ==
              doctest::Approx(0.0));
        const double r = ur(rng);
        if (std::abs(r - r0) > 1e-6) {
            CHECK(kepler_entropy(r, th, mu, a, e, eps2) < 0.0);
            CHECK(two_centre_entropy(r, th, mu, a, e, eps2) < 0.0);
        }
    }
    // Circular limit: both reduce to the same harmonic-cloud entropy.
    const double rr = 1.3;
    const double want = -0.5 / eps2 * std::sqrt(mu / (a * a * a)) *
                        (rr - a) * (rr - a);
    CHECK(kepler_entropy(rr, 0.7, mu, a, 0.0, eps2) ==
          doctest::Approx(want).epsilon(1e-14));
    CHECK(two_centre_entropy(rr, 0.7, mu, a, 0.0, eps2) ==
          doctest::Approx(want).epsilon(1e-14));
    // Quadratic in the radial offset at fixed angle.
    const double th0 = 1.1;
    const double rc0 = a * (1 - e * e) / (1 + e * std::cos(th0));
    CHECK(kepler_entropy(rc0 + 0.2, th0, mu, a, e, eps2) ==
          doctest::Approx(4 * kepler_entropy(rc0 + 0.1, th0, mu, a, e, eps2))
              .epsilon(1e-12));
    CHECK(two_centre_entropy(rc0 + 0.2, th0, mu, a, e, eps2) ==
          doctest::Approx(
              4 * two_centre_entropy(rc0 + 0.1, th0, mu, a, e, eps2))
              .epsilon(1e-12));
}

TEST_CASE("normalisation constants: integral and closed forms agree") {
    const double a = 1.9, mu = 1.3, eps = 1e-3;
    for (double e : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double integral = kepler_norm_inv_sq_integral(a, mu, e, eps);
        const double closed = kepler_norm_inv_sq(a, mu, e, eps);
        CHECK(closed == doctest::Approx(integral).epsilon(1e-8));
    }
    // e = 0 collapses to the circular value 2 sqrt(2 pi) a (a^3/mu)^{1/4}
    // pi eps for the Kepler cloud.
    CHECK(kepler_norm_inv_sq(a, mu, 0.0, eps) ==
          doctest::Approx(2 * std::sqrt(2 * kPi) * a *
                          std::pow(a * a * a / mu, 0.25) * kPi * eps)
              .epsilon(1e-12));
    // Two-centre value: positive, linear in eps, (1-e^2)^{3/4} shape.
    const double n1 = two_centre_norm_inv_sq(a, mu, 0.3, eps);
    CHECK(n1 > 0.0);
    CHECK(two_centre_norm_inv_sq(a, mu, 0.3, 2 * eps) ==
          doctest::Approx(2 * n1).epsilon(1e-14));
    CHECK(two_centre_norm_inv_sq(a, mu, 0.6, eps) / n1 ==
          doctest::Approx(std::pow(0.64 / 0.91, 0.75)).epsilon(1e-12));
}

TEST_CASE("ring statistics: circular ring degenerates cleanly") {
    KLMNParams p;
    p.mu = 1.0;
    p.B = 0.0;
    p.C = 1.0;
    p.E = -0.5;  // f has a double root at u = 1: circular ring r = 1
    const double eps = 1e-3;
    const auto model = RingModel::create(p, 1.0, eps);
    CHECK(model.circular);
    for (double th : {0.0, 0.9, 2.2, 4.4, 6.1}) {
        const auto st = model.eval(th);
        CHECK(st.rho == doctest::Approx(1.0));
        CHECK(st.r0 == doctest::Approx(1.0).epsilon(1e-12));
        // Curvature correction of a circle: (1/r - 1/r0)/(r - r0).
        CHECK(st.K_correction == doctest::Approx(-1.0).epsilon(1e-12));
        // Momentum peak is purely tangential.
        CHECK(std::abs(st.alpha_peak) ==
              doctest::Approx(kPi / 2).epsilon(1e-12));
        CHECK(st.p2_peak == doctest::Approx(p.C * p.C).epsilon(1e-10));
        CHECK(st.R0 < 0.0);
        CHECK(st.width == doctest::Approx(eps * eps).epsilon(1e-10));
    }
}

TEST_CASE("ring statistics: low-eccentricity ring") {
    const double e = 0.05;
    KLMNParams p;
    p.mu = 1.0;
    p.B = 0.0;
    p.C = 1.0;
    p.E = -0.5 * (1.0 - e * e);
    const double u0 = 1.0 + e;  // pericentre
    const double eps = 1e-3;
    const auto model = RingModel::create(p, u0, eps);
    CHECK_FALSE(model.circular);

    // The ring radius interpolates the conic l/r = 1 + e cos theta.
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> uth(0.0, 2 * kPi);
    for (int k = 0; k < 40; ++k) {
        const double th = uth(rng);
        const auto st = model.eval(th);
        CHECK(st.r0 ==
              doctest::Approx(1.0 / (1.0 + e * std::cos(th)))
                  .epsilon(1e-6));
        CHECK(st.rho > 0.0);
        CHECK(st.R0 < 0.0);
        CHECK(std::isfinite(st.K_correction));
    }

    // Curvature-correction bracket reassembled from finite differences of
    // the reported r0(theta) and R0(theta).
    for (double th : {1.1, 2.0}) {
        const double h = 1e-3;
        auto r0f = [&](double t) { return model.eval(t).r0; };
        auto R0f = [&](double t) { return model.eval(t).R0; };
        const double r = r0f(th);
        const double rp = (r0f(th + h) - r0f(th - h)) / (2 * h);
        const double rpp = (r0f(th + h) - 2 * r + r0f(th - h)) / (h * h);
        const double R0 = R0f(th);
        const double R0p = (R0f(th + h) - R0f(th - h)) / (2 * h);
        const double R0pp =
            (R0f(th + h) - 2 * R0 + R0f(th - h)) / (h * h);
        const double g2 = rp * rp;
        const double num =
            (2 * r * r - g2) * rpp - (4 * g2 + r * r) * r +
            r * (r * r + g2) / 4 *
                (2 * R0pp / R0 - 3 * (R0p / R0) * (R0p / R0)) +
            rp * (2 * g2 - 3 * r * rpp - r * r) / 2 * (R0p / R0);
        const double want = num / std::pow(r * r + g2, 2.5);
        CHECK(model.eval(th).K_correction ==
              doctest::Approx(want).epsilon(1e-3));
    }

    // Density is periodic after calibration, rho(0) = 1 by convention,
    // and the default D makes |R0(0)| = 1/eps^2.
    CHECK(model.eval(0.0).rho == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(model.eval(2 * kPi).rho == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(model.eval(0.0).R0 * eps * eps ==
          doctest::Approx(-1.0).epsilon(1e-9));

    // Away from the apses the density matches the exact streamline
    // invariant rho proportional to 1/(r sqrt(f(1/r))).
    const auto q = as_quartic(p);
    auto inv = [&](double th) {
        const double r = model.eval(th).r0;
        return 1.0 / (r * std::sqrt(q(1.0 / r)));
    };
    const double ref = model.eval(kPi / 2).rho / inv(kPi / 2);
    for (double th : {0.5, 0.9, 1.4, 2.0, 2.6, 3.8, 4.7, 5.6}) {
        CHECK(model.eval(th).rho / inv(th) ==
              doctest::Approx(ref).epsilon(1e-3));
    }

    // Width scalings: linear in the ring constant D and in eps.
    const auto mD = RingModel::create(p, u0, eps, 0.01);
    const auto mD2 = RingModel::create(p, u0, eps, 0.02);
    const auto mE2 = RingModel::create(p, u0, 2 * eps, 0.01);
    for (double th : {0.7, 2.9}) {
        CHECK(mD2.eval(th).width ==
              doctest::Approx(2 * mD.eval(th).width).epsilon(1e-12));
        CHECK(mE2.eval(th).width ==
              doctest::Approx(2 * mD.eval(th).width).epsilon(1e-12));
    }

    // A generic dipole orbit does not close after one radial cycle.
    KLMNParams pb{1.0, 0.3, 1.3, -0.25};
    const auto fq = as_quartic(pb);
    // Any positive root of f works as the apse seed here.
    double ub = 1.0;
    for (int i = 0; i < 80; ++i) ub -= fq(ub) / fq.deriv(ub, 1);
    CHECK_THROWS_AS(RingModel::create(pb, ub, eps), NotPeriodic);
}
