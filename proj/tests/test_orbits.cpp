#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "ellorb/elliptic.hpp"
#include "ellorb/errors.hpp"
#include "ellorb/orbits.hpp"
#include "ellorb/polyroots.hpp"
#include "ellorb/quadrature.hpp"
#include "ellorb/quartic_klmn.hpp"
#include "ellorb/uniform.hpp"

using namespace ellorb;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Positive real roots of f, Newton-polished, ascending.
std::vector<double> positive_roots(const QuarticCoeffs& f) {
    const auto pb = f.power_basis();
    std::vector<double> out;
    for (double r : companion_real_roots({pb.begin(), pb.end()})) {
        for (int i = 0; i < 5; ++i) {
            const double d = f.deriv(r, 1);
            if (d != 0.0) r -= f(r) / d;
        }
        if (r > 0.0) out.push_back(r);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Lowest accessible u-interval (f > 0 inside) with positive endpoints.
std::pair<double, double> first_well(const KLMNParams& p) {
    const auto roots = positive_roots(as_quartic(p));
    const QuarticCoeffs f = as_quartic(p);
    for (size_t i = 0; i + 1 < roots.size(); ++i) {
        const double mid = 0.5 * (roots[i] + roots[i + 1]);
        if (f(mid) > 0.0) return {roots[i], roots[i + 1]};
    }
    REQUIRE(false);
    return {0, 0};
}

const KLMNParams kBound{1.0, 0.3, 1.3, -0.25};

// Two-centre parameters with the cosh(xi) quadratic having roots 1.2 and
// 2.0 exactly: E(t - 1.2)(t - 2.0) = E t^2 + b t - gamma with
// b = (mu1 + mu2)/c, so E = -b/3.2 and gamma = -2.4 E.
TwoCentreParams librating_two_centre() {
    TwoCentreParams p;
    p.mu1 = 1.0;
    p.mu2 = 0.6;
    p.c = std::sqrt(2.0);
    const double b = (p.mu1 + p.mu2) / p.c;
    p.E = -b / 3.2;
    p.gamma = -2.4 * p.E;
    return p;
}

struct Body {
    double x, y, vx, vy;
};

Body deriv_rhs(const Body& s, const TwoCentreParams& p) {
    const double dx1 = s.x - p.c, dx2 = s.x + p.c;
    const double r1 = std::hypot(dx1, s.y), r2 = std::hypot(dx2, s.y);
    const double k1 = p.mu1 / (r1 * r1 * r1), k2 = p.mu2 / (r2 * r2 * r2);
    return {s.vx, s.vy, -k1 * dx1 - k2 * dx2, -k1 * s.y - k2 * s.y};
}

void rk4_advance(Body& s, double h, const TwoCentreParams& p) {
    const Body k1 = deriv_rhs(s, p);
    const Body s2{s.x + 0.5 * h * k1.x, s.y + 0.5 * h * k1.y,
                  s.vx + 0.5 * h * k1.vx, s.vy + 0.5 * h * k1.vy};
    const Body k2 = deriv_rhs(s2, p);
    const Body s3{s.x + 0.5 * h * k2.x, s.y + 0.5 * h * k2.y,
                  s.vx + 0.5 * h * k2.vx, s.vy + 0.5 * h * k2.vy};
    const Body k3 = deriv_rhs(s3, p);
    const Body s4{s.x + h * k3.x, s.y + h * k3.y, s.vx + h * k3.vx,
                  s.vy + h * k3.vy};
    const Body k4 = deriv_rhs(s4, p);
    s.x += h / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    s.y += h / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y);
    s.vx += h / 6 * (k1.vx + 2 * k2.vx + 2 * k3.vx + k4.vx);
    s.vy += h / 6 * (k1.vy + 2 * k2.vy + 2 * k3.vy + k4.vy);
}

}  // namespace

TEST_CASE("wp inverse covers the top edge of the period rectangle") {
    // Lattice with three real branch roots.
    const auto ctx = WeierstrassContext::create(4.0, 0.5);
    REQUIRE(ctx.delta > 0.0);
    const double e2 = ctx.e[1].real(), e3 = ctx.e[2].real();
    for (double w : {0.15, 0.5, 0.85}) {
        const double s = e3 + w * (e2 - e3);
        const cplx z = wp_inverse_complex(s, ctx);
        CHECK(z.imag() == doctest::Approx(ctx.omega_im).epsilon(1e-12));
        CHECK(wp(z, ctx).real() == doctest::Approx(s).epsilon(1e-10));
        CHECK(std::abs(wp(z, ctx).imag()) < 1e-10);
    }
}

TEST_CASE("polar angle: linear when the dipole is off") {
    KLMNParams p{1.0, 0.0, 1.2, -0.3};
    const auto roots = positive_roots(as_quartic(p));
    REQUIRE(roots.size() == 2);
    const double u0 = roots[1];
    for (double z : {0.1, 0.7, 2.0})
        CHECK(klmn_theta_of_z(z, p, u0) == doctest::Approx(p.C * z));
}

TEST_CASE("polar angle: derivative and apse-to-apse value") {
    const auto [u_lo, u_hi] = first_well(kBound);
    const auto m = KLMNOrbitMap::create(kBound, u_lo);

    SUBCASE("theta(0) = 0 and d theta/dz = C - B u") {
        CHECK(m.theta_of_z(0.0) == 0.0);
        const double h = 1e-5 * m.omega;
        for (double frac : {0.1, 0.25, 0.4, 0.55, 0.7, 0.85, 0.97}) {
            const double z = frac * m.omega;
            const double fd =
                (m.theta_of_z(z + h) - m.theta_of_z(z - h)) / (2 * h);
            const double expected = kBound.C - kBound.B * m.u_of_z(z);
            CHECK(fd == doctest::Approx(expected).epsilon(1e-6));
        }
    }

    SUBCASE("apse-to-apse angle matches direct quadrature") {
        const double oracle = integrate(
            [&](double z) { return kBound.C - kBound.B * m.u_of_z(z); }, 0.0,
            m.omega, 1e-11);
        CHECK(klmn_delta_theta(kBound, u_lo) ==
              doctest::Approx(oracle).epsilon(1e-8));
    }

    SUBCASE("same orbit started from the other apse") {
        const auto m2 = KLMNOrbitMap::create(kBound, u_hi);
        CHECK(m2.omega == doctest::Approx(m.omega).epsilon(1e-10));
        CHECK(m2.theta_of_z(m2.omega) ==
              doctest::Approx(m.theta_of_z(m.omega)).epsilon(1e-9));
    }
}

TEST_CASE("periodicity detection") {
    SUBCASE("dipole-free orbit closes after one radial period") {
        KLMNParams p{1.0, 0.0, 1.2, -0.3};
        const double u0 = positive_roots(as_quartic(p))[1];
        const auto pq = klmn_periodicity(p, u0);
        REQUIRE(pq.has_value());
        CHECK(pq->first == 1);
        CHECK(pq->second == 1);
    }

    SUBCASE("generic dipole orbit does not close at small denominator") {
        const auto [u_lo, u_hi] = first_well(kBound);
        (void)u_hi;
        CHECK_FALSE(klmn_periodicity(kBound, u_lo, 64).has_value());
    }

    SUBCASE("apsidal character classification") {
        KLMNParams p;
        p.B = 1.0;
        p.C = 0.5;  // transverse velocity zero at u = 0.5
        CHECK(motion_character(p, 0.2, 0.4) == MotionCharacter::Sinusoidal);
        CHECK(motion_character(p, 0.3, 0.7) == MotionCharacter::Loopy);
        CHECK(motion_character(p, 0.5, 0.9) == MotionCharacter::Cusped);
        CHECK(motion_character(p, 0.1, 0.5 - 1e-12) ==
              MotionCharacter::Cusped);
        CHECK_THROWS_AS(motion_character(p, 0.7, 0.3), OrderingError);
        p.B = 0.0;
        CHECK(motion_character(p, 0.2, 0.9) == MotionCharacter::Sinusoidal);
    }

    SUBCASE("loopy orbit actually reverses its angular advance") {
        // Arrange C/B inside the well.
        KLMNParams p{1.0, 0.6, 1.05, -0.28};
        const auto [u_lo, u_hi] = first_well(p);
        const double u_star = p.C / p.B;
        if (u_star > u_lo && u_star < u_hi) {
            CHECK(motion_character(p, u_lo, u_hi) == MotionCharacter::Loopy);
            const auto m = KLMNOrbitMap::create(p, u_lo);
            double dmin = 1e300, dmax = -1e300;
            for (int i = 1; i < 40; ++i) {
                const double d = p.C - p.B * m.u_of_z(m.omega * i / 40.0);
                dmin = std::min(dmin, d);
                dmax = std::max(dmax, d);
            }
            CHECK(dmin < 0.0);
            CHECK(dmax > 0.0);
        }
    }
}

TEST_CASE("physical time along the orbit") {
    const auto [u_lo, u_hi] = first_well(kBound);
    (void)u_hi;
    const auto m = KLMNOrbitMap::create(kBound, u_lo);

    SUBCASE("short-time behaviour t ~ z/u0^2") {
        const double h = 1e-4 * m.omega;
        CHECK(m.time_of_z(h) * u_lo * u_lo / h ==
              doctest::Approx(1.0).epsilon(1e-6));
    }

    SUBCASE("matches quadrature of dz/u^2") {
        for (double frac : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
            const double z = frac * m.omega;
            const double oracle = integrate(
                [&](double s) {
                    const double u = m.u_of_z(s);
                    return 1.0 / (u * u);
                },
                0.0, z, 1e-12);
            CHECK(m.time_of_z(z) == doctest::Approx(oracle).epsilon(1e-8));
        }
    }

    SUBCASE("term-by-term regrouping agrees with the compact form") {
        for (double frac : {0.13, 0.39, 0.61, 0.83, 0.99}) {
            const double z = frac * m.omega;
            CHECK(m.time_of_z_expanded(z) ==
                  doctest::Approx(m.time_of_z(z)).epsilon(1e-9));
        }
    }

    SUBCASE("monotone in z") {
        double prev = 0.0;
        for (int i = 1; i <= 12; ++i) {
            const double t = m.time_of_z(m.omega * i / 12.0);
            CHECK(t > prev);
            prev = t;
        }
    }

    SUBCASE("dipole-free map integrates the harmonic solution") {
        KLMNParams p{1.0, 0.0, 1.2, -0.3};
        const double u0 = positive_roots(as_quartic(p))[1];
        const auto mk = KLMNOrbitMap::create(p, u0);
        const double z = 0.8 * mk.omega;
        const double uc = p.mu / (p.C * p.C);
        const double oracle = integrate(
            [&](double s) {
                const double u = uc + (u0 - uc) * std::cos(p.C * s);
                return 1.0 / (u * u);
            },
            0.0, z, 1e-12);
        CHECK(mk.time_of_z(z) == doctest::Approx(oracle).epsilon(1e-9));
    }
}

TEST_CASE("orbit trace self-consistency") {
    const auto [u_lo, u_hi] = first_well(kBound);
    const auto tr = klmn_orbit_trace(kBound, u_lo, 48);
    REQUIRE(tr.samples.size() == 49);

    SUBCASE("sampling and ranges") {
        CHECK(tr.samples.front().z == 0.0);
        CHECK(tr.samples.front().theta == 0.0);
        CHECK(tr.samples.front().t == 0.0);
        CHECK(tr.samples.front().r == doctest::Approx(1.0 / u_lo));
        CHECK(tr.samples.back().r ==
              doctest::Approx(1.0 / u_hi).epsilon(1e-8));
        for (size_t i = 1; i < tr.samples.size(); ++i) {
            CHECK(tr.samples[i].z > tr.samples[i - 1].z);
            CHECK(tr.samples[i].t > tr.samples[i - 1].t);
            CHECK(tr.samples[i].r <= 1.0 / u_lo + 1e-9);
            CHECK(tr.samples[i].r >= 1.0 / u_hi - 1e-9);
        }
    }

    SUBCASE("radial speed squared equals f(u) along the trace") {
        CHECK(tr.invariant_drift < 1e-7);
    }

    SUBCASE("the lattice coordinates of the trace stay on the curve") {
        // (s, g) reconstructed from u through the apse-based substitution
        // must satisfy g^2 = 4 s^3 - g2 s - g3.
        const QuarticCoeffs f = as_quartic(kBound);
        const auto inv = quartic_invariants(f);
        const auto wmap = WellTimeMap::create(f, u_lo);
        for (size_t i = 4; i + 4 < tr.samples.size(); i += 4) {
            const double u = 1.0 / tr.samples[i].r;
            const double s = s_substitution(u, wmap);
            const double g = g_substitution(u, wmap);
            const double rhs = 4 * s * s * s - inv.g2 * s - inv.g3;
            const double scale = std::max(1.0, std::abs(rhs));
            CHECK(g * g == doctest::Approx(rhs).epsilon(1e-8).scale(scale));
        }
    }
}

TEST_CASE("small-dipole limit approaches the closed conic") {
    const double mu = 1.0, C = 1.3, E = -0.25;
    const double l = C * C / mu;
    const double ecc = std::sqrt(1.0 + 2.0 * E * C * C / (mu * mu));
    std::vector<double> bs = {1e-2, 1e-3, 1e-4};
    std::vector<double> errs;
    for (double B : bs) {
        KLMNParams p{mu, B, C, E};
        // Pericentre root: nearest to the conic value (1 + e)/l.
        const auto roots = positive_roots(as_quartic(p));
        const double target = (1.0 + ecc) / l;
        double u0 = roots[0];
        for (double r : roots)
            if (std::abs(r - target) < std::abs(u0 - target)) u0 = r;
        const auto m = KLMNOrbitMap::create(p, u0);
        double maxerr = 0.0;
        for (double frac : {0.15, 0.3, 0.45, 0.6, 0.75, 0.9}) {
            const double z = frac * m.omega;
            const double u = m.u_of_z(z);
            const double th = m.theta_of_z(z);
            maxerr = std::max(maxerr,
                              std::abs(u - (1.0 + ecc * std::cos(th)) / l));
        }
        errs.push_back(maxerr);
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[2] < errs[1]);
    // Least-squares slope of log err against log B: first order in B.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < bs.size(); ++i) {
        const double x = std::log(bs[i]), y = std::log(errs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(bs.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope > 0.8);
    CHECK(slope < 1.2);
}

TEST_CASE("two-centre separated quartics have the product structure") {
    const TwoCentreParams p = librating_two_centre();
    const QuarticCoeffs qx = two_centre_qxi(p);
    const QuarticCoeffs qe = two_centre_qeta(p);
    const double b = (p.mu1 + p.mu2) / p.c;
    const double be = (p.mu1 - p.mu2) / p.c;
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> U(-2.5, 2.5);
    for (int k = 0; k < 5; ++k) {
        const double t = U(rng);
        const double fx = (t * t - 1) * (p.E * t * t + b * t - p.gamma);
        const double fe = (1 - t * t) * (-p.E * t * t + be * t + p.gamma);
        CHECK(qx(t) == doctest::Approx(fx).epsilon(1e-12).scale(
                           std::max(1.0, std::abs(fx))));
        CHECK(qe(t) == doctest::Approx(fe).epsilon(1e-12).scale(
                           std::max(1.0, std::abs(fe))));
    }
    // Energy-like identity: the two quadratic factors sum to
    // (E - V) (cosh^2 xi - cos^2 eta) for any xi, eta.
    const double ch = 1.7, cs = 0.4;
    const double r1 = p.c * (ch - cs), r2 = p.c * (ch + cs);
    const double lhs = (p.E * ch * ch + b * ch - p.gamma) +
                       (-p.E * cs * cs + be * cs + p.gamma);
    const double rhs =
        (p.E + p.mu1 / r1 + p.mu2 / r2) * (ch * ch - cs * cs);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("two-centre uniformised orbit against direct integration") {
    const TwoCentreParams p = librating_two_centre();
    auto m = TwoCentreOrbitMap::create(p, 2.0, 1.0);
    REQUIRE_FALSE(m.xi_frozen);
    m.eta_shift = 0.37 * m.ceta.omega;

    SUBCASE("parameter derivative squared equals the quartic") {
        const QuarticCoeffs qx = two_centre_qxi(p);
        const QuarticCoeffs qe = two_centre_qeta(p);
        const double h = 1e-6;
        for (double zeta : {0.21, 0.55, 0.9, 1.4}) {
            const auto [chp, csp] = m.state(zeta + h);
            const auto [chm, csm] = m.state(zeta - h);
            const auto [ch, cs] = m.state(zeta);
            const double dch = (chp - chm) / (2 * h);
            const double dcs = (csp - csm) / (2 * h);
            CHECK(dch * dch ==
                  doctest::Approx(qx(ch)).epsilon(1e-6).scale(
                      std::max(1.0, qx(ch))));
            CHECK(dcs * dcs ==
                  doctest::Approx(qe(cs)).epsilon(1e-6).scale(
                      std::max(1.0, qe(cs))));
        }
    }

    SUBCASE("time change reproduces the cartesian dynamics") {
        // Initial state at zeta = 0: cosh xi at its apse, cos eta mid-leg.
        const auto [ch0, cs0] = m.state(0.0);
        REQUIRE(ch0 == doctest::Approx(2.0));
        const double sh0 = std::sqrt(ch0 * ch0 - 1.0);
        const double sn0 = std::sqrt(1.0 - cs0 * cs0);
        const double delta0 = ch0 * ch0 - cs0 * cs0;
        // eta-rate from the closed form: d(cos eta)/dt / (-sin eta).
        const double hfd = 1e-6;
        const double dcs_dzeta =
            (m.state(hfd).second - m.state(-hfd).second) / (2 * hfd);
        const double dzeta_dt = std::sqrt(2.0) / (p.c * delta0);
        const double etadot = -dcs_dzeta * dzeta_dt / sn0;
        Body s;
        s.x = p.c * ch0 * cs0;
        s.y = p.c * sh0 * sn0;
        s.vx = -p.c * ch0 * sn0 * etadot;
        s.vy = p.c * sh0 * cs0 * etadot;
        // The reconstructed state must sit on the energy level.
        const double r1 = std::hypot(s.x - p.c, s.y);
        const double r2 = std::hypot(s.x + p.c, s.y);
        const double e0 = 0.5 * (s.vx * s.vx + s.vy * s.vy) - p.mu1 / r1 -
                          p.mu2 / r2;
        REQUIRE(e0 == doctest::Approx(p.E).epsilon(1e-9));

        const double zeta_end = 2.0 * m.cxi.omega;  // one radial cycle
        const int n_check = 24;
        const double t_end = m.time_of(zeta_end);
        const double h0 = t_end / 300000.0;
        double t_now = 0.0;
        for (int j = 1; j <= n_check; ++j) {
            const double zeta_j = zeta_end * j / n_check;
            const double t_j = m.time_of(zeta_j, 1e-12);
            const int steps = std::max(
                1, static_cast<int>(std::ceil((t_j - t_now) / h0)));
            const double h = (t_j - t_now) / steps;
            for (int k = 0; k < steps; ++k) rk4_advance(s, h, p);
            t_now = t_j;
            const double rr1 = std::hypot(s.x - p.c, s.y);
            const double rr2 = std::hypot(s.x + p.c, s.y);
            const auto [ch, cs] = m.state(zeta_j);
            CHECK((rr1 + rr2) / (2 * p.c) ==
                  doctest::Approx(ch).epsilon(1e-6));
            CHECK((rr2 - rr1) / (2 * p.c) ==
                  doctest::Approx(cs).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("two-centre elliptical solution") {
    // Build the repeated-root parameter set for A = 2, e = 0.5.
    const double mu1 = 1.0, mu2 = 0.6, A = 2.0, ecc = 0.5;
    TwoCentreParams p;
    p.mu1 = mu1;
    p.mu2 = mu2;
    p.c = A * ecc;
    const double ch0 = 1.0 / ecc;
    p.gamma = (mu1 + mu2) * ch0 / (2 * p.c);
    p.E = -(mu1 + mu2) / (2 * A);

    SUBCASE("geometry and energy") {
        const auto ell = two_centre_ellipse(p);
        CHECK(ell.A == doctest::Approx(A).epsilon(1e-12));
        CHECK(ell.e == doctest::Approx(ecc).epsilon(1e-12));
        CHECK(ell.E_ellipse == doctest::Approx(p.E).epsilon(1e-12));
        CHECK(std::cosh(ell.xi0) == doctest::Approx(ch0).epsilon(1e-12));
        // The xi quadratic has cosh xi0 as a double root.
        const double b = (mu1 + mu2) / p.c;
        CHECK(p.E * ch0 * ch0 + b * ch0 - p.gamma ==
              doctest::Approx(0.0).scale(1.0));
        CHECK(2 * p.E * ch0 + b == doctest::Approx(0.0).scale(1.0));
    }

    SUBCASE("one active centre reduces to the Kepler ellipse") {
        TwoCentreParams k = p;
        k.mu2 = 0.0;
        k.gamma = k.mu1 * ch0 / (2 * k.c);
        k.E = -k.mu1 / (2 * A);
        const auto ell = two_centre_ellipse(k);
        CHECK(ell.A == doctest::Approx(A));
        CHECK(ell.e == doctest::Approx(ecc));
        CHECK(ell.E_ellipse == doctest::Approx(-k.mu1 / (2 * A)));
    }

    SUBCASE("inconsistent separation constant gives no ellipse") {
        TwoCentreParams bad = p;
        bad.gamma *= 1.1;
        CHECK_THROWS_AS(two_centre_ellipse(bad), NoEllipse);
    }

    SUBCASE("the frozen coordinate stays frozen under uniformisation") {
        auto m = TwoCentreOrbitMap::create(p, ch0, 1.0);
        CHECK(m.xi_frozen);
        for (double zeta : {0.0, 0.3, 0.9, 1.7, 2.6}) {
            const auto [ch, cs] = m.state(zeta);
            CHECK(ch == doctest::Approx(ch0).epsilon(1e-12));
            CHECK(std::abs(cs) <= 1.0);
        }
    }

    SUBCASE("speed superposition from the two one-centre problems") {
        for (int i = 0; i <= 20; ++i) {
            const double eta = -kPi + 2 * kPi * i / 20.0 + 0.05;
            const auto bs = bonnet_split(p, eta);
            CHECK(bs.v2_total ==
                  doctest::Approx(bs.v2_centre1 + bs.v2_centre2)
                      .epsilon(1e-9));
            CHECK(bs.v2_total > 0.0);
        }
    }
}
