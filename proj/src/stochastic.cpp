#include "ellorb/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace ellorb {
namespace {

constexpr double kPi = 3.14159265358979323846;

// --- small dense helpers ---------------------------------------------------

// Augmented characteristic state, flattened for RK4 arithmetic:
// position, velocity, action, DX = D Phi (row major), DP = D Phidot,
// and the running integral of tr S'' = tr(DP DX^-1).
constexpr int kX = 0, kP = 2, kAct = 4, kJX = 5, kJP = 9, kTr = 13;
constexpr int kNState = 14;
using Aug = std::array<double, kNState>;

struct Deriv {
    const MechanicalModel* m;
    bool with_trace = false;

    void hessian(const std::function<Point2(const Point2&)>& grad,
                 const Point2& x, double h[2][2]) const {
        const int d = m->dim;
        const double step =
            1e-5 * (1.0 + std::max(std::fabs(x[0]), std::fabs(x[1])));
        double cols[2][2] = {{0, 0}, {0, 0}};
        for (int j = 0; j < d; ++j) {
            Point2 xp = x, xm = x;
            xp[j] += step;
            xm[j] -= step;
            const Point2 gp = grad(xp), gm = grad(xm);
            for (int i = 0; i < d; ++i)
                cols[i][j] = (gp[i] - gm[i]) / (2 * step);
        }
        // Symmetrise; fill the unused block with zero.
        h[0][0] = cols[0][0];
        h[0][1] = h[1][0] = 0.5 * (cols[0][1] + cols[1][0]);
        h[1][1] = cols[1][1];
    }

    void operator()(const Aug& s, Aug& d) const {
        const Point2 x{s[kX], s[kX + 1]};
        const Point2 g = m->grad_potential(x);
        d[kX] = s[kP];
        d[kX + 1] = s[kP + 1];
        d[kP] = -g[0];
        d[kP + 1] = -g[1];
        d[kAct] = 0.5 * (s[kP] * s[kP] + s[kP + 1] * s[kP + 1]) -
                  m->potential(x);
        double h[2][2];
        hessian(m->grad_potential, x, h);
        // DXdot = DP, DPdot = -Hess V . DX.
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                d[kJX + 2 * i + j] = s[kJP + 2 * i + j];
                d[kJP + 2 * i + j] = -(h[i][0] * s[kJX + 0 + j] +
                                       h[i][1] * s[kJX + 2 + j]);
            }
        if (m->dim == 1) {
            // Keep the spare block an exact identity.
            d[kJX + 1] = d[kJX + 2] = d[kJX + 3] = 0;
            d[kJP + 1] = d[kJP + 2] = d[kJP + 3] = 0;
        }
        d[kTr] = 0;
        if (with_trace) {
            const double jx00 = s[kJX], jx01 = s[kJX + 1];
            const double jx10 = s[kJX + 2], jx11 = s[kJX + 3];
            const double det = jx00 * jx11 - jx01 * jx10;
            if (std::fabs(det) < 1e-14)
                throw CausticReached(
                    "Jacobi field: det D Phi vanished along the trajectory");
            // tr(DP DX^-1) via the adjugate.
            d[kTr] = (s[kJP] * jx11 - s[kJP + 1] * jx10 +
                      s[kJP + 3] * jx00 - s[kJP + 2] * jx01) /
                     det;
        }
    }
};

void rk4_step(const Deriv& f, Aug& s, double h) {
    Aug k1, k2, k3, k4, tmp;
    f(s, k1);
    for (int i = 0; i < kNState; ++i) tmp[i] = s[i] + 0.5 * h * k1[i];
    f(tmp, k2);
    for (int i = 0; i < kNState; ++i) tmp[i] = s[i] + 0.5 * h * k2[i];
    f(tmp, k3);
    for (int i = 0; i < kNState; ++i) tmp[i] = s[i] + h * k3[i];
    f(tmp, k4);
    for (int i = 0; i < kNState; ++i)
        s[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
}

Aug initial_state(const Point2& x0, const MechanicalModel& m) {
    Aug s{};
    s[kX] = x0[0];
    s[kX + 1] = x0[1];
    const Point2 p0 = m.grad_initial_action(x0);
    s[kP] = p0[0];
    s[kP + 1] = (m.dim == 2) ? p0[1] : 0.0;
    s[kAct] = m.initial_action(x0);
    s[kJX] = s[kJX + 3] = 1.0;
    double h0[2][2];
    Deriv d{&m, false};
    d.hessian(m.grad_initial_action, x0, h0);
    s[kJP] = h0[0][0];
    if (m.dim == 2) {
        s[kJP + 1] = h0[0][1];
        s[kJP + 2] = h0[1][0];
        s[kJP + 3] = h0[1][1];
    }
    return s;
}

Aug integrate_flow(const Point2& x0, double t, const MechanicalModel& m,
                   bool with_trace) {
    Aug s = initial_state(x0, m);
    if (t <= 0) return s;
    const int n = std::max<int>(32, static_cast<int>(std::ceil(t / 1e-3)));
    const double h = t / n;
    const Deriv f{&m, with_trace};
    for (int k = 0; k < n; ++k) rk4_step(f, s, h);
    return s;
}

double det_block(const Aug& s, int dim) {
    if (dim == 1) return s[kJX];
    return s[kJX] * s[kJX + 3] - s[kJX + 1] * s[kJX + 2];
}

// --- natural cubic spline --------------------------------------------------

struct CubicSpline {
    std::vector<double> x, y, m2;  // knots, values, second derivatives

    static CubicSpline build(std::vector<double> xs, std::vector<double> ys) {
        CubicSpline s;
        s.x = std::move(xs);
        s.y = std::move(ys);
        const std::size_t n = s.x.size();
        s.m2.assign(n, 0.0);
        if (n < 3) return s;
        std::vector<double> diag(n - 2), rhs(n - 2), sub(n - 2), sup(n - 2);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hl = s.x[i] - s.x[i - 1];
            const double hr = s.x[i + 1] - s.x[i];
            sub[i - 1] = hl / 6.0;
            diag[i - 1] = (hl + hr) / 3.0;
            sup[i - 1] = hr / 6.0;
            rhs[i - 1] = (s.y[i + 1] - s.y[i]) / hr - (s.y[i] - s.y[i - 1]) / hl;
        }
        // Thomas elimination.
        for (std::size_t i = 1; i < diag.size(); ++i) {
            const double w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for (std::size_t i = diag.size(); i-- > 0;) {
            const double upper = (i + 1 < diag.size()) ? sup[i] * s.m2[i + 2] : 0.0;
            s.m2[i + 1] = (rhs[i] - upper) / diag[i];
        }
        return s;
    }

    double eval(double t) const {
        if (x.size() < 2) return y.empty() ? 0.0 : y.front();
        if (t <= x.front()) t = x.front();
        if (t >= x.back()) t = x.back();
        const auto it = std::upper_bound(x.begin(), x.end(), t);
        const std::size_t i =
            std::min<std::size_t>(x.size() - 2,
                                  (it == x.begin()) ? 0 : (it - x.begin() - 1));
        const double h = x[i + 1] - x[i];
        const double a = (x[i + 1] - t) / h, b = (t - x[i]) / h;
        return a * y[i] + b * y[i + 1] +
               ((a * a * a - a) * m2[i] + (b * b * b - b) * m2[i + 1]) *
                   (h * h) / 6.0;
    }
};

// --- deterministic per-path RNG -------------------------------------------

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

struct GaussianStream {
    std::mt19937_64 gen;
    double spare = 0;
    bool have_spare = false;

    GaussianStream(std::uint64_t seed, std::uint64_t index)
        : gen(mix64(mix64(seed) ^ mix64(index + 0x5851F42D4C957F2DULL))) {}

    double uniform() {  // in (0, 1]
        return static_cast<double>((gen() >> 11) + 1) * 0x1.0p-53;
    }
    double normal() {  // explicit Box-Muller for platform independence
        if (have_spare) {
            have_spare = false;
            return spare;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double a = 2.0 * kPi * uniform();
        spare = r * std::sin(a);
        have_spare = true;
        return r * std::cos(a);
    }
};

double pairwise_sum(const double* a, std::size_t n) {
    if (n <= 8) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += a[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(a, half) + pairwise_sum(a + half, n - half);
}

// --- cached drift field for the stochastic representation ------------------

// grad S and lap S at the times tau_j = j t / n_levels, each stored as
// cubic splines over a uniform spatial grid; linear interpolation between
// neighbouring time levels.
struct FieldCache {
    double t = 0;
    int n_levels = 0;
    std::vector<CubicSpline> v, lap;

    static FieldCache build(double t, const MechanicalModel& m) {
        FieldCache c;
        c.t = t;
        c.n_levels = 512;
        const double dtau = t / c.n_levels;
        const int n0 = 1024;                     // characteristics
        const double span = 3.0 * m.box_halfwidth;
        std::vector<Aug> states(n0);
        std::vector<double> x0s(n0);
        for (int k = 0; k < n0; ++k) {
            x0s[k] = -span + 2.0 * span * k / (n0 - 1);
            states[k] = initial_state({x0s[k], 0.0}, m);
        }
        const Deriv f{&m, false};
        const int n_sub = std::max<int>(1, static_cast<int>(std::ceil(dtau / 1e-3)));
        const double h = dtau / n_sub;
        c.v.reserve(c.n_levels + 1);
        c.lap.reserve(c.n_levels + 1);
        for (int j = 0; j <= c.n_levels; ++j) {
            if (j > 0)
                for (auto& s : states)
                    for (int q = 0; q < n_sub; ++q) rk4_step(f, s, h);
            std::vector<double> xs(n0), ss(n0);
            for (int k = 0; k < n0; ++k) {
                xs[k] = states[k][kX];
                ss[k] = states[k][kAct];
            }
            for (int k = 1; k < n0; ++k)
                if (!(xs[k] > xs[k - 1]))
                    throw CausticReached(
                        "drift cache: characteristics cross before t");
            const CubicSpline s_of_x = CubicSpline::build(xs, ss);
            // Uniform grid, then central differences of the action.
            const int ng = 1024;
            const double lo = xs.front(), hi = xs.back();
            const double dx = (hi - lo) / (ng - 1);
            std::vector<double> grid(ng), sg(ng), vg(ng), lg(ng);
            for (int i = 0; i < ng; ++i) {
                grid[i] = lo + i * dx;
                sg[i] = s_of_x.eval(grid[i]);
            }
            for (int i = 1; i + 1 < ng; ++i) {
                vg[i] = (sg[i + 1] - sg[i - 1]) / (2 * dx);
                lg[i] = (sg[i + 1] - 2 * sg[i] + sg[i - 1]) / (dx * dx);
            }
            vg[0] = vg[1];
            vg[ng - 1] = vg[ng - 2];
            lg[0] = lg[1];
            lg[ng - 1] = lg[ng - 2];
            c.v.push_back(CubicSpline::build(grid, vg));
            c.lap.push_back(CubicSpline::build(std::move(grid), std::move(lg)));
        }
        return c;
    }

    void eval(double y, double tau, double& grad_s, double& lap_s) const {
        const double u = std::clamp(tau / t * n_levels, 0.0, double(n_levels));
        int j = std::min(n_levels - 1, static_cast<int>(u));
        const double w = u - j;
        grad_s = (1 - w) * v[j].eval(y) + w * v[j + 1].eval(y);
        lap_s = (1 - w) * lap[j].eval(y) + w * lap[j + 1].eval(y);
    }
};

}  // namespace

// --- model factories -------------------------------------------------------

namespace {
std::function<double(const Point2&)> gaussian_amplitude(int dim, double w) {
    const double norm = std::pow(kPi * w * w, -0.25 * dim);
    return [dim, w, norm](const Point2& x) {
        double q = x[0] * x[0];
        if (dim == 2) q += x[1] * x[1];
        return norm * std::exp(-q / (2 * w * w));
    };
}
}  // namespace

MechanicalModel make_free_model(int dim, double s0_curvature, double t0_width) {
    MechanicalModel m;
    m.dim = dim;
    const double a = s0_curvature;
    m.potential = [](const Point2&) { return 0.0; };
    m.grad_potential = [](const Point2&) { return Point2{0.0, 0.0}; };
    m.initial_action = [a, dim](const Point2& x) {
        double q = x[0] * x[0];
        if (dim == 2) q += x[1] * x[1];
        return 0.5 * a * q;
    };
    m.grad_initial_action = [a, dim](const Point2& x) {
        return Point2{a * x[0], dim == 2 ? a * x[1] : 0.0};
    };
    m.initial_amplitude = gaussian_amplitude(dim, t0_width);
    if (a < 0) m.caustic_time = -1.0 / a;  // D Phi_t = (1 + a t) I
    return m;
}

MechanicalModel make_harmonic_model(int dim, double omega, double t0_width) {
    MechanicalModel m;
    m.dim = dim;
    m.potential = [omega, dim](const Point2& x) {
        double q = x[0] * x[0];
        if (dim == 2) q += x[1] * x[1];
        return 0.5 * omega * omega * q;
    };
    m.grad_potential = [omega, dim](const Point2& x) {
        return Point2{omega * omega * x[0], dim == 2 ? omega * omega * x[1] : 0.0};
    };
    m.initial_action = [](const Point2&) { return 0.0; };
    m.grad_initial_action = [](const Point2&) { return Point2{0.0, 0.0}; };
    m.initial_amplitude = gaussian_amplitude(dim, t0_width);
    m.caustic_time = 0.5 * kPi / omega;  // D Phi_t = cos(omega t) I
    return m;
}

MechanicalModel make_quartic_model(double beta, double t0_width) {
    MechanicalModel m;
    m.dim = 1;
    m.potential = [beta](const Point2& x) {
        return 0.5 * x[0] * x[0] + 0.25 * beta * x[0] * x[0] * x[0] * x[0];
    };
    m.grad_potential = [beta](const Point2& x) {
        return Point2{x[0] + beta * x[0] * x[0] * x[0], 0.0};
    };
    m.initial_action = [](const Point2&) { return 0.0; };
    m.grad_initial_action = [](const Point2&) { return Point2{0.0, 0.0}; };
    m.initial_amplitude = gaussian_amplitude(1, t0_width);
    return m;
}

// --- flow, inverse, action, Jacobi field -----------------------------------

FlowPoint flow(const Point2& x0, double t, const MechanicalModel& m) {
    const Aug s = integrate_flow(x0, t, m, false);
    FlowPoint fp;
    fp.x = {s[kX], s[kX + 1]};
    fp.p = {s[kP], s[kP + 1]};
    fp.action = s[kAct];
    fp.det_jacobian = det_block(s, m.dim);
    return fp;
}

Point2 flow_inverse(const Point2& x, double t, const MechanicalModel& m) {
    if (t <= 0) return x;
    const int d = m.dim;
    const double tol = 1e-11 * (1.0 + std::hypot(x[0], x[1]));
    const double L = m.box_halfwidth;
    std::vector<Point2> starts{x};
    if (d == 1) {
        for (int i = 0; i < 8; ++i)
            starts.push_back({-L + (i + 0.5) * L / 4.0, 0.0});
    } else {
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j)
                starts.push_back(
                    {-L + (i + 0.5) * L / 4.0, -L + (j + 0.5) * L / 4.0});
    }
    bool caustic_root = false;
    for (const Point2& s0 : starts) {
        Point2 y = s0;
        FlowPoint fp = flow(y, t, m);
        double res = std::hypot(fp.x[0] - x[0], d == 2 ? fp.x[1] - x[1] : 0.0);
        bool ok = res < tol;
        for (int it = 0; it < 30 && !ok; ++it) {
            // Newton step from the flow Jacobian, damped by halving.
            Aug a = integrate_flow(y, t, m, false);
            const double f0 = a[kX] - x[0];
            const double f1 = (d == 2) ? a[kX + 1] - x[1] : 0.0;
            double step0, step1 = 0;
            if (d == 1) {
                if (std::fabs(a[kJX]) < 1e-12) break;
                step0 = f0 / a[kJX];
            } else {
                const double det = det_block(a, 2);
                if (std::fabs(det) < 1e-12) break;
                step0 = (a[kJX + 3] * f0 - a[kJX + 1] * f1) / det;
                step1 = (-a[kJX + 2] * f0 + a[kJX] * f1) / det;
            }
            double lam = 1.0;
            bool moved = false;
            while (lam >= 1.0 / 64) {
                const Point2 yn{y[0] - lam * step0, y[1] - lam * step1};
                const FlowPoint fn = flow(yn, t, m);
                const double rn = std::hypot(fn.x[0] - x[0],
                                             d == 2 ? fn.x[1] - x[1] : 0.0);
                if (rn < res * (1.0 - 0.25 * lam) || rn < tol) {
                    y = yn;
                    fp = fn;
                    res = rn;
                    moved = true;
                    break;
                }
                lam *= 0.5;
            }
            if (!moved) break;
            ok = res < tol;
        }
        if (!ok) continue;
        if (std::fabs(fp.det_jacobian) < 1e-10) {
            caustic_root = true;
            continue;
        }
        // Roots far outside the working box are beyond the multi-start
        // coverage and are not trusted.
        if (std::max(std::fabs(y[0]), d == 2 ? std::fabs(y[1]) : 0.0) > 8 * L)
            continue;
        return y;
    }
    if (caustic_root)
        throw CausticReached("flow inverse: arrival point sits on a caustic");
    throw InverseNotFound("flow inverse: no Newton start converged to a "
                          "trustworthy preimage");
}

double action(const Point2& x, double t, const MechanicalModel& m) {
    if (t <= 0) return m.initial_action(x);
    const Point2 y = flow_inverse(x, t, m);
    return flow(y, t, m).action;
}

JacobiReport jacobi_field(const Point2& x0, double t,
                          const MechanicalModel& m) {
    const Aug s = integrate_flow(x0, t, m, true);
    JacobiReport r;
    r.det_jacobian = det_block(s, m.dim);
    r.trace_integral = s[kTr];
    r.identity_residual =
        std::fabs(std::fabs(r.det_jacobian) - std::exp(r.trace_integral));
    return r;
}

double estimate_caustic_time(const MechanicalModel& m, double t_max) {
    const double L = m.box_halfwidth;
    std::vector<Point2> starts;
    if (m.dim == 1) {
        for (int i = 0; i < 17; ++i)
            starts.push_back({-L + 2.0 * L * i / 16, 0.0});
    } else {
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 7; ++j)
                starts.push_back({-L + 2.0 * L * i / 6, -L + 2.0 * L * j / 6});
    }
    double best = std::numeric_limits<double>::infinity();
    const auto det_at = [&](const Point2& x0, double t) {
        return flow(x0, t, m).det_jacobian;
    };
    for (const Point2& x0 : starts) {
        // March until the determinant changes sign, then bisect.
        const double h = std::min(1e-2, t_max / 64);
        double t_lo = 0, d_lo = 1.0;
        double hit = -1;
        for (double t = h; t <= std::min(best, t_max) + h; t += h) {
            const double d = det_at(x0, t);
            if (d_lo * d <= 0.0) {
                hit = t;
                break;
            }
            t_lo = t;
            d_lo = d;
        }
        if (hit < 0) continue;
        double a = t_lo, b = hit;
        for (int it = 0; it < 40 && (b - a) > 1e-7 * (1 + b); ++it) {
            const double c = 0.5 * (a + b);
            if (d_lo * det_at(x0, c) <= 0.0)
                b = c;
            else
                a = c;
        }
        best = std::min(best, 0.5 * (a + b));
    }
    return best;
}

// --- stochastic representation ---------------------------------------------

HeatKernelReport elementary_formula_mc(double x, double t, double sigma,
                                       std::size_t n_paths, std::uint64_t seed,
                                       const MechanicalModel& m,
                                       double step_override) {
    if (m.dim != 1)
        throw DomainError("elementary_formula_mc: one-dimensional models only");
    if (!(t > 0) || !(sigma > 0) || n_paths < 2)
        throw DomainError("elementary_formula_mc: need t > 0, sigma > 0 and "
                          "at least two paths");
    if (t >= m.caustic_time)
        throw CausticReached(
            "elementary_formula_mc: t at or beyond the first focal time");

    const FieldCache cache = FieldCache::build(t, m);
    const double s_arrival = action({x, 0.0}, t, m);

    const auto run = [&](double h, int n_steps, double& mean, double& se) {
        std::vector<double> w(n_paths);
        for (std::size_t ip = 0; ip < n_paths; ++ip) {
            GaussianStream g(seed, ip);
            double y = x, acc = 0;
            double v0, l0;
            cache.eval(y, t, v0, l0);
            for (int k = 0; k < n_steps; ++k) {
                const double tau1 = t - (k + 1) * h;
                const double noise = sigma * std::sqrt(h) * g.normal();
                // Heun step for the drift, Euler-Maruyama noise; the
                // Laplacian integral uses the matching trapezoid.
                const double yp = y - v0 * h + noise;
                double v1, l1;
                cache.eval(yp, tau1, v1, l1);
                const double yn = y - 0.5 * (v0 + v1) * h + noise;
                cache.eval(yn, tau1, v1, l1);
                acc += 0.5 * (l0 + l1) * h;
                y = yn;
                v0 = v1;
                l0 = l1;
            }
            w[ip] = m.initial_amplitude({y, 0.0}) * std::exp(-0.5 * acc);
        }
        mean = pairwise_sum(w.data(), n_paths) / double(n_paths);
        for (auto& wi : w) wi = (wi - mean) * (wi - mean);
        se = std::sqrt(pairwise_sum(w.data(), n_paths) /
                       (double(n_paths) * double(n_paths - 1)));
    };

    const double h_target =
        step_override > 0 ? step_override : std::min(1e-3, t / 1000);
    const int n1 = std::max<int>(1, static_cast<int>(std::lround(t / h_target)));
    double mean1, se1, mean2, se2;
    run(t / n1, n1, mean1, se1);
    run(t / (2 * n1), 2 * n1, mean2, se2);
    if (std::fabs(mean1 - mean2) >
        3.0 * std::sqrt(se1 * se1 + se2 * se2) + 1e-15)
        throw StepTooCoarse("elementary_formula_mc: halving the step moved "
                            "the mean by more than three standard errors");

    HeatKernelReport r;
    r.log_prefactor = -s_arrival / (sigma * sigma);
    r.expectation_mean = mean1;
    r.std_error = se1;
    r.n_paths = n_paths;
    r.step = t / n1;
    r.seed = seed;
    return r;
}

// --- logarithmic transform -------------------------------------------------

std::vector<double> hopf_cole_velocity(const std::vector<double>& u, double dx,
                                       double sigma) {
    const std::size_t n = u.size();
    if (n < 3 || !(dx > 0))
        throw DomainError("hopf_cole_velocity: need at least three samples "
                          "and dx > 0");
    std::vector<double> lnu(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(u[i] > 0))
            throw NonPositiveField(
                "hopf_cole_velocity: u must be strictly positive");
        lnu[i] = std::log(u[i]);
    }
    std::vector<double> v(n);
    const double s2 = sigma * sigma;
    for (std::size_t i = 1; i + 1 < n; ++i)
        v[i] = -s2 * (lnu[i + 1] - lnu[i - 1]) / (2 * dx);
    v[0] = -s2 * (-3 * lnu[0] + 4 * lnu[1] - lnu[2]) / (2 * dx);
    v[n - 1] = -s2 * (3 * lnu[n - 1] - 4 * lnu[n - 2] + lnu[n - 3]) / (2 * dx);
    return v;
}

double burgers_residual(const std::vector<double>& v_prev,
                        const std::vector<double>& v_now,
                        const std::vector<double>& v_next, double dt,
                        double x_left, double dx, double sigma,
                        const std::function<double(double)>& grad_potential) {
    const std::size_t n = v_now.size();
    if (n < 3 || v_prev.size() != n || v_next.size() != n || !(dt > 0) ||
        !(dx > 0))
        throw DomainError("burgers_residual: need three equal slices with "
                          "dt, dx > 0");
    double worst = 0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double vt = (v_next[i] - v_prev[i]) / (2 * dt);
        const double vx = (v_now[i + 1] - v_now[i - 1]) / (2 * dx);
        const double vxx =
            (v_now[i + 1] - 2 * v_now[i] + v_now[i - 1]) / (dx * dx);
        const double r = vt + v_now[i] * vx + grad_potential(x_left + i * dx) -
                         0.5 * sigma * sigma * vxx;
        worst = std::max(worst, std::fabs(r));
    }
    return worst;
}

// --- diffusion kinematics --------------------------------------------------

namespace {
Point3 fd_gradient(const std::function<double(const Point3&)>& f,
                   const Point3& x, double h) {
    Point3 g{};
    for (int i = 0; i < 3; ++i) {
        Point3 xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2 * h);
    }
    return g;
}

double fd_laplacian(const std::function<double(const Point3&)>& f,
                    const Point3& x, double h) {
    double lap = 0;
    const double fc = f(x);
    for (int i = 0; i < 3; ++i) {
        Point3 xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        lap += (f(xp) - 2 * fc + f(xm)) / (h * h);
    }
    return lap;
}
}  // namespace

double nelson_continuity_residual(const NelsonState& st, const Point3& x,
                                  double fd_step) {
    const Point3 gr = fd_gradient(st.amplitude_exponent, x, fd_step);
    const Point3 gs = fd_gradient(st.phase, x, fd_step);
    const double lap_s = fd_laplacian(st.phase, x, fd_step);
    return 2.0 / st.eps2 * (gr[0] * gs[0] + gr[1] * gs[1] + gr[2] * gs[2]) +
           lap_s;
}

double nelson_drift_check(const NelsonState& st,
                          const std::vector<Point3>& points, double fd_step) {
    double worst = 0;
    for (const Point3& x : points)
        worst = std::max(worst,
                         std::fabs(nelson_continuity_residual(st, x, fd_step)));
    return worst;
}

Point3 osmotic_velocity(const NelsonState& st, const Point3& x,
                        double fd_step) {
    const auto& R = st.amplitude_exponent;
    const double e2 = st.eps2;
    const auto log_sqrt_rho = [&R, e2](const Point3& y) {
        return std::log(std::sqrt(std::exp(2.0 * R(y) / e2)));
    };
    Point3 u = fd_gradient(log_sqrt_rho, x, fd_step);
    for (double& ui : u) ui *= e2;
    return u;
}

Point3 current_velocity(const NelsonState& st, const Point3& x,
                        double fd_step) {
    return fd_gradient(st.phase, x, fd_step);
}

NelsonState galaxy_stationary_state(double mu, double lambda, double sigma2) {
    if (!(mu > 0) || !(lambda > 0) || !(sigma2 > 0) || !(sigma2 < lambda))
        throw DomainError(
            "galaxy_stationary_state: need mu > 0 and 0 < sigma2 < lambda");
    const auto guard = [](const Point3& x) {
        const double rho2 = x[0] * x[0] + x[1] * x[1];
        if (rho2 < 1e-24)
            throw AxisSingularity(
                "galaxy_stationary_state: fields singular on the z-axis");
        return rho2;
    };
    NelsonState st;
    st.eps2 = sigma2;
    st.amplitude_exponent = [lambda, sigma2, guard](const Point3& x) {
        const double rho2 = guard(x);
        return lambda * std::atan2(x[1], x[0]) - 0.5 * sigma2 * std::log(rho2);
    };
    st.phase = [mu, lambda, sigma2, guard](const Point3& x) {
        const double rho2 = guard(x);
        const double r = std::sqrt(rho2 + x[2] * x[2]);
        return mu * r / lambda - 0.5 * lambda * std::log(rho2) -
               sigma2 * std::atan2(x[1], x[0]);
    };
    return st;
}

}  // namespace ellorb
