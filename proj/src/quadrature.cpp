#include "ellorb/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "ellorb/errors.hpp"

namespace ellorb {
namespace {

// 15-point Kronrod abscissae/weights on [-1,1] with the embedded 7-point
// Gauss rule (nodes at odd Kronrod indices).
constexpr double kXgk[15] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.000000000000000, -0.207784955007898,
    -0.405845151377397, -0.586087235467691, -0.741531185599394,
    -0.864864423359769, -0.949107912342759, -0.991455371120813};
constexpr double kWgk[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
constexpr double kWg[7] = {0.129484966168870, 0.279705391489277,
                           0.381830050505119, 0.417959183673469,
                           0.381830050505119, 0.279705391489277,
                           0.129484966168870};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

Panel evaluate(const std::function<double(double)>& f, double a, double b) {
    const double h = 0.5 * (b - a);
    const double c = 0.5 * (a + b);
    double k15 = 0.0, g7 = 0.0;
    for (int i = 0; i < 15; ++i) {
        const double fx = f(c + h * kXgk[i]);
        k15 += kWgk[i] * fx;
        if (i % 2 == 1) g7 += kWg[i / 2] * fx;
    }
    k15 *= h;
    g7 *= h;
    return {a, b, k15, std::abs(k15 - g7)};
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, int max_depth) {
    if (a == b) return 0.0;
    std::priority_queue<Panel> queue;
    queue.push(evaluate(f, a, b));
    double total = queue.top().value;
    double err = queue.top().error;
    // Each refinement pops the worst panel and replaces it by its halves.
    // A relative floor keeps the loop from chasing roundoff noise.
    const int max_panels = 1 << std::min(max_depth, 20);
    while (err > std::max(abs_tol, 5e-15 * std::abs(total))) {
        if (queue.top().error <= 1e-16 * std::max(1.0, std::abs(total))) break;
        if (static_cast<int>(queue.size()) >= max_panels)
            throw ConvergenceError("quadrature failed to reach tolerance");
        Panel worst = queue.top();
        queue.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Panel left = evaluate(f, worst.a, mid);
        Panel right = evaluate(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        queue.push(left);
        queue.push(right);
    }
    return total;
}

double integrate_to_inf(const std::function<double(double)>& f, double a,
                        double abs_tol) {
    auto g = [&](double u) {
        const double one_m = 1.0 - u;
        const double t = a + u / one_m;
        return f(t) / (one_m * one_m);
    };
    // Stay off u = 1; the integrand must decay fast enough that the tail
    // ignored here is far below tolerance.
    return integrate(g, 0.0, 1.0 - 1e-14, abs_tol);
}

double integrate_from_minus_inf(const std::function<double(double)>& f,
                                double b, double abs_tol) {
    auto g = [&](double t) { return f(2.0 * b - t); };
    return integrate_to_inf(g, b, abs_tol);
}

std::vector<double> poly_shift(const std::vector<double>& poly, double a) {
    // Repeated synthetic division by (x - a) produces the Taylor
    // coefficients of P about a, numerically stably.
    std::vector<double> c = poly;
    const int n = static_cast<int>(c.size());
    std::vector<double> out(n, 0.0);
    for (int k = 0; k < n; ++k) {
        // One Horner pass divides the current quotient by (x - a) in place;
        // the remainder left at index k is the Taylor coefficient s_k.
        double carry = 0.0;
        for (int i = n - 1; i >= k; --i) {
            carry = c[i] + carry * a;
            c[i] = carry;
        }
        out[k] = c[k];
    }
    return out;
}

namespace {

// Integrand after t = a + dir*v^2 on a 1/sqrt(P) integral, evaluated from
// the Taylor coefficients of P about a so that an endpoint root causes no
// cancellation:
//   2 v / sqrt(P(a + dir v^2)) = 2 v / sqrt(p0 + w*(s1 + s2 w + ...)),
//   w = dir * v^2.
struct InvSqrtIntegrand {
    std::vector<double> s;  // Taylor coefficients about the endpoint
    double dir;             // +1 going right, -1 going left
    bool singular;          // endpoint treated as an exact simple root

    double operator()(double v) const {
        const double w = dir * v * v;
        double m = 0.0;  // sum_{k>=1} s_k w^{k-1}
        for (size_t k = s.size(); k-- > 1;) m = m * w + s[k];
        const double p = (singular ? 0.0 : s[0]) + w * m;
        if (p <= 0.0) throw NegativeIntegrand("P(t) <= 0 inside sqrt domain");
        return 2.0 * std::abs(v) / std::sqrt(p);
    }
};

InvSqrtIntegrand make_integrand(const std::vector<double>& poly, double a,
                                double dir) {
    InvSqrtIntegrand g;
    g.s = poly_shift(poly, a);
    g.dir = dir;
    double scale = 0.0;
    for (size_t k = 1; k < g.s.size(); ++k)
        scale = std::max(scale, std::abs(g.s[k]));
    g.singular = std::abs(g.s[0]) < 1e-11 * std::max(scale, 1e-300);
    return g;
}

}  // namespace

double integrate_inv_sqrt_to_inf(const std::vector<double>& poly, double a,
                                 double abs_tol) {
    auto g = make_integrand(poly, a, +1.0);
    return integrate_to_inf([g](double v) { return g(v); }, 0.0, abs_tol);
}

double integrate_inv_sqrt_from_minus_inf(const std::vector<double>& poly,
                                         double b, double abs_tol) {
    auto g = make_integrand(poly, b, -1.0);
    return integrate_to_inf([g](double v) { return g(v); }, 0.0, abs_tol);
}

double integrate_inv_sqrt(const std::vector<double>& poly, double a, double b,
                          double abs_tol) {
    if (!(b > a)) throw DomainError("integrate_inv_sqrt: requires b > a");
    const double mid = 0.5 * (a + b);
    auto left = make_integrand(poly, a, +1.0);
    auto right = make_integrand(poly, b, -1.0);
    return integrate([left](double v) { return left(v); }, 0.0,
                     std::sqrt(mid - a), 0.5 * abs_tol) +
           integrate([right](double v) { return right(v); }, 0.0,
                     std::sqrt(b - mid), 0.5 * abs_tol);
}

}  // namespace ellorb
