#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccas {

// Thrown when the adaptive integrator cannot reach the requested tolerance;
// carries the error estimate it did achieve.
class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& msg, double achieved)
        : std::runtime_error(msg + " (achieved error estimate " +
                             format_error(achieved) + ")"),
          achieved_error(achieved) {}
    double achieved_error;

private:
    static std::string format_error(double e) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3g", e);
        return buf;
    }
};

struct QuadratureResult {
    std::complex<double> value{0.0, 0.0};
    double error = 0.0;
    std::size_t evaluations = 0;
};

namespace detail {

// 15-point Kronrod / 7-point Gauss pair on [-1, 1].
inline constexpr double kXgk15[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kWgk15[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg7[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
void gk15(F&& f, double a, double b, std::complex<double>& result,
          double& err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const std::complex<double> fc = f(c);
    std::complex<double> resg = fc * kWg7[3];
    std::complex<double> resk = fc * kWgk15[7];
    for (int j = 0; j < 7; ++j) {
        const double x = h * kXgk15[j];
        const std::complex<double> fsum = f(c - x) + f(c + x);
        resk += kWgk15[j] * fsum;
        if (j % 2 == 1) resg += kWg7[j / 2] * fsum;
    }
    result = resk * h;
    err = std::abs(resk - resg) * h;
}

struct Interval {
    double a, b, err;
    std::complex<double> value;
    bool operator<(const Interval& o) const { return err < o.err; }
};

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration of a complex-valued integrand
// over [a, b], with optional interior breakpoints (placed at near-singular
// points so the subdivision starts aligned with them). Converged when the
// error estimate drops below abs_tol or below rel_floor relative to the
// accumulated value, whichever is larger; near-divergent integrals would
// otherwise demand more than double precision can certify.
template <typename F>
QuadratureResult integrate_gk(F&& f, double a, double b, double abs_tol,
                              std::span<const double> breakpoints = {},
                              std::size_t max_intervals = 4000,
                              double rel_floor = 2e-13) {
    std::vector<double> edges{a};
    for (double x : breakpoints)
        if (x > a && x < b) edges.push_back(x);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());

    std::priority_queue<detail::Interval> heap;
    std::complex<double> total{0.0, 0.0};
    double total_err = 0.0;
    std::size_t evals = 0;
    auto push = [&](double lo, double hi) {
        detail::Interval iv{lo, hi, 0.0, {}};
        detail::gk15(f, lo, hi, iv.value, iv.err);
        evals += 15;
        total += iv.value;
        total_err += iv.err;
        heap.push(iv);
    };
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        push(edges[i], edges[i + 1]);

    auto tol = [&]() { return std::max(abs_tol, rel_floor * std::abs(total)); };
    while (total_err > tol() && heap.size() < max_intervals) {
        detail::Interval worst = heap.top();
        heap.pop();
        total -= worst.value;
        total_err -= worst.err;
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // interval at floating-point resolution; keep its estimate
            total += worst.value;
            total_err += worst.err;
            break;
        }
        push(worst.a, mid);
        push(mid, worst.b);
    }
    if (total_err > tol())
        throw QuadratureError("integrate_gk: tolerance not reached", total_err);
    return {total, total_err, evals};
}

// Neville evaluation at zero of the polynomial through (nodes[i], values[i]).
// Used to extrapolate broadened integrals to the retarded limit.
inline std::complex<double> extrapolate_to_zero(
    std::span<const double> nodes, std::span<const std::complex<double>> values) {
    if (nodes.size() != values.size() || nodes.empty())
        throw std::invalid_argument("extrapolate_to_zero: bad node list");
    std::vector<std::complex<double>> t(values.begin(), values.end());
    const std::size_t n = nodes.size();
    for (std::size_t j = 1; j < n; ++j)
        for (std::size_t i = n - 1; i >= j; --i) {
            const double x0 = nodes[i - j];
            const double x1 = nodes[i];
            t[i] = (x0 * t[i] - x1 * t[i - 1]) / (x0 - x1);
        }
    return t[n - 1];
}

}  // namespace ccas
