#pragma once

// Explicit Runge-Kutta integrators on Eigen vectors. Both return the accepted
// samples together with the right-hand side there, which is what cubic
// Hermite interpolation needs.

#include "pseudomode/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace pseudomode {

template <class Vec>
struct Samples {
    std::vector<double> t;
    std::vector<Vec> y;
    std::vector<Vec> dy;

    size_t size() const { return t.size(); }

    // lower ends where upper starts; the shared point is kept once.
    static Samples join(const Samples& lower, const Samples& upper)
    {
        Samples out = lower;
        size_t skip = lower.size() ? 1 : 0;
        if (skip) {
            out.t.pop_back();
            out.y.pop_back();
            out.dy.pop_back();
        }
        out.t.insert(out.t.end(), upper.t.begin(), upper.t.end());
        out.y.insert(out.y.end(), upper.y.begin(), upper.y.end());
        out.dy.insert(out.dy.end(), upper.dy.begin(), upper.dy.end());
        return out;
    }

    // Cubic Hermite interpolation of the value and its t-derivative.
    void hermite(double s, Vec& val, Vec& der) const
    {
        if (t.empty() || s < t.front() - 1e-12 || s > t.back() + 1e-12)
            throw Error(ErrorKind::OutOfInterval, "time outside the sampled trajectory");
        size_t j = std::upper_bound(t.begin(), t.end(), s) - t.begin();
        j = std::clamp<size_t>(j, 1, t.size() - 1);
        const double h = t[j] - t[j - 1];
        const double u = (s - t[j - 1]) / h;
        const double h00 = 2 * u * u * u - 3 * u * u + 1, h10 = u * u * u - 2 * u * u + u;
        const double h01 = -2 * u * u * u + 3 * u * u, h11 = u * u * u - u * u;
        const double d00 = (6 * u * u - 6 * u) / h, d10 = 3 * u * u - 4 * u + 1;
        const double d01 = (-6 * u * u + 6 * u) / h, d11 = 3 * u * u - 2 * u;
        val = h00 * y[j - 1] + h10 * h * dy[j - 1] + h01 * y[j] + h11 * h * dy[j];
        der = d00 * y[j - 1] + d10 * dy[j - 1] + d01 * y[j] + d11 * dy[j];
    }
};

template <class Vec, class F>
Vec rk4_step(F& f, double t, const Vec& y, double h)
{
    Vec k1 = f(t, y);
    Vec k2 = f(t + h / 2, y + (h / 2) * k1);
    Vec k3 = f(t + h / 2, y + (h / 2) * k2);
    Vec k4 = f(t + h, y + h * k3);
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4);
}

/// Fixed-step RK4 from t0 to t1 (either direction) in n steps.
template <class Vec, class F>
Samples<Vec> integrate_rk4(F f, double t0, double t1, const Vec& y0, int n)
{
    Samples<Vec> s;
    const double h = (t1 - t0) / n;
    Vec y = y0;
    for (int i = 0; i <= n; ++i) {
        double t = (i == n) ? t1 : t0 + i * h;
        s.t.push_back(t);
        s.y.push_back(y);
        s.dy.push_back(f(t, y));
        if (i < n) y = rk4_step(f, t, y, h);
        if (!y.allFinite()) throw Error(ErrorKind::NonFinite, "integrator produced non-finite state");
    }
    if (t1 < t0) {
        std::reverse(s.t.begin(), s.t.end());
        std::reverse(s.y.begin(), s.y.end());
        std::reverse(s.dy.begin(), s.dy.end());
    }
    return s;
}

/// Adaptive Dormand-Prince 5(4) from t0 to t1 (either direction).
template <class Vec, class F>
Samples<Vec> integrate_rk45(F f, double t0, double t1, const Vec& y0, double rtol = 1e-10, double atol = 1e-12,
                            double h_max = 0.01)
{
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    Samples<Vec> s;
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    double t = t0;
    Vec y = y0;
    Vec k1 = f(t, y);
    s.t.push_back(t);
    s.y.push_back(y);
    s.dy.push_back(k1);
    double h = std::min(h_max, span / 100 + 1e-300);
    int guard = 0;
    while (dir * (t1 - t) > 1e-14 * std::max(1.0, span)) {
        if (++guard > 2000000) throw Error(ErrorKind::BudgetExceeded, "adaptive integrator did not finish");
        h = std::min(h, std::abs(t1 - t));
        const double hs = dir * h;
        Vec k2 = f(t + c2 * hs, y + hs * (a21 * k1));
        Vec k3 = f(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
        Vec k4 = f(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
        Vec k5 = f(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        Vec k6 = f(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        Vec yn = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        Vec k7 = f(t + hs, yn);
        Vec err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double en = 0.0;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(yn[i]));
            en = std::max(en, std::abs(err[i]) / sc);
        }
        if (!std::isfinite(en)) {
            h *= 0.25;
            if (h < 1e-14 * std::max(1.0, span)) throw Error(ErrorKind::NonFinite, "integrator produced non-finite state");
            continue;
        }
        if (en <= 1.0) {
            t += hs;
            y = yn;
            k1 = k7;
            s.t.push_back(t);
            s.y.push_back(y);
            s.dy.push_back(k1);
        }
        double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        h = std::min(h_max, h * fac);
    }
    if (dir < 0) {
        std::reverse(s.t.begin(), s.t.end());
        std::reverse(s.y.begin(), s.y.end());
        std::reverse(s.dy.begin(), s.dy.end());
    }
    return s;
}

} // namespace pseudomode
