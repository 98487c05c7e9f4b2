#include "pseudomode/cutoff.hpp"

#include <cmath>

namespace pseudomode {

double Jet::derivative(int n) const
{
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return c[n] * f;
}

Jet operator+(const Jet& a, const Jet& b)
{
    Jet r;
    for (int i = 0; i < Jet::N; ++i) r.c[i] = a.c[i] + b.c[i];
    return r;
}

Jet operator-(const Jet& a, const Jet& b)
{
    Jet r;
    for (int i = 0; i < Jet::N; ++i) r.c[i] = a.c[i] - b.c[i];
    return r;
}

Jet operator*(const Jet& a, const Jet& b)
{
    Jet r;
    for (int i = 0; i < Jet::N; ++i)
        for (int j = 0; i + j < Jet::N; ++j) r.c[i + j] += a.c[i] * b.c[j];
    return r;
}

Jet operator/(const Jet& a, const Jet& b)
{
    Jet r;
    for (int i = 0; i < Jet::N; ++i) {
        double s = a.c[i];
        for (int j = 1; j <= i; ++j) s -= b.c[j] * r.c[i - j];
        r.c[i] = s / b.c[0];
    }
    return r;
}

Jet exp(const Jet& a)
{
    // r' = a' r
    Jet r;
    r.c[0] = std::exp(a.c[0]);
    for (int n = 1; n < Jet::N; ++n) {
        double s = 0.0;
        for (int k = 1; k <= n; ++k) s += k * a.c[k] * r.c[n - k];
        r.c[n] = s / n;
    }
    return r;
}

namespace {

// e^{-1/u} for u > 0, else 0
Jet hfun(const Jet& u)
{
    if (u.c[0] <= 0.0) return Jet{};
    return exp(Jet::constant(0.0) - Jet::constant(1.0) / u);
}

// 1 on (-inf, a], 0 on [b, inf)
Jet step_between(const Jet& s, double a, double b)
{
    if (s.c[0] <= a) return Jet::constant(1.0);
    if (s.c[0] >= b) return Jet{};
    Jet p = hfun(Jet::constant(b) - s);
    Jet q = hfun(s - Jet::constant(a));
    return p / (p + q);
}

} // namespace

Jet smooth_step(const Jet& s)
{
    if (s.c[0] < 0.0) {
        Jet m = Jet::constant(0.0) - s;
        return step_between(m, 1.0, 2.0);
    }
    return step_between(s, 1.0, 2.0);
}

double smooth_step(double s) { return smooth_step(Jet::constant(s)).c[0]; }

Jet psi_q(const Jet& q) { return step_between(q, 1.0, 4.0); }

CutoffScales CutoffScales::make(const PhaseScales& S, const ModelProblem& m, const CutoffParams& p)
{
    CutoffScales cs;
    cs.p = p;
    const double xe = S.eta_zero ? 0.5 - S.rho : m.k.inv() - S.rho;
    cs.sx = std::pow(S.lambda, xe);
    cs.sy = std::pow(S.lambda, S.rho / 4);
    cs.st = std::pow(S.lambda, 1.0 - S.rho);
    return cs;
}

double chi_weight(const CutoffScales& cs, double im_w0) { return smooth_step(im_w0 * cs.st / cs.p.R_t); }

Jet chi_jet(const CutoffScales& cs, const Jet& im_w0)
{
    return smooth_step(im_w0 * Jet::constant(cs.st / cs.p.R_t));
}

double psi_weight(const CutoffScales& cs, const Eigen::VectorXd& dx, const Eigen::VectorXd& dy)
{
    double q = (dx * (cs.sx / cs.p.R_x)).squaredNorm() + (dy * (cs.sy / cs.p.R_y)).squaredNorm();
    return psi_q(Jet::constant(q)).c[0];
}

double apply_cutoffs(const PhaseTrajectory& traj, const CutoffParams& p, double t, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& y)
{
    CutoffScales cs = CutoffScales::make(traj.scales, traj.model, p);
    if (t < traj.t_begin() || t > traj.t_end()) return 0.0;
    PhaseState st, dst;
    traj.state_at(t, st, dst);
    double c = chi_weight(cs, st.w0.imag());
    if (c == 0.0) return 0.0;
    return c * psi_weight(cs, x - st.x0, y - st.y0);
}

} // namespace pseudomode
