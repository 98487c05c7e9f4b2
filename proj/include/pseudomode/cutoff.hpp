#pragma once

#include "pseudomode/eikonal.hpp"

#include <array>

namespace pseudomode {

/// Truncated univariate Taylor jet (value and derivatives / n!) up to order 3.
struct Jet {
    static constexpr int N = 4;
    std::array<double, N> c{};

    static Jet constant(double v) { Jet j; j.c[0] = v; return j; }
    static Jet variable(double v) { Jet j; j.c[0] = v; j.c[1] = 1.0; return j; }
    double derivative(int n) const;
};

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet exp(const Jet& a);

/// C-infinity step: 1 for |s| <= 1, 0 for |s| >= 2.
double smooth_step(double s);
Jet smooth_step(const Jet& s);

struct CutoffParams {
    double R_t = 1.0;
    double R_x = 1.0;
    double R_y = 1.0;
};

/// Scale factors of the cutoffs: psi(dx * sx / R_x, dy * sy / R_y) and chi(Im w0 * st / R_t).
struct CutoffScales {
    double sx = 1.0;
    double sy = 1.0;
    double st = 1.0;
    CutoffParams p;

    static CutoffScales make(const PhaseScales& S, const ModelProblem& m, const CutoffParams& p);
    // radius of the psi support in dx and dy
    double x_radius() const { return 2.0 * p.R_x / sx; }
    double y_radius() const { return 2.0 * p.R_y / sy; }
    // Im w0 level where chi vanishes
    double im_w0_edge() const { return 2.0 * p.R_t / st; }
};

/// psi as a function of q = |X|^2 + |Y|^2: 1 for q <= 1, 0 for q >= 4.
Jet psi_q(const Jet& q);

double chi_weight(const CutoffScales& cs, double im_w0);
Jet chi_jet(const CutoffScales& cs, const Jet& im_w0);
double psi_weight(const CutoffScales& cs, const Eigen::VectorXd& dx, const Eigen::VectorXd& dy);

/// Product weight chi * psi at (t, x, y).
double apply_cutoffs(const PhaseTrajectory& traj, const CutoffParams& p, double t, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& y);

} // namespace pseudomode
