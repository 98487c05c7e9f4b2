#pragma once

#include "pseudomode/cutoff.hpp"
#include "pseudomode/eikonal.hpp"

#include <map>

namespace pseudomode {

/// Operator polynomial: multi-index over (x, y) derivatives -> coefficient polynomial in (dx, dy).
using OpPoly = std::map<std::vector<int>, CPoly>;

/// e^{-i lambda omega} L e^{i lambda omega} for L = sum of the spatial diff_op terms, with gradients P.
/// The constant term also carries lambda * omega_t from D_t.
OpPoly conjugated_operator(const ModelProblem& m, double t, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                           const std::vector<CPoly>& P, const CPoly& omega_t, double lambda, int degree);

struct TransportTerms {
    OpPoly C;      // full conjugated operator, gamma != 0
    OpPoly C0;     // principal part, gamma != 0
    CPoly Tmult;   // multiplicative remainder after the eikonal cancellation
    Eigen::VectorXd v; // (x0', y0')
};

TransportTerms transport_terms(const PhaseTrajectory& traj, double t, int M_a);

/// d/dt of the Taylor coefficients of one amplitude level. prev is the level below (or null),
/// entering through lambda^kappa R.
CPoly transport_rhs(const TransportTerms& T, const CPoly& phi, const CPoly* prev, double lambda_kappa);

/// D^gamma p = (-i)^{|gamma|} d^gamma p
CPoly apply_D(const CPoly& p, const std::vector<int>& gamma);

struct TransportOptions {
    int L = 0;
    int M_a = 4;
    double kappa = -1.0; // negative: min(rho, 1/(2k))
    CutoffParams cutoff;
};

struct AmplitudeSet {
    int L = 0;
    int M_a = 4;
    double kappa_exp = 0.1;
    double lambda = 1.0;
    double t0_anchor = 0.0;
    CutoffParams cutoff;
    std::shared_ptr<const MonomialTable> table; // (dx, dy), degree M_a
    Samples<Eigen::VectorXd> samples;          // levels packed as [level][coefficient][re, im]

    std::vector<CPoly> levels_at(double t, std::vector<CPoly>* d_levels = nullptr) const;
    /// sum_l lambda^{-l kappa} phi_l and its t-derivative at fixed (dx, dy)
    CPoly total_at(double t, CPoly* d_total = nullptr) const;
    double max_abs_coeff(int level) const;
};

AmplitudeSet solve_transport(const PhaseTrajectory& traj, const TransportOptions& opt);

} // namespace pseudomode
