#pragma once

#include "pseudomode/conditions.hpp"
#include "pseudomode/ode.hpp"
#include "pseudomode/symbols.hpp"

#include <Eigen/Dense>

#include <vector>

namespace pseudomode {

struct PhaseParams {
    int K = 4;
    double rho = 0.1;
    double lambda = 256.0;
    double im_w02_init = 10.0;
};

/// Scale factors shared by the eikonal, transport and synthesis code.
struct PhaseScales {
    double lambda = 1.0;
    double rho = 0.1;
    double mu = 1.0;       // lambda^{rho-1}
    double lam_invk = 1.0; // lambda^{1/k}
    double s_eta = 1.0;    // lambda^{-1/k}; multiplies the fixed fiber point in d_y omega
    bool eta_zero = false;
    bool k_inf = false;

    static PhaseScales make(const ModelProblem& m, double lambda, double rho);
};

/// Flat layout of a phase state. Pass 1 has no y-variables (ny_active = 0).
struct PhaseLayout {
    int nx = 1;
    int ny = 1;
    int ny_active = 1;
    int K = 4;
    std::shared_ptr<const MonomialTable> table; // variables (dx, dy_active), degree K

    PhaseLayout() = default;
    PhaseLayout(int nx, int ny, int ny_active, int K);
    int nv() const { return nx + ny_active; }
    int size() const;
    int y_degree(int idx) const;
};

/// Phase coefficients at one time. G holds the coefficients of the degree >= 2
/// part of the phase in (dx, dy); monomials with y-degree >= 1 are later
/// multiplied by mu = lambda^{rho-1}.
struct PhaseState {
    cd w0{0.0, 0.0};
    Eigen::VectorXd x0, xi0, y0;
    Eigen::VectorXd zeta; // zeta0 when eta0 != 0, eta0(t) when eta0 = 0
    CPoly G;

    static PhaseState zero(const PhaseLayout& L);
    Eigen::VectorXd pack(const PhaseLayout& L) const;
    static PhaseState unpack(const PhaseLayout& L, const Eigen::VectorXd& v);

    // Symmetric tensor of the (i, j) block (i x-slots then j y-slots), entries d^i_x d^j_y G at 0.
    Eigen::VectorXcd tensor(const PhaseLayout& L, int i, int j) const;
    Eigen::MatrixXcd w20(const PhaseLayout& L) const;
    Eigen::MatrixXcd w02(const PhaseLayout& L) const;
};

struct EikonalRhs {
    Eigen::VectorXd d;
    CPoly E; // eikonal left side divided by lambda, truncated at K
};

/// Eikonal symbol f(t, x, Px, lambda^{1/k} Py, y) plus the Hessian, r and coupling terms, as a
/// polynomial in (dx, dy). Py empty means eta frozen at eta0.
CPoly eikonal_symbol(const ModelProblem& m, const PhaseScales& S, double t, const std::vector<CPoly>& Px,
                     const std::vector<CPoly>& Py, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0, int degree);

/// Exact coefficient matching. frozen = pass 1 (eta frozen at eta0, no y-part).
EikonalRhs eikonal_assemble(const ModelProblem& m, const PhaseLayout& L, const PhaseScales& S, double t,
                            const PhaseState& st);

PhaseState rhs_eta_nonzero(const PhaseState& state, double t, const ModelProblem& model, const PhaseParams& p);
PhaseState rhs_eta_zero(const PhaseState& state, double t, const ModelProblem& model, const PhaseParams& p);

struct InitialW2 {
    Eigen::MatrixXcd W20;
    int branch = 0; // 1: Im d_xi f != 0, 2: Im d_xi f = 0, 0: higher-order fallback
    bool higher_order = false;
};

InitialW2 choose_initial_w2(const ModelProblem& model, double t_cross, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& xi);

struct IntegrateOptions {
    PhaseParams phase;
    bool two_pass = true;
    bool adaptive = true;
    int rk4_steps = 2000;
    double rtol = 1e-11;
    double atol = 1e-13;
    double pass1_hmax = 0.004;
    int pass2_min_samples = 2000;
    GateOptions gate;
    bool enforce_gate = true;
};

struct PhaseTrajectory {
    ModelProblem model;
    PhaseLayout layout;
    PhaseScales scales;
    Samples<Eigen::VectorXd> samples;
    PhaseLayout layout1;
    Samples<Eigen::VectorXd> pass1;
    double t_cross = 0.0;
    double t0_anchor = 0.0;
    double im_w0_min = 0.0;
    double usable[2] = {0.0, 0.0};
    GateResult gate;
    InitialW2 init;

    PhaseState state(size_t i) const { return PhaseState::unpack(layout, samples.y[i]); }
    void state_at(double t, PhaseState& st, PhaseState& dst) const;
    double t_begin() const { return samples.t.front(); }
    double t_end() const { return samples.t.back(); }
};

/// Polynomials in (dx, dy) describing omega and its derivatives at one time.
struct PhasePolys {
    CPoly omega, omega_t;
    std::vector<CPoly> Px, Py;
    PhaseState st, dst;
};

PhasePolys phase_polys(const PhaseTrajectory& traj, double t);
PhasePolys phase_polys(const PhaseLayout& L, const PhaseScales& S, const Eigen::VectorXd& eta0,
                       const PhaseState& st, const PhaseState& dst);

PhaseTrajectory integrate_phase(const ModelProblem& model, const IntegrateOptions& opt);

struct PhaseEval {
    cd omega;
    cd d_t;
    Eigen::VectorXcd d_x, d_y;
    Eigen::MatrixXcd d_yy;
};

PhaseEval eval_phase(const PhaseTrajectory& traj, double t, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct Probe {
    double t;
    Eigen::VectorXd x, y;
};

struct ResidualReport {
    double sup_residual = 0.0;
    std::vector<std::pair<Probe, double>> table;
};

std::vector<Probe> tube_probes(const PhaseTrajectory& traj, int n, unsigned long long seed, double t_lo, double t_hi);
ResidualReport eikonal_residual(const PhaseTrajectory& traj, const std::vector<Probe>& probes);

/// Symbol value f(t, x, xi, eta, y) at complex arguments (Taylor at the real part for numeric symbols).
cd eval_complex(const SymbolFunction& f, double t, const Eigen::VectorXcd& x, const Eigen::VectorXcd& xi,
                const Eigen::VectorXcd& eta, const Eigen::VectorXcd& y, int order);

} // namespace pseudomode
