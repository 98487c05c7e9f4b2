#pragma once

#include "pseudomode/symbols.hpp"

#include <array>
#include <map>
#include <optional>
#include <vector>

namespace pseudomode {

enum class Direction { PlusToMinus, MinusToPlus };
const char* to_string(Direction d);

struct SignChangeReport {
    bool found = false;
    double t_cross = 0.0;
    Direction direction = Direction::PlusToMinus;
    int order_estimate = 0;
    bool order_infinite = false;
    std::array<double, 2> I_prime{0.0, 0.0};
    double slope = 0.0;
};

/// Fiber point (x, xi, eta, y) of a line t -> (t, x, xi, eta, y).
struct LinePoint {
    Eigen::VectorXd x, xi, eta, y;
    static LinePoint base(const ModelProblem& m) { return {m.x0, m.xi0, m.eta0, m.y0}; }
};

SignChangeReport detect_sign_change(const ModelProblem& model, const LinePoint& at, double t_lo, double t_hi,
                                    int n_samples = 512);

struct BicharSearch {
    Eigen::VectorXd x, xi;
    double L = 0.0;
    double L_center = 0.0;
    SignChangeReport report;
};

// L(x, xi) on the sample grid: smallest gap between a positive sample and a later negative one.
double crossing_gap(const ModelProblem& model, const LinePoint& at, double a, double b, int n_t);

BicharSearch minimal_bichar_search(const ModelProblem& model, const Eigen::VectorXd& x_center,
                                   const Eigen::VectorXd& xi_center, double half_width, int n_grid, double a,
                                   double b, int n_t = 256);

struct AuditRegion {
    double t_lo = -1.0, t_hi = 1.0;
    Eigen::VectorXd x_lo, x_hi, xi_lo, xi_hi, eta_lo, eta_hi;
    static AuditRegion around(const ModelProblem& m, double half = 0.5);
};

struct CondResult {
    bool holds = false;
    double worst_ratio = 0.0;
    double epsilon_used = 0.0;
    double growth = 0.0;
    std::map<double, std::pair<double, double>> per_epsilon; // eps -> (worst_ratio, growth)
};

struct DqResult {
    bool holds = false;
    double residual = 0.0;
    std::vector<std::pair<double, double>> by_lambda;
};

struct AuditOptions {
    std::vector<double> eps_grid{0.05, 0.1, 0.25, 0.5};
    int n_samples = 4000;
    int n_lines = 48;
    double bound = 1e4;
    double growth_tol = 0.01;
    double quantile = 0.1;
    int max_order = 2;
    unsigned long long seed = 7;
};

struct ConditionAudit {
    CondResult kcond;
    CondResult hessian;
    bool hessian_applies = false;
    CondResult leaf;
    DqResult dq;
    int samples = 0;
    AuditRegion region;
    bool licensed() const { return kcond.holds && (!hessian_applies || hessian.holds) && leaf.holds; }
};

ConditionAudit audit_conditions(const ModelProblem& model, const AuditRegion& region, const AuditOptions& opt = {});

struct GateSample {
    double t;
    Eigen::VectorXd x0, xi0;
    double im_w0;
};

struct GateOptions {
    double delta = 0.1;
    double C = 10.0;
    int max_order = 2;
    // Level of lambda*Im w0 that counts as a legitimate exit; negative means lambda^kappa.
    double exit_level = -1.0;
    double kappa = 0.1;
};

struct GateRow {
    double t;
    double I1;
    double I2;
};

struct GateResult {
    double t_minus = 0.0;
    double t_plus = 0.0;
    bool exit_minus = false;
    bool exit_plus = false;
    double bound = 0.0;
    std::vector<GateRow> integrals;
    bool empty() const { return !(t_plus > t_minus) || !exit_minus || !exit_plus; }
};

/// Running integrals of lambda^{1/k}|d_x^a d_xi^b d_eta f| (and the k = 2 Hessian
/// integral) outward from the anchor along the sampled trajectory.
GateResult lemclaim_gate(const std::vector<GateSample>& samples, size_t anchor, const ModelProblem& model,
                         double lambda, const GateOptions& opt = {});

struct IntlemResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double kappa = 0.0;
    double C = 0.0;
    bool pass = false;
};

/// Sampled check of: F >= 0 with F(0) = 0, |F'| maximal at t0 with value kappa and
/// |t0| >= c kappa^rho imply max F >= C kappa^{1+rho}. C defaults to the
/// constructive constant c*delta/2 where |F'| >= kappa/2 on a delta-fraction of the step.
IntlemResult intlem_check(const std::vector<double>& t, const std::vector<double>& F, double t0, double rho,
                          double c, std::optional<double> C = std::nullopt);

} // namespace pseudomode
