#pragma once

#include "pseudomode/errors.hpp"
#include "pseudomode/multipoly.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pseudomode {

// Variable slots of a prepared symbol; exponent vectors are laid out as
// [x (nx), xi (nx), eta (ny), y (ny)].
enum class Slot { X = 0, Xi = 1, Eta = 2, Y = 3 };

struct VanishingOrder {
    bool infinite = false;
    int k = 2;

    static VanishingOrder finite(int k) { return {false, k}; }
    static VanishingOrder inf() { return {true, 0}; }
    double inv() const { return infinite ? 0.0 : 1.0 / k; }
    std::string str() const { return infinite ? "inf" : std::to_string(k); }
};

/// Real t-dependent factor: t^m, sin(a t), cos(a t) or exp(a t).
struct TCoef {
    enum class Kind { Power, Sin, Cos, Exp };
    Kind kind = Kind::Power;
    int power = 0;
    double a = 1.0;

    static TCoef pow(int m) { return {Kind::Power, m, 1.0}; }
    double derivative(double t, int n) const;
    double value(double t) const { return derivative(t, 0); }
    std::string tag() const;
};

struct PolyTerm {
    cd coeff;
    TCoef tc;
    std::vector<int> e;
};

struct SymbolPoint {
    double t = 0.0;
    Eigen::VectorXd x, xi, eta, y;

    SymbolPoint() = default;
    SymbolPoint(double t, Eigen::VectorXd x, Eigen::VectorXd xi, Eigen::VectorXd eta,
                Eigen::VectorXd y = Eigen::VectorXd())
        : t(t), x(std::move(x)), xi(std::move(xi)), eta(std::move(eta)), y(std::move(y)) {}
};

struct Orders {
    int t = 0;
    std::vector<int> e;

    Orders() = default;
    Orders(int nx, int ny) : e(2 * nx + 2 * ny, 0) {}
    Orders& set(int nx, Slot s, int idx, int n);
    int total() const;
};

class SymbolFunction {
public:
    using Callable = std::function<cd(const SymbolPoint&)>;

    SymbolFunction() = default;
    static SymbolFunction zero(int nx, int ny);
    static SymbolFunction polynomial(int nx, int ny, std::vector<PolyTerm> terms, int dmax = 12);
    static SymbolFunction numeric(int nx, int ny, Callable fn, int dmax = 6);

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nslots() const { return 2 * nx_ + 2 * ny_; }
    int dmax() const { return dmax_; }
    bool polynomial_backed() const { return !fn_; }
    bool is_zero() const { return !fn_ && terms_.empty(); }
    const std::vector<PolyTerm>& terms() const { return terms_; }

    cd eval(const SymbolPoint& p) const;
    cd partial(const Orders& o, const SymbolPoint& p) const;

    // Exact derivative of a polynomial-backed symbol.
    SymbolFunction derivative(Slot s, int idx) const;
    SymbolFunction conj_flip() const;
    SymbolFunction scaled(cd s) const;
    SymbolFunction plus(const SymbolFunction& o) const;

    bool depends_on(Slot s) const;
    int max_degree(Slot s) const;
    int slot_offset(Slot s) const;

    // f(t, args) as a truncated polynomial; args are given per slot in the
    // exponent layout. Numeric symbols use a Taylor expansion at the real
    // parts of the constant terms.
    CPoly compose(double t, const std::vector<CPoly>& args) const;

private:
    std::vector<double> flatten(const SymbolPoint& p) const;
    SymbolPoint unflatten(double t, const std::vector<double>& v) const;
    cd fd_partial(const Orders& o, const SymbolPoint& p) const;

    int nx_ = 0;
    int ny_ = 0;
    int dmax_ = 12;
    std::vector<PolyTerm> terms_;
    Callable fn_;
};

cd eval_partial(const SymbolFunction& sym, const Orders& orders, const SymbolPoint& point);

/// p_{s,k}(w, tau, eta) = tau_coeff*tau + J^k_w(p)(eta) + p_s(w).
struct JetPolynomial {
    SymbolPoint center;
    VanishingOrder k;
    double tau_coeff = 1.0;
    CPoly coeffs; // in eta, degree k (degree 0 for k infinite)

    cd eval(const Eigen::VectorXd& eta) const;
    CPoly homogeneous(int j) const;
    // Symmetric tensor of the degree-j part, flattened row-major over ny^j.
    Eigen::VectorXcd tensor(int j) const;
};

JetPolynomial reduced_subprincipal(const SymbolFunction& p, const SymbolFunction& p_s, VanishingOrder k,
                                   const SymbolPoint& w);
cd extended_subprincipal(const SymbolFunction& p, const SymbolFunction& p_s, VanishingOrder k,
                         const SymbolPoint& w, const Eigen::VectorXd& eta, double lambda);
cd blowup_pullback(const SymbolFunction& sym, VanishingOrder k, const SymbolPoint& point);

struct DiffTerm {
    SymbolFunction coeff; // function of (t, x, y) only
    int t_order = 0;
    std::vector<int> x_order;
    std::vector<int> y_order;
};

struct ModelProblem {
    std::string label;
    VanishingOrder k;
    int nx = 1;
    int ny = 1;
    Eigen::VectorXd eta0;
    SymbolFunction f;
    std::optional<SymbolFunction> r;
    std::optional<SymbolFunction> F0; // eta slots act as D_y
    std::vector<SymbolFunction> c_coupling;
    std::vector<DiffTerm> diff_op;
    double t_start = 0.0;
    Eigen::VectorXd x0, xi0, y0;
    double t_lo = -1.0;
    double t_hi = 1.0;

    void validate() const;
    bool eta_zero() const { return eta0.norm() == 0.0; }
    SymbolPoint base_point(double t) const { return {t, x0, xi0, eta0, y0}; }
};

/// Differential operator D_t + f(D) + F0 for a polynomial f that is
/// quasi-homogeneous in (xi, eta); left quantization.
std::vector<DiffTerm> derive_diff_op(const ModelProblem& m);

/// Largest relative gap between the plane-wave symbol of diff_op and lambda*f on sampled frequencies.
double diff_op_consistency(const ModelProblem& m, double lambda = 1e4, int samples = 32);

/// f -> conj(f) (Im f changes sign), carried through F0, r and diff_op.
ModelProblem conjugate_flip(const ModelProblem& m);

ModelProblem polynomial_model(const std::string& label, VanishingOrder k, int nx, int ny,
                              std::vector<PolyTerm> f_terms, Eigen::VectorXd eta0, Eigen::VectorXd xi0);

struct BuiltinParams {
    int j = 1;
    // custom: coefficient table of f in the exponent layout
    std::vector<PolyTerm> terms;
    std::vector<PolyTerm> F0_terms;
    int nx = 1;
    int ny = 1;
    VanishingOrder k{};
    Eigen::VectorXd eta0;
    Eigen::VectorXd xi0;
};

ModelProblem builtin_model(const std::string& name, const BuiltinParams& params = {});
std::vector<std::string> builtin_names();

} // namespace pseudomode
