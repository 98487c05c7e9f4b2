#include "pseudomode/symbols.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace pseudomode {

const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::OrderBudgetExceeded: return "OrderBudgetExceeded";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::OrderMismatch: return "OrderMismatch";
    case ErrorKind::ZeroXi: return "ZeroXi";
    case ErrorKind::UnknownModel: return "UnknownModel";
    case ErrorKind::BadParams: return "BadParams";
    case ErrorKind::NoSignChange: return "NoSignChange";
    case ErrorKind::DegenerateAnchor: return "DegenerateAnchor";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::SingularHessian: return "SingularHessian";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::HessianLoss: return "HessianLoss";
    case ErrorKind::GateEmpty: return "GateEmpty";
    case ErrorKind::OutOfInterval: return "OutOfInterval";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::MemoryBudget: return "MemoryBudget";
    case ErrorKind::MissingDiffOp: return "MissingDiffOp";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

// ---------------------------------------------------------------- TCoef

double TCoef::derivative(double t, int n) const
{
    switch (kind) {
    case Kind::Power: {
        if (n > power) return 0.0;
        double c = 1.0;
        for (int i = 0; i < n; ++i) c *= power - i;
        return c * std::pow(t, power - n);
    }
    case Kind::Sin: return std::pow(a, n) * std::sin(a * t + n * std::numbers::pi / 2);
    case Kind::Cos: return std::pow(a, n) * std::cos(a * t + n * std::numbers::pi / 2);
    case Kind::Exp: return std::pow(a, n) * std::exp(a * t);
    }
    return 0.0;
}

std::string TCoef::tag() const
{
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
    case Kind::Power: os << "t^" << power; break;
    case Kind::Sin: os << "sin:" << a; break;
    case Kind::Cos: os << "cos:" << a; break;
    case Kind::Exp: os << "exp:" << a; break;
    }
    return os.str();
}

// ---------------------------------------------------------------- Orders

Orders& Orders::set(int nx, Slot s, int idx, int n)
{
    int ny = static_cast<int>(e.size()) / 2 - nx;
    int off = 0;
    switch (s) {
    case Slot::X: off = 0; break;
    case Slot::Xi: off = nx; break;
    case Slot::Eta: off = 2 * nx; break;
    case Slot::Y: off = 2 * nx + ny; break;
    }
    e[off + idx] = n;
    return *this;
}

int Orders::total() const
{
    int s = t;
    for (int v : e) s += v;
    return s;
}

// ---------------------------------------------------------------- SymbolFunction

SymbolFunction SymbolFunction::zero(int nx, int ny)
{
    SymbolFunction s;
    s.nx_ = nx;
    s.ny_ = ny;
    return s;
}

SymbolFunction SymbolFunction::polynomial(int nx, int ny, std::vector<PolyTerm> terms, int dmax)
{
    SymbolFunction s;
    s.nx_ = nx;
    s.ny_ = ny;
    s.dmax_ = dmax;
    for (auto& t : terms) {
        if (static_cast<int>(t.e.size()) != 2 * nx + 2 * ny)
            throw Error(ErrorKind::BadParams, "polynomial term has exponent vector of wrong length");
        if (t.coeff != cd(0)) s.terms_.push_back(std::move(t));
    }
    return s;
}

SymbolFunction SymbolFunction::numeric(int nx, int ny, Callable fn, int dmax)
{
    SymbolFunction s;
    s.nx_ = nx;
    s.ny_ = ny;
    s.dmax_ = dmax;
    s.fn_ = std::move(fn);
    return s;
}

int SymbolFunction::slot_offset(Slot s) const
{
    switch (s) {
    case Slot::X: return 0;
    case Slot::Xi: return nx_;
    case Slot::Eta: return 2 * nx_;
    case Slot::Y: return 2 * nx_ + ny_;
    }
    return 0;
}

std::vector<double> SymbolFunction::flatten(const SymbolPoint& p) const
{
    std::vector<double> v(nslots(), 0.0);
    for (int i = 0; i < nx_; ++i) {
        if (i < p.x.size()) v[i] = p.x[i];
        if (i < p.xi.size()) v[nx_ + i] = p.xi[i];
    }
    for (int i = 0; i < ny_; ++i) {
        if (i < p.eta.size()) v[2 * nx_ + i] = p.eta[i];
        if (i < p.y.size()) v[2 * nx_ + ny_ + i] = p.y[i];
    }
    return v;
}

SymbolPoint SymbolFunction::unflatten(double t, const std::vector<double>& v) const
{
    SymbolPoint p;
    p.t = t;
    p.x = Eigen::Map<const Eigen::VectorXd>(v.data(), nx_);
    p.xi = Eigen::Map<const Eigen::VectorXd>(v.data() + nx_, nx_);
    p.eta = Eigen::Map<const Eigen::VectorXd>(v.data() + 2 * nx_, ny_);
    p.y = Eigen::Map<const Eigen::VectorXd>(v.data() + 2 * nx_ + ny_, ny_);
    return p;
}

cd SymbolFunction::eval(const SymbolPoint& p) const
{
    if (fn_) {
        cd v = fn_(p);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw Error(ErrorKind::NonFinite, "symbol evaluation produced a non-finite value");
        return v;
    }
    return partial(Orders(nx_, ny_), p);
}

cd SymbolFunction::partial(const Orders& o, const SymbolPoint& p) const
{
    if (o.total() > dmax_)
        throw Error(ErrorKind::OrderBudgetExceeded,
                    "derivative order " + std::to_string(o.total()) + " above budget " + std::to_string(dmax_));
    if (fn_) return o.total() == 0 ? eval(p) : fd_partial(o, p);

    const std::vector<double> z = flatten(p);
    cd acc(0);
    for (const auto& term : terms_) {
        double f = term.tc.derivative(p.t, o.t);
        if (f == 0.0) continue;
        for (int v = 0; v < nslots(); ++v) {
            int e = term.e[v], n = o.e[v];
            if (n > e) { f = 0.0; break; }
            for (int i = 0; i < n; ++i) f *= e - i;
            if (e - n) f *= std::pow(z[v], e - n);
        }
        acc += term.coeff * f;
    }
    if (!std::isfinite(acc.real()) || !std::isfinite(acc.imag()))
        throw Error(ErrorKind::NonFinite, "symbol derivative produced a non-finite value");
    return acc;
}

cd SymbolFunction::fd_partial(const Orders& o, const SymbolPoint& p) const
{
    const int N = o.total();
    std::vector<double> z = flatten(p);
    z.insert(z.begin(), p.t);
    std::vector<int> ord = o.e;
    ord.insert(ord.begin(), o.t);

    std::vector<int> vars;
    for (int v = 0; v < static_cast<int>(ord.size()); ++v)
        if (ord[v] > 0) vars.push_back(v);

    const double base = std::pow(6e-6, 1.0 / N);
    auto stencil = [&](double scale) {
        // Nested central differences: offsets (n/2 - j) h, weights (-1)^j C(n,j) / h^n.
        std::vector<int> idx(vars.size(), 0);
        cd acc(0);
        while (true) {
            std::vector<double> zz = z;
            double w = 1.0;
            for (size_t q = 0; q < vars.size(); ++q) {
                int v = vars[q], n = ord[v], j = idx[q];
                double h = std::max(1.0, std::abs(z[v])) * base * scale;
                zz[v] += (0.5 * n - j) * h;
                double binom = 1.0;
                for (int i = 0; i < j; ++i) binom = binom * (n - i) / (i + 1);
                w *= ((j % 2) ? -binom : binom) / std::pow(h, n);
            }
            std::vector<double> rest(zz.begin() + 1, zz.end());
            acc += w * eval(unflatten(zz[0], rest));
            size_t q = 0;
            for (; q < vars.size(); ++q) {
                if (++idx[q] <= ord[vars[q]]) break;
                idx[q] = 0;
            }
            if (q == vars.size()) break;
        }
        return acc;
    };
    cd d1 = stencil(1.0);
    cd d2 = stencil(0.5);
    cd r = (4.0 * d2 - d1) / 3.0;
    if (!std::isfinite(r.real()) || !std::isfinite(r.imag()))
        throw Error(ErrorKind::NonFinite, "finite-difference derivative is non-finite");
    return r;
}

SymbolFunction SymbolFunction::derivative(Slot s, int idx) const
{
    if (fn_) throw Error(ErrorKind::BadParams, "exact derivative requires a polynomial-backed symbol");
    int v = slot_offset(s) + idx;
    std::vector<PolyTerm> out;
    for (const auto& term : terms_) {
        if (term.e[v] == 0) continue;
        PolyTerm d = term;
        d.coeff *= static_cast<double>(term.e[v]);
        d.e[v] -= 1;
        out.push_back(d);
    }
    return polynomial(nx_, ny_, out, dmax_);
}

SymbolFunction SymbolFunction::conj_flip() const
{
    SymbolFunction s = *this;
    if (fn_) {
        auto fn = fn_;
        s.fn_ = [fn](const SymbolPoint& p) { return std::conj(fn(p)); };
    } else {
        for (auto& t : s.terms_) t.coeff = std::conj(t.coeff);
    }
    return s;
}

SymbolFunction SymbolFunction::scaled(cd c) const
{
    SymbolFunction s = *this;
    if (fn_) {
        auto fn = fn_;
        s.fn_ = [fn, c](const SymbolPoint& p) { return c * fn(p); };
    } else {
        for (auto& t : s.terms_) t.coeff *= c;
    }
    return s;
}

SymbolFunction SymbolFunction::plus(const SymbolFunction& o) const
{
    if (fn_ || o.fn_) {
        auto a = *this, b = o;
        return numeric(std::max(nx_, o.nx_), std::max(ny_, o.ny_),
                       [a, b](const SymbolPoint& p) { return a.eval(p) + b.eval(p); }, std::min(dmax_, o.dmax_));
    }
    std::vector<PolyTerm> t = terms_;
    t.insert(t.end(), o.terms_.begin(), o.terms_.end());
    return polynomial(nx_, ny_, t, std::max(dmax_, o.dmax_));
}

bool SymbolFunction::depends_on(Slot s) const
{
    if (fn_) return true;
    int off = slot_offset(s), n = (s == Slot::X || s == Slot::Xi) ? nx_ : ny_;
    for (const auto& t : terms_)
        for (int i = 0; i < n; ++i)
            if (t.e[off + i]) return true;
    return false;
}

int SymbolFunction::max_degree(Slot s) const
{
    if (fn_) return dmax_;
    int off = slot_offset(s), n = (s == Slot::X || s == Slot::Xi) ? nx_ : ny_;
    int d = 0;
    for (const auto& t : terms_) {
        int s2 = 0;
        for (int i = 0; i < n; ++i) s2 += t.e[off + i];
        d = std::max(d, s2);
    }
    return d;
}

CPoly SymbolFunction::compose(double t, const std::vector<CPoly>& args) const
{
    const auto& table = args.at(0).table();
    CPoly out(table);
    if (!fn_) {
        const int ns = nslots();
        std::vector<std::vector<CPoly>> pw(ns);
        auto power = [&](int v, int e) -> const CPoly& {
            auto& cache = pw[v];
            if (cache.empty()) cache.push_back(CPoly::constant(table->nvars(), table->degree(), cd(1)));
            while (static_cast<int>(cache.size()) <= e) cache.push_back(cache.back() * args[v]);
            return cache[e];
        };
        for (const auto& term : terms_) {
            double tv = term.tc.value(t);
            if (tv == 0.0) continue;
            CPoly m = CPoly::constant(table->nvars(), table->degree(), term.coeff * tv);
            for (int v = 0; v < ns; ++v)
                if (term.e[v]) m = m * power(v, term.e[v]);
            out += m;
        }
        return out;
    }

    // Taylor expansion at the real parts of the constant terms.
    const int ns = nslots();
    const int D = std::min(table->degree(), dmax_);
    std::vector<double> base(ns);
    std::vector<CPoly> delta;
    for (int v = 0; v < ns; ++v) {
        base[v] = args[v][0].real();
        CPoly d = args[v];
        d[0] -= base[v];
        delta.push_back(d);
    }
    SymbolPoint bp = unflatten(t, base);
    auto gtab = MonomialTable::get(ns, D);
    for (int g = 0; g < gtab->size(); ++g) {
        Orders o(nx_, ny_);
        for (int v = 0; v < ns; ++v) o.e[v] = gtab->exponent(g, v);
        cd c = partial(o, bp) / gtab->factorial(g);
        if (c == cd(0)) continue;
        CPoly m = CPoly::constant(table->nvars(), table->degree(), c);
        for (int v = 0; v < ns; ++v)
            if (o.e[v]) m = m * delta[v].pow(o.e[v]);
        out += m;
    }
    return out;
}

cd eval_partial(const SymbolFunction& sym, const Orders& orders, const SymbolPoint& point)
{
    auto finite = [](const Eigen::VectorXd& v) { return v.size() == 0 || v.allFinite(); };
    if (!std::isfinite(point.t) || !finite(point.x) || !finite(point.xi) || !finite(point.eta) || !finite(point.y))
        throw Error(ErrorKind::NonFinite, "evaluation point is not finite");
    return sym.partial(orders, point);
}

// ---------------------------------------------------------------- jets

cd JetPolynomial::eval(const Eigen::VectorXd& eta) const { return coeffs.eval(eta); }

CPoly JetPolynomial::homogeneous(int j) const
{
    CPoly h(coeffs.table());
    for (int i = 0; i < coeffs.size(); ++i)
        if (coeffs.table()->degree_of(i) == j) h[i] = coeffs[i];
    return h;
}

Eigen::VectorXcd JetPolynomial::tensor(int j) const
{
    const int ny = coeffs.nvars();
    int n = 1;
    for (int i = 0; i < j; ++i) n *= ny;
    Eigen::VectorXcd T(n);
    double jf = 1.0;
    for (int i = 2; i <= j; ++i) jf *= i;
    std::vector<int> e(ny);
    for (int flat = 0; flat < n; ++flat) {
        std::fill(e.begin(), e.end(), 0);
        int r = flat;
        for (int q = 0; q < j; ++q) {
            e[r % ny] += 1;
            r /= ny;
        }
        int idx = coeffs.table()->index(e);
        T[flat] = idx < 0 ? cd(0) : coeffs[idx] * coeffs.table()->factorial(idx) / jf;
    }
    return T;
}

namespace {

SymbolPoint on_sigma(const SymbolPoint& w, int ny)
{
    SymbolPoint p = w;
    p.eta = Eigen::VectorXd::Zero(ny);
    if (p.y.size() != ny) p.y = Eigen::VectorXd::Zero(ny);
    return p;
}

// Taylor coefficients in eta of `sym` at (w, eta = 0) up to degree d.
CPoly eta_taylor(const SymbolFunction& sym, const SymbolPoint& w, int d)
{
    const int ny = sym.ny();
    CPoly c(ny, d);
    if (sym.is_zero()) return c;
    SymbolPoint p = on_sigma(w, ny);
    const auto& T = *c.table();
    for (int i = 0; i < T.size(); ++i) {
        Orders o(sym.nx(), ny);
        for (int v = 0; v < ny; ++v) o.e[2 * sym.nx() + v] = T.exponent(i, v);
        c[i] = sym.partial(o, p) / T.factorial(i);
    }
    return c;
}

} // namespace

JetPolynomial reduced_subprincipal(const SymbolFunction& p, const SymbolFunction& p_s, VanishingOrder k,
                                   const SymbolPoint& w)
{
    JetPolynomial J;
    J.center = on_sigma(w, p.ny());
    J.k = k;
    cd ps = p_s.is_zero() ? cd(0) : p_s.eval(J.center);
    if (k.infinite) {
        J.coeffs = CPoly::constant(p.ny(), 0, ps);
        return J;
    }
    CPoly full = eta_taylor(p, w, k.k);
    const auto& T = *full.table();
    double scale = 1.0;
    for (int i = 0; i < T.size(); ++i)
        if (T.degree_of(i) == k.k) scale = std::max(scale, std::abs(full[i]));
    for (int i = 0; i < T.size(); ++i)
        if (T.degree_of(i) < k.k && std::abs(full[i]) > 1e-8 * scale)
            throw Error(ErrorKind::OrderMismatch, "symbol does not vanish to order k at eta = 0");
    J.coeffs = full.truncated(k.k) - full.truncated(k.k - 1);
    J.coeffs[0] += ps;
    return J;
}

cd extended_subprincipal(const SymbolFunction& p, const SymbolFunction& p_s, VanishingOrder k,
                         const SymbolPoint& w, const Eigen::VectorXd& eta, double lambda)
{
    if (k.infinite) return p_s.is_zero() ? cd(0) : p_s.eval(on_sigma(w, p.ny()));
    const double s = std::pow(lambda, -1.0 / k.k);
    Eigen::VectorXd zeta = eta * s;
    cd v = lambda * eta_taylor(p, w, 2 * k.k - 1).eval(zeta);
    if (!p_s.is_zero()) v += eta_taylor(p_s, w, k.k - 1).eval(zeta);
    return v;
}

cd blowup_pullback(const SymbolFunction& sym, VanishingOrder k, const SymbolPoint& point)
{
    double n = point.xi.norm();
    if (n == 0.0) throw Error(ErrorKind::ZeroXi, "blowup is undefined at xi = 0");
    SymbolPoint q = point;
    q.eta = point.eta / std::pow(n, k.inv());
    return sym.eval(q);
}

// ---------------------------------------------------------------- models

void ModelProblem::validate() const
{
    if (nx < 1 || ny < 1) throw Error(ErrorKind::BadParams, "dimensions must be positive");
    if (eta0.size() != ny || x0.size() != nx || xi0.size() != nx || y0.size() != ny)
        throw Error(ErrorKind::BadParams, "base point dimensions do not match nx, ny");
    if (xi0.norm() == 0.0) throw Error(ErrorKind::BadParams, "xi0 must be nonzero");
    if (k.infinite && eta0.norm() != 0.0) throw Error(ErrorKind::BadParams, "k = inf requires eta0 = 0");
    if (!k.infinite && k.k < 2) throw Error(ErrorKind::BadParams, "k must be at least 2");
    if (!(t_lo < t_hi) || t_start < t_lo || t_start > t_hi)
        throw Error(ErrorKind::BadParams, "interval must contain t_start");
    if (f.nx() != nx || f.ny() != ny) throw Error(ErrorKind::BadParams, "f has mismatched dimensions");
}

std::vector<DiffTerm> derive_diff_op(const ModelProblem& m)
{
    if (!m.f.polynomial_backed()) throw Error(ErrorKind::MissingDiffOp, "numeric f needs an explicit diff_op");
    std::vector<DiffTerm> ops;
    DiffTerm dt;
    dt.coeff = SymbolFunction::polynomial(m.nx, m.ny, {{cd(1), TCoef::pow(0), std::vector<int>(2 * m.nx + 2 * m.ny, 0)}});
    dt.t_order = 1;
    dt.x_order.assign(m.nx, 0);
    dt.y_order.assign(m.ny, 0);
    ops.push_back(dt);
    auto add = [&](const SymbolFunction& s) {
        for (const auto& term : s.terms()) {
            DiffTerm d;
            PolyTerm c = term;
            d.x_order.assign(term.e.begin() + m.nx, term.e.begin() + 2 * m.nx);
            d.y_order.assign(term.e.begin() + 2 * m.nx, term.e.begin() + 2 * m.nx + m.ny);
            std::fill(c.e.begin() + m.nx, c.e.begin() + 2 * m.nx + m.ny, 0);
            d.coeff = SymbolFunction::polynomial(m.nx, m.ny, {c});
            ops.push_back(d);
        }
    };
    add(m.f);
    if (m.F0) {
        if (!m.F0->polynomial_backed()) throw Error(ErrorKind::MissingDiffOp, "numeric F0 needs an explicit diff_op");
        add(*m.F0);
    }
    return ops;
}

double diff_op_consistency(const ModelProblem& m, double lambda, int samples)
{
    if (m.diff_op.empty()) throw Error(ErrorKind::MissingDiffOp, "model has no diff_op");
    std::mt19937_64 rng(12345);
    auto uni = [&](double a, double b) { return a + (b - a) * static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const double inv = m.k.inv();
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        SymbolPoint p;
        p.t = uni(m.t_lo, m.t_hi);
        p.x = m.x0 + Eigen::VectorXd::NullaryExpr(m.nx, [&](Eigen::Index) { return uni(-0.5, 0.5); });
        p.y = m.y0 + Eigen::VectorXd::NullaryExpr(m.ny, [&](Eigen::Index) { return uni(-0.5, 0.5); });
        p.xi = Eigen::VectorXd::NullaryExpr(m.nx, [&](Eigen::Index) { return uni(-2.0, 2.0); });
        if (p.xi.norm() < 0.5) p.xi *= 0.5 / std::max(p.xi.norm(), 1e-3);
        p.eta = Eigen::VectorXd::NullaryExpr(m.ny, [&](Eigen::Index) { return uni(-1.0, 1.0); });
        double cap = std::pow(p.xi.norm(), 1.0 - inv);
        if (p.eta.norm() > cap) p.eta *= cap / p.eta.norm();

        Eigen::VectorXd Xi = lambda * p.xi;
        Eigen::VectorXd H = std::pow(lambda, 1.0 - inv) * p.eta;
        cd sym(0);
        for (const auto& d : m.diff_op) {
            if (d.t_order > 0) continue;
            cd v = d.coeff.eval(p);
            for (int i = 0; i < m.nx; ++i) v *= std::pow(Xi[i], d.x_order[i]);
            for (int i = 0; i < m.ny; ++i) v *= std::pow(H[i], d.y_order[i]);
            sym += v;
        }
        cd ref = lambda * m.f.eval(p);
        if (m.F0) {
            SymbolPoint q = p;
            q.eta = H;
            ref += m.F0->eval(q);
        }
        worst = std::max(worst, std::abs(sym - ref) / std::max(std::abs(ref), lambda));
    }
    return worst;
}

ModelProblem conjugate_flip(const ModelProblem& m)
{
    ModelProblem c = m;
    c.label = m.label + "_flip";
    c.f = m.f.conj_flip();
    if (m.r) c.r = m.r->conj_flip();
    if (m.F0) c.F0 = m.F0->conj_flip();
    for (auto& cc : c.c_coupling) cc = cc.conj_flip();
    for (auto& d : c.diff_op)
        if (d.t_order == 0) d.coeff = d.coeff.conj_flip();
    return c;
}

ModelProblem polynomial_model(const std::string& label, VanishingOrder k, int nx, int ny,
                              std::vector<PolyTerm> f_terms, Eigen::VectorXd eta0, Eigen::VectorXd xi0)
{
    ModelProblem m;
    m.label = label;
    m.k = k;
    m.nx = nx;
    m.ny = ny;
    m.eta0 = std::move(eta0);
    m.xi0 = std::move(xi0);
    m.x0 = Eigen::VectorXd::Zero(nx);
    m.y0 = Eigen::VectorXd::Zero(ny);
    m.f = SymbolFunction::polynomial(nx, ny, std::move(f_terms));
    m.diff_op = derive_diff_op(m);
    return m;
}

namespace {

std::vector<int> ex(int n, std::initializer_list<std::pair<int, int>> nz)
{
    std::vector<int> e(n, 0);
    for (auto [i, v] : nz) e[i] = v;
    return e;
}

} // namespace

std::vector<std::string> builtin_names() { return {"mizohata", "cpt", "cpt_gen", "custom"}; }

ModelProblem builtin_model(const std::string& name, const BuiltinParams& params)
{
    const cd I(0, 1);
    if (name == "mizohata") {
        // f = i a(t) eta^2 with a(t) = -t; slots [x, xi, eta, y]
        auto m = polynomial_model("mizohata", VanishingOrder::finite(2), 1, 1, {{-I, TCoef::pow(1), ex(4, {{2, 2}})}},
                                  Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1));
        m.validate();
        return m;
    }
    if (name == "cpt" || name == "cpt_gen") {
        // slots [x, xi, eta1, eta2, y1, y2]
        int j = params.j;
        if (name == "cpt_gen" && j <= 0) throw Error(ErrorKind::BadParams, "cpt_gen needs an integer j > 0");
        int tp = name == "cpt" ? 1 : 2 * j + 1;
        std::vector<PolyTerm> f = {{I, TCoef::pow(0), ex(6, {{2, 1}, {3, 1}})}, {I, TCoef::pow(tp), ex(6, {{3, 2}})}};
        Eigen::VectorXd eta0(2);
        eta0 << 0.0, 1.0;
        ModelProblem m;
        m.label = name == "cpt" ? "cpt" : "cpt_gen_" + std::to_string(j);
        m.k = VanishingOrder::finite(2);
        m.nx = 1;
        m.ny = 2;
        m.eta0 = eta0;
        m.xi0 = Eigen::VectorXd::Ones(1);
        m.x0 = Eigen::VectorXd::Zero(1);
        m.y0 = Eigen::VectorXd::Zero(2);
        m.f = SymbolFunction::polynomial(1, 2, f);
        if (name == "cpt_gen")
            m.F0 = SymbolFunction::polynomial(1, 2, {{I * double(2 * j * j + j), TCoef::pow(2 * j - 1), ex(6, {{4, 2}})}});
        m.diff_op = derive_diff_op(m);
        m.validate();
        return m;
    }
    if (name == "custom") {
        if (params.terms.empty()) throw Error(ErrorKind::BadParams, "custom model needs a coefficient table");
        Eigen::VectorXd eta0 = params.eta0.size() ? params.eta0 : Eigen::VectorXd::Zero(params.ny);
        Eigen::VectorXd xi0 = params.xi0.size() ? params.xi0 : Eigen::VectorXd::Ones(params.nx);
        ModelProblem m;
        m.label = "custom";
        m.k = params.k;
        m.nx = params.nx;
        m.ny = params.ny;
        m.eta0 = eta0;
        m.xi0 = xi0;
        m.x0 = Eigen::VectorXd::Zero(params.nx);
        m.y0 = Eigen::VectorXd::Zero(params.ny);
        m.f = SymbolFunction::polynomial(params.nx, params.ny, params.terms);
        if (!params.F0_terms.empty()) m.F0 = SymbolFunction::polynomial(params.nx, params.ny, params.F0_terms);
        m.diff_op = derive_diff_op(m);
        m.validate();
        return m;
    }
    throw Error(ErrorKind::UnknownModel, "unknown model '" + name + "'");
}

} // namespace pseudomode
