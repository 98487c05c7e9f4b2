#include "pseudomode/eikonal.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pseudomode {

namespace {

const cd I(0.0, 1.0);

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

SymbolFunction d_eta(const SymbolFunction& f, int c)
{
    if (f.polynomial_backed()) return f.derivative(Slot::Eta, c);
    const int nx = f.nx(), ny = f.ny();
    return SymbolFunction::numeric(
        nx, ny,
        [f, c, nx, ny](const SymbolPoint& p) {
            Orders o(nx, ny);
            o.e[2 * nx + c] = 1;
            return f.partial(o, p);
        },
        std::max(0, f.dmax() - 1));
}

double min_eig(const Eigen::MatrixXd& A)
{
    if (A.size() == 0) return 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

} // namespace

PhaseScales PhaseScales::make(const ModelProblem& m, double lambda, double rho)
{
    PhaseScales s;
    s.lambda = lambda;
    s.rho = rho;
    s.mu = std::pow(lambda, rho - 1.0);
    s.k_inf = m.k.infinite;
    s.eta_zero = m.eta_zero();
    s.lam_invk = std::pow(lambda, m.k.inv());
    s.s_eta = s.eta_zero ? 0.0 : std::pow(lambda, -m.k.inv());
    return s;
}

PhaseLayout::PhaseLayout(int nx, int ny, int ny_active, int K)
    : nx(nx), ny(ny), ny_active(ny_active), K(K), table(MonomialTable::get(nx + ny_active, K))
{
}

int PhaseLayout::size() const { return 2 + 2 * nx + 2 * ny + 2 * (table->size() - table->count_upto(1)); }

int PhaseLayout::y_degree(int idx) const
{
    int d = 0;
    for (int c = 0; c < ny_active; ++c) d += table->exponent(idx, nx + c);
    return d;
}

PhaseState PhaseState::zero(const PhaseLayout& L)
{
    PhaseState s;
    s.x0 = Eigen::VectorXd::Zero(L.nx);
    s.xi0 = Eigen::VectorXd::Zero(L.nx);
    s.y0 = Eigen::VectorXd::Zero(L.ny);
    s.zeta = Eigen::VectorXd::Zero(L.ny);
    s.G = CPoly(L.table);
    return s;
}

Eigen::VectorXd PhaseState::pack(const PhaseLayout& L) const
{
    Eigen::VectorXd v(L.size());
    int o = 0;
    v[o++] = w0.real();
    v[o++] = w0.imag();
    v.segment(o, L.nx) = x0;
    o += L.nx;
    v.segment(o, L.nx) = xi0;
    o += L.nx;
    v.segment(o, L.ny) = y0;
    o += L.ny;
    v.segment(o, L.ny) = zeta;
    o += L.ny;
    for (int i = L.table->count_upto(1); i < L.table->size(); ++i) {
        v[o++] = G[i].real();
        v[o++] = G[i].imag();
    }
    return v;
}

PhaseState PhaseState::unpack(const PhaseLayout& L, const Eigen::VectorXd& v)
{
    PhaseState s;
    int o = 0;
    s.w0 = cd(v[0], v[1]);
    o = 2;
    s.x0 = v.segment(o, L.nx);
    o += L.nx;
    s.xi0 = v.segment(o, L.nx);
    o += L.nx;
    s.y0 = v.segment(o, L.ny);
    o += L.ny;
    s.zeta = v.segment(o, L.ny);
    o += L.ny;
    s.G = CPoly(L.table);
    for (int i = L.table->count_upto(1); i < L.table->size(); ++i) {
        s.G[i] = cd(v[o], v[o + 1]);
        o += 2;
    }
    return s;
}

Eigen::VectorXcd PhaseState::tensor(const PhaseLayout& L, int i, int j) const
{
    const int nx = L.nx, ny = L.ny_active;
    int n = 1;
    for (int q = 0; q < i; ++q) n *= nx;
    for (int q = 0; q < j; ++q) n *= ny;
    Eigen::VectorXcd T = Eigen::VectorXcd::Zero(n);
    if (i + j > L.K || (j > 0 && ny == 0)) return T;
    std::vector<int> e(L.nv());
    for (int flat = 0; flat < n; ++flat) {
        std::fill(e.begin(), e.end(), 0);
        int r = flat;
        // row-major: last slot fastest
        std::vector<int> slots(i + j);
        for (int q = i + j - 1; q >= 0; --q) {
            int base = q < i ? nx : ny;
            slots[q] = r % base;
            r /= base;
        }
        for (int q = 0; q < i + j; ++q) e[q < i ? slots[q] : nx + slots[q]] += 1;
        int idx = L.table->index(e);
        if (idx >= 0) T[flat] = G[idx] * L.table->factorial(idx);
    }
    return T;
}

Eigen::MatrixXcd PhaseState::w20(const PhaseLayout& L) const
{
    return Eigen::Map<const Eigen::MatrixXcd>(tensor(L, 2, 0).data(), L.nx, L.nx);
}

Eigen::MatrixXcd PhaseState::w02(const PhaseLayout& L) const
{
    Eigen::VectorXcd t = tensor(L, 0, 2);
    return Eigen::Map<const Eigen::MatrixXcd>(t.data(), L.ny_active, L.ny_active);
}

CPoly eikonal_symbol(const ModelProblem& m, const PhaseScales& S, double t, const std::vector<CPoly>& Px,
                     const std::vector<CPoly>& Py, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0, int degree)
{
    const int nx = m.nx, ny = m.ny, nya = static_cast<int>(Py.size());
    const bool frozen = nya == 0;
    const int nv = nx + nya;
    auto reg = [&](const CPoly& p) { return p.degree() == degree ? p : p.regraded(degree); };

    std::vector<CPoly> px(nx), py(nya);
    for (int a = 0; a < nx; ++a) px[a] = reg(Px[a]);
    for (int c = 0; c < nya; ++c) py[c] = reg(Py[c]);

    std::vector<CPoly> args;
    args.reserve(2 * nx + 2 * ny);
    for (int a = 0; a < nx; ++a) args.push_back(CPoly::variable(nv, degree, a, x0[a]));
    for (int a = 0; a < nx; ++a) args.push_back(px[a]);
    for (int c = 0; c < ny; ++c)
        args.push_back(frozen ? CPoly::constant(nv, degree, m.eta0[c]) : py[c] * cd(S.lam_invk));
    for (int c = 0; c < ny; ++c)
        args.push_back(frozen ? CPoly::constant(nv, degree, y0[c]) : CPoly::variable(nv, degree, nx + c, y0[c]));

    CPoly E = m.f.compose(t, args);
    if (frozen || S.k_inf) return E;
    const double hs = std::pow(S.lambda, 2.0 * m.k.inv() - 1.0);
    for (int c = 0; c < ny; ++c) {
        SymbolFunction fc = d_eta(m.f, c);
        for (int d = 0; d < ny; ++d) {
            CPoly hyy = py[d].derivative(nx + c);
            if (hyy.max_abs() == 0.0) continue;
            E += (-0.5 * I * hs) * (d_eta(fc, d).compose(t, args) * hyy);
        }
    }
    if (m.r) E += cd(1.0 / S.lam_invk) * m.r->compose(t, args);
    if (!m.c_coupling.empty()) {
        const double cs = S.lam_invk / S.lambda;
        for (int c = 0; c < ny; ++c) E += cd(cs) * (m.c_coupling[c].compose(t, args) * d_eta(m.f, c).compose(t, args));
    }
    return E;
}

EikonalRhs eikonal_assemble(const ModelProblem& m, const PhaseLayout& L, const PhaseScales& S, double t,
                            const PhaseState& st)
{
    const int nx = L.nx, ny = L.ny, nya = L.ny_active, K = L.K;
    const bool frozen = nya == 0;
    const auto& T = L.table;
    const double mu = S.mu;

    CPoly Om(T);
    for (int a = 0; a < nx; ++a) Om[1 + a] = st.xi0[a];
    Eigen::VectorXd Y = S.s_eta * m.eta0 + mu * st.zeta;
    for (int c = 0; c < nya; ++c) Om[1 + nx + c] = Y[c];
    for (int i = T->count_upto(1); i < T->size(); ++i) Om[i] = L.y_degree(i) ? mu * st.G[i] : st.G[i];

    std::vector<CPoly> Px(nx), Py(nya);
    for (int a = 0; a < nx; ++a) Px[a] = Om.derivative(a);
    for (int c = 0; c < nya; ++c) Py[c] = Om.derivative(nx + c);

    CPoly E = eikonal_symbol(m, S, t, Px, Py, st.x0, st.y0, K);

    // coupled solve for (x0', y0') from the imaginary parts of the degree-1 equations
    Eigen::MatrixXcd Hxx(nx, nx), Hxy(nx, nya), Hyy(nya, nya);
    for (int a = 0; a < nx; ++a)
        for (int b = 0; b < nx; ++b) Hxx(a, b) = Px[b][1 + a];
    for (int a = 0; a < nx; ++a)
        for (int c = 0; c < nya; ++c) Hxy(a, c) = Py[c][1 + a];
    for (int c = 0; c < nya; ++c)
        for (int d = 0; d < nya; ++d) Hyy(c, d) = Py[d][1 + nx + c];
    Eigen::VectorXcd Ex(nx), Ey(nya);
    for (int a = 0; a < nx; ++a) Ex[a] = E[1 + a];
    for (int c = 0; c < nya; ++c) Ey[c] = E[1 + nx + c];

    if (min_eig(Hxx.imag()) < 1e-8)
        throw Error(ErrorKind::SingularHessian, "Im w20 is not positive definite at t = " + std::to_string(t));
    if (!frozen && min_eig(Hyy.imag() / mu) < 1e-8)
        throw Error(ErrorKind::SingularHessian, "Im w02 is not positive definite at t = " + std::to_string(t));

    Eigen::MatrixXd A(nx + nya, nx + nya);
    Eigen::VectorXd b(nx + nya);
    A.topLeftCorner(nx, nx) = Hxx.imag();
    b.head(nx) = Ex.imag();
    if (!frozen) {
        A.topRightCorner(nx, nya) = Hxy.imag();
        A.bottomLeftCorner(nya, nx) = Hxy.transpose().imag() / mu;
        A.bottomRightCorner(nya, nya) = Hyy.imag() / mu;
        b.tail(nya) = Ey.imag() / mu;
    }
    Eigen::VectorXd sol = A.partialPivLu().solve(b);
    Eigen::VectorXd dx0 = sol.head(nx);
    Eigen::VectorXd dy0 = Eigen::VectorXd::Zero(ny);
    if (!frozen) dy0.head(nya) = sol.tail(nya);

    PhaseState d = PhaseState::zero(L);
    d.x0 = dx0;
    d.y0 = dy0;
    Eigen::VectorXcd cx = Hxx * dx0.cast<cd>();
    if (!frozen) cx += Hxy * dy0.head(nya).cast<cd>();
    d.xi0 = (cx - Ex).real();
    if (!frozen) {
        Eigen::VectorXcd cy = Hxy.transpose() * dx0.cast<cd>() + Hyy * dy0.head(nya).cast<cd>();
        d.zeta.head(nya) = (cy - Ey).real() / mu;
    }

    CPoly flow(T);
    for (int a = 0; a < nx; ++a) flow += Px[a] * cd(dx0[a]);
    for (int c = 0; c < nya; ++c) flow += Py[c] * cd(dy0[c]);
    d.w0 = flow[0] - E[0];
    CPoly gdot = flow - E;
    for (int i = T->count_upto(1); i < T->size(); ++i) d.G[i] = L.y_degree(i) ? gdot[i] / mu : gdot[i];

    return {d.pack(L), E};
}

namespace {

PhaseState rhs_common(const PhaseState& state, double t, const ModelProblem& model, const PhaseParams& p)
{
    PhaseLayout L(model.nx, model.ny, model.ny, p.K);
    PhaseScales S = PhaseScales::make(model, p.lambda, p.rho);
    PhaseState st = state;
    if (st.G.size() != L.table->size()) st.G = st.G.valid() ? st.G.regraded(p.K) : CPoly(L.table);
    return PhaseState::unpack(L, eikonal_assemble(model, L, S, t, st).d);
}

} // namespace

PhaseState rhs_eta_nonzero(const PhaseState& state, double t, const ModelProblem& model, const PhaseParams& p)
{
    if (model.k.infinite || model.eta_zero())
        throw Error(ErrorKind::BadParams, "this system needs finite k and eta0 != 0");
    return rhs_common(state, t, model, p);
}

PhaseState rhs_eta_zero(const PhaseState& state, double t, const ModelProblem& model, const PhaseParams& p)
{
    if (!model.eta_zero()) throw Error(ErrorKind::BadParams, "this system needs eta0 = 0");
    return rhs_common(state, t, model, p);
}

InitialW2 choose_initial_w2(const ModelProblem& model, double t_cross, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& xi)
{
    const int nx = model.nx, ny = model.ny;
    SymbolPoint p(t_cross, x, xi, model.eta0, model.y0);
    Eigen::VectorXd a(nx), v(nx);
    for (int i = 0; i < nx; ++i) {
        Orders ox(nx, ny), oxi(nx, ny);
        ox.e[i] = 1;
        oxi.e[nx + i] = 1;
        a[i] = model.f.partial(ox, p).imag();
        v[i] = model.f.partial(oxi, p).imag();
    }
    InitialW2 r;
    int order = 1;
    try {
        auto rep = detect_sign_change(model, {x, xi, model.eta0, model.y0}, model.t_lo, model.t_hi, 512);
        order = rep.order_infinite ? 0 : rep.order_estimate;
    } catch (const Error&) {
        order = 0;
    }
    if (order != 1) {
        r.higher_order = true;
        r.branch = 0;
        r.W20 = Eigen::MatrixXcd::Identity(nx, nx) * I;
        return r;
    }
    Orders ot(nx, ny);
    ot.t = 1;
    double scale = std::max(1.0, std::abs(model.f.partial(ot, p).imag()));
    if (v.norm() > 1e-12 * scale) {
        double vv = v.squaredNorm();
        Eigen::MatrixXd W = -(a * v.transpose() + v * a.transpose()) / vv + a.dot(v) * (v * v.transpose()) / (vv * vv);
        r.W20 = W.cast<cd>() + I * 0.1 * Eigen::MatrixXd::Identity(nx, nx);
        r.branch = 1;
    } else {
        r.W20 = I * 10.0 * Eigen::MatrixXd::Identity(nx, nx);
        r.branch = 2;
    }
    return r;
}

void PhaseTrajectory::state_at(double t, PhaseState& st, PhaseState& dst) const
{
    Eigen::VectorXd v, dv;
    samples.hermite(t, v, dv);
    st = PhaseState::unpack(layout, v);
    dst = PhaseState::unpack(layout, dv);
}

PhasePolys phase_polys(const PhaseLayout& L, const PhaseScales& S, const Eigen::VectorXd& eta0,
                       const PhaseState& st, const PhaseState& dst)
{
    const int nx = L.nx, nya = L.ny_active;
    const auto& T = L.table;
    PhasePolys P;
    P.st = st;
    P.dst = dst;
    P.omega = CPoly(T);
    CPoly drift(T);
    P.omega[0] = st.w0;
    drift[0] = dst.w0;
    for (int a = 0; a < nx; ++a) {
        P.omega[1 + a] = st.xi0[a];
        drift[1 + a] = dst.xi0[a];
    }
    for (int c = 0; c < nya; ++c) {
        P.omega[1 + nx + c] = S.s_eta * eta0[c] + S.mu * st.zeta[c];
        drift[1 + nx + c] = S.mu * dst.zeta[c];
    }
    for (int i = T->count_upto(1); i < T->size(); ++i) {
        double sc = L.y_degree(i) ? S.mu : 1.0;
        P.omega[i] = sc * st.G[i];
        drift[i] = sc * dst.G[i];
    }
    P.Px.resize(nx);
    P.Py.resize(nya);
    for (int a = 0; a < nx; ++a) P.Px[a] = P.omega.derivative(a);
    for (int c = 0; c < nya; ++c) P.Py[c] = P.omega.derivative(nx + c);
    P.omega_t = drift;
    for (int a = 0; a < nx; ++a) P.omega_t -= P.Px[a] * cd(dst.x0[a]);
    for (int c = 0; c < nya; ++c) P.omega_t -= P.Py[c] * cd(dst.y0[c]);
    return P;
}

PhasePolys phase_polys(const PhaseTrajectory& traj, double t)
{
    PhaseState st, dst;
    traj.state_at(t, st, dst);
    return phase_polys(traj.layout, traj.scales, traj.model.eta0, st, dst);
}

PhaseTrajectory integrate_phase(const ModelProblem& model, const IntegrateOptions& opt)
{
    model.validate();
    const PhaseParams& pp = opt.phase;
    if (pp.K < 2 || pp.K > 8) throw Error(ErrorKind::BadParams, "K must lie in [2, 8]");
    if (!(pp.rho > 0.0 && pp.rho < 0.5) || pp.rho > model.k.inv() + 1e-15)
        if (!model.k.infinite) throw Error(ErrorKind::BadParams, "need 0 < rho < 1/2 and rho <= 1/k");

    PhaseTrajectory tr;
    tr.model = model;
    tr.scales = PhaseScales::make(model, pp.lambda, pp.rho);
    tr.layout = PhaseLayout(model.nx, model.ny, model.ny, pp.K);
    tr.layout1 = PhaseLayout(model.nx, model.ny, 0, pp.K);

    LinePoint base = LinePoint::base(model);
    SignChangeReport rep = detect_sign_change(model, base, model.t_lo, model.t_hi, 512);
    tr.t_cross = rep.t_cross;
    tr.init = choose_initial_w2(model, rep.t_cross, model.x0, model.xi0);

    // pass 1: lambda-free system with eta frozen at eta0
    PhaseState s1 = PhaseState::zero(tr.layout1);
    s1.x0 = model.x0;
    s1.xi0 = model.xi0;
    s1.y0 = model.y0;
    for (int a = 0; a < model.nx; ++a)
        for (int b = a; b < model.nx; ++b) {
            std::vector<int> e(model.nx, 0);
            e[a] += 1;
            e[b] += 1;
            s1.G[tr.layout1.table->index(e)] = a == b ? tr.init.W20(a, a) / 2.0 : tr.init.W20(a, b);
        }
    const PhaseScales S1 = tr.scales;
    auto f1 = [&](double t, const Eigen::VectorXd& y) {
        return eikonal_assemble(model, tr.layout1, S1, t, PhaseState::unpack(tr.layout1, y)).d;
    };
    Eigen::VectorXd y1 = s1.pack(tr.layout1);
    auto run = [&](auto& f, double a, double b, const Eigen::VectorXd& y0, double hmax) {
        if (a == b) {
            Samples<Eigen::VectorXd> s;
            s.t.push_back(a);
            s.y.push_back(y0);
            s.dy.push_back(f(a, y0));
            return s;
        }
        if (opt.adaptive) return integrate_rk45(f, a, b, y0, opt.rtol, opt.atol, hmax);
        int n = std::max(8, static_cast<int>(std::ceil(opt.rk4_steps * std::abs(b - a) / (model.t_hi - model.t_lo))));
        return integrate_rk4(f, a, b, y0, n);
    };
    auto lo1 = run(f1, tr.t_cross, model.t_lo, y1, opt.pass1_hmax);
    auto hi1 = run(f1, tr.t_cross, model.t_hi, y1, opt.pass1_hmax);
    tr.pass1 = Samples<Eigen::VectorXd>::join(lo1, hi1);

    size_t anchor = 0;
    for (size_t i = 1; i < tr.pass1.size(); ++i)
        if (tr.pass1.y[i][1] < tr.pass1.y[anchor][1]) anchor = i;
    tr.t0_anchor = tr.pass1.t[anchor];
    tr.im_w0_min = tr.pass1.y[anchor][1];
    for (auto& y : tr.pass1.y) y[1] -= tr.im_w0_min;

    std::vector<GateSample> gs;
    for (size_t i = 0; i < tr.pass1.size(); ++i) {
        PhaseState s = PhaseState::unpack(tr.layout1, tr.pass1.y[i]);
        gs.push_back({tr.pass1.t[i], s.x0, s.xi0, s.w0.imag()});
    }
    tr.gate = lemclaim_gate(gs, anchor, model, pp.lambda, opt.gate);
    if (opt.two_pass) {
        tr.usable[0] = tr.gate.t_minus;
        tr.usable[1] = tr.gate.t_plus;
        if (opt.enforce_gate && tr.gate.empty())
            throw Error(ErrorKind::GateEmpty, "integral gate leaves no usable interval around t0 = " +
                                                  std::to_string(tr.t0_anchor) + " (gate [" +
                                                  std::to_string(tr.gate.t_minus) + ", " +
                                                  std::to_string(tr.gate.t_plus) + "])");
    } else {
        tr.usable[0] = model.t_lo;
        tr.usable[1] = model.t_hi;
    }

    // pass 2: full lambda-dependent system from the anchor
    PhaseState a1 = PhaseState::unpack(tr.layout1, tr.pass1.y[anchor]);
    PhaseState s2 = PhaseState::zero(tr.layout);
    s2.w0 = a1.w0;
    s2.x0 = a1.x0;
    s2.xi0 = a1.xi0;
    s2.y0 = model.y0;
    const auto& T1 = *tr.layout1.table;
    for (int i = T1.count_upto(1); i < T1.size(); ++i) {
        std::vector<int> e(tr.layout.nv(), 0);
        for (int a = 0; a < model.nx; ++a) e[a] = T1.exponent(i, a);
        s2.G[tr.layout.table->index(e)] = a1.G[i];
    }
    for (int c = 0; c < model.ny; ++c) {
        std::vector<int> e(tr.layout.nv(), 0);
        e[model.nx + c] = 2;
        s2.G[tr.layout.table->index(e)] = I * pp.im_w02_init / 2.0;
    }
    const PhaseScales S2 = tr.scales;
    auto f2 = [&](double t, const Eigen::VectorXd& y) {
        return eikonal_assemble(model, tr.layout, S2, t, PhaseState::unpack(tr.layout, y)).d;
    };
    Eigen::VectorXd y2 = s2.pack(tr.layout);
    double h2 = std::max(1e-6, (tr.usable[1] - tr.usable[0]) / opt.pass2_min_samples);
    auto lo2 = run(f2, tr.t0_anchor, tr.usable[0], y2, h2);
    auto hi2 = run(f2, tr.t0_anchor, tr.usable[1], y2, h2);
    tr.samples = Samples<Eigen::VectorXd>::join(lo2, hi2);

    for (size_t i = 0; i < tr.samples.size(); ++i) {
        PhaseState s = tr.state(i);
        if (min_eig(s.w20(tr.layout).imag()) <= 0.0 || min_eig(s.w02(tr.layout).imag()) <= 0.0)
            throw Error(ErrorKind::HessianLoss, "Im w20 or Im w02 lost positivity at t = " + std::to_string(tr.samples.t[i]));
    }
    return tr;
}

cd eval_complex(const SymbolFunction& f, double t, const Eigen::VectorXcd& x, const Eigen::VectorXcd& xi,
                const Eigen::VectorXcd& eta, const Eigen::VectorXcd& y, int order)
{
    std::vector<CPoly> args;
    auto push = [&](const Eigen::VectorXcd& v, int n) {
        for (int i = 0; i < n; ++i) args.push_back(CPoly::constant(1, order, i < v.size() ? v[i] : cd(0)));
    };
    push(x, f.nx());
    push(xi, f.nx());
    push(eta, f.ny());
    push(y, f.ny());
    return f.compose(t, args)[0];
}

PhaseEval eval_phase(const PhaseTrajectory& traj, double t, const Eigen::VectorXd& x, const Eigen::VectorXd& y)
{
    if (t < traj.t_begin() - 1e-12 || t > traj.t_end() + 1e-12)
        throw Error(ErrorKind::OutOfInterval, "t outside the phase trajectory");
    PhasePolys P = phase_polys(traj, t);
    const int nx = traj.layout.nx, nya = traj.layout.ny_active;
    Eigen::VectorXd d(nx + nya);
    d.head(nx) = x - P.st.x0;
    d.tail(nya) = y - P.st.y0;
    PhaseEval e;
    e.omega = P.omega.eval(d);
    e.d_t = P.omega_t.eval(d);
    e.d_x.resize(nx);
    e.d_y.resize(nya);
    for (int a = 0; a < nx; ++a) e.d_x[a] = P.Px[a].eval(d);
    for (int c = 0; c < nya; ++c) e.d_y[c] = P.Py[c].eval(d);
    e.d_yy.resize(nya, nya);
    for (int c = 0; c < nya; ++c)
        for (int c2 = 0; c2 < nya; ++c2) e.d_yy(c, c2) = P.Py[c2].derivative(nx + c).eval(d);
    return e;
}

std::vector<Probe> tube_probes(const PhaseTrajectory& traj, int n, unsigned long long seed, double t_lo, double t_hi)
{
    std::mt19937_64 rng(seed);
    const auto& S = traj.scales;
    const double xs = S.eta_zero ? std::pow(S.lambda, S.rho - 0.5) : std::pow(S.lambda, S.rho - traj.model.k.inv());
    const double ys = std::pow(S.lambda, -S.rho / 4);
    std::vector<Probe> out;
    for (int i = 0; i < n; ++i) {
        Probe p;
        p.t = t_lo + (t_hi - t_lo) * uniform01(rng);
        PhaseState st, dst;
        traj.state_at(p.t, st, dst);
        p.x = st.x0;
        p.y = st.y0;
        for (int a = 0; a < traj.layout.nx; ++a) p.x[a] += xs * (2 * uniform01(rng) - 1);
        for (int c = 0; c < traj.layout.ny; ++c) p.y[c] += ys * (2 * uniform01(rng) - 1);
        out.push_back(p);
    }
    return out;
}

ResidualReport eikonal_residual(const PhaseTrajectory& traj, const std::vector<Probe>& probes)
{
    const ModelProblem& m = traj.model;
    const auto& S = traj.scales;
    const int ny = m.ny;
    const int order = std::max(traj.layout.K, 2);
    ResidualReport rep;
    for (const auto& p : probes) {
        PhaseEval e = eval_phase(traj, p.t, p.x, p.y);
        Eigen::VectorXcd eta = e.d_y * S.lam_invk;
        Eigen::VectorXcd xc = p.x.cast<cd>(), yc = p.y.cast<cd>();
        cd E = e.d_t + eval_complex(m.f, p.t, xc, e.d_x, eta, yc, order);
        if (!S.k_inf) {
            const double hs = std::pow(S.lambda, 2.0 * m.k.inv() - 1.0);
            for (int c = 0; c < ny; ++c) {
                SymbolFunction fc = d_eta(m.f, c);
                for (int d = 0; d < ny; ++d)
                    E += -0.5 * I * hs * eval_complex(d_eta(fc, d), p.t, xc, e.d_x, eta, yc, order) * e.d_yy(c, d);
            }
            if (m.r) E += eval_complex(*m.r, p.t, xc, e.d_x, eta, yc, order) / S.lam_invk;
            if (!m.c_coupling.empty())
                for (int c = 0; c < ny; ++c)
                    E += S.lam_invk / S.lambda * eval_complex(m.c_coupling[c], p.t, xc, e.d_x, eta, yc, order) *
                         eval_complex(d_eta(m.f, c), p.t, xc, e.d_x, eta, yc, order);
        }
        double v = std::abs(S.lambda * E);
        rep.sup_residual = std::max(rep.sup_residual, v);
        rep.table.push_back({p, v});
    }
    return rep;
}

} // namespace pseudomode
