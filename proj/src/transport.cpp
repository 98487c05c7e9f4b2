#include "pseudomode/transport.hpp"

#include <cmath>

namespace pseudomode {

namespace {

const cd I(0.0, 1.0);

int max_spatial_order(const ModelProblem& m)
{
    int r = 0;
    for (const auto& d : m.diff_op) {
        int s = 0;
        for (int o : d.x_order) s += o;
        for (int o : d.y_order) s += o;
        r = std::max(r, s);
    }
    return r;
}

void check_diff_op(const ModelProblem& m)
{
    if (m.diff_op.empty()) throw Error(ErrorKind::MissingDiffOp, "model has no diff_op");
    int dt = 0;
    for (const auto& d : m.diff_op) {
        if (d.t_order > 1) throw Error(ErrorKind::BadParams, "diff_op may hold D_t only to first order");
        if (d.t_order == 1) {
            ++dt;
            for (int o : d.x_order)
                if (o) throw Error(ErrorKind::BadParams, "mixed D_t terms are not supported");
            for (int o : d.y_order)
                if (o) throw Error(ErrorKind::BadParams, "mixed D_t terms are not supported");
        }
    }
    if (dt != 1) throw Error(ErrorKind::BadParams, "diff_op needs exactly one D_t term");
}

CPoly coeff_poly(const SymbolFunction& c, const ModelProblem& m, double t, const Eigen::VectorXd& x0,
                 const Eigen::VectorXd& y0, int degree)
{
    const int nx = m.nx, ny = m.ny, nv = nx + ny;
    std::vector<CPoly> args;
    for (int a = 0; a < nx; ++a) args.push_back(CPoly::variable(nv, degree, a, x0[a]));
    for (int a = 0; a < nx; ++a) args.push_back(CPoly::constant(nv, degree, 0.0));
    for (int b = 0; b < ny; ++b) args.push_back(CPoly::constant(nv, degree, 0.0));
    for (int b = 0; b < ny; ++b) args.push_back(CPoly::variable(nv, degree, nx + b, y0[b]));
    return c.compose(t, args);
}

void add_to(OpPoly& op, const std::vector<int>& g, const CPoly& p)
{
    auto it = op.find(g);
    if (it == op.end())
        op.emplace(g, p);
    else
        it->second += p;
}

} // namespace

CPoly apply_D(const CPoly& p, const std::vector<int>& gamma)
{
    CPoly r = p;
    int n = 0;
    for (size_t v = 0; v < gamma.size(); ++v)
        for (int j = 0; j < gamma[v]; ++j) {
            r = r.derivative(static_cast<int>(v));
            ++n;
        }
    static const cd pw[4] = {cd(1, 0), cd(0, -1), cd(-1, 0), cd(0, 1)};
    return r * pw[n % 4];
}

OpPoly conjugated_operator(const ModelProblem& m, double t, const Eigen::VectorXd& x0, const Eigen::VectorXd& y0,
                           const std::vector<CPoly>& P, const CPoly& omega_t, double lambda, int degree)
{
    check_diff_op(m);
    const int nx = m.nx, ny = m.ny, nv = nx + ny;
    std::vector<CPoly> lp(nv);
    for (int v = 0; v < nv; ++v) lp[v] = (P[v].degree() == degree ? P[v] : P[v].regraded(degree)) * cd(lambda);
    OpPoly out;
    const std::vector<int> zero(nv, 0);
    add_to(out, zero, (omega_t.degree() == degree ? omega_t : omega_t.regraded(degree)) * cd(lambda));
    for (const auto& d : m.diff_op) {
        if (d.t_order) continue;
        std::vector<int> order(nv);
        for (int a = 0; a < nx; ++a) order[a] = d.x_order[a];
        for (int b = 0; b < ny; ++b) order[nx + b] = d.y_order[b];
        // left quantization: the coefficient multiplies the conjugated derivative product
        OpPoly prod;
        prod.emplace(zero, CPoly::constant(nv, degree, 1.0));
        for (int v = 0; v < nv; ++v)
            for (int j = 0; j < order[v]; ++j) {
                OpPoly next;
                for (const auto& [g, c] : prod) {
                    add_to(next, g, c.derivative(v) * cd(0, -1));
                    std::vector<int> g2 = g;
                    g2[v] += 1;
                    add_to(next, g2, c);
                    add_to(next, g, lp[v] * c);
                }
                prod.swap(next);
            }
        const CPoly cf = coeff_poly(d.coeff, m, t, x0, y0, degree);
        for (const auto& [g, c] : prod) add_to(out, g, cf * c);
    }
    return out;
}

TransportTerms transport_terms(const PhaseTrajectory& traj, double t, int M_a)
{
    const ModelProblem& m = traj.model;
    const auto& L = traj.layout;
    const int nx = m.nx, ny = m.ny, nv = nx + ny;
    const int D = M_a + max_spatial_order(m);
    PhasePolys pp = phase_polys(traj, t);

    std::vector<CPoly> P(nv), Px(nx), Py(ny);
    for (int a = 0; a < nx; ++a) P[a] = Px[a] = pp.Px[a].regraded(D);
    for (int c = 0; c < ny; ++c) P[nx + c] = Py[c] = pp.Py[c].regraded(D);
    CPoly omt = pp.omega_t.regraded(D);

    TransportTerms T;
    OpPoly full = conjugated_operator(m, t, pp.st.x0, pp.st.y0, P, omt, traj.scales.lambda, D);
    CPoly E = eikonal_symbol(m, traj.scales, t, Px, Py, pp.st.x0, pp.st.y0, D);
    const std::vector<int> zero(nv, 0);
    T.Tmult = (full[zero] - (omt + E) * cd(traj.scales.lambda)).regraded(M_a);

    // principal gradients: x-part from the pure-x monomials, y-part without the zeta shift
    std::vector<CPoly> P0(nv);
    CPoly omx(L.table);
    for (int a = 0; a < nx; ++a) omx[1 + a] = pp.st.xi0[a];
    for (int i = L.table->count_upto(1); i < L.table->size(); ++i)
        if (L.y_degree(i) == 0) omx[i] = pp.omega[i];
    for (int a = 0; a < nx; ++a) P0[a] = omx.derivative(a).regraded(D);
    for (int c = 0; c < ny; ++c) {
        P0[nx + c] = P[nx + c];
        if (!traj.scales.eta_zero) P0[nx + c][0] -= traj.scales.mu * pp.st.zeta[c];
    }
    OpPoly prin = conjugated_operator(m, t, pp.st.x0, pp.st.y0, P0, omt, traj.scales.lambda, D);
    for (auto& [g, c] : full)
        if (g != zero) T.C.emplace(g, c.regraded(M_a));
    for (auto& [g, c] : prin)
        if (g != zero) T.C0.emplace(g, c.regraded(M_a));
    T.v.resize(nv);
    T.v.head(nx) = pp.dst.x0;
    T.v.tail(ny) = pp.dst.y0;
    return T;
}

CPoly transport_rhs(const TransportTerms& T, const CPoly& phi, const CPoly* prev, double lambda_kappa)
{
    const int nv = phi.nvars();
    CPoly acc = T.Tmult * phi;
    for (const auto& [g, c] : T.C0) acc += c * apply_D(phi, g);
    if (prev) {
        for (const auto& [g, c] : T.C) {
            auto it = T.C0.find(g);
            CPoly diff = it == T.C0.end() ? c : c - it->second;
            if (diff.max_abs() == 0.0) continue;
            acc += (diff * apply_D(*prev, g)) * cd(lambda_kappa);
        }
    }
    CPoly r = acc * cd(0, -1);
    for (int v = 0; v < nv; ++v) r += phi.derivative(v) * cd(T.v[v]);
    return r;
}

std::vector<CPoly> AmplitudeSet::levels_at(double t, std::vector<CPoly>* d_levels) const
{
    Eigen::VectorXd y, dy;
    samples.hermite(t, y, dy);
    const int n = table->size();
    std::vector<CPoly> out(L + 1, CPoly(table));
    if (d_levels) d_levels->assign(L + 1, CPoly(table));
    for (int l = 0; l <= L; ++l)
        for (int i = 0; i < n; ++i) {
            int o = 2 * (l * n + i);
            out[l][i] = cd(y[o], y[o + 1]);
            if (d_levels) (*d_levels)[l][i] = cd(dy[o], dy[o + 1]);
        }
    return out;
}

CPoly AmplitudeSet::total_at(double t, CPoly* d_total) const
{
    std::vector<CPoly> d;
    auto lv = levels_at(t, d_total ? &d : nullptr);
    CPoly tot(table);
    if (d_total) *d_total = CPoly(table);
    for (int l = 0; l <= L; ++l) {
        cd w = std::pow(lambda, -l * kappa_exp);
        tot += lv[l] * w;
        if (d_total) *d_total += d[l] * w;
    }
    return tot;
}

double AmplitudeSet::max_abs_coeff(int level) const
{
    const int n = table->size();
    double m = 0.0;
    for (const auto& y : samples.y)
        for (int i = 0; i < n; ++i) {
            int o = 2 * (level * n + i);
            m = std::max(m, std::abs(cd(y[o], y[o + 1])));
        }
    return m;
}

AmplitudeSet solve_transport(const PhaseTrajectory& traj, const TransportOptions& opt)
{
    const ModelProblem& m = traj.model;
    if (opt.L < 0 || opt.M_a < 0) throw Error(ErrorKind::BadParams, "L and M_a must be nonnegative");
    check_diff_op(m);
    AmplitudeSet A;
    A.L = opt.L;
    A.M_a = opt.M_a;
    A.lambda = traj.scales.lambda;
    A.kappa_exp = opt.kappa >= 0 ? opt.kappa : std::min(traj.scales.rho, m.k.infinite ? 1.0 : 0.5 * m.k.inv());
    A.t0_anchor = traj.t0_anchor;
    A.cutoff = opt.cutoff;
    const int nv = m.nx + m.ny;
    A.table = MonomialTable::get(nv, opt.M_a);
    const int n = A.table->size();
    const double lk = std::pow(A.lambda, A.kappa_exp);

    auto unpack = [&](const Eigen::VectorXd& y) {
        std::vector<CPoly> lv(A.L + 1, CPoly(A.table));
        for (int l = 0; l <= A.L; ++l)
            for (int i = 0; i < n; ++i) lv[l][i] = cd(y[2 * (l * n + i)], y[2 * (l * n + i) + 1]);
        return lv;
    };
    auto rhs = [&](double t, const Eigen::VectorXd& y) {
        TransportTerms T = transport_terms(traj, t, opt.M_a);
        auto lv = unpack(y);
        Eigen::VectorXd d(y.size());
        for (int l = 0; l <= A.L; ++l) {
            CPoly r = transport_rhs(T, lv[l], l ? &lv[l - 1] : nullptr, lk);
            for (int i = 0; i < n; ++i) {
                d[2 * (l * n + i)] = r[i].real();
                d[2 * (l * n + i) + 1] = r[i].imag();
            }
        }
        return d;
    };

    Eigen::VectorXd y0 = Eigen::VectorXd::Zero(2 * n * (A.L + 1));
    y0[0] = 1.0;
    const auto& ts = traj.samples.t;
    size_t i0 = 0;
    double best = 1e300;
    for (size_t i = 0; i < ts.size(); ++i)
        if (std::abs(ts[i] - traj.t0_anchor) < best) {
            best = std::abs(ts[i] - traj.t0_anchor);
            i0 = i;
        }

    // RK4 on the phase grid, outward from the anchor
    std::vector<Eigen::VectorXd> Y(ts.size()), DY(ts.size());
    Y[i0] = y0;
    DY[i0] = rhs(ts[i0], y0);
    for (size_t i = i0 + 1; i < ts.size(); ++i) {
        Y[i] = rk4_step(rhs, ts[i - 1], Y[i - 1], ts[i] - ts[i - 1]);
        if (!Y[i].allFinite()) throw Error(ErrorKind::NonFinite, "transport produced non-finite coefficients");
        DY[i] = rhs(ts[i], Y[i]);
    }
    for (size_t i = i0; i-- > 0;) {
        Y[i] = rk4_step(rhs, ts[i + 1], Y[i + 1], ts[i] - ts[i + 1]);
        if (!Y[i].allFinite()) throw Error(ErrorKind::NonFinite, "transport produced non-finite coefficients");
        DY[i] = rhs(ts[i], Y[i]);
    }
    A.samples.t = ts;
    A.samples.y = std::move(Y);
    A.samples.dy = std::move(DY);
    return A;
}

} // namespace pseudomode
