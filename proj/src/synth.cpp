#include "pseudomode/synth.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>

namespace pseudomode {

namespace {

const cd I(0.0, 1.0);
constexpr double kSkipExponent = 80.0;

int next_pow2(double n)
{
    int p = 16;
    while (p < n) p *= 2;
    return p;
}

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

double min_eig(const Eigen::MatrixXd& A)
{
    if (A.size() == 0) return 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// Spatial coordinates of flat index `s` within a t-slice.
void spatial_point(const FieldGrid& g, size_t s, Eigen::VectorXd& x, Eigen::VectorXd& y)
{
    const int nd = g.nx + g.ny;
    for (int d = nd; d >= 1; --d) {
        const Axis& a = g.axes[d];
        int i = static_cast<int>(s % a.n);
        s /= a.n;
        if (d <= g.nx)
            x[d - 1] = a.at(i);
        else
            y[d - 1 - g.nx] = a.at(i);
    }
}

struct Support {
    double t_lo, t_hi;
};

Support chi_support(const PhaseTrajectory& traj, const CutoffScales& cs)
{
    const double edge = cs.im_w0_edge();
    const auto& ts = traj.samples.t;
    size_t i0 = 0;
    for (size_t i = 0; i < ts.size(); ++i)
        if (std::abs(ts[i] - traj.t0_anchor) < std::abs(ts[i0] - traj.t0_anchor)) i0 = i;
    auto im = [&](size_t i) { return traj.samples.y[i][1]; };
    size_t a = i0, b = i0;
    while (a > 0 && im(a) < edge) --a;
    while (b + 1 < ts.size() && im(b) < edge) ++b;
    if (im(a) < edge || im(b) < edge)
        throw Error(ErrorKind::GateEmpty, "cutoff support in t is not contained in the usable interval");
    return {ts[a], ts[b]};
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

// All partial derivatives d^gamma p for gamma in table T (same index order).
std::vector<CPoly> derivative_table(const CPoly& p, const MonomialTable& T)
{
    std::vector<CPoly> out(T.size());
    out[0] = p;
    for (int i = 1; i < T.size(); ++i) {
        // lower the first nonzero exponent to find a parent
        for (int v = 0; v < T.nvars(); ++v) {
            int j = T.lowered(i, v);
            if (j >= 0) {
                out[i] = out[j].derivative(v);
                break;
            }
        }
    }
    return out;
}

// Values of all monomials of T at d.
void monomials(const MonomialTable& T, const double* d, double* out)
{
    out[0] = 1.0;
    for (int i = 1; i < T.size(); ++i)
        for (int v = 0; v < T.nvars(); ++v) {
            int j = T.lowered(i, v);
            if (j >= 0) {
                out[i] = out[j] * d[v];
                break;
            }
        }
}

cd dot(const CPoly& p, const double* mv)
{
    cd s = 0.0;
    for (int i = 0; i < p.size(); ++i) s += p[i] * mv[i];
    return s;
}

void mul(const MonomialTable& T, const cd* a, const cd* b, cd* r)
{
    const int n = T.size();
    std::fill(r, r + n, cd(0.0));
    for (int i = 0; i < n; ++i) {
        if (a[i] == 0.0) continue;
        for (int j = 0; j < n; ++j) {
            int k = T.product(i, j);
            if (k >= 0) r[k] += a[i] * b[j];
        }
    }
}

} // namespace

size_t FieldGrid::size() const
{
    size_t n = 1;
    for (const auto& a : axes) n *= static_cast<size_t>(a.n);
    return n;
}

size_t FieldGrid::stride(int axis) const
{
    size_t s = 1;
    for (size_t d = axis + 1; d < axes.size(); ++d) s *= static_cast<size_t>(axes[d].n);
    return s;
}

double FieldGrid::cell_volume() const
{
    double v = 1.0;
    for (const auto& a : axes) v *= a.h;
    return v;
}

FieldGrid FieldGrid::zeros_like() const
{
    FieldGrid g = *this;
    g.values.assign(size(), cd(0.0));
    return g;
}

double axis_frequency(const Axis& a, int j)
{
    int jj = j < (a.n + 1) / 2 ? j : j - a.n;
    return 2.0 * M_PI * jj / (a.n * a.h);
}

void fft_axis(FieldGrid& f, int axis, bool inverse)
{
    Eigen::FFT<double> fft;
    const int n = f.axes[axis].n;
    const size_t st = f.stride(axis);
    const size_t outer = f.size() / (st * n);
    std::vector<cd> in(n), out(n);
    for (size_t o = 0; o < outer; ++o)
        for (size_t s = 0; s < st; ++s) {
            const size_t base = o * st * n + s;
            for (int i = 0; i < n; ++i) in[i] = f.values[base + i * st];
            if (inverse)
                fft.inv(out, in);
            else
                fft.fwd(out, in);
            for (int i = 0; i < n; ++i) f.values[base + i * st] = out[i];
        }
}

FieldGrid make_grid(const PhaseTrajectory& traj, const AmplitudeSet& amp, const GridSpec& spec)
{
    const ModelProblem& m = traj.model;
    const auto& S = traj.scales;
    const double lam = S.lambda;
    if (spec.n_t < 8) throw Error(ErrorKind::BadParams, "n_t too small");
    CutoffScales cs = CutoffScales::make(S, m, amp.cutoff);
    Support sup = chi_support(traj, cs);

    const int nx = m.nx, ny = m.ny;
    Eigen::VectorXd xmin = Eigen::VectorXd::Constant(nx, 1e300), xmax = -xmin;
    Eigen::VectorXd ymin = Eigen::VectorXd::Constant(ny, 1e300), ymax = -ymin;
    double w20min = 1e300, w02min = 1e300, w20max = 0.0, w02max = 0.0, ximax = 0.0, pymax = 0.0;
    for (size_t i = 0; i < traj.samples.size(); ++i) {
        double t = traj.samples.t[i];
        if (t < sup.t_lo || t > sup.t_hi) continue;
        PhaseState s = traj.state(i);
        xmin = xmin.cwiseMin(s.x0);
        xmax = xmax.cwiseMax(s.x0);
        ymin = ymin.cwiseMin(s.y0);
        ymax = ymax.cwiseMax(s.y0);
        Eigen::MatrixXcd W20 = s.w20(traj.layout), W02 = s.w02(traj.layout);
        w20min = std::min(w20min, min_eig(W20.imag()));
        w02min = std::min(w02min, min_eig(W02.imag()));
        w20max = std::max(w20max, W20.norm());
        w02max = std::max(w02max, W02.norm());
        ximax = std::max(ximax, s.xi0.norm());
        pymax = std::max(pymax, (S.s_eta * m.eta0 + S.mu * s.zeta).norm());
    }
    const double L = std::log(1.0 / spec.leak);
    const double hx_env = std::sqrt(2.0 * L / (lam * w20min));
    const double hy_env = std::sqrt(2.0 * L / (lam * S.mu * w02min));
    const double half_x = std::min(cs.x_radius(), hx_env);
    const double half_y = std::min(cs.y_radius(), hy_env);

    FieldGrid g;
    g.nx = nx;
    g.ny = ny;
    g.lambda = lam;
    const double tspan = sup.t_hi - sup.t_lo;
    Axis at;
    at.n = spec.n_t;
    at.lo = sup.t_lo - 0.5 * spec.t_pad * tspan;
    at.h = tspan * (1.0 + spec.t_pad) / (spec.n_t - 1);
    g.axes.push_back(at);

    const double nyq_h = M_PI / (3.0 * lam * ximax);
    const double kx = lam * ximax + 6.0 * std::sqrt(lam * w20max);
    for (int a = 0; a < nx; ++a) {
        double side = (xmax[a] - xmin[a] + 2.0 * half_x) / (1.0 - 2.0 * spec.margin);
        Axis ax;
        if (spec.n_gx > 0) {
            ax.n = spec.n_gx;
            if (side / ax.n * lam * ximax > M_PI / 3.0 + 1e-12)
                throw Error(ErrorKind::GridTooCoarse, "x spacing does not resolve lambda*xi0 with 6 points per period");
        } else {
            ax.n = next_pow2(side / std::min(nyq_h, M_PI / kx));
        }
        ax.h = side / ax.n;
        ax.lo = 0.5 * (xmin[a] + xmax[a]) - 0.5 * side;
        g.axes.push_back(ax);
    }
    const double ky = lam * pymax + 6.0 * std::sqrt(lam * S.mu * w02max);
    for (int c = 0; c < ny; ++c) {
        double side = (ymax[c] - ymin[c] + 2.0 * half_y) / (1.0 - 2.0 * spec.margin);
        Axis ay;
        ay.n = spec.n_gy > 0 ? spec.n_gy : next_pow2(side / (M_PI / ky));
        ay.h = side / ay.n;
        ay.lo = 0.5 * (ymin[c] + ymax[c]) - 0.5 * side;
        g.axes.push_back(ay);
    }
    if (g.size() > spec.max_points)
        throw Error(ErrorKind::MemoryBudget, "grid of " + std::to_string(g.size()) + " points exceeds the budget");
    g.values.assign(g.size(), cd(0.0));
    return g;
}

FieldGrid synthesize(const PhaseTrajectory& traj, const AmplitudeSet& amp, const FieldGrid& like)
{
    FieldGrid u = like.zeros_like();
    const ModelProblem& m = traj.model;
    const double lam = traj.scales.lambda;
    CutoffScales cs = CutoffScales::make(traj.scales, m, amp.cutoff);
    const size_t slice = u.stride(0);
    Eigen::VectorXd x(m.nx), y(m.ny), d(m.nx + m.ny);
    for (int it = 0; it < u.axes[0].n; ++it) {
        const double t = u.axes[0].at(it);
        if (t < traj.t_begin() || t > traj.t_end()) continue;
        PhasePolys pp = phase_polys(traj, t);
        const double chi = chi_weight(cs, pp.st.w0.imag());
        if (chi == 0.0) continue;
        CPoly phi = amp.total_at(t);
        for (size_t s = 0; s < slice; ++s) {
            spatial_point(u, s, x, y);
            d.head(m.nx) = x - pp.st.x0;
            d.tail(m.ny) = y - pp.st.y0;
            double psi = psi_weight(cs, d.head(m.nx), d.tail(m.ny));
            if (psi == 0.0) continue;
            cd om = pp.omega.eval(d);
            if (lam * om.imag() > kSkipExponent) continue;
            cd v = std::exp(I * lam * om) * (chi * psi) * phi.eval(d);
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw Error(ErrorKind::NonFinite, "non-finite field value");
            u.values[it * slice + s] = v;
        }
    }
    return u;
}

FieldGrid apply_via_expansion(const PhaseTrajectory& traj, const AmplitudeSet& amp, const FieldGrid& like,
                              const ExpansionOptions& opt)
{
    const ModelProblem& m = traj.model;
    if (m.diff_op.empty()) throw Error(ErrorKind::MissingDiffOp, "model has no diff_op");
    FieldGrid r = like.zeros_like();
    const double lam = traj.scales.lambda;
    const int nx = m.nx, ny = m.ny, nv = nx + ny;
    const int mo = std::max(1, max_spatial_order(m));
    const auto Tm = MonomialTable::get(nv, mo);
    CutoffScales cs = CutoffScales::make(traj.scales, m, amp.cutoff);
    Eigen::VectorXd sc(nv);
    sc.head(nx).setConstant(cs.sx / cs.p.R_x);
    sc.tail(ny).setConstant(cs.sy / cs.p.R_y);

    struct Term {
        std::vector<int> gamma;
        bool is_t;
        double fact;
        const SymbolFunction* coeff;
        bool spatial;
        CPoly cpoly;
        cd cval;
        int idx;
        cd phase;
    };
    std::vector<Term> terms;
    for (const auto& d : m.diff_op) {
        Term t;
        t.is_t = d.t_order == 1;
        t.gamma.assign(nv, 0);
        double f = 1.0;
        for (int a = 0; a < nx; ++a) t.gamma[a] = d.x_order[a];
        for (int c = 0; c < ny; ++c) t.gamma[nx + c] = d.y_order[c];
        for (int g : t.gamma)
            for (int j = 2; j <= g; ++j) f *= j;
        t.fact = f;
        t.coeff = &d.coeff;
        t.spatial = d.coeff.depends_on(Slot::X) || d.coeff.depends_on(Slot::Y);
        t.idx = Tm->index(t.gamma);
        static const cd pw[4] = {cd(1, 0), cd(0, -1), cd(-1, 0), cd(0, 1)};
        int n = 0;
        for (int gv : t.gamma) n += gv;
        t.phase = pw[n % 4];
        terms.push_back(t);
    }

    const size_t slice = r.stride(0);
    Eigen::VectorXd x(nx), y(ny), d(nv);
    for (int it = 0; it < r.axes[0].n; ++it) {
        const double t = r.axes[0].at(it);
        if (t < traj.t_begin() || t > traj.t_end()) continue;
        PhasePolys pp = phase_polys(traj, t);
        Jet chij = chi_jet(cs, Jet{{pp.st.w0.imag(), pp.dst.w0.imag(), 0.0, 0.0}});
        const double chi = chij.c[0], dchi = chij.c[1];
        if (chi == 0.0 && dchi == 0.0) continue;
        CPoly dphi_t;
        CPoly phi = amp.total_at(t, &dphi_t);
        std::vector<CPoly> dom = derivative_table(pp.omega, *Tm);
        std::vector<CPoly> dph = derivative_table(phi, *Tm);
        Eigen::VectorXd v(nv);
        v.head(nx) = pp.dst.x0;
        v.tail(ny) = pp.dst.y0;
        SymbolPoint sp;
        sp.t = t;
        sp.xi = Eigen::VectorXd::Zero(nx);
        sp.eta = Eigen::VectorXd::Zero(ny);
        sp.x = pp.st.x0;
        sp.y = pp.st.y0;
        for (auto& term : terms) {
            if (term.spatial)
                term.cpoly = coeff_poly(*term.coeff, m, t, pp.st.x0, pp.st.y0, 8);
            else
                term.cval = term.coeff->eval(sp);
        }

        const MonomialTable& TK = *pp.omega.table();
        const MonomialTable& TA = *phi.table();
        const int nT = Tm->size();
        std::vector<double> mvK(TK.size()), mvA(TA.size()), mvC(nT);
        std::vector<cd> g(nT), E(nT), gp(nT), tmp(nT), Phi(nT), q(nT), psi(nT), qp(nT), G(nT);
        for (size_t s = 0; s < slice; ++s) {
            spatial_point(r, s, x, y);
            d.head(nx) = x - pp.st.x0;
            d.tail(ny) = y - pp.st.y0;
            const double q0 = (d.cwiseProduct(sc)).squaredNorm();
            if (q0 >= 4.0) continue;
            monomials(TK, d.data(), mvK.data());
            const cd om = dot(pp.omega, mvK.data());
            if (lam * om.imag() > kSkipExponent) continue;
            monomials(TA, d.data(), mvA.data());

            // local Taylor polynomials in delta of degree mo
            for (int i = 0; i < nT; ++i) {
                const double f = Tm->factorial(i);
                g[i] = i > 0 ? I * lam * dot(dom[i], mvK.data()) / f : cd(0.0);
                Phi[i] = dot(dph[i], mvA.data()) / f;
            }
            std::fill(E.begin(), E.end(), cd(0.0));
            E[0] = 1.0;
            gp = E;
            double fac = 1.0;
            for (int j = 1; j <= mo; ++j) {
                mul(*Tm, gp.data(), g.data(), tmp.data());
                gp.swap(tmp);
                fac *= j;
                for (int i = 0; i < nT; ++i) E[i] += gp[i] / fac;
            }
            const cd phi0 = Phi[0];
            cd phi_t = dot(dphi_t, mvA.data());
            for (int a = 0; a < nv; ++a) phi_t -= v[a] * Phi[1 + a];

            cd Phi0, Phi_t;
            double outer = 1.0;
            if (opt.differentiate_cutoff) {
                // psi(q0 + dq) with dq = sum (sc_v (d_v + delta_v))^2 - q0
                std::fill(q.begin(), q.end(), cd(0.0));
                for (int a = 0; a < nv; ++a) {
                    q[1 + a] = 2.0 * sc[a] * sc[a] * d[a];
                    std::vector<int> e2(nv, 0);
                    e2[a] = 2;
                    int k2 = Tm->index(e2);
                    if (k2 >= 0) q[k2] += sc[a] * sc[a];
                }
                Jet pj = psi_q(Jet::variable(q0));
                std::fill(psi.begin(), psi.end(), cd(0.0));
                psi[0] = pj.c[0];
                std::fill(qp.begin(), qp.end(), cd(0.0));
                qp[0] = 1.0;
                for (int j = 1; j <= mo && j < Jet::N; ++j) {
                    mul(*Tm, qp.data(), q.data(), tmp.data());
                    qp.swap(tmp);
                    for (int i = 0; i < nT; ++i) psi[i] += qp[i] * pj.c[j];
                }
                const double psi0 = pj.c[0];
                cd grad_psi_v = 0.0;
                for (int a = 0; a < nv; ++a) grad_psi_v += v[a] * psi[1 + a];
                Phi_t = dchi * psi0 * phi0 + chi * (psi0 * phi_t - grad_psi_v * phi0);
                mul(*Tm, Phi.data(), psi.data(), tmp.data());
                for (int i = 0; i < nT; ++i) Phi[i] = tmp[i] * chi;
                Phi0 = Phi[0];
            } else {
                outer = chi * psi_q(Jet::constant(q0)).c[0];
                if (outer == 0.0) continue;
                Phi0 = phi0;
                Phi_t = phi_t;
            }
            mul(*Tm, E.data(), Phi.data(), G.data());

            sp.x = x;
            sp.y = y;
            cd acc = 0.0;
            for (const auto& term : terms) {
                cd c;
                if (term.spatial) {
                    mvC.resize(term.cpoly.table()->size());
                    monomials(*term.cpoly.table(), d.data(), mvC.data());
                    c = dot(term.cpoly, mvC.data());
                } else {
                    c = term.cval;
                }
                if (term.is_t) {
                    acc += c * (lam * dot(pp.omega_t, mvK.data()) * Phi0 - I * Phi_t);
                    continue;
                }
                acc += c * term.phase * term.fact * G[term.idx];
            }
            r.values[it * slice + s] = std::exp(I * lam * om) * acc * outer;
        }
    }
    return r;
}

FieldGrid apply_direct(const ModelProblem& model, const FieldGrid& field)
{
    if (model.diff_op.empty()) throw Error(ErrorKind::MissingDiffOp, "model has no diff_op");
    FieldGrid out = field.zeros_like();
    const int nx = field.nx, ny = field.ny;
    const size_t slice = field.stride(0);
    const int nt = field.axes[0].n;
    const double ht = field.axes[0].h;
    Eigen::VectorXd x(nx), y(ny);
    for (const auto& d : model.diff_op) {
        FieldGrid w = field;
        if (d.t_order == 1) {
            FieldGrid dt = field.zeros_like();
            auto U = [&](int i, size_t s) { return field.values[i * slice + s]; };
            for (int i = 0; i < nt; ++i)
                for (size_t s = 0; s < slice; ++s) {
                    cd v;
                    if (i >= 2 && i + 2 < nt)
                        v = (-U(i + 2, s) + 8.0 * U(i + 1, s) - 8.0 * U(i - 1, s) + U(i - 2, s)) / (12.0 * ht);
                    else if (i < 2) {
                        int b = 0;
                        v = i == 0 ? (-25.0 * U(b, s) + 48.0 * U(b + 1, s) - 36.0 * U(b + 2, s) + 16.0 * U(b + 3, s) -
                                      3.0 * U(b + 4, s)) /
                                         (12.0 * ht)
                                   : (-3.0 * U(b, s) - 10.0 * U(b + 1, s) + 18.0 * U(b + 2, s) - 6.0 * U(b + 3, s) +
                                      U(b + 4, s)) /
                                         (12.0 * ht);
                    } else {
                        int e = nt - 1;
                        v = i == e ? (25.0 * U(e, s) - 48.0 * U(e - 1, s) + 36.0 * U(e - 2, s) - 16.0 * U(e - 3, s) +
                                      3.0 * U(e - 4, s)) /
                                         (12.0 * ht)
                                   : (3.0 * U(e, s) + 10.0 * U(e - 1, s) - 18.0 * U(e - 2, s) + 6.0 * U(e - 3, s) -
                                      U(e - 4, s)) /
                                         (12.0 * ht);
                    }
                    dt.values[i * slice + s] = -I * v;
                }
            w = std::move(dt);
        }
        for (int a = 0; a < nx + ny; ++a) {
            int o = a < nx ? d.x_order[a] : d.y_order[a - nx];
            if (!o) continue;
            const int ax = 1 + a;
            fft_axis(w, ax, false);
            const Axis& A = w.axes[ax];
            const size_t st = w.stride(ax);
            for (size_t k = 0; k < w.size(); ++k) {
                int j = static_cast<int>((k / st) % A.n);
                double kk = axis_frequency(A, j);
                if (A.n % 2 == 0 && j == A.n / 2 && o % 2) kk = 0.0;
                w.values[k] *= std::pow(kk, o);
            }
            fft_axis(w, ax, true);
        }
        const bool spatial = d.coeff.depends_on(Slot::X) || d.coeff.depends_on(Slot::Y);
        SymbolPoint sp;
        sp.xi = Eigen::VectorXd::Zero(nx);
        sp.eta = Eigen::VectorXd::Zero(ny);
        sp.x = Eigen::VectorXd::Zero(nx);
        sp.y = Eigen::VectorXd::Zero(ny);
        for (int i = 0; i < nt; ++i) {
            sp.t = field.axes[0].at(i);
            cd c = spatial ? cd(0) : d.coeff.eval(sp);
            for (size_t s = 0; s < slice; ++s) {
                if (spatial) {
                    spatial_point(field, s, x, y);
                    sp.x = x;
                    sp.y = y;
                    c = d.coeff.eval(sp);
                }
                out.values[i * slice + s] += c * w.values[i * slice + s];
            }
        }
    }
    return out;
}

double l2_norm(const FieldGrid& f)
{
    double s = 0.0;
    for (const auto& v : f.values) s += std::norm(v);
    return std::sqrt(s * f.cell_volume());
}

namespace {

// |k|^2 at flat index of a fully transformed field
template <class F>
void for_each_frequency(const FieldGrid& f, F fn)
{
    const int na = static_cast<int>(f.axes.size());
    std::vector<std::vector<double>> kf(na);
    for (int a = 0; a < na; ++a)
        for (int j = 0; j < f.axes[a].n; ++j) kf[a].push_back(axis_frequency(f.axes[a], j));
    std::vector<int> idx(na, 0);
    std::vector<double> k(na);
    for (size_t n = 0; n < f.size(); ++n) {
        for (int a = 0; a < na; ++a) k[a] = kf[a][idx[a]];
        fn(n, k);
        for (int a = na - 1; a >= 0; --a) {
            if (++idx[a] < f.axes[a].n) break;
            idx[a] = 0;
        }
    }
}

} // namespace

double sobolev_norm(const FieldGrid& f, double s)
{
    FieldGrid w = f;
    for (size_t a = 0; a < w.axes.size(); ++a) fft_axis(w, static_cast<int>(a), false);
    double acc = 0.0;
    for_each_frequency(w, [&](size_t n, const std::vector<double>& k) {
        double k2 = 0.0;
        for (double v : k) k2 += v * v;
        acc += std::norm(w.values[n]) * (s == 0.0 ? 1.0 : std::pow(1.0 + k2, s));
    });
    return std::sqrt(acc * f.cell_volume() / static_cast<double>(f.size()));
}

FieldGrid cone_cutoff_apply(const FieldGrid& f, const Eigen::VectorXd& direction, double aperture)
{
    if (!(aperture > 0.0 && aperture < M_PI / 2))
        throw Error(ErrorKind::BadParams, "aperture must lie in (0, pi/2)");
    if (direction.size() != static_cast<Eigen::Index>(f.axes.size()))
        throw Error(ErrorKind::BadParams, "cone direction has the wrong dimension");
    const Eigen::VectorXd dn = direction.normalized();
    FieldGrid w = f;
    for (size_t a = 0; a < w.axes.size(); ++a) fft_axis(w, static_cast<int>(a), false);
    for_each_frequency(w, [&](size_t n, const std::vector<double>& k) {
        double kn = 0.0, kd = 0.0;
        for (size_t a = 0; a < k.size(); ++a) {
            kn += k[a] * k[a];
            kd += k[a] * dn[a];
        }
        if (kn == 0.0) return;
        double th = std::acos(std::clamp(kd / std::sqrt(kn), -1.0, 1.0));
        w.values[n] *= 1.0 - smooth_step(th / aperture);
    });
    for (size_t a = 0; a < w.axes.size(); ++a) fft_axis(w, static_cast<int>(a), true);
    return w;
}

} // namespace pseudomode
