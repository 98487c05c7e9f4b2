#include "pseudomode/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace pseudomode {

const char* to_string(Direction d) { return d == Direction::PlusToMinus ? "plus_to_minus" : "minus_to_plus"; }

namespace {

double im_f(const ModelProblem& m, const LinePoint& at, double t)
{
    return m.f.eval(SymbolPoint(t, at.x, at.xi, at.eta, at.y)).imag();
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double bisect_root(const ModelProblem& m, const LinePoint& at, double a, double b)
{
    double fa = im_f(m, at, a);
    for (int it = 0; it < 80; ++it) {
        double c = 0.5 * (a + b);
        double fc = im_f(m, at, c);
        if (fc == 0.0) return c;
        if ((fc > 0) == (fa > 0)) {
            a = c;
            fa = fc;
        } else {
            b = c;
        }
    }
    return 0.5 * (a + b);
}

// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double den = n * sxx - sx * sx;
    return den == 0.0 ? 0.0 : (n * sxy - sx * sy) / den;
}

} // namespace

SignChangeReport detect_sign_change(const ModelProblem& model, const LinePoint& at, double t_lo, double t_hi,
                                    int n_samples)
{
    if (n_samples < 64) throw Error(ErrorKind::BadParams, "need at least 64 samples");
    if (at.xi.norm() == 0.0) throw Error(ErrorKind::BadParams, "xi must be nonzero");
    std::vector<double> t(n_samples), v(n_samples);
    double vmax = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        t[i] = t_lo + (t_hi - t_lo) * i / (n_samples - 1);
        v[i] = im_f(model, at, t[i]);
        vmax = std::max(vmax, std::abs(v[i]));
    }
    const double tol = 1e-12 * std::max(1.0, vmax);
    auto sgn = [&](int i) { return std::abs(v[i]) <= tol ? 0 : (v[i] > 0 ? 1 : -1); };

    // consecutive nonzero-sign samples (i, j) with only near-zero samples between
    struct Cross { int i, j; };
    std::optional<Cross> first_pm, first_mp;
    int last = -1;
    for (int j = 0; j < n_samples; ++j) {
        int s = sgn(j);
        if (s == 0) continue;
        if (last >= 0 && sgn(last) != s) {
            if (sgn(last) > 0 && !first_pm) first_pm = Cross{last, j};
            if (sgn(last) < 0 && !first_mp) first_mp = Cross{last, j};
        }
        last = j;
    }
    if (!first_pm && !first_mp) throw Error(ErrorKind::NoSignChange, "Im f keeps its sign along the line");

    SignChangeReport r;
    r.found = true;
    Cross c = first_pm ? *first_pm : *first_mp;
    r.direction = first_pm ? Direction::PlusToMinus : Direction::MinusToPlus;
    bool plateau = c.j - c.i > 1;
    if (plateau) {
        r.I_prime = {t[c.i + 1], t[c.j - 1]};
        r.t_cross = 0.5 * (r.I_prime[0] + r.I_prime[1]);
    } else {
        r.t_cross = bisect_root(model, at, t[c.i], t[c.j]);
        r.I_prime = {r.t_cross, r.t_cross};
    }

    // vanishing order: log-log slope over one decade on both sides
    double room = std::min(r.t_cross - t_lo, t_hi - r.t_cross);
    double d0 = std::min(0.1, 0.5 * room);
    std::vector<double> lx, ly;
    bool zero_hit = plateau;
    for (int j = 0; j <= 10 && d0 > 0; ++j) {
        double s = d0 * std::pow(10.0, -j / 10.0);
        double a = std::abs(im_f(model, at, r.t_cross + s)) + std::abs(im_f(model, at, r.t_cross - s));
        if (a <= 0.0) {
            zero_hit = true;
            break;
        }
        lx.push_back(std::log(s));
        ly.push_back(std::log(a));
    }
    r.slope = zero_hit ? std::numeric_limits<double>::infinity() : ls_slope(lx, ly);
    if (r.slope > 12.0) {
        r.order_infinite = true;
        r.order_estimate = -1;
    } else {
        r.order_estimate = std::max(1, static_cast<int>(std::lround(r.slope)));
    }
    return r;
}

double crossing_gap(const ModelProblem& model, const LinePoint& at, double a, double b, int n_t)
{
    double best = std::numeric_limits<double>::infinity();
    double last_pos = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i < n_t; ++i) {
        double t = a + (b - a) * (i + 0.5) / n_t;
        double v = im_f(model, at, t);
        if (v > 0) last_pos = t;
        else if (v < 0 && !std::isnan(last_pos)) best = std::min(best, t - last_pos);
    }
    return best;
}

BicharSearch minimal_bichar_search(const ModelProblem& model, const Eigen::VectorXd& x_center,
                                   const Eigen::VectorXd& xi_center, double half_width, int n_grid, double a,
                                   double b, int n_t)
{
    const int nx = model.nx;
    const int dims = 2 * nx;
    long long total = 1;
    for (int d = 0; d < dims; ++d) total *= n_grid;
    LinePoint at{x_center, xi_center, model.eta0, model.y0};

    BicharSearch best;
    best.L_center = crossing_gap(model, at, a, b, n_t);
    best.L = std::numeric_limits<double>::infinity();
    double best_dist = std::numeric_limits<double>::infinity();
    std::vector<int> idx(dims, 0);
    for (long long q = 0; q < total; ++q) {
        long long r = q;
        for (int d = 0; d < dims; ++d) {
            idx[d] = static_cast<int>(r % n_grid);
            r /= n_grid;
        }
        LinePoint p = at;
        double dist = 0.0;
        for (int d = 0; d < dims; ++d) {
            double off = n_grid == 1 ? 0.0 : -half_width + 2.0 * half_width * idx[d] / (n_grid - 1);
            if (d < nx) p.x[d] = x_center[d] + off;
            else p.xi[d - nx] = xi_center[d - nx] + off;
            dist += off * off;
        }
        if (p.xi.norm() == 0.0) continue;
        double L = crossing_gap(model, p, a, b, n_t);
        if (!std::isfinite(L)) continue;
        double tol = 1e-12 * std::max(1.0, std::abs(L));
        if (L < best.L - tol || (std::abs(L - best.L) <= tol && dist < best_dist)) {
            best.L = L;
            best.x = p.x;
            best.xi = p.xi;
            best_dist = dist;
        }
    }
    // the center competes on equal terms; it wins ties
    if (std::isfinite(best.L_center) && best.L_center <= best.L + 1e-12 * std::max(1.0, best.L)) {
        best.L = best.L_center;
        best.x = x_center;
        best.xi = xi_center;
    }
    if (!std::isfinite(best.L)) throw Error(ErrorKind::NoSignChange, "no grid point admits a + to - crossing");
    best.report = detect_sign_change(model, {best.x, best.xi, model.eta0, model.y0}, a, b, std::max(64, n_t));
    return best;
}

AuditRegion AuditRegion::around(const ModelProblem& m, double half)
{
    AuditRegion r;
    r.t_lo = m.t_lo;
    r.t_hi = m.t_hi;
    r.x_lo = m.x0.array() - half;
    r.x_hi = m.x0.array() + half;
    r.xi_lo = m.xi0.array() - half;
    r.xi_hi = m.xi0.array() + half;
    r.eta_lo = m.eta0.array() - half;
    r.eta_hi = m.eta0.array() + half;
    return r;
}

namespace {

struct AuditSample {
    SymbolPoint p;
    double absp;
    int line = -1; // targeted samples carry their line id
};

// Norms of the (x, xi)-derivatives of d_eta f and of d_eta^2 f, maximized over |a|+|b| <= max_order.
struct DerivNorms {
    double grad = 0.0;
    double hess = 0.0;
    double dy = 0.0;
};

DerivNorms deriv_norms(const ModelProblem& m, const SymbolPoint& p, int max_order, bool need_hess)
{
    const int nx = m.nx, ny = m.ny;
    auto tab = MonomialTable::get(2 * nx, max_order);
    DerivNorms d;
    for (int g = 0; g < tab->size(); ++g) {
        Orders base(nx, ny);
        for (int v = 0; v < 2 * nx; ++v) base.e[v] = tab->exponent(g, v);
        double s = 0.0;
        for (int i = 0; i < ny; ++i) {
            Orders o = base;
            o.e[2 * nx + i] += 1;
            s += std::norm(m.f.partial(o, p));
        }
        d.grad = std::max(d.grad, std::sqrt(s));
        if (need_hess) {
            double h = 0.0;
            for (int i = 0; i < ny; ++i)
                for (int j = 0; j < ny; ++j) {
                    Orders o = base;
                    o.e[2 * nx + i] += 1;
                    o.e[2 * nx + j] += 1;
                    h += std::norm(m.f.partial(o, p));
                }
            d.hess = std::max(d.hess, std::sqrt(h));
        }
    }
    if (m.f.depends_on(Slot::Y)) {
        double s = 0.0;
        for (int i = 0; i < ny; ++i) {
            Orders o(nx, ny);
            o.e[2 * nx + ny + i] = 1;
            s += std::norm(m.f.partial(o, p));
        }
        d.dy = std::sqrt(s);
    }
    return d;
}

} // namespace

ConditionAudit audit_conditions(const ModelProblem& model, const AuditRegion& region, const AuditOptions& opt)
{
    const int nx = model.nx, ny = model.ny;
    std::mt19937_64 rng(opt.seed);
    auto rand_vec = [&](const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
        Eigen::VectorXd v(lo.size());
        for (Eigen::Index i = 0; i < lo.size(); ++i) v[i] = lo[i] + (hi[i] - lo[i]) * uniform01(rng);
        return v;
    };
    auto make = [&](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& xi, const Eigen::VectorXd& eta) {
        AuditSample s{SymbolPoint(t, x, xi, eta, model.y0), 0.0};
        s.absp = std::abs(model.f.eval(s.p).imag());
        return s;
    };

    std::vector<AuditSample> samples;
    for (int i = 0; i < opt.n_samples; ++i) {
        double t = region.t_lo + (region.t_hi - region.t_lo) * uniform01(rng);
        samples.push_back(make(t, rand_vec(region.x_lo, region.x_hi), rand_vec(region.xi_lo, region.xi_hi),
                               rand_vec(region.eta_lo, region.eta_hi)));
    }
    // targeted samples approaching the characteristic set along t-lines
    const int n_scan = 256;
    for (int l = 0; l < opt.n_lines; ++l) {
        LinePoint at{rand_vec(region.x_lo, region.x_hi), rand_vec(region.xi_lo, region.xi_hi),
                     rand_vec(region.eta_lo, region.eta_hi), model.y0};
        double prev = im_f(model, at, region.t_lo), tprev = region.t_lo;
        for (int i = 1; i < n_scan; ++i) {
            double t = region.t_lo + (region.t_hi - region.t_lo) * i / (n_scan - 1);
            double v = im_f(model, at, t);
            if ((prev > 0 && v < 0) || (prev < 0 && v > 0)) {
                double root = bisect_root(model, at, tprev, t);
                for (int e = 1; e <= 8; ++e)
                    for (int sgn : {-1, 1}) {
                        double tt = root + sgn * std::pow(10.0, -e);
                        if (tt < region.t_lo || tt > region.t_hi) continue;
                        auto s = make(tt, at.x, at.xi, at.eta);
                        s.line = l * 1000 + i * 2 + (sgn > 0);
                        samples.push_back(s);
                    }
            }
            prev = v;
            tprev = t;
        }
    }

    ConditionAudit audit;
    audit.region = region;
    audit.samples = static_cast<int>(samples.size());
    audit.hessian_applies = !model.k.infinite && model.k.k == 2;

    std::vector<double> ps;
    for (const auto& s : samples) ps.push_back(s.absp);
    std::vector<double> sorted = ps;
    std::sort(sorted.begin(), sorted.end());
    double q = sorted[std::min(sorted.size() - 1, static_cast<size_t>(opt.quantile * sorted.size()))];

    std::vector<DerivNorms> dn(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) dn[i] = deriv_norms(model, samples[i].p, opt.max_order, audit.hessian_applies);

    const double invk = model.k.inv();
    const double pfloor = 1e-300;
    // quotient family: value(i, eps); verdict from the low-|p| quantile and per-line growth
    auto evaluate = [&](auto quotient, const std::vector<double>& eps_grid) {
        CondResult res;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (double eps : eps_grid) {
            double worst = 0.0;
            for (size_t i = 0; i < samples.size(); ++i)
                if (samples[i].absp <= q) worst = std::max(worst, quotient(i, eps));
            // growth exponent d log Q / d log(1/|p|) along each targeted half-line, last four decades
            std::map<int, std::vector<std::pair<double, double>>> lines;
            for (size_t i = 0; i < samples.size(); ++i)
                if (samples[i].line >= 0 && samples[i].absp > 0)
                    lines[samples[i].line].push_back({samples[i].absp, quotient(i, eps)});
            double growth = -std::numeric_limits<double>::infinity();
            for (auto& [id, pts] : lines) {
                std::sort(pts.begin(), pts.end());
                std::vector<double> lx, ly;
                for (size_t j = 0; j < std::min<size_t>(5, pts.size()); ++j) {
                    if (pts[j].second <= 0) continue;
                    lx.push_back(std::log(1.0 / pts[j].first));
                    ly.push_back(std::log(pts[j].second));
                }
                if (lx.size() >= 3) growth = std::max(growth, ls_slope(lx, ly));
            }
            if (!std::isfinite(growth)) growth = 0.0;
            res.per_epsilon[eps] = {worst, growth};
            bool ok = worst <= opt.bound && growth <= opt.growth_tol;
            if (ok && !res.holds) {
                res.holds = true;
                res.epsilon_used = eps;
                res.worst_ratio = worst;
                res.growth = growth;
            }
            if (!res.holds && worst < best_ratio) {
                best_ratio = worst;
                res.epsilon_used = eps;
                res.worst_ratio = worst;
                res.growth = growth;
            }
        }
        return res;
    };

    audit.kcond = evaluate(
        [&](size_t i, double eps) { return dn[i].grad / std::pow(std::max(samples[i].absp, pfloor), invk + eps); },
        opt.eps_grid);
    if (audit.hessian_applies)
        audit.hessian = evaluate(
            [&](size_t i, double eps) { return dn[i].hess / std::pow(std::max(samples[i].absp, pfloor), eps); },
            opt.eps_grid);
    audit.leaf = evaluate([&](size_t i, double) { return dn[i].dy / std::max(samples[i].absp, pfloor); }, {0.0});

    // lambda^{2/k} |d_eta q_{s,k}| at the sampled points closest to p = 0
    if (!model.k.infinite) {
        std::vector<size_t> near;
        for (size_t i = 0; i < samples.size(); ++i)
            if (samples[i].line >= 0 && samples[i].absp <= 1e-6) near.push_back(i);
        const int k = model.k.k;
        SymbolFunction zero = SymbolFunction::zero(nx, ny);
        for (double lam : {1e2, 1e3, 1e4}) {
            double worst = 0.0;
            for (size_t i : near) {
                const auto& p = samples[i].p;
                double s = 0.0;
                for (int c = 0; c < ny; ++c) {
                    double h = 1e-6;
                    Eigen::VectorXd ep = p.eta, em = p.eta;
                    ep[c] += h;
                    em[c] -= h;
                    cd d = (extended_subprincipal(model.f, zero, model.k, p, ep, lam) -
                            extended_subprincipal(model.f, zero, model.k, p, em, lam)) / (2 * h);
                    s += std::norm(d);
                }
                worst = std::max(worst, std::pow(lam, 2.0 / k) * std::sqrt(s));
            }
            audit.dq.by_lambda.push_back({lam, worst});
        }
        audit.dq.residual = audit.dq.by_lambda.back().second;
        double first = audit.dq.by_lambda.front().second;
        audit.dq.holds = audit.dq.residual <= opt.bound && audit.dq.residual <= 1.5 * first + 1e-9;
    } else {
        audit.dq.holds = true;
    }
    return audit;
}

GateResult lemclaim_gate(const std::vector<GateSample>& samples, size_t anchor, const ModelProblem& model,
                         double lambda, const GateOptions& opt)
{
    if (samples.empty() || anchor >= samples.size()) throw Error(ErrorKind::BadParams, "empty gate input");
    if (std::abs(samples[anchor].im_w0) > 1e-10)
        throw Error(ErrorKind::DegenerateAnchor, "Im w0 does not vanish at the anchor");
    const int nx = model.nx, ny = model.ny;
    const double invk = model.k.inv();
    const bool hess = !model.k.infinite && model.k.k == 2;
    const double bound = opt.C * std::pow(lambda, -opt.delta);
    const double exit_level = opt.exit_level >= 0 ? opt.exit_level : std::pow(lambda, opt.kappa);
    auto tab = MonomialTable::get(2 * nx, opt.max_order);

    auto integrand = [&](const GateSample& s, double& g1, double& g2) {
        SymbolPoint p(s.t, s.x0, s.xi0, model.eta0, model.y0);
        g1 = g2 = 0.0;
        for (int g = 0; g < tab->size(); ++g) {
            Orders base(nx, ny);
            for (int v = 0; v < 2 * nx; ++v) base.e[v] = tab->exponent(g, v);
            double a = 0.0, h = 0.0;
            for (int i = 0; i < ny; ++i) {
                Orders o = base;
                o.e[2 * nx + i] += 1;
                a += std::norm(model.f.partial(o, p));
                if (hess)
                    for (int j = 0; j < ny; ++j) {
                        Orders o2 = o;
                        o2.e[2 * nx + j] += 1;
                        h += std::norm(model.f.partial(o2, p));
                    }
            }
            g1 = std::max(g1, std::pow(lambda, invk) * std::sqrt(a));
            g2 = std::max(g2, std::pow(lambda, 2 * invk - 1) * std::sqrt(h));
        }
    };

    std::vector<double> g1(samples.size()), g2(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) integrand(samples[i], g1[i], g2[i]);

    GateResult res;
    res.bound = bound;
    std::vector<GateRow> rows(samples.size());
    rows[anchor] = {samples[anchor].t, 0.0, 0.0};
    auto walk = [&](int dir, double& t_end, bool& exited) {
        double I1 = 0.0, I2 = 0.0;
        size_t last = anchor;
        exited = false;
        for (long long i = static_cast<long long>(anchor) + dir; i >= 0 && i < static_cast<long long>(samples.size());
             i += dir) {
            size_t j = static_cast<size_t>(i), p = static_cast<size_t>(i - dir);
            double dt = std::abs(samples[j].t - samples[p].t);
            I1 += 0.5 * dt * (g1[j] + g1[p]);
            I2 += 0.5 * dt * (g2[j] + g2[p]);
            rows[j] = {samples[j].t, I1, I2};
            if (I1 >= bound || (hess && I2 >= bound)) break;
            last = j;
            if (lambda * samples[j].im_w0 >= exit_level) exited = true;
        }
        bool reached_end = (dir > 0 && last == samples.size() - 1) || (dir < 0 && last == 0);
        if (reached_end && last != anchor) exited = true;
        t_end = samples[last].t;
    };
    walk(-1, res.t_minus, res.exit_minus);
    walk(+1, res.t_plus, res.exit_plus);
    for (size_t i = 0; i < samples.size(); ++i)
        if (samples[i].t >= res.t_minus && samples[i].t <= res.t_plus) res.integrals.push_back(rows[i]);
    return res;
}

IntlemResult intlem_check(const std::vector<double>& t, const std::vector<double>& F, double t0, double rho,
                          double c, std::optional<double> C)
{
    if (t.size() != F.size() || t.size() < 3) throw Error(ErrorKind::BadParams, "need matching samples");
    const size_t n = t.size();
    std::vector<double> dF(n);
    for (size_t i = 0; i < n; ++i) {
        if (i == 0)
            dF[i] = (-3 * F[0] + 4 * F[1] - F[2]) / (t[2] - t[0]);
        else if (i == n - 1)
            dF[i] = (3 * F[n - 1] - 4 * F[n - 2] + F[n - 3]) / (t[n - 1] - t[n - 3]);
        else
            dF[i] = (F[i + 1] - F[i - 1]) / (t[i + 1] - t[i - 1]);
    }
    auto interp = [&](const std::vector<double>& v, double s) {
        if (s <= t.front()) return v.front();
        if (s >= t.back()) return v.back();
        size_t j = std::upper_bound(t.begin(), t.end(), s) - t.begin();
        double w = (s - t[j - 1]) / (t[j] - t[j - 1]);
        return (1 - w) * v[j - 1] + w * v[j];
    };

    IntlemResult r;
    double lo = std::min(0.0, t0), hi = std::max(0.0, t0);
    r.lhs = 0.0;
    double dmax = 0.0;
    for (size_t i = 0; i < n; ++i)
        if (t[i] >= lo - 1e-15 && t[i] <= hi + 1e-15) {
            r.lhs = std::max(r.lhs, F[i]);
            dmax = std::max(dmax, std::abs(dF[i]));
        }
    r.kappa = std::abs(interp(dF, t0));
    if (r.kappa == 0.0 && dmax == 0.0) {
        r.C = C.value_or(0.0);
        r.rhs = 0.0;
        r.pass = true;
        return r;
    }
    if (dmax > r.kappa * (1 + 1e-3) + 1e-14)
        throw Error(ErrorKind::PreconditionViolated, "|F'| is not maximal at t0");
    if (std::abs(t0) < c * std::pow(r.kappa, rho) * (1 - 1e-9))
        throw Error(ErrorKind::PreconditionViolated, "|t0| < c kappa^rho");

    if (C) {
        r.C = *C;
    } else {
        // walk from t0 toward 0 over c kappa^rho while |F'| >= kappa/2
        const double d = c * std::pow(r.kappa, rho);
        const double dir = t0 > 0 ? -1.0 : 1.0;
        const int m = 2000;
        double delta = 1.0;
        for (int j = 1; j <= m; ++j) {
            double s = static_cast<double>(j) / m;
            if (std::abs(interp(dF, t0 + dir * s * d)) < 0.5 * r.kappa) {
                delta = static_cast<double>(j - 1) / m;
                break;
            }
        }
        r.C = c * delta / 2;
    }
    r.rhs = r.C * std::pow(r.kappa, 1 + rho);
    r.pass = r.lhs >= r.rhs;
    return r;
}

} // namespace pseudomode
