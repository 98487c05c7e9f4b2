#pragma once

// Truncated multivariate polynomials in graded monomial order.
//
// A MultiPoly holds the coefficients of all monomials of total degree <= D in
// n variables. Products drop every monomial above D, which is exactly the
// Taylor-coefficient extraction needed for composed expansions.

#include <Eigen/Dense>

#include <complex>
#include <memory>
#include <vector>

namespace pseudomode {

using cd = std::complex<double>;

class MonomialTable {
public:
    static std::shared_ptr<const MonomialTable> get(int nvars, int degree);

    MonomialTable(int nvars, int degree);

    int nvars() const { return nvars_; }
    int degree() const { return degree_; }
    int size() const { return static_cast<int>(degs_.size()); }

    // Number of monomials of total degree <= d.
    int count_upto(int d) const { return d < 0 ? 0 : offsets_[std::min(d, degree_) + 1]; }

    const int* exponents(int idx) const { return &exps_[static_cast<size_t>(idx) * nvars_]; }
    int exponent(int idx, int v) const { return exps_[static_cast<size_t>(idx) * nvars_ + v]; }
    int degree_of(int idx) const { return degs_[idx]; }

    // -1 when the exponent vector is above the truncation degree.
    int index(const std::vector<int>& e) const;
    int product(int i, int j) const { return prod_[static_cast<size_t>(i) * size() + j]; }
    int raised(int idx, int v) const { return raised_[static_cast<size_t>(idx) * nvars_ + v]; }
    int lowered(int idx, int v) const { return lowered_[static_cast<size_t>(idx) * nvars_ + v]; }

    // alpha! for the monomial.
    double factorial(int idx) const { return fact_[idx]; }

private:
    long long key(const int* e) const;

    int nvars_;
    int degree_;
    std::vector<int> exps_;
    std::vector<int> degs_;
    std::vector<int> offsets_;
    std::vector<int> prod_;
    std::vector<int> raised_;
    std::vector<int> lowered_;
    std::vector<double> fact_;
    std::vector<std::pair<long long, int>> lookup_;
};

template <class S>
class MultiPoly {
public:
    using Coeffs = Eigen::Matrix<S, Eigen::Dynamic, 1>;

    MultiPoly() = default;
    MultiPoly(int nvars, int degree) : MultiPoly(MonomialTable::get(nvars, degree)) {}
    explicit MultiPoly(std::shared_ptr<const MonomialTable> table)
        : table_(std::move(table)), c_(Coeffs::Zero(table_->size())) {}

    static MultiPoly constant(int nvars, int degree, S value)
    {
        MultiPoly p(nvars, degree);
        p.c_[0] = value;
        return p;
    }

    // shift + Delta_v
    static MultiPoly variable(int nvars, int degree, int v, S shift = S(0))
    {
        MultiPoly p(nvars, degree);
        p.c_[0] = shift;
        if (degree >= 1) p.c_[1 + v] = S(1);
        return p;
    }

    const std::shared_ptr<const MonomialTable>& table() const { return table_; }
    int nvars() const { return table_->nvars(); }
    int degree() const { return table_->degree(); }
    int size() const { return table_->size(); }
    bool valid() const { return static_cast<bool>(table_); }

    Coeffs& coeffs() { return c_; }
    const Coeffs& coeffs() const { return c_; }
    S& operator[](int idx) { return c_[idx]; }
    const S& operator[](int idx) const { return c_[idx]; }

    S coeff(const std::vector<int>& e) const
    {
        int idx = table_->index(e);
        return idx < 0 ? S(0) : c_[idx];
    }

    MultiPoly& operator+=(const MultiPoly& o) { c_ += o.c_; return *this; }
    MultiPoly& operator-=(const MultiPoly& o) { c_ -= o.c_; return *this; }
    MultiPoly& operator*=(S s) { c_ *= s; return *this; }
    MultiPoly& add_constant(S s) { c_[0] += s; return *this; }

    friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
    friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a -= b; }
    friend MultiPoly operator*(MultiPoly a, S s) { return a *= s; }
    friend MultiPoly operator*(S s, MultiPoly a) { return a *= s; }
    MultiPoly operator-() const { MultiPoly r(*this); r.c_ = -r.c_; return r; }

    friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b)
    {
        MultiPoly r(a.table_);
        const MonomialTable& T = *a.table_;
        const int n = T.size();
        const int D = T.degree();
        for (int i = 0; i < n; ++i) {
            const S ai = a.c_[i];
            if (ai == S(0)) continue;
            const int m = T.count_upto(D - T.degree_of(i));
            for (int j = 0; j < m; ++j) {
                const S bj = b.c_[j];
                if (bj == S(0)) continue;
                r.c_[T.product(i, j)] += ai * bj;
            }
        }
        return r;
    }

    MultiPoly pow(int e) const
    {
        MultiPoly r = constant(nvars(), degree(), S(1));
        r.table_ = table_;
        MultiPoly b(*this);
        while (e > 0) {
            if (e & 1) r = r * b;
            e >>= 1;
            if (e) b = b * b;
        }
        return r;
    }

    MultiPoly derivative(int v) const
    {
        MultiPoly r(table_);
        const MonomialTable& T = *table_;
        for (int i = 0; i < T.size(); ++i) {
            int j = T.lowered(i, v);
            if (j >= 0) r.c_[j] += c_[i] * S(T.exponent(i, v));
        }
        return r;
    }

    // Keep only the monomials of total degree <= d.
    MultiPoly truncated(int d) const
    {
        MultiPoly r(*this);
        for (int i = table_->count_upto(d); i < size(); ++i) r.c_[i] = S(0);
        return r;
    }

    // Same coefficients re-indexed in a table of another degree (dropping or zero-padding).
    MultiPoly regraded(int degree) const
    {
        MultiPoly r(nvars(), degree);
        int m = std::min(size(), r.size());
        r.c_.head(m) = c_.head(m);
        return r;
    }

    template <class P>
    S eval(const P& point) const
    {
        const MonomialTable& T = *table_;
        const int nv = T.nvars();
        const int D = T.degree();
        std::vector<S> pw(static_cast<size_t>(nv) * (D + 1));
        for (int v = 0; v < nv; ++v) {
            pw[v * (D + 1)] = S(1);
            for (int d = 1; d <= D; ++d) pw[v * (D + 1) + d] = pw[v * (D + 1) + d - 1] * S(point[v]);
        }
        S acc(0);
        for (int i = 0; i < T.size(); ++i) {
            if (c_[i] == S(0)) continue;
            S m = c_[i];
            const int* e = T.exponents(i);
            for (int v = 0; v < nv; ++v)
                if (e[v]) m *= pw[v * (D + 1) + e[v]];
            acc += m;
        }
        return acc;
    }

    double max_abs() const { return c_.size() ? c_.cwiseAbs().maxCoeff() : 0.0; }

private:
    std::shared_ptr<const MonomialTable> table_;
    Coeffs c_;
};

using CPoly = MultiPoly<cd>;

} // namespace pseudomode
