#include "pseudomode/multipoly.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace pseudomode {

namespace {

void enumerate(int nv, int v, int remaining, std::vector<int>& cur, std::vector<int>& out)
{
    if (v == nv - 1) {
        cur[v] = remaining;
        out.insert(out.end(), cur.begin(), cur.end());
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        cur[v] = e;
        enumerate(nv, v + 1, remaining - e, cur, out);
    }
}

} // namespace

std::shared_ptr<const MonomialTable> MonomialTable::get(int nvars, int degree)
{
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const MonomialTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{nvars, degree}];
    if (!slot) slot = std::make_shared<const MonomialTable>(nvars, degree);
    return slot;
}

MonomialTable::MonomialTable(int nvars, int degree) : nvars_(nvars), degree_(degree)
{
    offsets_.push_back(0);
    std::vector<int> cur(std::max(nvars, 1), 0);
    for (int d = 0; d <= degree; ++d) {
        if (nvars == 0) {
            if (d == 0) degs_.push_back(0);
        } else {
            std::vector<int> block;
            enumerate(nvars, 0, d, cur, block);
            exps_.insert(exps_.end(), block.begin(), block.end());
            for (size_t i = 0; i < block.size() / nvars; ++i) degs_.push_back(d);
        }
        offsets_.push_back(static_cast<int>(degs_.size()));
    }
    const int n = size();
    fact_.assign(n, 1.0);
    lookup_.reserve(n);
    for (int i = 0; i < n; ++i) {
        for (int v = 0; v < nvars_; ++v)
            for (int k = 2; k <= exponent(i, v); ++k) fact_[i] *= k;
        lookup_.emplace_back(key(exponents(i)), i);
    }
    std::sort(lookup_.begin(), lookup_.end());

    raised_.assign(static_cast<size_t>(n) * nvars_, -1);
    lowered_.assign(static_cast<size_t>(n) * nvars_, -1);
    std::vector<int> e(nvars_);
    for (int i = 0; i < n; ++i)
        for (int v = 0; v < nvars_; ++v) {
            std::copy(exponents(i), exponents(i) + nvars_, e.begin());
            e[v] += 1;
            raised_[static_cast<size_t>(i) * nvars_ + v] = index(e);
            e[v] -= 2;
            if (e[v] >= 0) lowered_[static_cast<size_t>(i) * nvars_ + v] = index(e);
        }

    prod_.assign(static_cast<size_t>(n) * n, -1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (degs_[i] + degs_[j] > degree_) continue;
            for (int v = 0; v < nvars_; ++v) e[v] = exponent(i, v) + exponent(j, v);
            prod_[static_cast<size_t>(i) * n + j] = index(e);
        }
}

long long MonomialTable::key(const int* e) const
{
    long long k = 0;
    for (int v = 0; v < nvars_; ++v) k = k * (degree_ + 2) + e[v];
    return k;
}

int MonomialTable::index(const std::vector<int>& e) const
{
    int d = 0;
    for (int v = 0; v < nvars_; ++v) {
        if (e[v] < 0) return -1;
        d += e[v];
    }
    if (d > degree_) return -1;
    long long k = key(e.data());
    auto it = std::lower_bound(lookup_.begin(), lookup_.end(), std::make_pair(k, -1));
    return (it != lookup_.end() && it->first == k) ? it->second : -1;
}

} // namespace pseudomode
