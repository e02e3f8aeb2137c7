#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "trace.hpp"

namespace hymem {

using count_t = std::uint64_t;

/// A sequence key; `first_access` stands for the infinite pair of a page's first reference.
struct RUPair {
    count_t r = 0;
    count_t u = 0;
    bool first_access = false;

    static RUPair infinite() { return {0, 0, true}; }

    friend auto operator<=>(const RUPair&, const RUPair&) = default;
};

struct SequenceProfile {
    std::map<RUPair, count_t> pair_count;
    count_t total_requests = 0;
    count_t write_count = 0;
    count_t distinct_pages = 0;
    std::vector<double> prob_arr;

    count_t first_accesses() const {
        auto it = pair_count.find(RUPair::infinite());
        return it == pair_count.end() ? 0 : it->second;
    }

    double weight(const RUPair& p) const {
        auto it = pair_count.find(p);
        if (it == pair_count.end() || total_requests == 0) return 0.0;
        return static_cast<double>(it->second) / static_cast<double>(total_requests);
    }

    double prob(std::size_t u) const { return u < prob_arr.size() ? prob_arr[u] : 0.0; }

    void rebuild_prob_arr();
};

inline void SequenceProfile::rebuild_prob_arr() {
    count_t umax = 0;
    bool any = false;
    for (const auto& [k, c] : pair_count) {
        if (k.first_access) continue;
        umax = std::max(umax, k.u);
        any = true;
    }
    prob_arr.assign(any ? umax + 1 : 0, 0.0);
    if (total_requests == 0) return;
    std::vector<count_t> per_u(prob_arr.size(), 0);
    for (const auto& [k, c] : pair_count)
        if (!k.first_access) per_u[k.u] += c;
    for (std::size_t i = 0; i < per_u.size(); ++i)
        prob_arr[i] = static_cast<double>(per_u[i]) / static_cast<double>(total_requests);
}

namespace detail {

class Fenwick {
public:
    explicit Fenwick(std::size_t n) : t_(n + 1, 0) {}
    void add(std::size_t i, int v) {
        for (++i; i < t_.size(); i += i & (~i + 1)) t_[i] += v;
    }
    std::int64_t prefix(std::size_t i) const {  // sum over [0, i)
        std::int64_t s = 0;
        for (; i > 0; i -= i & (~i + 1)) s += t_[i];
        return s;
    }

private:
    std::vector<std::int64_t> t_;
};

struct PairHash {
    std::size_t operator()(const std::pair<count_t, count_t>& p) const noexcept {
        return std::hash<count_t>()(p.first * 0x9E3779B97F4A7C15ULL ^ p.second);
    }
};

/// Calls visit(t, r, u) for each repeat access at time t, and visit(t, -1, -1) for first accesses.
template <class Visit>
void walk_sequences(const Trace& trace, Visit&& visit) {
    const std::size_t n = trace.size();
    Fenwick live(n);
    std::unordered_map<page_t, std::size_t> last;
    last.reserve(1024);
    for (std::size_t t = 0; t < n; ++t) {
        page_t pg = trace.accesses[t].page;
        auto [it, fresh] = last.try_emplace(pg, t);
        if (fresh) {
            visit(t, std::int64_t{-1}, std::int64_t{-1});
        } else {
            std::size_t s = it->second;
            std::int64_t u = live.prefix(t) - live.prefix(s + 1);
            visit(t, static_cast<std::int64_t>(t - s - 1), u);
            live.add(s, -1);
            it->second = t;
        }
        live.add(t, 1);
    }
}

}  // namespace detail

/// One pass over the trace; u counts distinct pages strictly between two accesses to the same page.
inline SequenceProfile extract_pairs(const Trace& trace) {
    if (trace.empty()) throw EmptyTraceError();
    std::unordered_map<std::pair<count_t, count_t>, count_t, detail::PairHash> counts;
    count_t first = 0;
    detail::walk_sequences(trace, [&](std::size_t, std::int64_t r, std::int64_t u) {
        if (r < 0) ++first;
        else ++counts[{static_cast<count_t>(r), static_cast<count_t>(u)}];
    });
    SequenceProfile p;
    p.total_requests = trace.size();
    p.distinct_pages = first;
    for (const auto& a : trace.accesses) p.write_count += a.op == Op::Write;
    p.pair_count[RUPair::infinite()] = first;
    for (const auto& [k, c] : counts) p.pair_count[{k.first, k.second, false}] = c;
    p.rebuild_prob_arr();
    return p;
}

inline double consecutive_fraction(const SequenceProfile& p) { return p.weight({0, 0, false}); }

inline double write_ratio(const SequenceProfile& p) {
    if (p.total_requests == 0) return 0.0;
    return static_cast<double>(p.write_count) / static_cast<double>(p.total_requests);
}

/// Number of distinct pair keys, the first-access key included, seen in each prefix of the trace.
inline std::vector<std::pair<double, std::size_t>> pair_growth(const Trace& trace, const std::vector<double>& fractions) {
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        if (!(fractions[i] > 0.0 && fractions[i] <= 1.0)) throw std::invalid_argument("pair_growth: fractions must lie in (0,1]");
        if (i > 0 && fractions[i] < fractions[i - 1]) throw std::invalid_argument("pair_growth: fractions must be ascending");
    }
    std::unordered_map<std::pair<count_t, count_t>, std::size_t, detail::PairHash> first_seen;
    std::vector<std::size_t> births;
    detail::walk_sequences(trace, [&](std::size_t t, std::int64_t r, std::int64_t u) {
        const auto key = r < 0 ? std::pair{~count_t{0}, ~count_t{0}}
                               : std::pair{static_cast<count_t>(r), static_cast<count_t>(u)};
        if (first_seen.try_emplace(key, t).second) births.push_back(t);
    });
    std::vector<std::pair<double, std::size_t>> out;
    for (double f : fractions) {
        auto len = static_cast<std::size_t>(std::ceil(f * static_cast<double>(trace.size())));
        out.emplace_back(f, static_cast<std::size_t>(std::lower_bound(births.begin(), births.end(), len) - births.begin()));
    }
    return out;
}

}  // namespace hymem
