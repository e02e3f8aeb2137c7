#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "profiler.hpp"

namespace hymem {

struct MemoryGeometry {
    std::size_t dram_pages = 1;
    std::size_t nvm_pages = 0;

    MemoryGeometry() = default;
    MemoryGeometry(std::size_t d, std::size_t n) : dram_pages(d), nvm_pages(n) {
        if (d == 0) throw std::invalid_argument("geometry: dram_pages must be at least 1");
    }
    std::size_t total_pages() const { return dram_pages + nvm_pages; }

    friend bool operator==(const MemoryGeometry&, const MemoryGeometry&) = default;
};

enum class Memory : std::uint8_t { DRAM, NVM };

struct BasicProbs {
    double p_dbasic = 0.0;
    double p_nbasic = 0.0;
    double p_missbasic = 1.0;
};

struct NomigProbs {
    double p_dnomig = 0.0;
    double p_nnomig = 0.0;
    double p_dram_eviction_source = 1.0;
    double p_nvm_hit_source = 0.0;
    bool degenerate = false;
};

struct DramHitModel {
    double p_dbasic = 0.0, p_nbasic = 0.0, p_missbasic = 1.0;
    double p_dnomig = 0.0, p_nnomig = 0.0;
    double p_dram_eviction_source = 1.0, p_nvm_hit_source = 0.0;
    double p_mig = 0.0;
    double p_d = 0.0;
    double p_hitdram_given_hit = 0.0;
    bool degenerate = false;
    std::vector<double> prob_arr_adj;  // positions 0..total_pages-1
};

namespace detail {
inline std::atomic<std::size_t>& clamp_warnings() {
    static std::atomic<std::size_t> n{0};
    return n;
}
inline double clamp_prob(double v) {
    if (v < -1e-12 || v > 1.0 + 1e-12) ++clamp_warnings();
    return std::clamp(v, 0.0, 1.0);
}
}  // namespace detail

/// Count of probabilities that drifted more than 1e-12 outside [0,1] before clamping.
inline std::size_t consistency_warnings() { return detail::clamp_warnings().load(); }

inline BasicProbs basic_probs(const std::vector<double>& prob_arr, const MemoryGeometry& g) {
    BasicProbs b;
    double d = 0.0, n = 0.0;
    for (std::size_t i = 0; i < prob_arr.size() && i < g.total_pages(); ++i) {
        if (i < g.dram_pages) d += prob_arr[i];
        else n += prob_arr[i];
    }
    b.p_dbasic = d;
    b.p_nbasic = n;
    b.p_missbasic = 1.0 - d - n;
    return b;
}

inline BasicProbs basic_probs(const SequenceProfile& p, const MemoryGeometry& g) { return basic_probs(p.prob_arr, g); }

inline NomigProbs nomig_probs(const BasicProbs& b) {
    NomigProbs r;
    const double pm = b.p_missbasic, pn = b.p_nbasic, pd = b.p_dbasic;
    const double den = pm + pn;
    if (!(den > 0.0)) {
        r.p_dnomig = pd;
        r.degenerate = true;
        return r;
    }
    r.p_dram_eviction_source = pm / den;
    r.p_nvm_hit_source = pn / den;
    r.p_nnomig = r.p_dram_eviction_source * pn + r.p_nvm_hit_source * (pd + pn);
    r.p_dnomig = 1.0 - r.p_nnomig - pm;
    return r;
}

inline double p_dram_mixed(const BasicProbs& b, const NomigProbs& nm, double p_mig) {
    return nm.p_dnomig * (1.0 - p_mig) + b.p_dbasic * p_mig;
}

/// Rescales each region of prob_arr to its migration-adjusted mass, then renormalizes over hit positions.
inline std::vector<double> adjusted_prob_arr(const std::vector<double>& prob_arr, const MemoryGeometry& g,
                                             const BasicProbs& b, double p_d) {
    std::vector<double> adj(g.total_pages(), 0.0);
    const double sd = b.p_dbasic > 0.0 ? p_d / b.p_dbasic : 0.0;
    const double nvm_mass = 1.0 - p_d - b.p_missbasic;
    const double sn = b.p_nbasic > 0.0 ? nvm_mass / b.p_nbasic : 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < adj.size() && i < prob_arr.size(); ++i) {
        adj[i] = prob_arr[i] * (i < g.dram_pages ? sd : sn);
        if (adj[i] < 0.0) adj[i] = 0.0;
        total += adj[i];
    }
    if (total > 0.0)
        for (double& v : adj) v /= total;
    return adj;
}

inline DramHitModel build_hit_model(const std::vector<double>& prob_arr, const MemoryGeometry& g, double p_mig) {
    if (!(p_mig >= 0.0 && p_mig <= 1.0)) throw std::invalid_argument("p_mig must lie in [0,1]");
    DramHitModel m;
    BasicProbs b = basic_probs(prob_arr, g);
    NomigProbs nm = nomig_probs(b);
    m.p_dbasic = b.p_dbasic;
    m.p_nbasic = b.p_nbasic;
    m.p_missbasic = b.p_missbasic;
    m.p_dnomig = nm.p_dnomig;
    m.p_nnomig = nm.p_nnomig;
    m.p_dram_eviction_source = nm.p_dram_eviction_source;
    m.p_nvm_hit_source = nm.p_nvm_hit_source;
    m.degenerate = nm.degenerate;
    m.p_mig = p_mig;
    m.p_d = p_dram_mixed(b, nm, p_mig);
    const double hit = 1.0 - b.p_missbasic;
    m.p_hitdram_given_hit = hit > 0.0 ? detail::clamp_prob(m.p_d / hit) : 0.0;
    m.prob_arr_adj = adjusted_prob_arr(prob_arr, g, b, m.p_d);
    return m;
}

inline DramHitModel build_hit_model(const SequenceProfile& p, const MemoryGeometry& g, double p_mig) {
    return build_hit_model(p.prob_arr, g, p_mig);
}

/// Probability that a hit lands at or before position M of the given memory.
inline double p_before_given_hit(const DramHitModel& m, const MemoryGeometry& g, std::size_t M, Memory mem) {
    const std::size_t size = mem == Memory::DRAM ? g.dram_pages : g.nvm_pages;
    if (M >= size) throw std::out_of_range("p_before_given_hit: position outside memory");
    const std::size_t base = mem == Memory::DRAM ? 0 : g.dram_pages;
    double s = mem == Memory::DRAM ? 0.0 : m.p_hitdram_given_hit;
    for (std::size_t i = base; i <= base + M && i < m.prob_arr_adj.size(); ++i) s += m.prob_arr_adj[i];
    if (mem == Memory::NVM && M + 1 == size && m.p_missbasic < 1.0) return 1.0;
    return detail::clamp_prob(s);
}

/// Eq-9 values for every position of both memories, computed with running sums.
struct BeforeTable {
    std::vector<double> dram;
    std::vector<double> nvm;
    double dram_mass = 0.0;  // hit mass located in DRAM
};

inline BeforeTable before_table(const DramHitModel& m, const MemoryGeometry& g) {
    BeforeTable t;
    t.dram.resize(g.dram_pages);
    t.nvm.resize(g.nvm_pages);
    double s = 0.0;
    for (std::size_t i = 0; i < g.dram_pages; ++i) {
        s += i < m.prob_arr_adj.size() ? m.prob_arr_adj[i] : 0.0;
        t.dram[i] = detail::clamp_prob(s);
    }
    t.dram_mass = detail::clamp_prob(s);
    s = m.p_hitdram_given_hit;
    for (std::size_t i = 0; i < g.nvm_pages; ++i) {
        std::size_t k = g.dram_pages + i;
        s += k < m.prob_arr_adj.size() ? m.prob_arr_adj[k] : 0.0;
        t.nvm[i] = detail::clamp_prob(s);
    }
    if (g.nvm_pages > 0 && m.p_missbasic < 1.0) t.nvm.back() = 1.0;
    return t;
}

}  // namespace hymem
