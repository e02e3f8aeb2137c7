#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "hitmodel.hpp"
#include "policies.hpp"
#include "profiler.hpp"

namespace hymem {

// ---------------------------------------------------------------------------
// Polynomials in the unknown hit ratio h (power basis)

using Coeffs = std::vector<double>;

inline double poly_eval(const Coeffs& c, double h) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * h + c[i];
    return v;
}

/// dst += (c0 + c1*h) * src
inline void poly_add_lin(Coeffs& dst, double c0, double c1, const Coeffs& src) {
    if (src.empty()) return;
    if (dst.size() < src.size() + (c1 != 0.0 ? 1 : 0)) dst.resize(src.size() + (c1 != 0.0 ? 1 : 0), 0.0);
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] += c0 * src[i];
        if (c1 != 0.0) dst[i + 1] += c1 * src[i];
    }
}

inline void poly_add(Coeffs& dst, double scale, const Coeffs& src) { poly_add_lin(dst, scale, 0.0, src); }

inline void poly_trim(Coeffs& c) {
    while (!c.empty() && c.back() == 0.0) c.pop_back();
}

struct MissPoly {
    Coeffs miss_coeffs;
    Coeffs demote_coeffs;

    double miss(double h) const { return poly_eval(miss_coeffs, h); }
    double demote(double h) const { return poly_eval(demote_coeffs, h); }

    static MissPoly constant(double miss) { return {{miss}, {}}; }
};

// ---------------------------------------------------------------------------
// States and transitions

struct MarkovState {
    count_t r = 0;
    count_t u = 0;
    Memory m = Memory::DRAM;
    std::size_t p = 0;

    bool terminal() const { return r == 0 || u == 0; }
    friend bool operator==(const MarkovState&, const MarkovState&) = default;
};

struct MarkovStateHash {
    std::size_t operator()(const MarkovState& s) const noexcept {
        std::uint64_t h = s.r * 0x9E3779B97F4A7C15ULL;
        h ^= s.u + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
        h ^= (static_cast<std::uint64_t>(s.p) << 1 | static_cast<std::uint64_t>(s.m)) + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

/// Weight c0 + c1*h of one transition.
struct Lin {
    double c0 = 0.0;
    double c1 = 0.0;
    double at(double h) const { return c0 + c1 * h; }
};

struct Transition {
    enum class Kind : std::uint8_t { State, TerminalMiss, TerminalHit };

    int id = 0;  // row of the transition table
    Lin weight;
    Kind kind = Kind::State;
    MarkovState next;
    bool demotes = false;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

struct SolveStats {
    std::atomic<std::size_t> states_computed{0};
    std::atomic<std::size_t> memo_hits{0};
    std::atomic<std::size_t> preloaded{0};
    std::atomic<std::size_t> evaluations{0};
};

namespace detail {
inline void fnv(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 0x100000001b3ULL;
    }
}
template <class T>
void fnv_val(std::uint64_t& h, const T& v) {
    fnv(h, &v, sizeof v);
}
}  // namespace detail

/// Everything a state's transition distribution depends on, plus the shared memo.
class SolveContext {
public:
    SolveContext(MemoryGeometry g, DramHitModel model, HmaPolicy policy, double write_ratio)
        : geometry_(g), model_(std::move(model)), policy_(std::move(policy)) {
        before_ = before_table(model_, geometry_);
        fault_dram_ = geometry_.nvm_pages == 0 ? 1.0 : policy_.dram_fault_fraction(write_ratio);
        const bool has_hits = model_.p_missbasic < 1.0;
        dram_mass_ = has_hits ? before_.dram_mass : 0.0;
        nvm_mass_ = has_hits && geometry_.nvm_pages > 0 ? std::max(0.0, 1.0 - before_.dram_mass) : 0.0;
        ev_dram_.resize(g.dram_pages);
        for (std::size_t p = 0; p < g.dram_pages; ++p) ev_dram_[p] = policy_.eviction_dram.prob(p, g.dram_pages);
        ev_nvm_.resize(g.nvm_pages);
        for (std::size_t p = 0; p < g.nvm_pages; ++p) ev_nvm_[p] = policy_.eviction_nvm.prob(p, g.nvm_pages);
        fingerprint_ = compute_fingerprint();
    }

    SolveContext(const SolveContext&) = delete;
    SolveContext& operator=(const SolveContext&) = delete;

    const MemoryGeometry& geometry() const { return geometry_; }
    const DramHitModel& hit_model() const { return model_; }
    const HmaPolicy& policy() const { return policy_; }
    const std::string& fingerprint() const { return fingerprint_; }
    double p_mig() const { return policy_.p_mig; }
    double fault_dram_fraction() const { return fault_dram_; }

    /// Eq-9 before probability at a position.
    double before(Memory m, std::size_t p) const { return m == Memory::DRAM ? before_.dram[p] : before_.nvm[p]; }
    /// Hit mass located after position p in DRAM.
    double after_dram(std::size_t p) const { return std::max(0.0, dram_mass_ - before_.dram[p]); }
    /// Hit mass located in NVM.
    double nvm_mass() const { return nvm_mass_; }
    double before_dram_for_split(std::size_t p) const { return model_.p_missbasic < 1.0 ? before_.dram[p] : 0.0; }

    /// Where a unique hit lands relative to the target. A unique page cannot sit above the target in recency
    /// order, so the hit mass there is treated as a page arriving from outside.
    struct UniqueHitSplit {
        double stay = 0.0, advance = 0.0, outside = 1.0;
    };
    UniqueHitSplit unique_hit_split(Memory m, std::size_t p) const {
        UniqueHitSplit out;
        if (!(model_.p_missbasic < 1.0)) return out;
        if (m == Memory::DRAM) {
            out.advance = after_dram(p);
            out.stay = nvm_mass_;
            out.outside = before_.dram[p];
        } else {
            const double in_dram = std::min(model_.p_hitdram_given_hit, before_.nvm[p]);
            out.stay = in_dram;
            out.outside = before_.nvm[p] - in_dram;
            out.advance = 1.0 - before_.nvm[p];
        }
        const double tot = out.stay + out.advance + out.outside;
        if (!(tot > 0.0)) return UniqueHitSplit{};
        out.stay /= tot;
        out.advance /= tot;
        out.outside /= tot;
        return out;
    }
    double ev_dram(std::size_t p) const { return ev_dram_[p]; }
    double ev_nvm(std::size_t p) const { return ev_nvm_[p]; }

    /// Weight of the DRAM origin for a new sequence.
    double origin_dram_weight() const { return geometry_.nvm_pages == 0 ? 1.0 : model_.p_hitdram_given_hit; }

    SolveStats& stats() const { return stats_; }

    bool memo_find(const MarkovState& s, MissPoly& out) const {
        std::shared_lock lock(mu_);
        auto it = memo_.find(s);
        if (it == memo_.end()) return false;
        out = it->second;
        return true;
    }
    void memo_insert(const MarkovState& s, const MissPoly& v) const {
        std::unique_lock lock(mu_);
        memo_.try_emplace(s, v);
    }
    std::vector<std::pair<MarkovState, MissPoly>> memo_snapshot() const {
        std::shared_lock lock(mu_);
        return {memo_.begin(), memo_.end()};
    }
    std::size_t memo_size() const {
        std::shared_lock lock(mu_);
        return memo_.size();
    }
    void preload(const std::vector<std::pair<MarkovState, MissPoly>>& entries) const {
        std::unique_lock lock(mu_);
        for (const auto& [k, v] : entries)
            if (memo_.try_emplace(k, v).second) ++stats_.preloaded;
    }

private:
    std::string compute_fingerprint() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        detail::fnv_val(h, geometry_.dram_pages);
        detail::fnv_val(h, geometry_.nvm_pages);
        detail::fnv_val(h, policy_.p_mig);
        detail::fnv_val(h, fault_dram_);
        detail::fnv_val(h, model_.p_hitdram_given_hit);
        detail::fnv_val(h, model_.p_missbasic);
        for (double v : ev_dram_) detail::fnv_val(h, v);
        for (double v : ev_nvm_) detail::fnv_val(h, v);
        for (double v : model_.prob_arr_adj) detail::fnv_val(h, v);
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    MemoryGeometry geometry_;
    DramHitModel model_;
    HmaPolicy policy_;
    BeforeTable before_;
    double fault_dram_ = 1.0;
    double dram_mass_ = 0.0, nvm_mass_ = 0.0;
    std::vector<double> ev_dram_, ev_nvm_;
    std::string fingerprint_;
    mutable std::shared_mutex mu_;
    mutable std::unordered_map<MarkovState, MissPoly, MarkovStateHash> memo_;
    mutable SolveStats stats_;
};

/// The single-memory example process: each unique access evicts the target with probability `eviction`.
inline double simple_markov(count_t r, count_t u, double eviction) {
    if (u > r) throw std::invalid_argument("simple_markov: u must not exceed r");
    std::vector<std::vector<double>> m(r + 1, std::vector<double>(u + 1, 0.0));
    for (count_t i = 1; i <= r; ++i) {
        for (count_t j = 1; j <= std::min(i, u); ++j) {
            const double a = static_cast<double>(j) / static_cast<double>(i);
            const double rest = j <= i - 1 ? m[i - 1][j] : 0.0;
            m[i][j] = a * eviction + (1.0 - eviction) * a * m[i - 1][j - 1] + (1.0 - a) * rest;
        }
    }
    return m[r][u];
}

/// Full outgoing distribution of a non-terminal state.
inline std::vector<Transition> step_transitions(const MarkovState& s, const SolveContext& ctx) {
    const auto& g = ctx.geometry();
    if (s.terminal()) throw std::invalid_argument("step_transitions: terminal state");
    if (s.u > s.r) throw std::invalid_argument("step_transitions: u exceeds r");
    if (s.m == Memory::DRAM && s.p >= g.dram_pages) throw std::invalid_argument("step_transitions: DRAM position out of range");
    if (s.m == Memory::NVM && s.p >= g.nvm_pages) throw std::invalid_argument("step_transitions: NVM position out of range");

    std::vector<Transition> out;
    const double a = static_cast<double>(s.u) / static_cast<double>(s.r);
    const double pm = ctx.p_mig();

    auto emit = [&](int id, Lin w, Transition::Kind kind, MarkovState nx, bool demotes = false) {
        if (w.c0 == 0.0 && w.c1 == 0.0) return;
        if (kind == Transition::Kind::State && nx.terminal()) kind = Transition::Kind::TerminalHit;
        out.push_back({id, w, kind, nx, demotes});
    };
    auto scale = [](Lin w, double k) { return Lin{w.c0 * k, w.c1 * k}; };

    if (s.m == Memory::DRAM) {
        const std::size_t last = g.dram_pages - 1;
        const std::size_t pn = std::min(s.p + 1, last);
        const double ev = ctx.ev_dram(s.p);
        // a page enters DRAM: the target is either the victim or moves one position down
        auto insertion = [&](int id, Lin w, count_t u2) {
            MarkovState stay{s.r - 1, u2, Memory::DRAM, pn};
            if (g.nvm_pages > 0) emit(9, scale(w, ev), Transition::Kind::State, {s.r - 1, u2, Memory::NVM, 0}, true);
            else emit(9, scale(w, ev), Transition::Kind::TerminalMiss, {});
            emit(id, scale(w, 1.0 - ev), Transition::Kind::State, stay);
        };

        // not unique: the accessed page is more recent than the target, so it hits before it or in NVM
        {
            const Lin w{1.0 - a, 0.0};
            const double before = ctx.before_dram_for_split(s.p);
            const double nvm = ctx.nvm_mass();
            const double den = before + nvm;
            MarkovState same{s.r - 1, s.u, Memory::DRAM, s.p};
            if (den > 0.0) {
                emit(2, scale(w, before / den), Transition::Kind::State, same);
                emit(3, scale(w, nvm / den * (1.0 - pm)), Transition::Kind::State, same);
                insertion(4, scale(w, nvm / den * pm), s.u);
            } else {
                emit(2, w, Transition::Kind::State, same);
            }
        }
        // unique
        {
            const count_t u2 = s.u - 1;
            MarkovState same{s.r - 1, u2, Memory::DRAM, s.p};
            const Lin miss{a, -a};
            insertion(5, scale(miss, ctx.fault_dram_fraction()), u2);
            emit(5, scale(miss, 1.0 - ctx.fault_dram_fraction()), Transition::Kind::State, same);

            const Lin hit{0.0, a};
            const auto sp = ctx.unique_hit_split(Memory::DRAM, s.p);
            emit(7, scale(hit, sp.advance), Transition::Kind::State, {s.r - 1, u2, Memory::DRAM, pn});
            emit(7, scale(hit, sp.stay * (1.0 - pm)), Transition::Kind::State, same);
            insertion(8, scale(hit, sp.stay * pm), u2);
            insertion(7, scale(hit, sp.outside), u2);
        }
        return out;
    }

    const std::size_t last = g.nvm_pages - 1;
    const std::size_t pn = std::min(s.p + 1, last);
    emit(12, Lin{1.0 - a, 0.0}, Transition::Kind::State, {s.r - 1, s.u, Memory::NVM, s.p});
    const count_t u2 = s.u - 1;
    const Lin miss{a, -a};
    const double ev = ctx.ev_nvm(s.p);
    emit(17, scale(miss, ev), Transition::Kind::TerminalMiss, {});
    emit(14, scale(miss, 1.0 - ev), Transition::Kind::State, {s.r - 1, u2, Memory::NVM, pn});
    const Lin hit{0.0, a};
    const auto sp = ctx.unique_hit_split(Memory::NVM, s.p);
    emit(15, scale(hit, sp.stay), Transition::Kind::State, {s.r - 1, u2, Memory::NVM, s.p});
    emit(16, scale(hit, sp.advance + sp.outside * (1.0 - ev)), Transition::Kind::State, {s.r - 1, u2, Memory::NVM, pn});
    emit(17, scale(hit, sp.outside * ev), Transition::Kind::TerminalMiss, {});
    return out;
}

/// Miss and demotion polynomials of a state, memoized in the context.
inline MissPoly solve_state(const MarkovState& s, const SolveContext& ctx) {
    if (s.terminal()) return {};
    MissPoly res;
    if (ctx.memo_find(s, res)) {
        ++ctx.stats().memo_hits;
        return res;
    }
    for (const auto& t : step_transitions(s, ctx)) {
        switch (t.kind) {
            case Transition::Kind::TerminalMiss: poly_add_lin(res.miss_coeffs, t.weight.c0, t.weight.c1, {1.0}); break;
            case Transition::Kind::TerminalHit: break;
            case Transition::Kind::State: {
                MissPoly child = solve_state(t.next, ctx);
                poly_add_lin(res.miss_coeffs, t.weight.c0, t.weight.c1, child.miss_coeffs);
                poly_add_lin(res.demote_coeffs, t.weight.c0, t.weight.c1, child.demote_coeffs);
                break;
            }
        }
        if (t.demotes) poly_add_lin(res.demote_coeffs, t.weight.c0, t.weight.c1, {1.0});
    }
    poly_trim(res.miss_coeffs);
    poly_trim(res.demote_coeffs);
    ++ctx.stats().states_computed;
    ctx.memo_insert(s, res);
    return res;
}

/// Weighted average of the DRAM-origin and NVM-origin processes of one sequence.
inline MissPoly pair_miss(count_t r, count_t u, const SolveContext& ctx) {
    if (u > r) throw std::invalid_argument("pair_miss: u must not exceed r");
    MissPoly out;
    const double wd = ctx.origin_dram_weight();
    if (wd > 0.0) {
        auto d = solve_state({r, u, Memory::DRAM, 0}, ctx);
        poly_add(out.miss_coeffs, wd, d.miss_coeffs);
        poly_add(out.demote_coeffs, wd, d.demote_coeffs);
    }
    if (wd < 1.0 && ctx.geometry().nvm_pages > 0) {
        auto n = solve_state({r, u, Memory::NVM, 0}, ctx);
        poly_add(out.miss_coeffs, 1.0 - wd, n.miss_coeffs);
        poly_add(out.demote_coeffs, 1.0 - wd, n.demote_coeffs);
    }
    poly_trim(out.miss_coeffs);
    poly_trim(out.demote_coeffs);
    return out;
}

/// Whole-profile miss polynomial by exact recursion over every sequence.
inline MissPoly total_miss(const SequenceProfile& profile, const SolveContext& ctx) {
    MissPoly out;
    const double n = static_cast<double>(profile.total_requests);
    for (const auto& [k, c] : profile.pair_count) {
        const double alpha = static_cast<double>(c) / n;
        if (k.first_access) {
            poly_add(out.miss_coeffs, alpha, {1.0});
            continue;
        }
        auto pm = pair_miss(k.r, k.u, ctx);
        poly_add(out.miss_coeffs, alpha, pm.miss_coeffs);
        poly_add(out.demote_coeffs, alpha, pm.demote_coeffs);
    }
    poly_trim(out.miss_coeffs);
    poly_trim(out.demote_coeffs);
    return out;
}

// ---------------------------------------------------------------------------
// Long sequences

/**
 * Evaluates the same transition system for long sequences at a numeric h.
 *
 * In NVM a non-unique access never moves the target, so the NVM phase depends only on the
 * unique accesses left. In DRAM the non-unique accesses between two unique ones are treated
 * as geometric runs with unique probability theta = (u+1)/(r+1); sequences are grouped on a
 * log-spaced theta grid and interpolated, which lets all sequences share one table per grid point.
 */
class LongSequenceEvaluator {
public:
    struct Item {
        count_t r, u;
        double weight;
    };

    LongSequenceEvaluator(const SolveContext& ctx, const std::vector<Item>& items, std::size_t buckets)
        : ctx_(ctx) {
        if (items.empty()) return;
        const double wd = ctx.origin_dram_weight();
        double tmin = 1.0;
        for (const auto& it : items) {
            umax_ = std::max(umax_, it.u);
            tmin = std::min(tmin, theta(it));
        }
        const std::size_t nb = tmin < 1.0 ? std::max<std::size_t>(buckets, 2) : 1;
        log_tmin_ = std::log(tmin);
        thetas_.resize(nb);
        for (std::size_t b = 0; b < nb; ++b)
            thetas_[b] = nb == 1 ? 1.0 : std::exp(log_tmin_ * (1.0 - static_cast<double>(b) / static_cast<double>(nb - 1)));
        thetas_.back() = 1.0;
        dram_w_.assign(nb, {});
        nvm_w_.assign(umax_ + 1, 0.0);
        for (const auto& it : items) {
            if (wd < 1.0) nvm_w_[it.u] += it.weight * (1.0 - wd);
            if (wd <= 0.0) continue;
            double x = nb == 1 ? 0.0 : (std::log(theta(it)) - log_tmin_) / (-log_tmin_) * static_cast<double>(nb - 1);
            x = std::clamp(x, 0.0, static_cast<double>(nb - 1));
            auto lo = static_cast<std::size_t>(std::floor(x));
            if (lo >= nb - 1) lo = nb - 1;
            const double frac = x - static_cast<double>(lo);
            add_dram(lo, it.u, it.weight * wd * (1.0 - frac));
            if (frac > 0.0 && lo + 1 < nb) add_dram(lo + 1, it.u, it.weight * wd * frac);
        }
    }

    bool empty() const { return thetas_.empty(); }

    /// Weighted miss mass of all items at h, plus demotion mass when requested.
    std::pair<double, double> eval(double h, bool with_demotions = true) const {
        if (empty()) return {0.0, 0.0};
        const auto& g = ctx_.geometry();
        const std::size_t D = g.dram_pages, N = g.nvm_pages;
        const double pm = ctx_.p_mig(), f = ctx_.fault_dram_fraction();

        // NVM phase: fn[u] = miss probability from NVM position 0 with u unique accesses left
        std::vector<double> fn(umax_ + 1, 0.0);
        if (N > 0) {
            std::vector<double> prev(N, 0.0), cur(N, 0.0);
            std::vector<double> stay(N), push(N), evict(N);
            for (std::size_t p = 0; p < N; ++p) {
                const auto sp = ctx_.unique_hit_split(Memory::NVM, p);
                const double out = (1.0 - h) + h * sp.outside;
                evict[p] = out * ctx_.ev_nvm(p);
                push[p] = out * (1.0 - ctx_.ev_nvm(p)) + h * sp.advance;
                stay[p] = h * sp.stay;
            }
            for (count_t u = 1; u <= umax_; ++u) {
                for (std::size_t p = 0; p + 1 < N; ++p) cur[p] = stay[p] * prev[p] + push[p] * prev[p + 1] + evict[p];
                cur[N - 1] = (stay[N - 1] + push[N - 1]) * prev[N - 1] + evict[N - 1];
                fn[u] = cur[0];
                std::swap(prev, cur);
            }
        }

        double miss = 0.0, dem = 0.0;
        for (std::size_t u = 1; u <= umax_; ++u) miss += nvm_w_[u] * fn[u];

        // DRAM phase kernels; a_* act on V[u-1][p], b_* on V[u-1][p+1]
        std::vector<double> a_stay(D), a_next(D), a_out(D), q(D), ev(D);
        const double nvm = ctx_.nvm_mass();
        for (std::size_t p = 0; p < D; ++p) {
            const auto sp = ctx_.unique_hit_split(Memory::DRAM, p);
            const double hr = h * sp.advance;
            const double hs = h * sp.stay * (1.0 - pm);
            const double hi = h * (sp.stay * pm + sp.outside);
            const double ins = (1.0 - h) * f + hi;
            ev[p] = ctx_.ev_dram(p);
            a_stay[p] = (1.0 - h) * (1.0 - f) + hs;
            a_next[p] = hr + ins * (1.0 - ev[p]);
            a_out[p] = ins * ev[p];
            const double before = ctx_.before_dram_for_split(p);
            const double den = before + nvm;
            q[p] = den > 0.0 ? nvm / den * pm : 0.0;
        }
        const double lost_miss = N > 0 ? 0.0 : 1.0;
        const double lost_dem = N > 0 ? 1.0 : 0.0;

        std::vector<double> vp(D), vc(D), dp(D), dc(D);
        std::vector<double> c_w(D), c_next(D), c_out(D);
        for (std::size_t b = 0; b < thetas_.size(); ++b) {
            const auto& w = dram_w_[b];
            if (w.empty()) continue;
            const double th = thetas_[b];
            // V[u][p] = c_w*W + c_next*V[u][p+1] + c_out*X
            for (std::size_t p = 0; p < D; ++p) {
                const double nq = (1.0 - th) * q[p];
                if (p + 1 < D) {
                    const double inv = 1.0 / (th + nq);
                    c_w[p] = th * inv;
                    c_next[p] = nq * (1.0 - ev[p]) * inv;
                    c_out[p] = nq * ev[p] * inv;
                } else {
                    const double inv = 1.0 / (th + nq * ev[p]);
                    c_w[p] = th * inv;
                    c_next[p] = 0.0;
                    c_out[p] = nq * ev[p] * inv;
                }
            }
            std::fill(vp.begin(), vp.end(), 0.0);
            std::fill(dp.begin(), dp.end(), 0.0);
            for (std::size_t u = 1; u < w.size(); ++u) {
                const double x_prev = N > 0 ? fn[u - 1] : lost_miss;
                const double x_now = N > 0 ? fn[u] : lost_miss;
                {
                    const std::size_t p = D - 1;
                    const double wv = (a_stay[p] + a_next[p]) * vp[p] + a_out[p] * x_prev;
                    vc[p] = c_w[p] * wv + c_out[p] * x_now;
                }
                for (std::size_t p = D - 1; p-- > 0;) {
                    const double wv = a_stay[p] * vp[p] + a_next[p] * vp[p + 1] + a_out[p] * x_prev;
                    vc[p] = c_w[p] * wv + c_next[p] * vc[p + 1] + c_out[p] * x_now;
                }
                miss += w[u] * vc[0];
                if (with_demotions) {
                    {
                        const std::size_t p = D - 1;
                        const double wd = (a_stay[p] + a_next[p]) * dp[p] + a_out[p] * lost_dem;
                        dc[p] = c_w[p] * wd + c_out[p] * lost_dem;
                    }
                    for (std::size_t p = D - 1; p-- > 0;) {
                        const double wd = a_stay[p] * dp[p] + a_next[p] * dp[p + 1] + a_out[p] * lost_dem;
                        dc[p] = c_w[p] * wd + c_next[p] * dc[p + 1] + c_out[p] * lost_dem;
                    }
                    dem += w[u] * dc[0];
                    std::swap(dp, dc);
                }
                std::swap(vp, vc);
            }
        }
        return {miss, dem};
    }

private:
    static double theta(const Item& it) { return (static_cast<double>(it.u) + 1.0) / (static_cast<double>(it.r) + 1.0); }

    void add_dram(std::size_t b, count_t u, double w) {
        auto& v = dram_w_[b];
        if (v.size() <= u) v.resize(u + 1, 0.0);
        v[u] += w;
    }

    const SolveContext& ctx_;
    count_t umax_ = 0;
    double log_tmin_ = 0.0;
    std::vector<double> thetas_;
    std::vector<std::vector<double>> dram_w_;  // per grid point, weight by u
    std::vector<double> nvm_w_;
};

struct MissModelOptions {
    count_t exact_r_limit = 16;  // sequences with r above this use LongSequenceEvaluator
    std::size_t theta_buckets = 24;
};

/// miss(h) of a whole profile: exact polynomials for short sequences plus the long-sequence evaluator.
class MissModel {
public:
    MissModel(const SequenceProfile& profile, const SolveContext& ctx, MissModelOptions opt = {})
        : ctx_(ctx), tail_(ctx, collect(profile, ctx, opt), opt.theta_buckets) {}

    double miss(double h) const {
        ++ctx_.stats().evaluations;
        return exact_.miss(h) + tail_.eval(h, false).first;
    }
    /// Expected demotions per request.
    double demotions(double h) const { return exact_.demote(h) + tail_.eval(h, true).second; }

    bool is_exact() const { return tail_.empty(); }
    const MissPoly& exact_part() const { return exact_; }

private:
    std::vector<LongSequenceEvaluator::Item> collect(const SequenceProfile& profile, const SolveContext& ctx,
                                                     const MissModelOptions& opt) {
        std::vector<LongSequenceEvaluator::Item> tail;
        const double n = static_cast<double>(profile.total_requests);
        for (const auto& [k, c] : profile.pair_count) {
            const double alpha = static_cast<double>(c) / n;
            if (k.first_access) {
                poly_add(exact_.miss_coeffs, alpha, {1.0});
            } else if (k.r <= opt.exact_r_limit) {
                auto pm = pair_miss(k.r, k.u, ctx);
                poly_add(exact_.miss_coeffs, alpha, pm.miss_coeffs);
                poly_add(exact_.demote_coeffs, alpha, pm.demote_coeffs);
            } else {
                tail.push_back({k.r, k.u, alpha});
            }
        }
        return tail;
    }

    const SolveContext& ctx_;
    MissPoly exact_;
    LongSequenceEvaluator tail_;
};

// ---------------------------------------------------------------------------
// Self-consistency h = 1 - miss(h)

struct RootResult {
    double h = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
    bool fixed_point_fallback = false;
};

/**
 * Smallest root of g(h) = h - 1 + miss(h) on [0,1]: a coarse scan brackets the first sign
 * change, then bisection runs until |g| <= 1e-9. Without a sign change it falls back to
 * damped fixed-point iteration.
 */
inline RootResult solve_hit_ratio_fn(const std::function<double(double)>& miss, std::size_t scan = 16) {
    auto g = [&](double h) { return h - 1.0 + miss(h); };
    RootResult res;
    double lo = 0.0, glo = g(0.0);
    res.iterations = 1;
    if (glo >= 0.0) {
        res.h = 0.0;
        res.residual = glo;
        return res;
    }
    double hi = -1.0, ghi = 0.0;
    for (std::size_t k = 1; k <= scan; ++k) {
        const double x = static_cast<double>(k) / static_cast<double>(scan);
        const double gx = g(x);
        ++res.iterations;
        if (gx >= 0.0) {
            hi = x;
            ghi = gx;
            break;
        }
        lo = x;
        glo = gx;
    }
    if (hi >= 0.0) {
        if (ghi == 0.0) {
            res.h = hi;
            return res;
        }
        // residuals within tolerance count as exact zeros so the bracketing solver stops there
        double best_x = hi, best_g = ghi;
        auto gt = [&](double x) {
            const double gx = g(x);
            ++res.iterations;
            if (std::abs(gx) < std::abs(best_g)) {
                best_x = x;
                best_g = gx;
            }
            return std::abs(gx) <= 1e-9 ? 0.0 : gx;
        };
        std::uintmax_t max_iter = 60;
        auto tol = [](double a, double b) { return b - a < 1e-15; };
        boost::math::tools::toms748_solve(gt, lo, hi, glo, ghi, tol, max_iter);
        res.h = best_x;
        res.residual = best_g;
        return res;
    }
    res.fixed_point_fallback = true;
    double h = 0.5;
    for (int it = 0; it < 10000; ++it) {
        const double next = 0.5 * h + 0.5 * (1.0 - miss(h));
        ++res.iterations;
        if (std::abs(next - h) <= 1e-9) {
            res.h = next;
            res.residual = g(next);
            return res;
        }
        h = next;
    }
    throw SolverError("hit ratio did not converge", g(h));
}

inline double solve_hit_ratio(const MissPoly& poly) {
    return solve_hit_ratio_fn([&](double h) { return poly.miss(h); }).h;
}

inline RootResult solve_hit_ratio(const MissModel& model) {
    return solve_hit_ratio_fn([&](double h) { return model.miss(h); });
}

inline double expected_demotions(const MissPoly& poly, double h, count_t total_requests) {
    return static_cast<double>(total_requests) * poly.demote(h);
}

inline double expected_demotions(const MissModel& model, double h, count_t total_requests) {
    return static_cast<double>(total_requests) * model.demotions(h);
}

inline SolveContext make_context(const SequenceProfile& profile, const MemoryGeometry& g, const HmaPolicy& policy) {
    return SolveContext(g, build_hit_model(profile, g, policy.p_mig), policy, write_ratio(profile));
}

/// Solved hit ratio for each migration probability in the grid, in grid order.
inline std::vector<std::pair<double, double>> migration_sweep(const SequenceProfile& profile, const MemoryGeometry& g,
                                                              const HmaPolicy& policy, const std::vector<double>& grid,
                                                              MissModelOptions opt = {}) {
    std::vector<std::pair<double, double>> out;
    for (double pmig : grid) {
        if (!(pmig >= 0.0 && pmig <= 1.0)) throw std::invalid_argument("migration grid values must lie in [0,1]");
        HmaPolicy p = policy;
        p.p_mig = pmig;
        SolveContext ctx = make_context(profile, g, p);
        MissModel model(profile, ctx, opt);
        out.emplace_back(pmig, solve_hit_ratio(model).h);
    }
    return out;
}

}  // namespace hymem
