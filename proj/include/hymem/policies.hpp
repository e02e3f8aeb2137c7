#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hitmodel.hpp"
#include "profiler.hpp"
#include "trace.hpp"

namespace hymem {

// ---------------------------------------------------------------------------
// Analytical policy description

struct EvictionModel {
    enum class Kind : std::uint8_t { LruDeterministic, ClockDeterministic, UniformRandom, Custom };

    Kind kind = Kind::LruDeterministic;
    std::vector<double> table;  // Custom only: probability per position

    static EvictionModel lru() { return {Kind::LruDeterministic, {}}; }
    static EvictionModel clock() { return {Kind::ClockDeterministic, {}}; }
    static EvictionModel uniform() { return {Kind::UniformRandom, {}}; }
    static EvictionModel custom(std::vector<double> t) {
        for (double v : t)
            if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("eviction table entries must lie in [0,1]");
        return {Kind::Custom, std::move(t)};
    }

    /// Probability that the page at `pos` is the victim when a page enters a full memory of `size` pages.
    double prob(std::size_t pos, std::size_t size) const {
        switch (kind) {
            case Kind::LruDeterministic:
            case Kind::ClockDeterministic: return pos + 1 == size ? 1.0 : 0.0;
            case Kind::UniformRandom: return size == 0 ? 0.0 : 1.0 / static_cast<double>(size);
            case Kind::Custom: return pos < table.size() ? table[pos] : 0.0;
        }
        return 0.0;
    }

    bool deterministic() const { return kind == Kind::LruDeterministic || kind == Kind::ClockDeterministic; }

    friend bool operator==(const EvictionModel&, const EvictionModel&) = default;
};

inline std::string to_string(EvictionModel::Kind k) {
    switch (k) {
        case EvictionModel::Kind::LruDeterministic: return "lru";
        case EvictionModel::Kind::ClockDeterministic: return "clock";
        case EvictionModel::Kind::UniformRandom: return "uniform";
        case EvictionModel::Kind::Custom: return "custom";
    }
    return "?";
}

enum class FaultDestination : std::uint8_t { DRAM, NVM, ByType };

inline std::string to_string(FaultDestination f) {
    switch (f) {
        case FaultDestination::DRAM: return "dram";
        case FaultDestination::NVM: return "nvm";
        case FaultDestination::ByType: return "by-type";
    }
    return "?";
}

struct HmaPolicy {
    std::string name = "custom";
    EvictionModel eviction_dram;
    EvictionModel eviction_nvm;
    double p_mig = 0.0;
    FaultDestination fault_destination = FaultDestination::DRAM;
    bool write_hits_promote = false;     // NVM write hits are served after promotion to DRAM
    std::optional<int> threshold;        // set when p_mig came from the TwoLRU table
    bool interpolated = false;           // p_mig lies between table rows

    /// Fraction of page faults whose page is placed in DRAM.
    double dram_fault_fraction(double write_ratio) const {
        switch (fault_destination) {
            case FaultDestination::DRAM: return 1.0;
            case FaultDestination::NVM: return 0.0;
            case FaultDestination::ByType: return write_ratio;
        }
        return 1.0;
    }
};

struct MigrationRow {
    int threshold;
    double p_mig;
};

inline constexpr std::array<MigrationRow, 4> kTwoLruMigrationTable{{{1, 0.16}, {4, 0.13}, {8, 0.08}, {16, 0.05}}};

/// Table rows verbatim; log-linear interpolation in the threshold between rows; clamped outside.
inline double two_lru_p_mig(int threshold, bool* interpolated = nullptr) {
    if (threshold <= 0) throw std::invalid_argument("threshold must be a positive integer");
    if (interpolated) *interpolated = false;
    const auto& t = kTwoLruMigrationTable;
    for (const auto& row : t)
        if (row.threshold == threshold) return row.p_mig;
    if (threshold < t.front().threshold) return t.front().p_mig;
    if (threshold > t.back().threshold) {
        if (interpolated) *interpolated = true;
        return t.back().p_mig;
    }
    if (interpolated) *interpolated = true;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        if (threshold > t[i].threshold && threshold < t[i + 1].threshold) {
            const double x0 = std::log(t[i].threshold), x1 = std::log(t[i + 1].threshold);
            const double w = (std::log(threshold) - x0) / (x1 - x0);
            return t[i].p_mig + w * (t[i + 1].p_mig - t[i].p_mig);
        }
    }
    return t.back().p_mig;
}

inline HmaPolicy two_lru_policy(int threshold) {
    HmaPolicy p;
    p.name = "two-lru";
    p.eviction_dram = EvictionModel::lru();
    p.eviction_nvm = EvictionModel::lru();
    p.p_mig = two_lru_p_mig(threshold, &p.interpolated);
    p.fault_destination = FaultDestination::DRAM;
    p.threshold = threshold;
    return p;
}

inline HmaPolicy clock_dwf_policy(const SequenceProfile& profile) {
    HmaPolicy p;
    p.name = "clock-dwf";
    p.eviction_dram = EvictionModel::clock();
    p.eviction_nvm = EvictionModel::clock();
    p.p_mig = write_ratio(profile);
    p.fault_destination = FaultDestination::ByType;
    p.write_hits_promote = true;
    return p;
}

// ---------------------------------------------------------------------------
// Executable policy machines

inline constexpr page_t kNoPage = ~page_t{0};

enum class Served : std::uint8_t { DRAM, NVM, Miss };

/// What one access did to the memory system.
struct AccessEvent {
    Served served = Served::Miss;
    Memory placed = Memory::DRAM;  // memory holding the accessed page afterwards
    page_t promoted = kNoPage;
    page_t demoted = kNoPage;
    page_t evicted = kNoPage;     // left main memory entirely
};

/// A hybrid memory manager. Page ids must be smaller than the universe passed to reset().
class PolicyMachine {
public:
    virtual ~PolicyMachine() = default;
    virtual std::string name() const = 0;
    virtual void reset(const MemoryGeometry& g, std::size_t page_universe) = 0;
    virtual AccessEvent access(page_t page, Op op) = 0;
    virtual std::optional<Memory> where(page_t page) const = 0;
    /// Resident pages of one memory in eviction order, next victim first.
    virtual std::vector<page_t> eviction_order(Memory m) const = 0;
    /// Mapping level of a resident page; accessed and demoted pages receive hit_level().
    virtual int level(page_t page) const = 0;
    virtual int hit_level(Memory m) const = 0;
    virtual std::unique_ptr<PolicyMachine> clone() const = 0;
};

// ---------------------------------------------------------------------------
// Appendix-A conformance

struct AssumptionResult {
    std::string id;
    std::string description;
    bool pass = true;
    std::size_t checks = 0;
    std::string detail;
    std::vector<PageAccess> witness;
    MemoryGeometry witness_geometry;
};

struct ConformanceReport {
    std::string machine;
    std::size_t trials = 0;
    std::vector<AssumptionResult> results;

    bool all_pass() const {
        return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
    }
    const AssumptionResult* find(const std::string& id) const {
        for (const auto& r : results)
            if (r.id == id) return &r;
        return nullptr;
    }
};

namespace detail {

struct Snapshot {
    std::vector<page_t> dram, nvm;  // eviction order
};

inline Snapshot snapshot(const PolicyMachine& m) { return {m.eviction_order(Memory::DRAM), m.eviction_order(Memory::NVM)}; }

inline bool contains(const std::vector<page_t>& v, page_t p) { return std::find(v.begin(), v.end(), p) != v.end(); }

inline std::vector<page_t> victims_of(PolicyMachine& m, const std::vector<PageAccess>& tr) {
    std::vector<page_t> out;
    for (const auto& a : tr) {
        auto ev = m.access(a.page, a.op);
        out.push_back(ev.demoted);
        out.push_back(ev.evicted);
    }
    return out;
}

}  // namespace detail

/// Runs randomized micro-traces against fresh copies of `machine` and checks the seven HMA assumptions.
inline ConformanceReport check_policy_assumptions(const PolicyMachine& machine, std::size_t trials, std::uint64_t seed) {
    ConformanceReport rep;
    rep.machine = machine.name();
    rep.trials = trials;
    const std::pair<const char*, const char*> checks[] = {
        {"eq13", "eviction depends only on the victim's own mapping entry"},
        {"eq14", "accessed page receives Hit_Mapping"},
        {"eq15", "per-memory mappings are totally ordered"},
        {"eq16", "only the accessed page is promoted"},
        {"eq17", "DRAM evictions land in NVM at Hit_Mapping"},
        {"eq18", "NVM evictions leave memory"},
        {"eq19", "no mapping exceeds Hit_Mapping"},
    };
    for (const auto& [id, description] : checks) {
        AssumptionResult a;
        a.id = id;
        a.description = description;
        rep.results.push_back(std::move(a));
    }
    auto& r13 = rep.results[0];
    auto& r14 = rep.results[1];
    auto& r15 = rep.results[2];
    auto& r16 = rep.results[3];
    auto& r17 = rep.results[4];
    auto& r18 = rep.results[5];
    auto& r19 = rep.results[6];

    std::mt19937_64 rng(seed);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        MemoryGeometry g(1 + rng() % 4, 1 + rng() % 4);
        const std::size_t universe = g.total_pages() + 1 + rng() % 4;
        const std::size_t len = 4 + rng() % 40;
        std::vector<PageAccess> tr(len);
        for (auto& a : tr) {
            a.page = rng() % universe;
            a.op = (rng() & 1) ? Op::Write : Op::Read;
        }

        auto fail = [&](AssumptionResult& res, std::size_t upto, const std::string& why) {
            if (!res.pass) return;
            res.pass = false;
            res.detail = why;
            res.witness.assign(tr.begin(), tr.begin() + static_cast<std::ptrdiff_t>(upto + 1));
            res.witness_geometry = g;
        };

        auto m = machine.clone();
        m->reset(g, universe);
        for (std::size_t i = 0; i < tr.size(); ++i) {
            const page_t pg = tr[i].page;
            const auto before = detail::snapshot(*m);
            const auto ev = m->access(pg, tr[i].op);
            const auto after = detail::snapshot(*m);

            // 15: each memory's order is a permutation of its residents, with no page in both memories
            ++r15.checks;
            {
                std::set<page_t> d(after.dram.begin(), after.dram.end()), n(after.nvm.begin(), after.nvm.end());
                bool ok = d.size() == after.dram.size() && n.size() == after.nvm.size() &&
                          after.dram.size() <= g.dram_pages && after.nvm.size() <= g.nvm_pages;
                for (page_t p : d) ok = ok && !n.count(p) && m->where(p) == Memory::DRAM;
                for (page_t p : n) ok = ok && m->where(p) == Memory::NVM;
                if (!ok) fail(r15, i, "eviction order is not a strict total order over residents");
            }

            // 14: accessed page resident at Hit_Mapping
            ++r14.checks;
            {
                auto w = m->where(pg);
                if (!w || m->level(pg) != m->hit_level(*w)) fail(r14, i, "accessed page not at Hit_Mapping");
            }

            // 19: no level above Hit_Mapping
            ++r19.checks;
            for (Memory mem : {Memory::DRAM, Memory::NVM}) {
                for (page_t p : mem == Memory::DRAM ? after.dram : after.nvm)
                    if (m->level(p) > m->hit_level(mem)) fail(r19, i, "mapping exceeds Hit_Mapping");
            }

            // 16: only the accessed page moves NVM -> DRAM
            ++r16.checks;
            for (page_t p : after.dram)
                if (p != pg && detail::contains(before.nvm, p)) fail(r16, i, "non-accessed page promoted");
            if (ev.promoted != kNoPage && ev.promoted != pg) fail(r16, i, "promotion event names another page");

            // 17: pages leaving DRAM (other than the accessed one) sit in NVM at Hit_Mapping
            ++r17.checks;
            for (page_t p : before.dram) {
                if (p == pg || detail::contains(after.dram, p)) continue;
                if (g.nvm_pages == 0) continue;
                if (!detail::contains(after.nvm, p) || m->level(p) != m->hit_level(Memory::NVM))
                    fail(r17, i, "DRAM victim did not land in NVM at Hit_Mapping");
            }

            // 18: pages leaving NVM are either the promoted accessed page or gone
            ++r18.checks;
            for (page_t p : before.nvm) {
                if (detail::contains(after.nvm, p)) continue;
                if (p == pg && detail::contains(after.dram, p)) continue;
                if (m->where(p)) fail(r18, i, "NVM victim still resident");
            }

            // 13 (first half): the page that left each memory was first in that memory's eviction order
            ++r13.checks;
            if (ev.demoted != kNoPage && (before.dram.empty() || before.dram.front() != ev.demoted))
                fail(r13, i, "DRAM victim was not first in eviction order");
            if (ev.evicted != kNoPage) {
                const auto& order = detail::contains(before.nvm, ev.evicted) ? before.nvm : before.dram;
                if (order.empty() || order.front() != ev.evicted) fail(r13, i, "victim was not first in eviction order");
            }
        }

        // 13 (second half): relabeling unrelated pages must not change which mapping slot is evicted
        ++r13.checks;
        {
            std::vector<page_t> perm(universe);
            for (std::size_t k = 0; k < universe; ++k) perm[k] = k;
            std::shuffle(perm.begin(), perm.end(), rng);
            std::vector<PageAccess> relabeled = tr;
            for (auto& a : relabeled) a.page = perm[a.page];
            auto m1 = machine.clone();
            auto m2 = machine.clone();
            m1->reset(g, universe);
            m2->reset(g, universe);
            auto v1 = detail::victims_of(*m1, tr);
            auto v2 = detail::victims_of(*m2, relabeled);
            for (std::size_t k = 0; k < v1.size(); ++k) {
                page_t expect = v1[k] == kNoPage ? kNoPage : perm[v1[k]];
                if (expect != v2[k]) {
                    fail(r13, tr.size() - 1, "victim choice changed under page relabeling");
                    break;
                }
            }
        }
    }
    return rep;
}

}  // namespace hymem
