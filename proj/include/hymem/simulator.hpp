#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "policies.hpp"
#include "trace.hpp"

namespace hymem {

struct SimReport {
    count_t total = 0;
    count_t r_dram = 0, w_dram = 0, r_nvm = 0, w_nvm = 0, miss = 0;
    count_t mig_to_dram = 0, mig_to_nvm = 0;
    count_t disk_to_nvm_copies = 0, disk_to_dram_copies = 0;
    double hit_ratio = 0.0;
    double p_hitdram_given_hit_measured = 0.0;
};

namespace detail {

inline constexpr std::size_t kNil = std::numeric_limits<std::size_t>::max();

/// Intrusive LRU list over dense page ids; head is most recent.
struct LruList {
    std::size_t head = kNil, tail = kNil, size = 0;

    void push_front(std::vector<std::size_t>& prev, std::vector<std::size_t>& next, std::size_t p) {
        prev[p] = kNil;
        next[p] = head;
        if (head != kNil) prev[head] = p;
        head = p;
        if (tail == kNil) tail = p;
        ++size;
    }
    void unlink(std::vector<std::size_t>& prev, std::vector<std::size_t>& next, std::size_t p) {
        if (prev[p] != kNil) next[prev[p]] = next[p];
        else head = next[p];
        if (next[p] != kNil) prev[next[p]] = prev[p];
        else tail = prev[p];
        --size;
    }
};

}  // namespace detail

/// LRU queues on both memories; an NVM page is promoted once its NVM hit counter reaches the threshold.
class TwoLruMachine : public PolicyMachine {
public:
    static constexpr int kNeverMigrate = std::numeric_limits<int>::max();

    explicit TwoLruMachine(int threshold = 4) : threshold_(threshold) {
        if (threshold <= 0) throw std::invalid_argument("threshold must be a positive integer");
    }

    std::string name() const override { return "two-lru"; }

    void reset(const MemoryGeometry& g, std::size_t universe) override {
        g_ = g;
        loc_.assign(universe, 0);
        prev_.assign(universe, detail::kNil);
        next_.assign(universe, detail::kNil);
        counter_.assign(universe, 0);
        dram_ = {};
        nvm_ = {};
    }

    AccessEvent access(page_t page, Op) override {
        const auto p = static_cast<std::size_t>(page);
        AccessEvent ev;
        if (loc_[p] == 1) {
            dram_.unlink(prev_, next_, p);
            dram_.push_front(prev_, next_, p);
            ev.served = Served::DRAM;
            ev.placed = Memory::DRAM;
            return ev;
        }
        if (loc_[p] == 2) {
            ev.served = Served::NVM;
            nvm_.unlink(prev_, next_, p);
            if (++counter_[p] >= threshold_) {
                counter_[p] = 0;
                ev.promoted = page;
                ev.demoted = insert_dram(p, ev);
                ev.placed = Memory::DRAM;
            } else {
                nvm_.push_front(prev_, next_, p);
                ev.placed = Memory::NVM;
            }
            return ev;
        }
        ev.served = Served::Miss;
        ev.placed = Memory::DRAM;
        ev.demoted = insert_dram(p, ev);
        return ev;
    }

    std::optional<Memory> where(page_t page) const override {
        auto l = loc_[static_cast<std::size_t>(page)];
        if (l == 1) return Memory::DRAM;
        if (l == 2) return Memory::NVM;
        return std::nullopt;
    }

    std::vector<page_t> eviction_order(Memory m) const override {
        std::vector<page_t> out;
        const auto& l = m == Memory::DRAM ? dram_ : nvm_;
        for (std::size_t p = l.tail; p != detail::kNil; p = prev_[p]) out.push_back(p);
        return out;
    }

    int level(page_t page) const override {
        auto p = static_cast<std::size_t>(page);
        return (loc_[p] == 1 && dram_.head == p) || (loc_[p] == 2 && nvm_.head == p) ? 1 : 0;
    }
    int hit_level(Memory) const override { return 1; }

    std::unique_ptr<PolicyMachine> clone() const override { return std::make_unique<TwoLruMachine>(*this); }

protected:
    /// Places p at the DRAM head; returns the demoted page or kNoPage.
    virtual page_t insert_dram(std::size_t p, AccessEvent& ev) {
        page_t demoted = kNoPage;
        if (dram_.size >= g_.dram_pages) {
            std::size_t v = dram_.tail;
            dram_.unlink(prev_, next_, v);
            loc_[v] = 0;
            if (g_.nvm_pages > 0) {
                if (nvm_.size >= g_.nvm_pages) {
                    std::size_t e = nvm_.tail;
                    nvm_.unlink(prev_, next_, e);
                    loc_[e] = 0;
                    ev.evicted = e;
                }
                counter_[v] = 0;
                nvm_.push_front(prev_, next_, v);
                loc_[v] = 2;
                demoted = v;
            } else {
                ev.evicted = v;
            }
        }
        dram_.push_front(prev_, next_, p);
        loc_[p] = 1;
        return demoted;
    }

    int threshold_;
    MemoryGeometry g_;
    std::vector<std::uint8_t> loc_;  // 0 absent, 1 DRAM, 2 NVM
    std::vector<std::size_t> prev_, next_;
    std::vector<int> counter_;
    detail::LruList dram_, nvm_;
};

/// Plain single-level LRU: TwoLRU over a geometry without NVM.
inline std::unique_ptr<PolicyMachine> lru_machine() {
    return std::make_unique<TwoLruMachine>(TwoLruMachine::kNeverMigrate);
}

inline std::unique_ptr<PolicyMachine> two_lru_machine(int threshold) { return std::make_unique<TwoLruMachine>(threshold); }

namespace detail {

/// Slot ring swept by a rotating hand; `dwf` enables write-count aging on the sweep.
struct ClockRing {
    std::vector<page_t> slots;
    std::vector<std::size_t> free;
    std::size_t hand = 0, size = 0;
    bool dwf = false;

    void init(std::size_t cap, bool write_aging) {
        slots.assign(cap, kNoPage);
        free.clear();
        for (std::size_t i = cap; i-- > 0;) free.push_back(i);
        hand = 0;
        size = 0;
        dwf = write_aging;
    }
    bool full() const { return size == slots.size(); }

    void place(page_t p, std::vector<std::size_t>& slot_of) {
        std::size_t s = free.back();
        free.pop_back();
        slots[s] = p;
        slot_of[p] = s;
        ++size;
    }
    void remove(page_t p, std::vector<std::size_t>& slot_of) {
        std::size_t s = slot_of[p];
        slots[s] = kNoPage;
        free.push_back(s);
        --size;
    }

    template <class Ref, class Cnt>
    page_t sweep(Ref& ref, Cnt& wcnt) {
        for (;;) {
            page_t p = slots[hand];
            std::size_t at = hand;
            hand = (hand + 1) % slots.size();
            if (p == kNoPage) continue;
            if (ref[p]) {
                ref[p] = 0;
            } else if (dwf && wcnt[p] > 0) {
                --wcnt[p];
            } else {
                slots[at] = kNoPage;
                free.push_back(at);
                --size;
                return p;
            }
        }
    }
};

}  // namespace detail

/// CLOCK on both memories; DRAM sweeps also age per-page write counters. NVM write hits promote.
class ClockDwfMachine : public PolicyMachine {
public:
    static constexpr std::uint8_t kMaxWriteCount = 3;

    std::string name() const override { return "clock-dwf"; }

    void reset(const MemoryGeometry& g, std::size_t universe) override {
        g_ = g;
        loc_.assign(universe, 0);
        slot_.assign(universe, 0);
        ref_.assign(universe, 0);
        wcnt_.assign(universe, 0);
        dram_.init(g.dram_pages, true);
        nvm_.init(g.nvm_pages, false);
    }

    AccessEvent access(page_t page, Op op) override {
        const auto p = static_cast<std::size_t>(page);
        const bool write = op == Op::Write;
        AccessEvent ev;
        if (loc_[p] == 1) {
            ev.served = Served::DRAM;
            ev.placed = Memory::DRAM;
            ref_[p] = 1;
            if (write && wcnt_[p] < kMaxWriteCount) ++wcnt_[p];
            return ev;
        }
        if (loc_[p] == 2) {
            if (!write) {
                ev.served = Served::NVM;
                ev.placed = Memory::NVM;
                ref_[p] = 1;
                return ev;
            }
            ev.served = Served::DRAM;
            ev.promoted = page;
            nvm_.remove(p, slot_);
            loc_[p] = 0;
            insert_dram(p, ev);
            ev.placed = Memory::DRAM;
            return ev;
        }
        ev.served = Served::Miss;
        if (!write && g_.nvm_pages > 0) {
            if (nvm_.full()) ev.evicted = evict_nvm();
            place_nvm(p);
            ev.placed = Memory::NVM;
        } else {
            insert_dram(p, ev);
            if (!write) wcnt_[p] = 0;
            ev.placed = Memory::DRAM;
        }
        return ev;
    }

    std::optional<Memory> where(page_t page) const override {
        auto l = loc_[static_cast<std::size_t>(page)];
        if (l == 1) return Memory::DRAM;
        if (l == 2) return Memory::NVM;
        return std::nullopt;
    }

    std::vector<page_t> eviction_order(Memory m) const override {
        detail::ClockRing ring = m == Memory::DRAM ? dram_ : nvm_;
        std::vector<std::uint8_t> ref = ref_, wcnt = wcnt_;
        std::vector<page_t> out;
        while (ring.size > 0) out.push_back(ring.sweep(ref, wcnt));
        return out;
    }

    int level(page_t page) const override { return ref_[static_cast<std::size_t>(page)]; }
    int hit_level(Memory) const override { return 1; }

    std::unique_ptr<PolicyMachine> clone() const override { return std::make_unique<ClockDwfMachine>(*this); }

protected:
    page_t evict_nvm() {
        page_t v = nvm_.sweep(ref_, wcnt_);
        loc_[v] = 0;
        return v;
    }

    void place_nvm(std::size_t p) {
        nvm_.place(p, slot_);
        loc_[p] = 2;
        ref_[p] = 1;
        wcnt_[p] = 0;
    }

    virtual void insert_dram(std::size_t p, AccessEvent& ev) {
        if (dram_.full()) {
            page_t v = dram_.sweep(ref_, wcnt_);
            loc_[v] = 0;
            if (g_.nvm_pages > 0) {
                if (nvm_.full()) ev.evicted = evict_nvm();
                place_nvm(v);
                ev.demoted = v;
            } else {
                ev.evicted = v;
            }
        }
        dram_.place(p, slot_);
        loc_[p] = 1;
        ref_[p] = 1;
        wcnt_[p] = 1;
    }

    MemoryGeometry g_;
    std::vector<std::uint8_t> loc_;
    std::vector<std::size_t> slot_;
    std::vector<std::uint8_t> ref_, wcnt_;
    detail::ClockRing dram_, nvm_;
};

inline std::unique_ptr<PolicyMachine> clock_dwf_machine() { return std::make_unique<ClockDwfMachine>(); }

/// Replays the trace in order; page ids are densified first so machines can use flat arrays.
inline SimReport simulate(const Trace& trace, PolicyMachine& machine, const MemoryGeometry& g) {
    std::unordered_map<page_t, page_t> dense;
    dense.reserve(1024);
    std::vector<page_t> ids(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i)
        ids[i] = dense.try_emplace(trace.accesses[i].page, dense.size()).first->second;
    machine.reset(g, dense.size());

    SimReport r;
    r.total = trace.size();
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const Op op = trace.accesses[i].op;
        const auto ev = machine.access(ids[i], op);
        const bool w = op == Op::Write;
        switch (ev.served) {
            case Served::DRAM: (w ? r.w_dram : r.r_dram)++; break;
            case Served::NVM: (w ? r.w_nvm : r.r_nvm)++; break;
            case Served::Miss:
                ++r.miss;
                (ev.placed == Memory::NVM ? r.disk_to_nvm_copies : r.disk_to_dram_copies)++;
                break;
        }
        if (ev.promoted != kNoPage) ++r.mig_to_dram;
        if (ev.demoted != kNoPage) ++r.mig_to_nvm;
    }
    const count_t hits = r.total - r.miss;
    r.hit_ratio = r.total ? static_cast<double>(hits) / static_cast<double>(r.total) : 0.0;
    r.p_hitdram_given_hit_measured = hits ? static_cast<double>(r.r_dram + r.w_dram) / static_cast<double>(hits) : 0.0;
    return r;
}

}  // namespace hymem
