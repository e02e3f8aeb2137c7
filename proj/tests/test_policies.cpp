#include <gtest/gtest.h>

#include "hymem/policies.hpp"
#include "hymem/profiler.hpp"
#include "hymem/simulator.hpp"

using namespace hymem;

namespace {

/// Discards DRAM victims instead of demoting them.
class DroppingMachine : public TwoLruMachine {
public:
    using TwoLruMachine::TwoLruMachine;
    std::string name() const override { return "dropping"; }
    std::unique_ptr<PolicyMachine> clone() const override { return std::make_unique<DroppingMachine>(*this); }

protected:
    page_t insert_dram(std::size_t p, AccessEvent& ev) override {
        if (dram_.size >= g_.dram_pages) {
            std::size_t v = dram_.tail;
            dram_.unlink(prev_, next_, v);
            loc_[v] = 0;
            ev.evicted = v;
        }
        dram_.push_front(prev_, next_, p);
        loc_[p] = 1;
        return kNoPage;
    }
};

/// Promotes a bystander NVM page on every NVM hit.
class BystanderMachine : public TwoLruMachine {
public:
    BystanderMachine() : TwoLruMachine(1) {}
    std::string name() const override { return "bystander"; }
    std::unique_ptr<PolicyMachine> clone() const override { return std::make_unique<BystanderMachine>(*this); }
    AccessEvent access(page_t page, Op op) override {
        const bool in_nvm = where(page) == Memory::NVM;
        auto ev = TwoLruMachine::access(page, op);
        if (in_nvm && nvm_.size > 0 && dram_.size > 0) {
            const std::size_t b = nvm_.tail, d = dram_.tail;
            nvm_.unlink(prev_, next_, b);
            dram_.unlink(prev_, next_, d);
            dram_.push_front(prev_, next_, b);
            nvm_.push_front(prev_, next_, d);
            loc_[b] = 1;
            loc_[d] = 2;
        }
        return ev;
    }
};

SequenceProfile profile_with_writes(count_t writes, count_t total) {
    SequenceProfile p;
    p.total_requests = total;
    p.write_count = writes;
    p.pair_count[RUPair::infinite()] = total;
    return p;
}

}  // namespace

TEST(EvictionModel, DeterministicKindsPutAllMassOnTheLastPosition) {
    for (auto e : {EvictionModel::lru(), EvictionModel::clock()}) {
        for (std::size_t size = 1; size < 10; ++size) {
            double s = 0.0;
            for (std::size_t p = 0; p < size; ++p) s += e.prob(p, size);
            EXPECT_EQ(s, 1.0);
            EXPECT_EQ(e.prob(size - 1, size), 1.0);
        }
    }
    EXPECT_DOUBLE_EQ(EvictionModel::uniform().prob(2, 4), 0.25);
    EXPECT_THROW(EvictionModel::custom({0.5, 1.5}), std::invalid_argument);
}

TEST(TwoLruPolicy, TableRows) {
    EXPECT_EQ(two_lru_policy(1).p_mig, 0.16);
    EXPECT_EQ(two_lru_policy(4).p_mig, 0.13);
    EXPECT_EQ(two_lru_policy(8).p_mig, 0.08);
    EXPECT_EQ(two_lru_policy(16).p_mig, 0.05);
    EXPECT_FALSE(two_lru_policy(4).interpolated);
    EXPECT_EQ(two_lru_policy(4).fault_destination, FaultDestination::DRAM);
    EXPECT_THROW(two_lru_policy(0), std::invalid_argument);
}

TEST(TwoLruPolicy, InterpolationIsFlaggedAndMonotone) {
    const auto p2 = two_lru_policy(2);
    EXPECT_TRUE(p2.interpolated);
    EXPECT_NEAR(p2.p_mig, 0.16 + 0.5 * (0.13 - 0.16), 1e-15);  // log2(2) is halfway between log2(1) and log2(4)
    EXPECT_TRUE(two_lru_policy(32).interpolated);
    EXPECT_EQ(two_lru_policy(32).p_mig, 0.05);
    double prev = 1.0;
    for (int th = 1; th <= 64; ++th) {
        const double v = two_lru_p_mig(th);
        EXPECT_LE(v, prev) << th;
        prev = v;
    }
}

TEST(ClockDwfPolicy, MigrationEqualsWriteRatio) {
    EXPECT_EQ(clock_dwf_policy(profile_with_writes(0, 100)).p_mig, 0.0);
    EXPECT_EQ(clock_dwf_policy(profile_with_writes(100, 100)).p_mig, 1.0);
    const auto p = clock_dwf_policy(profile_with_writes(38, 100));
    EXPECT_EQ(p.p_mig, write_ratio(profile_with_writes(38, 100)));
    EXPECT_EQ(p.fault_destination, FaultDestination::ByType);
    EXPECT_TRUE(p.write_hits_promote);
    EXPECT_DOUBLE_EQ(p.dram_fault_fraction(0.38), 0.38);
}

TEST(Conformance, TwoLruPasses) {
    for (int th : {1, 2, 4, 16}) {
        TwoLruMachine m(th);
        const auto rep = check_policy_assumptions(m, 1000, 17 + th);
        EXPECT_EQ(rep.results.size(), 7u);
        for (const auto& r : rep.results) EXPECT_TRUE(r.pass) << r.id << ": " << r.detail;
    }
}

TEST(Conformance, ClockDwfPasses) {
    ClockDwfMachine m;
    const auto rep = check_policy_assumptions(m, 1000, 5);
    for (const auto& r : rep.results) {
        EXPECT_TRUE(r.pass) << r.id << ": " << r.detail;
        EXPECT_GT(r.checks, 0u);
    }
}

TEST(Conformance, DroppedDramEvictionsFailEq17WithWitness) {
    DroppingMachine m(4);
    const auto rep = check_policy_assumptions(m, 200, 3);
    const auto* r17 = rep.find("eq17");
    ASSERT_NE(r17, nullptr);
    EXPECT_FALSE(r17->pass);
    EXPECT_FALSE(r17->witness.empty());
    EXPECT_FALSE(rep.all_pass());

    // the witness reproduces the violation on a fresh machine
    auto fresh = m.clone();
    fresh->reset(r17->witness_geometry, r17->witness_geometry.total_pages() + 8);
    bool lost = false;
    for (const auto& a : r17->witness) {
        const auto before = fresh->eviction_order(Memory::DRAM);
        fresh->access(a.page, a.op);
        for (page_t p : before)
            if (p != a.page && !fresh->where(p)) lost = true;
    }
    EXPECT_TRUE(lost);
}

TEST(Conformance, BystanderPromotionFailsEq16) {
    BystanderMachine m;
    const auto rep = check_policy_assumptions(m, 500, 9);
    EXPECT_FALSE(rep.find("eq16")->pass);
}
