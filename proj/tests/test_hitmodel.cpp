#include <gtest/gtest.h>

#include <random>

#include "closure.hpp"
#include "hymem/hitmodel.hpp"
#include "hymem/profiler.hpp"
#include "oracles.hpp"

using namespace hymem;

TEST(Geometry, RejectsEmptyDram) {
    EXPECT_THROW(MemoryGeometry(0, 4), std::invalid_argument);
    EXPECT_EQ(MemoryGeometry(3, 5).total_pages(), 8u);
}

TEST(BasicProbs, Examples) {
    auto a = basic_probs(std::vector<double>{1.0}, {4, 4});
    EXPECT_DOUBLE_EQ(a.p_dbasic, 1.0);
    EXPECT_DOUBLE_EQ(a.p_nbasic, 0.0);
    EXPECT_DOUBLE_EQ(a.p_missbasic, 0.0);

    auto b = basic_probs(std::vector<double>{0.0, 0.0}, {2, 2});
    EXPECT_DOUBLE_EQ(b.p_missbasic, 1.0);

    auto c = basic_probs(std::vector<double>{0.3, 0.3, 0.2}, {1, 2});
    EXPECT_NEAR(c.p_dbasic, 0.3, 1e-15);
    EXPECT_NEAR(c.p_nbasic, 0.5, 1e-15);
    EXPECT_NEAR(c.p_missbasic, 0.2, 1e-15);
}

TEST(BasicProbs, ExclusiveBoundary) {
    // mass at u = S is a miss for a memory of S pages
    auto b = basic_probs(std::vector<double>{0.0, 0.0, 1.0}, {2, 0});
    EXPECT_DOUBLE_EQ(b.p_dbasic, 0.0);
    EXPECT_DOUBLE_EQ(b.p_missbasic, 1.0);
}

TEST(NomigProbs, Examples) {
    auto a = nomig_probs({0.6, 0.2, 0.2});
    EXPECT_NEAR(a.p_nnomig, 0.5, 1e-15);
    EXPECT_NEAR(a.p_dnomig, 0.3, 1e-15);
    EXPECT_FALSE(a.degenerate);

    auto b = nomig_probs({0.7, 0.0, 0.3});
    EXPECT_DOUBLE_EQ(b.p_nnomig, 0.0);

    auto c = nomig_probs({0.0, 0.0, 1.0});
    EXPECT_DOUBLE_EQ(c.p_nnomig, 0.0);
    EXPECT_DOUBLE_EQ(c.p_dnomig, 0.0);

    auto d = nomig_probs({1.0, 0.0, 0.0});
    EXPECT_TRUE(d.degenerate);
    EXPECT_DOUBLE_EQ(d.p_dnomig, 1.0);
    EXPECT_DOUBLE_EQ(d.p_nnomig, 0.0);
}

TEST(PDramMixed, Endpoints) {
    BasicProbs b{0.6, 0.2, 0.2};
    NomigProbs nm;
    nm.p_dnomig = 0.3;
    EXPECT_DOUBLE_EQ(p_dram_mixed(b, nm, 1.0), 0.6);
    EXPECT_DOUBLE_EQ(p_dram_mixed(b, nm, 0.0), 0.3);
    EXPECT_DOUBLE_EQ(p_dram_mixed(b, nm, 0.5), 0.45);
}

TEST(AdjustedProbArr, FreeMigrationKeepsShape) {
    std::vector<double> pa{0.3, 0.3, 0.2};
    auto m = build_hit_model(pa, {1, 2}, 1.0);
    ASSERT_EQ(m.prob_arr_adj.size(), 3u);
    EXPECT_NEAR(m.prob_arr_adj[0], 0.375, 1e-15);
    EXPECT_NEAR(m.prob_arr_adj[1], 0.375, 1e-15);
    EXPECT_NEAR(m.prob_arr_adj[2], 0.25, 1e-15);
}

TEST(AdjustedProbArr, AllDramMass) {
    auto m = build_hit_model(std::vector<double>{0.2, 0.2}, {4, 4}, 0.3);
    EXPECT_NEAR(m.prob_arr_adj[0], 0.5, 1e-15);
    EXPECT_NEAR(m.prob_arr_adj[1], 0.5, 1e-15);
    for (std::size_t i = 2; i < 8; ++i) EXPECT_EQ(m.prob_arr_adj[i], 0.0);
}

TEST(AdjustedProbArr, NoMigrationRegionMasses) {
    // p_dnomig = 1 - 0.5/0.7 - 0.2, p_nnomig = 0.5/0.7
    auto m = build_hit_model(std::vector<double>{0.3, 0.3, 0.2}, {1, 2}, 0.0);
    const double pn = 0.5 / 0.7, pd = 1.0 - pn - 0.2;
    EXPECT_NEAR(m.p_nnomig, pn, 1e-15);
    EXPECT_NEAR(m.p_dnomig, pd, 1e-15);
    EXPECT_NEAR(m.prob_arr_adj[0], pd / 0.8, 1e-15);
    EXPECT_NEAR(m.prob_arr_adj[1] + m.prob_arr_adj[2], pn / 0.8, 1e-15);
    EXPECT_NEAR(m.prob_arr_adj[1] / m.prob_arr_adj[2], 1.5, 1e-12);
}

TEST(BeforeGivenHit, Examples) {
    DramHitModel m;
    m.prob_arr_adj = {0.5, 0.5};
    m.p_missbasic = 0.5;
    EXPECT_DOUBLE_EQ(p_before_given_hit(m, {1, 1}, 0, Memory::DRAM), 0.5);

    DramHitModel n;
    n.prob_arr_adj = {0.4, 0.2, 0.3, 0.1};
    n.p_hitdram_given_hit = 0.6;
    n.p_missbasic = 0.1;
    EXPECT_NEAR(p_before_given_hit(n, {2, 2}, 0, Memory::NVM), 0.9, 1e-15);
    EXPECT_DOUBLE_EQ(p_before_given_hit(n, {2, 2}, 1, Memory::NVM), 1.0);
    EXPECT_NEAR(p_before_given_hit(n, {2, 2}, 1, Memory::DRAM), 0.6, 1e-15);
    EXPECT_THROW(p_before_given_hit(n, {2, 2}, 2, Memory::DRAM), std::out_of_range);
}

TEST(BeforeGivenHit, TableMatchesPointwise) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        const auto c = closure::random_case(rng);
        const auto m = build_hit_model(c.prob_arr, c.g, c.p_mig);
        const auto t = before_table(m, c.g);
        for (std::size_t p = 0; p < c.g.dram_pages; ++p)
            EXPECT_NEAR(t.dram[p], p_before_given_hit(m, c.g, p, Memory::DRAM), 1e-12);
        for (std::size_t p = 0; p < c.g.nvm_pages; ++p)
            EXPECT_NEAR(t.nvm[p], p_before_given_hit(m, c.g, p, Memory::NVM), 1e-12);
    }
}

TEST(HitModel, SingleLevelDegradesToStackDistance) {
    std::mt19937_64 rng(8);
    const auto pages = oracle::random_pages(rng, 5000, 80);
    const auto prof = extract_pairs(oracle::to_trace(pages));
    for (std::size_t S : {1u, 5u, 20u, 79u}) {
        auto m = build_hit_model(prof, {S, 0}, 0.4);
        EXPECT_EQ(m.p_nbasic, 0.0);
        EXPECT_EQ(m.p_nnomig, 0.0);
        EXPECT_NEAR(m.p_dbasic, oracle::lru_hit_ratio(pages, S), 1e-12);
        EXPECT_NEAR(m.p_hitdram_given_hit, 1.0, 1e-12);
    }
}

TEST(HitModel, ClosureOnRandomProfiles) {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 1000; ++i) {
        const auto c = closure::random_case(rng);
        EXPECT_EQ(closure::check(c), "") << "case " << i;
    }
}

TEST(HitModel, ClosureOnProfiledTraces) {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 50; ++i) {
        const auto prof = extract_pairs(oracle::to_trace(oracle::random_pages(rng, 2000, 1 + rng() % 300)));
        closure::Case c{prof.prob_arr, MemoryGeometry(1 + rng() % 40, rng() % 80), static_cast<double>(rng() % 101) / 100.0};
        EXPECT_EQ(closure::check(c), "") << "trace " << i;
    }
}

TEST(HitModel, RejectsBadMigrationProbability) {
    EXPECT_THROW(build_hit_model(std::vector<double>{0.5}, {1, 1}, 1.5), std::invalid_argument);
}
