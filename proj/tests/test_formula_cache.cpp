#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <zlib.h>

#include "hymem/estimate.hpp"
#include "hymem/formula_cache.hpp"

using namespace hymem;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_gz(const fs::path& p, const std::string& s) {
    gzFile gz = gzopen(p.string().c_str(), "wb");
    gzwrite(gz, s.data(), static_cast<unsigned>(s.size()));
    gzclose(gz);
}

std::vector<std::pair<MarkovState, MissPoly>> sample_entries() {
    return {{{3, 2, Memory::DRAM, 1}, {{0.1, 0.25, -0.0625}, {0.5}}},
            {{4, 4, Memory::NVM, 0}, {{1.0 / 3.0}, {}}}};
}

}  // namespace

TEST(FormulaCache, RoundTripIsBitExact) {
    TempDir d("hymem_cache_rt");
    FormulaCache c(d.path);
    EXPECT_EQ(c.load("abc").status, FormulaCache::Status::Missing);
    c.store("abc", sample_entries());
    auto got = c.load("abc");
    ASSERT_EQ(got.status, FormulaCache::Status::Loaded);
    ASSERT_EQ(got.entries.size(), 2u);
    for (const auto& [k, v] : sample_entries()) {
        auto it = std::find_if(got.entries.begin(), got.entries.end(), [&](const auto& e) { return e.first == k; });
        ASSERT_NE(it, got.entries.end());
        EXPECT_EQ(it->second.miss_coeffs, v.miss_coeffs);
        EXPECT_EQ(it->second.demote_coeffs, v.demote_coeffs);
    }
}

TEST(FormulaCache, ExistingEntriesWin) {
    TempDir d("hymem_cache_merge");
    FormulaCache c(d.path);
    c.store("fp", sample_entries());
    c.store("fp", {{{3, 2, Memory::DRAM, 1}, {{0.9}, {}}}, {{5, 1, Memory::DRAM, 0}, {{0.2}, {}}}});
    auto got = c.load("fp");
    ASSERT_EQ(got.entries.size(), 3u);
    for (const auto& [k, v] : got.entries)
        if (k == MarkovState{3, 2, Memory::DRAM, 1}) {
            EXPECT_EQ(v.miss_coeffs[0], 0.1);
        }
}

TEST(FormulaCache, StaleCorruptAndMismatchedFilesAreIgnored) {
    TempDir d("hymem_cache_bad");
    FormulaCache c(d.path);
    write_gz(c.file_for("old"), "hymem-formula-cache 0\nfingerprint old\nentries 0\n");
    EXPECT_EQ(c.load("old").status, FormulaCache::Status::StaleVersion);
    write_gz(c.file_for("mis"), "hymem-formula-cache 1\nfingerprint other\nentries 0\n");
    EXPECT_EQ(c.load("mis").status, FormulaCache::Status::Mismatch);
    write_gz(c.file_for("bad"), "hymem-formula-cache 1\nfingerprint bad\nentries 2\n1 1 0 0 1 0.5 0\n");
    EXPECT_EQ(c.load("bad").status, FormulaCache::Status::Corrupt);
    std::ofstream(c.file_for("raw")) << "not gzip at all";
    EXPECT_NE(c.load("raw").status, FormulaCache::Status::Loaded);

    // stale-version files are never deleted
    write_gz(d.path / "v0-legacy.hfc.gz", "hymem-formula-cache 0\n");
    c.store("x", sample_entries());
    EXPECT_TRUE(fs::exists(d.path / "v0-legacy.hfc.gz"));
    EXPECT_EQ(c.stats().stale_files, 1u);
}

TEST(FormulaCache, SizeBudgetEvictsLeastRecentlyUsed) {
    TempDir d("hymem_cache_lru");
    FormulaCache big(d.path, 1u << 30);
    std::vector<std::pair<MarkovState, MissPoly>> many;
    for (count_t r = 1; r < 300; ++r) many.push_back({{r, 1, Memory::DRAM, 0}, {{0.1 * r, 0.3, 0.7}, {0.2}}});
    big.store("a", many);
    const auto one = fs::file_size(big.file_for("a"));
    fs::last_write_time(big.file_for("a"), fs::file_time_type::clock::now() - std::chrono::hours(2));
    big.store("b", many);
    fs::last_write_time(big.file_for("b"), fs::file_time_type::clock::now() - std::chrono::hours(1));
    FormulaCache small(d.path, 2 * one + one / 2);
    small.store("c", many);
    EXPECT_FALSE(fs::exists(small.file_for("a")));
    EXPECT_TRUE(fs::exists(small.file_for("b")));
    EXPECT_TRUE(fs::exists(small.file_for("c")));
}

TEST(FormulaCache, WarmEstimateMatchesColdAndSolvesFewerStates) {
    TempDir d("hymem_cache_est");
    const auto prof = extract_pairs(generate_zipf_trace(20000, 300, 1.0, 0.3, 8));
    EstimateOptions cached;
    cached.cache_dir = d.path.string();
    const auto none = estimate(prof, {30, 60}, two_lru_policy(4));
    const auto cold = estimate(prof, {30, 60}, two_lru_policy(4), cached);
    const auto warm = estimate(prof, {30, 60}, two_lru_policy(4), cached);
    EXPECT_EQ(cold.solver.cache_status, "cold");
    EXPECT_EQ(warm.solver.cache_status, "warm");
    EXPECT_GT(cold.solver.states_computed, 0u);
    EXPECT_LT(warm.solver.states_computed, cold.solver.states_computed);
    EXPECT_GT(warm.solver.cache_preloaded, 0u);
    EXPECT_EQ(none.hit_ratio, warm.hit_ratio);
    EXPECT_EQ(none.amat_ns, warm.amat_ns);
    EXPECT_EQ(none.nvm_writes, warm.nvm_writes);
    EXPECT_EQ(FormulaCache(d.path).stats().files, 1u);
}
