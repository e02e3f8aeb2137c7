#pragma once

#include <optional>
#include <string>

#include "formula_cache.hpp"
#include "hitmodel.hpp"
#include "markov.hpp"
#include "metrics.hpp"
#include "policies.hpp"
#include "profiler.hpp"

namespace hymem {

struct EstimateOptions {
    LatencyConfig latencies;
    double pagefactor = 64.0;
    MissModelOptions model;
    std::optional<std::string> cache_dir;
    std::uintmax_t cache_max_bytes = 256u << 20;
};

struct SolverInfo {
    std::size_t evaluations = 0;
    std::size_t states_computed = 0;
    std::size_t memo_hits = 0;
    std::size_t cache_preloaded = 0;
    std::string cache_status = "disabled";
    bool exact = false;
    bool fixed_point_fallback = false;
    double residual = 0.0;
};

struct EstimateReport {
    std::string policy;
    std::optional<int> threshold;
    double p_mig = 0.0;
    bool p_mig_interpolated = false;
    MemoryGeometry geometry;
    count_t total_requests = 0;
    double write_ratio = 0.0;

    double hit_ratio = 0.0;
    double p_hitdram_given_hit = 0.0;
    AccessCounts counts;
    double mig_to_nvm = 0.0;
    double disk_to_nvm = 0.0;
    double amat_ns = 0.0;
    double nvm_writes = 0.0;

    DramHitModel hit_model;
    std::string fingerprint;
    SolverInfo solver;
};

inline std::string to_string(FormulaCache::Status s) {
    switch (s) {
        case FormulaCache::Status::Missing: return "cold";
        case FormulaCache::Status::Loaded: return "warm";
        case FormulaCache::Status::StaleVersion: return "stale-version-ignored";
        case FormulaCache::Status::Mismatch: return "fingerprint-mismatch-ignored";
        case FormulaCache::Status::Corrupt: return "corrupt-ignored";
    }
    return "?";
}

/// Profile -> hit model -> solved hit ratio -> counts, AMAT and NVM writes.
inline EstimateReport estimate(const SequenceProfile& profile, const MemoryGeometry& g, const HmaPolicy& policy,
                               const EstimateOptions& opt = {}) {
    if (profile.total_requests == 0) throw EmptyTraceError();
    opt.latencies.validate();
    const double wr = write_ratio(profile);
    SolveContext ctx(g, build_hit_model(profile, g, policy.p_mig), policy, wr);

    std::optional<FormulaCache> cache;
    EstimateReport rep;
    if (opt.cache_dir) {
        cache.emplace(*opt.cache_dir, opt.cache_max_bytes);
        auto loaded = cache->load(ctx.fingerprint());
        rep.solver.cache_status = to_string(loaded.status);
        if (loaded.status == FormulaCache::Status::Loaded) ctx.preload(loaded.entries);
    }

    MissModel model(profile, ctx, opt.model);
    const RootResult root = solve_hit_ratio(model);
    const double h = root.h;

    rep.policy = policy.name;
    rep.threshold = policy.threshold;
    rep.p_mig = policy.p_mig;
    rep.p_mig_interpolated = policy.interpolated;
    rep.geometry = g;
    rep.total_requests = profile.total_requests;
    rep.write_ratio = wr;
    rep.hit_ratio = h;
    rep.hit_model = ctx.hit_model();
    rep.p_hitdram_given_hit = rep.hit_model.p_hitdram_given_hit;
    const double total = static_cast<double>(profile.total_requests);
    rep.counts = derive_counts(h, rep.p_hitdram_given_hit, wr, total);
    if (policy.write_hits_promote) rep.counts = apply_write_promotion(rep.counts);
    rep.mig_to_nvm = g.nvm_pages > 0 ? expected_demotions(model, h, profile.total_requests) : 0.0;
    rep.disk_to_nvm = g.nvm_pages > 0 ? disk_to_nvm_copies(policy, rep.counts.miss, 1.0 - wr) : 0.0;
    rep.amat_ns = amat(rep.counts, opt.latencies, total);
    rep.nvm_writes = nvm_writes(rep.counts.w_nvm, rep.mig_to_nvm, rep.disk_to_nvm, opt.pagefactor);
    rep.fingerprint = ctx.fingerprint();

    auto& st = ctx.stats();
    rep.solver.evaluations = st.evaluations.load();
    rep.solver.states_computed = st.states_computed.load();
    rep.solver.memo_hits = st.memo_hits.load();
    rep.solver.cache_preloaded = st.preloaded.load();
    rep.solver.exact = model.is_exact();
    rep.solver.fixed_point_fallback = root.fixed_point_fallback;
    rep.solver.residual = root.residual;

    if (cache && st.states_computed.load() > 0) cache->store(ctx.fingerprint(), ctx.memo_snapshot());
    return rep;
}

/// Simulator-side AMAT and NVM writes, using the same formulas as the estimate.
struct SimMetrics {
    double amat_ns = 0.0;
    double nvm_writes = 0.0;
};

inline SimMetrics sim_metrics(const SimReport& s, const LatencyConfig& lat = {}, double pagefactor = 64.0) {
    SimMetrics m;
    m.amat_ns = amat(counts_of(s), lat, static_cast<double>(s.total));
    m.nvm_writes = nvm_writes(static_cast<double>(s.w_nvm), static_cast<double>(s.mig_to_nvm),
                              static_cast<double>(s.disk_to_nvm_copies), pagefactor);
    return m;
}

}  // namespace hymem
