#pragma once

// Random solver contexts for property tests.

#include <memory>
#include <random>

#include "closure.hpp"
#include "hymem/markov.hpp"

namespace contexts {

inline hymem::EvictionModel random_eviction(std::mt19937_64& rng, std::size_t size) {
    switch (rng() % 4) {
        case 0: return hymem::EvictionModel::lru();
        case 1: return hymem::EvictionModel::clock();
        case 2: return hymem::EvictionModel::uniform();
        default: {
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            std::vector<double> t(size);
            for (auto& v : t) v = unit(rng);
            return hymem::EvictionModel::custom(t);
        }
    }
}

inline std::unique_ptr<hymem::SolveContext> random_context(std::mt19937_64& rng, std::size_t max_dram = 4,
                                                           std::size_t max_nvm = 4) {
    auto c = closure::random_case(rng);
    c.g = hymem::MemoryGeometry(1 + rng() % max_dram, rng() % (max_nvm + 1));
    hymem::HmaPolicy p;
    p.eviction_dram = random_eviction(rng, c.g.dram_pages);
    p.eviction_nvm = random_eviction(rng, c.g.nvm_pages);
    p.p_mig = c.p_mig;
    p.fault_destination = static_cast<hymem::FaultDestination>(rng() % 3);
    const double wr = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return std::make_unique<hymem::SolveContext>(c.g, hymem::build_hit_model(c.prob_arr, c.g, c.p_mig), p, wr);
}

inline hymem::MarkovState random_state(std::mt19937_64& rng, const hymem::SolveContext& ctx, hymem::count_t max_r) {
    const auto& g = ctx.geometry();
    hymem::MarkovState s;
    s.r = 1 + rng() % max_r;
    s.u = 1 + rng() % s.r;
    s.m = g.nvm_pages > 0 && rng() % 2 ? hymem::Memory::NVM : hymem::Memory::DRAM;
    s.p = rng() % (s.m == hymem::Memory::DRAM ? g.dram_pages : g.nvm_pages);
    return s;
}

}  // namespace contexts
