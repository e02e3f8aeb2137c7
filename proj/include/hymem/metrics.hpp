#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "hitmodel.hpp"
#include "policies.hpp"
#include "profiler.hpp"
#include "simulator.hpp"

namespace hymem {

/// Device latencies in nanoseconds.
struct LatencyConfig {
    double dram_read_ns = 50.0;
    double dram_write_ns = 50.0;
    double nvm_read_ns = 100.0;
    double nvm_write_ns = 350.0;
    double disk_read_ns = 5'000'000.0;

    void validate() const {
        for (double v : {dram_read_ns, dram_write_ns, nvm_read_ns, nvm_write_ns, disk_read_ns})
            if (!(v >= 0.0)) throw std::invalid_argument("latencies must be non-negative");
    }
};

/// Real-valued per-device access counts.
struct AccessCounts {
    double r_dram = 0.0, w_dram = 0.0, r_nvm = 0.0, w_nvm = 0.0, miss = 0.0;

    double total() const { return r_dram + w_dram + r_nvm + w_nvm + miss; }
};

inline AccessCounts counts_of(const SimReport& s) {
    return {static_cast<double>(s.r_dram), static_cast<double>(s.w_dram), static_cast<double>(s.r_nvm),
            static_cast<double>(s.w_nvm), static_cast<double>(s.miss)};
}

inline AccessCounts derive_counts(double h, double p_hitdram_given_hit, double write_ratio, double total) {
    if (!(h >= 0.0 && h <= 1.0)) throw std::invalid_argument("derive_counts: h must lie in [0,1]");
    AccessCounts c;
    c.miss = total * (1.0 - h);
    const double dram = total * h * p_hitdram_given_hit;
    const double nvm = total * h * (1.0 - p_hitdram_given_hit);
    c.w_dram = dram * write_ratio;
    c.r_dram = dram - c.w_dram;
    c.w_nvm = nvm * write_ratio;
    c.r_nvm = nvm - c.w_nvm;
    return c;
}

inline AccessCounts derive_counts(double h, const DramHitModel& model, const SequenceProfile& profile) {
    return derive_counts(h, model.p_hitdram_given_hit, write_ratio(profile), static_cast<double>(profile.total_requests));
}

/// For architectures that promote on NVM write hits, those writes are served by DRAM.
inline AccessCounts apply_write_promotion(AccessCounts c) {
    c.w_dram += c.w_nvm;
    c.w_nvm = 0.0;
    return c;
}

inline double amat(const AccessCounts& c, const LatencyConfig& lat, double total) {
    if (!(total >= 1.0)) throw std::invalid_argument("amat: total must be at least 1");
    return (lat.dram_read_ns * c.r_dram + lat.dram_write_ns * c.w_dram + lat.nvm_read_ns * c.r_nvm +
            lat.nvm_write_ns * c.w_nvm + lat.disk_read_ns * c.miss) /
           total;
}

/// Device writes reaching NVM: direct writes plus whole-page copies into NVM.
inline double nvm_writes(double w_nvm, double mig_to_nvm, double disk_to_nvm, double pagefactor = 64.0) {
    if (w_nvm < 0.0 || mig_to_nvm < 0.0 || disk_to_nvm < 0.0 || pagefactor < 0.0)
        throw std::invalid_argument("nvm_writes: inputs must be non-negative");
    return w_nvm + (mig_to_nvm + disk_to_nvm) * pagefactor;
}

inline double disk_to_nvm_copies(const HmaPolicy& policy, double miss, double read_ratio) {
    switch (policy.fault_destination) {
        case FaultDestination::DRAM: return 0.0;
        case FaultDestination::NVM: return miss;
        case FaultDestination::ByType: return miss * read_ratio;
    }
    return 0.0;
}

inline double rel_error(double estimated, double simulated) {
    if (simulated == 0.0) throw std::domain_error("rel_error: simulated value is zero; use abs_error");
    return std::abs(estimated - simulated) / std::abs(simulated);
}

inline double abs_error(double estimated, double simulated) { return std::abs(estimated - simulated); }

}  // namespace hymem
