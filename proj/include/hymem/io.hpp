#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "estimate.hpp"
#include "policies.hpp"
#include "profiler.hpp"
#include "simulator.hpp"

namespace hymem {

using json = nlohmann::json;

/// Malformed or unreadable input file.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json parse_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << text;
}

// ---------------------------------------------------------------------------
// Profiles

inline json to_json(const SequenceProfile& p) {
    json pairs = json::array();
    count_t first = 0;
    for (const auto& [k, c] : p.pair_count) {
        if (k.first_access) first = c;
        else pairs.push_back({k.r, k.u, c});
    }
    return {{"format", "hymem-profile"},
            {"version", 1},
            {"total", p.total_requests},
            {"writes", p.write_count},
            {"distinct_pages", p.distinct_pages},
            {"first_access", first},
            {"pairs", pairs},
            {"prob_arr", p.prob_arr}};
}

inline SequenceProfile profile_from_json(const json& j) {
    try {
        if (j.value("format", "") != "hymem-profile") throw InputError("not a hymem profile");
        SequenceProfile p;
        p.total_requests = j.at("total").get<count_t>();
        p.write_count = j.at("writes").get<count_t>();
        const auto first = j.at("first_access").get<count_t>();
        p.distinct_pages = j.value("distinct_pages", first);
        if (first > 0) p.pair_count[RUPair::infinite()] = first;
        count_t sum = first;
        for (const auto& e : j.at("pairs")) {
            const auto r = e.at(0).get<count_t>(), u = e.at(1).get<count_t>(), c = e.at(2).get<count_t>();
            if (u > r) throw InputError("profile pair has u > r");
            p.pair_count[RUPair{r, u, false}] += c;
            sum += c;
        }
        if (sum != p.total_requests) throw InputError("profile pair counts do not add up to total");
        if (p.write_count > p.total_requests) throw InputError("profile writes exceed total");
        p.rebuild_prob_arr();
        return p;
    } catch (const json::exception& e) {
        throw InputError(std::string("profile: ") + e.what());
    }
}

inline SequenceProfile load_profile(const std::string& path) { return profile_from_json(parse_json_file(path)); }

inline void save_profile(const SequenceProfile& p, const std::string& path) { write_file(path, to_json(p).dump(1) + "\n"); }

// ---------------------------------------------------------------------------
// Policies and latencies

inline EvictionModel eviction_from_json(const json& j) {
    if (j.is_array()) return EvictionModel::custom(j.get<std::vector<double>>());
    const auto s = j.get<std::string>();
    if (s == "lru") return EvictionModel::lru();
    if (s == "clock") return EvictionModel::clock();
    if (s == "uniform") return EvictionModel::uniform();
    throw InputError("unknown eviction model '" + s + "'");
}

inline json to_json(const EvictionModel& e) {
    if (e.kind == EvictionModel::Kind::Custom) return e.table;
    return to_string(e.kind);
}

inline FaultDestination fault_destination_from(const std::string& s) {
    if (s == "dram") return FaultDestination::DRAM;
    if (s == "nvm") return FaultDestination::NVM;
    if (s == "by-type") return FaultDestination::ByType;
    throw InputError("unknown fault destination '" + s + "'");
}

/// Custom policy file: {name, dram_eviction, nvm_eviction, p_mig | threshold, fault_destination, write_hits_promote}.
inline HmaPolicy policy_from_json(const json& j) {
    try {
        HmaPolicy p;
        p.name = j.value("name", "custom");
        p.eviction_dram = eviction_from_json(j.value("dram_eviction", json("lru")));
        p.eviction_nvm = eviction_from_json(j.value("nvm_eviction", json("lru")));
        if (j.contains("p_mig")) {
            p.p_mig = j.at("p_mig").get<double>();
            if (!(p.p_mig >= 0.0 && p.p_mig <= 1.0)) throw InputError("p_mig must lie in [0,1]");
        } else if (j.contains("threshold")) {
            const int th = j.at("threshold").get<int>();
            if (th <= 0) throw InputError("threshold must be positive");
            p.p_mig = two_lru_p_mig(th, &p.interpolated);
            p.threshold = th;
        }
        p.fault_destination = fault_destination_from(j.value("fault_destination", "dram"));
        p.write_hits_promote = j.value("write_hits_promote", false);
        return p;
    } catch (const json::exception& e) {
        throw InputError(std::string("policy: ") + e.what());
    }
}

inline json to_json(const HmaPolicy& p) {
    json j{{"name", p.name},
           {"dram_eviction", to_json(p.eviction_dram)},
           {"nvm_eviction", to_json(p.eviction_nvm)},
           {"p_mig", p.p_mig},
           {"p_mig_interpolated", p.interpolated},
           {"fault_destination", to_string(p.fault_destination)},
           {"write_hits_promote", p.write_hits_promote}};
    if (p.threshold) j["threshold"] = *p.threshold;
    return j;
}

inline LatencyConfig latencies_from_json(const json& j) {
    try {
        LatencyConfig l;
        l.dram_read_ns = j.value("dram_read_ns", l.dram_read_ns);
        l.dram_write_ns = j.value("dram_write_ns", l.dram_write_ns);
        l.nvm_read_ns = j.value("nvm_read_ns", l.nvm_read_ns);
        l.nvm_write_ns = j.value("nvm_write_ns", l.nvm_write_ns);
        l.disk_read_ns = j.value("disk_read_ns", l.disk_read_ns);
        l.validate();
        return l;
    } catch (const json::exception& e) {
        throw InputError(std::string("latencies: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
}

inline json to_json(const LatencyConfig& l) {
    return {{"dram_read_ns", l.dram_read_ns}, {"dram_write_ns", l.dram_write_ns}, {"nvm_read_ns", l.nvm_read_ns},
            {"nvm_write_ns", l.nvm_write_ns}, {"disk_read_ns", l.disk_read_ns}};
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const AccessCounts& c) {
    return {{"r_dram", c.r_dram}, {"w_dram", c.w_dram}, {"r_nvm", c.r_nvm}, {"w_nvm", c.w_nvm}, {"miss", c.miss}};
}

inline json to_json(const EstimateReport& r) {
    json j{{"kind", "estimate"},
           {"policy", r.policy},
           {"p_mig", r.p_mig},
           {"p_mig_interpolated", r.p_mig_interpolated},
           {"dram_pages", r.geometry.dram_pages},
           {"nvm_pages", r.geometry.nvm_pages},
           {"total_requests", r.total_requests},
           {"write_ratio", r.write_ratio},
           {"hit_ratio", r.hit_ratio},
           {"p_hitdram_given_hit", r.p_hitdram_given_hit},
           {"counts", to_json(r.counts)},
           {"mig_to_nvm", r.mig_to_nvm},
           {"disk_to_nvm", r.disk_to_nvm},
           {"amat_ns", r.amat_ns},
           {"nvm_writes", r.nvm_writes},
           {"fingerprint", r.fingerprint}};
    j["threshold"] = r.threshold ? json(*r.threshold) : json(nullptr);
    j["hit_model"] = {{"p_dbasic", r.hit_model.p_dbasic},
                      {"p_nbasic", r.hit_model.p_nbasic},
                      {"p_missbasic", r.hit_model.p_missbasic},
                      {"p_dnomig", r.hit_model.p_dnomig},
                      {"p_nnomig", r.hit_model.p_nnomig},
                      {"p_d", r.hit_model.p_d}};
    j["solver"] = {{"evaluations", r.solver.evaluations},
                   {"states_computed", r.solver.states_computed},
                   {"memo_hits", r.solver.memo_hits},
                   {"cache_preloaded", r.solver.cache_preloaded},
                   {"cache_status", r.solver.cache_status},
                   {"exact", r.solver.exact},
                   {"fixed_point_fallback", r.solver.fixed_point_fallback},
                   {"residual", r.solver.residual}};
    return j;
}

struct SimRun {
    std::string policy;
    std::optional<int> threshold;
    MemoryGeometry geometry;
    SimReport report;
    SimMetrics metrics;
};

inline json to_json(const SimRun& s) {
    const auto& r = s.report;
    json j{{"kind", "simulate"},
           {"policy", s.policy},
           {"dram_pages", s.geometry.dram_pages},
           {"nvm_pages", s.geometry.nvm_pages},
           {"total_requests", r.total},
           {"hit_ratio", r.hit_ratio},
           {"p_hitdram_given_hit", r.p_hitdram_given_hit_measured},
           {"counts", to_json(counts_of(r))},
           {"mig_to_dram", r.mig_to_dram},
           {"mig_to_nvm", r.mig_to_nvm},
           {"disk_to_nvm", r.disk_to_nvm_copies},
           {"disk_to_dram", r.disk_to_dram_copies},
           {"amat_ns", s.metrics.amat_ns},
           {"nvm_writes", s.metrics.nvm_writes}};
    j["threshold"] = s.threshold ? json(*s.threshold) : json(nullptr);
    return j;
}

/// Fixed CSV columns shared by estimate, simulate and sweep rows.
inline const char* kReportCsvHeader =
    "kind,policy,threshold,p_mig,dram_pages,nvm_pages,total_requests,hit_ratio,p_hitdram_given_hit,"
    "r_dram,w_dram,r_nvm,w_nvm,miss,mig_to_nvm,disk_to_nvm,amat_ns,nvm_writes";

inline std::string csv_num(double v) {
    std::ostringstream ss;
    ss.precision(12);
    ss << v;
    return ss.str();
}

inline std::string csv_row(const json& j) {
    const auto& c = j.at("counts");
    std::ostringstream ss;
    ss << j.at("kind").get<std::string>() << ',' << j.at("policy").get<std::string>() << ',';
    if (!j.at("threshold").is_null()) ss << j.at("threshold").get<int>();
    ss << ',' << (j.contains("p_mig") ? csv_num(j.at("p_mig").get<double>()) : std::string()) << ','
       << j.at("dram_pages").get<std::size_t>() << ',' << j.at("nvm_pages").get<std::size_t>() << ','
       << j.at("total_requests").get<count_t>();
    for (const char* k : {"hit_ratio", "p_hitdram_given_hit"}) ss << ',' << csv_num(j.at(k).get<double>());
    for (const char* k : {"r_dram", "w_dram", "r_nvm", "w_nvm", "miss"}) ss << ',' << csv_num(c.at(k).get<double>());
    for (const char* k : {"mig_to_nvm", "disk_to_nvm", "amat_ns", "nvm_writes"}) ss << ',' << csv_num(j.at(k).get<double>());
    return ss.str();
}

}  // namespace hymem
