#include "hymem/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "hymem/estimate.hpp"
#include "hymem/formula_cache.hpp"
#include "hymem/io.hpp"
#include "hymem/simulator.hpp"
#include "hymem/trace.hpp"

namespace hymem {
namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Options {
    std::string trace;
    std::string profile_in;
    std::string profile_out;
    int page_size_log2 = 12;
    std::optional<std::size_t> dram_pages;
    std::optional<std::size_t> nvm_pages;
    std::string policy = "two-lru";
    int threshold = 4;
    std::optional<double> p_mig;
    std::string latencies;
    double pagefactor = 64.0;
    std::string cache_dir;
    bool no_cache = false;
    std::uint64_t cache_max_mb = 256;
    unsigned jobs = 1;
    std::string format = "json";
    std::string out;
    std::uint64_t seed = 1;

    // gen
    std::size_t n = 100000;
    std::size_t pages = 1000;
    double alpha = 1.0;
    double write_ratio = 0.3;

    // sweep
    std::vector<int> thresholds;
    std::vector<std::string> sizes;
    bool with_sim = false;
};

struct Inputs {
    std::optional<Trace> trace;
    SequenceProfile profile;
    double profile_ms = 0.0;
};

Inputs load_inputs(const Options& o, bool need_trace) {
    Inputs in;
    if (!o.trace.empty()) {
        in.trace = load_trace(o.trace, o.page_size_log2);
        const auto t0 = Clock::now();
        in.profile = extract_pairs(*in.trace);
        in.profile_ms = ms_since(t0);
    } else if (!o.profile_in.empty()) {
        if (need_trace) throw UsageError("this command needs --trace");
        in.profile = load_profile(o.profile_in);
    } else {
        throw UsageError("one of --trace or --profile-in is required");
    }
    if (in.profile.total_requests == 0) throw EmptyTraceError();
    if (!o.profile_out.empty()) save_profile(in.profile, o.profile_out);
    return in;
}

MemoryGeometry geometry_of(const Options& o) {
    if (!o.dram_pages || !o.nvm_pages) throw UsageError("--dram-pages and --nvm-pages are required");
    if (*o.dram_pages == 0) throw UsageError("--dram-pages must be positive");
    return {*o.dram_pages, *o.nvm_pages};
}

HmaPolicy policy_of(const Options& o, const SequenceProfile& profile, int threshold) {
    HmaPolicy p;
    if (o.policy == "two-lru") {
        if (threshold <= 0) throw UsageError("--threshold must be positive");
        p = two_lru_policy(threshold);
    } else if (o.policy == "clock-dwf") {
        p = clock_dwf_policy(profile);
    } else if (ends_with(o.policy, ".json")) {
        p = policy_from_json(parse_json_file(o.policy));
    } else {
        throw UsageError("--policy must be two-lru, clock-dwf or a .json policy file");
    }
    if (o.p_mig) {
        if (!(*o.p_mig >= 0.0 && *o.p_mig <= 1.0)) throw UsageError("--p-mig must lie in [0,1]");
        p.p_mig = *o.p_mig;
        p.threshold.reset();
        p.interpolated = false;
    }
    return p;
}

std::unique_ptr<PolicyMachine> machine_of(const HmaPolicy& p, int threshold) {
    if (p.name == "two-lru") return two_lru_machine(p.threshold.value_or(threshold));
    if (p.name == "clock-dwf") return clock_dwf_machine();
    throw UsageError("simulation supports the two-lru and clock-dwf policies only");
}

EstimateOptions estimate_options(const Options& o) {
    EstimateOptions e;
    if (!o.latencies.empty()) e.latencies = latencies_from_json(parse_json_file(o.latencies));
    if (!(o.pagefactor >= 0.0)) throw UsageError("--pagefactor must be non-negative");
    e.pagefactor = o.pagefactor;
    if (!o.cache_dir.empty() && !o.no_cache) e.cache_dir = o.cache_dir;
    e.cache_max_bytes = o.cache_max_mb << 20;
    return e;
}

SimRun run_simulation(const Trace& t, const HmaPolicy& p, const MemoryGeometry& g, const EstimateOptions& e,
                      int threshold) {
    auto m = machine_of(p, threshold);
    SimRun run{p.name, p.name == "two-lru" ? std::optional<int>(p.threshold.value_or(threshold)) : std::nullopt, g, {}, {}};
    run.report = simulate(t, *m, g);
    run.metrics = sim_metrics(run.report, e.latencies, e.pagefactor);
    return run;
}

void emit(const Options& o, std::ostream& out, const std::string& text) {
    if (o.out.empty()) out << text;
    else write_file(o.out, text);
}

void emit_report(const Options& o, std::ostream& out, const json& j) {
    if (o.format == "csv") emit(o, out, std::string(kReportCsvHeader) + "\n" + csv_row(j) + "\n");
    else emit(o, out, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

int cmd_gen(const Options& o, std::ostream& out) {
    if (o.out.empty()) throw UsageError("gen needs --out");
    const Trace t = generate_zipf_trace(o.n, o.pages, o.alpha, o.write_ratio, o.seed);
    save_trace(t, o.out);
    out << "wrote " << t.size() << " accesses to " << o.out << "\n";
    return kExitOk;
}

int cmd_profile(const Options& o, std::ostream& out) {
    const Inputs in = load_inputs(o, false);
    const json j = to_json(in.profile);
    if (o.profile_out.empty()) emit(o, out, j.dump(1) + "\n");
    else
        out << "profiled " << in.profile.total_requests << " requests, " << in.profile.pair_count.size()
            << " distinct pairs\n";
    return kExitOk;
}

int cmd_estimate(const Options& o, std::ostream& out) {
    const Inputs in = load_inputs(o, false);
    const auto g = geometry_of(o);
    const auto p = policy_of(o, in.profile, o.threshold);
    const auto rep = estimate(in.profile, g, p, estimate_options(o));
    emit_report(o, out, to_json(rep));
    return kExitOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
    const Inputs in = load_inputs(o, true);
    const auto g = geometry_of(o);
    const auto p = policy_of(o, in.profile, o.threshold);
    emit_report(o, out, to_json(run_simulation(*in.trace, p, g, estimate_options(o), o.threshold)));
    return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out) {
    const Inputs in = load_inputs(o, true);
    const auto g = geometry_of(o);
    const auto p = policy_of(o, in.profile, o.threshold);
    const auto eo = estimate_options(o);
    const json est = to_json(estimate(in.profile, g, p, eo));
    const json sim = to_json(run_simulation(*in.trace, p, g, eo, o.threshold));

    json rows = json::array();
    auto add = [&](const std::string& metric, double e, double s) {
        json row{{"metric", metric}, {"estimated", e}, {"simulated", s}, {"abs_error", abs_error(e, s)}};
        row["rel_error"] = s != 0.0 ? json(rel_error(e, s)) : json(nullptr);
        rows.push_back(row);
    };
    for (const char* k : {"hit_ratio", "p_hitdram_given_hit"}) add(k, est.at(k).get<double>(), sim.at(k).get<double>());
    for (const char* k : {"r_dram", "w_dram", "r_nvm", "w_nvm", "miss"})
        add(k, est.at("counts").at(k).get<double>(), sim.at("counts").at(k).get<double>());
    for (const char* k : {"mig_to_nvm", "disk_to_nvm", "amat_ns", "nvm_writes"})
        add(k, est.at(k).get<double>(), sim.at(k).get<double>());

    if (o.format == "csv") {
        std::ostringstream ss;
        ss << "metric,estimated,simulated,rel_error,abs_error\n";
        for (const auto& r : rows) {
            ss << r.at("metric").get<std::string>() << ',' << csv_num(r.at("estimated").get<double>()) << ','
               << csv_num(r.at("simulated").get<double>()) << ','
               << (r.at("rel_error").is_null() ? std::string() : csv_num(r.at("rel_error").get<double>())) << ','
               << csv_num(r.at("abs_error").get<double>()) << '\n';
        }
        emit(o, out, ss.str());
    } else {
        emit(o, out, json{{"estimate", est}, {"simulate", sim}, {"rows", rows}}.dump(2) + "\n");
    }
    return kExitOk;
}

std::pair<double, double> parse_size(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw UsageError("--sizes entries look like DRAM%:NVM%, got '" + s + "'");
    try {
        std::size_t a = 0, b = 0;
        const double d = std::stod(s.substr(0, colon), &a);
        const double n = std::stod(s.substr(colon + 1), &b);
        if (a != colon || b != s.size() - colon - 1 || !(d > 0.0) || !(n >= 0.0))
            throw UsageError("bad --sizes entry '" + s + "'");
        return {d, n};
    } catch (const std::logic_error&) {
        throw UsageError("bad --sizes entry '" + s + "'");
    }
}

struct SweepPoint {
    int threshold = 0;
    MemoryGeometry g;
    std::string size_label;
    EstimateReport est;
    double est_ms = 0.0;
    std::optional<SimRun> sim;
    double sim_ms = 0.0;
};

int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
    const Inputs in = load_inputs(o, o.with_sim);
    const auto eo = estimate_options(o);

    std::vector<int> ths = o.thresholds.empty() ? std::vector<int>{o.threshold} : o.thresholds;
    if (o.policy != "two-lru" && !o.thresholds.empty()) throw UsageError("--thresholds applies to two-lru only");
    std::vector<std::pair<MemoryGeometry, std::string>> geos;
    if (o.sizes.empty()) {
        geos.emplace_back(geometry_of(o), "");
    } else {
        const double ws = static_cast<double>(in.profile.distinct_pages);
        for (const auto& s : o.sizes) {
            const auto [d, n] = parse_size(s);
            const auto dp = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(ws * d / 100.0)));
            const auto np = static_cast<std::size_t>(std::llround(ws * n / 100.0));
            geos.emplace_back(MemoryGeometry(dp, np), s);
        }
    }
    std::vector<SweepPoint> pts;
    for (int th : ths)
        for (const auto& [g, label] : geos) pts.push_back({th, g, label, {}, 0.0, {}, 0.0});

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex fail_mu;
    auto worker = [&] {
        for (std::size_t i; (i = next++) < pts.size();) {
            try {
                auto& pt = pts[i];
                const auto pol = policy_of(o, in.profile, pt.threshold);
                auto t0 = Clock::now();
                pt.est = estimate(in.profile, pt.g, pol, eo);
                pt.est_ms = ms_since(t0);
                if (o.with_sim) {
                    t0 = Clock::now();
                    pt.sim = run_simulation(*in.trace, pol, pt.g, eo, pt.threshold);
                    pt.sim_ms = ms_since(t0);
                }
            } catch (...) {
                std::lock_guard lock(fail_mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const auto t0 = Clock::now();
    const unsigned jobs = std::max(1u, std::min<unsigned>(o.jobs, static_cast<unsigned>(pts.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    const double sweep_ms = ms_since(t0);
    if (failure) std::rethrow_exception(failure);

    double sim_total = 0.0;
    for (const auto& pt : pts) sim_total += pt.sim_ms;

    if (o.format == "json") {
        json arr = json::array();
        for (const auto& pt : pts) {
            json j = to_json(pt.est);
            j["size"] = pt.size_label;
            j["wall_ms"] = pt.est_ms;
            if (pt.sim) {
                j["simulated"] = to_json(*pt.sim);
                j["sim_wall_ms"] = pt.sim_ms;
            }
            arr.push_back(j);
        }
        emit(o, out, json{{"points", arr}, {"profile_ms", in.profile_ms}, {"sweep_ms", sweep_ms}}.dump(2) + "\n");
    } else {
        std::ostringstream ss;
        ss << "threshold,size,dram_pages,nvm_pages,p_mig,hit_ratio,amat_ns,nvm_writes,wall_ms";
        if (o.with_sim) ss << ",sim_hit_ratio,sim_amat_ns,sim_nvm_writes,sim_wall_ms";
        ss << '\n';
        for (const auto& pt : pts) {
            if (pt.est.threshold) ss << *pt.est.threshold;
            ss << ',' << pt.size_label << ',' << pt.g.dram_pages << ',' << pt.g.nvm_pages << ',' << csv_num(pt.est.p_mig)
               << ',' << csv_num(pt.est.hit_ratio) << ',' << csv_num(pt.est.amat_ns) << ',' << csv_num(pt.est.nvm_writes)
               << ',' << csv_num(pt.est_ms);
            if (pt.sim)
                ss << ',' << csv_num(pt.sim->report.hit_ratio) << ',' << csv_num(pt.sim->metrics.amat_ns) << ','
                   << csv_num(pt.sim->metrics.nvm_writes) << ',' << csv_num(pt.sim_ms);
            ss << '\n';
        }
        emit(o, out, ss.str());
    }
    err << "sweep: " << pts.size() << " points, profile " << in.profile_ms << " ms, estimates " << sweep_ms << " ms";
    if (o.with_sim) err << ", simulations " << sim_total << " ms";
    err << "\n";
    for (const auto& pt : pts)
        if (pt.est.p_mig_interpolated && pt.est.threshold)
            err << "note: p_mig for threshold " << *pt.est.threshold << " is interpolated from the migration table\n";
    return kExitOk;
}

int cmd_cache_stats(const Options& o, std::ostream& out) {
    if (o.cache_dir.empty()) throw UsageError("cache-stats needs --cache-dir");
    const auto s = FormulaCache(o.cache_dir).stats();
    const json j{{"cache_dir", o.cache_dir}, {"files", s.files}, {"stale_files", s.stale_files}, {"bytes", s.bytes}};
    if (o.format == "csv")
        emit(o, out, "cache_dir,files,stale_files,bytes\n" + o.cache_dir + "," + std::to_string(s.files) + "," +
                         std::to_string(s.stale_files) + "," + std::to_string(s.bytes) + "\n");
    else
        emit(o, out, j.dump(2) + "\n");
    return kExitOk;
}

void add_input_flags(CLI::App* c, Options& o) {
    c->add_option("--trace", o.trace, "Trace file (<R|W> <address> per line, optionally .gz)");
    c->add_option("--profile-in", o.profile_in, "Saved profile JSON");
    c->add_option("--profile-out", o.profile_out, "Write the profile JSON here");
    c->add_option("--page-size-log2", o.page_size_log2, "log2 of the page size in bytes")->check(CLI::Range(0, 63));
}

void add_model_flags(CLI::App* c, Options& o) {
    c->add_option("--dram-pages", o.dram_pages, "DRAM capacity in pages");
    c->add_option("--nvm-pages", o.nvm_pages, "NVM capacity in pages");
    c->add_option("--policy", o.policy, "two-lru, clock-dwf or a custom policy .json");
    c->add_option("--threshold", o.threshold, "TwoLRU promotion threshold");
    c->add_option("--p-mig", o.p_mig, "Override the migration probability");
    c->add_option("--latencies", o.latencies, "Latency JSON file");
    c->add_option("--pagefactor", o.pagefactor, "Device writes per page copied into NVM");
    c->add_option("--cache-dir", o.cache_dir, "Formula cache directory");
    c->add_flag("--no-cache", o.no_cache, "Ignore --cache-dir");
    c->add_option("--cache-max-mb", o.cache_max_mb, "Formula cache size budget");
    c->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    c->add_option("--out", o.out, "Output file (default stdout)");
    c->add_option("--seed", o.seed, "Seed (recorded for reproducibility)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Hybrid DRAM-NVM memory performance and lifetime estimator", "hymem"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "Generate a synthetic Zipf trace");
    gen->add_option("--n", o.n, "Number of accesses")->check(CLI::PositiveNumber);
    gen->add_option("--pages", o.pages, "Distinct pages")->check(CLI::PositiveNumber);
    gen->add_option("--alpha", o.alpha, "Zipf exponent")->check(CLI::PositiveNumber);
    gen->add_option("--write-ratio", o.write_ratio, "Write fraction")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--seed", o.seed, "Random seed");
    gen->add_option("--out", o.out, "Output trace file")->required();

    auto* prof = app.add_subcommand("profile", "Extract (r,u) sequence pairs from a trace");
    add_input_flags(prof, o);
    prof->add_option("--out", o.out, "Output file (default stdout)");

    auto* est = app.add_subcommand("estimate", "Analytical estimate");
    auto* sim = app.add_subcommand("simulate", "Trace-driven simulation");
    auto* cmp = app.add_subcommand("compare", "Estimate and simulate side by side");
    auto* swp = app.add_subcommand("sweep", "Estimate over a threshold x size grid");
    for (auto* c : {est, sim, cmp, swp}) {
        add_input_flags(c, o);
        add_model_flags(c, o);
    }
    swp->add_option("--thresholds", o.thresholds, "TwoLRU thresholds")->delimiter(',');
    swp->add_option("--sizes", o.sizes, "DRAM%:NVM% of the working set")->delimiter(',');
    swp->add_option("--jobs", o.jobs, "Concurrent points")->check(CLI::PositiveNumber);
    swp->add_flag("--simulate", o.with_sim, "Also simulate every point and report its wall time");

    auto* cst = app.add_subcommand("cache-stats", "Formula cache directory statistics");
    cst->add_option("--cache-dir", o.cache_dir, "Formula cache directory")->required();
    cst->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return cmd_gen(o, out);
        if (prof->parsed()) return cmd_profile(o, out);
        if (est->parsed()) return cmd_estimate(o, out);
        if (sim->parsed()) return cmd_simulate(o, out);
        if (cmp->parsed()) return cmd_compare(o, out);
        if (swp->parsed()) return cmd_sweep(o, out, err);
        if (cst->parsed()) return cmd_cache_stats(o, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << " (residual " << e.residual() << ")\n";
        return kExitSolver;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "input error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitUsage;
}

}  // namespace hymem
