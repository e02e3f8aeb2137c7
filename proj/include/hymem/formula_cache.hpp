#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <system_error>
#include <thread>
#include <unordered_map>
#include <vector>

#include <zlib.h>

#include "markov.hpp"

namespace hymem {

/// Compressed per-fingerprint store of solved state polynomials.
class FormulaCache {
public:
    static constexpr int kVersion = 1;

    enum class Status { Missing, Loaded, StaleVersion, Mismatch, Corrupt };

    struct LoadResult {
        Status status = Status::Missing;
        std::vector<std::pair<MarkovState, MissPoly>> entries;
    };

    struct DirStats {
        std::size_t files = 0;
        std::size_t stale_files = 0;
        std::uintmax_t bytes = 0;
    };

    explicit FormulaCache(std::filesystem::path dir, std::uintmax_t max_bytes = 256u << 20)
        : dir_(std::move(dir)), max_bytes_(max_bytes) {}

    const std::filesystem::path& dir() const { return dir_; }

    std::filesystem::path file_for(const std::string& fingerprint) const {
        return dir_ / ("v" + std::to_string(kVersion) + "-" + fingerprint + ".hfc.gz");
    }

    LoadResult load(const std::string& fingerprint) const {
        LoadResult res;
        const auto path = file_for(fingerprint);
        std::error_code ec;
        if (!std::filesystem::exists(path, ec)) return res;
        std::string text;
        if (!read_gz(path, text)) {
            res.status = Status::Corrupt;
            return res;
        }
        std::istringstream in(text);
        std::string magic, key, fp;
        int version = 0;
        std::size_t n = 0;
        if (!(in >> magic >> version) || magic != "hymem-formula-cache") {
            res.status = Status::Corrupt;
            return res;
        }
        if (version != kVersion) {
            res.status = Status::StaleVersion;
            return res;
        }
        if (!(in >> key >> fp) || key != "fingerprint" || fp != fingerprint) {
            res.status = Status::Mismatch;
            return res;
        }
        if (!(in >> key >> n) || key != "entries") {
            res.status = Status::Corrupt;
            return res;
        }
        res.entries.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            MarkovState s;
            int m = 0;
            std::size_t nm = 0, nd = 0;
            if (!(in >> s.r >> s.u >> m >> s.p >> nm)) {
                res.status = Status::Corrupt;
                res.entries.clear();
                return res;
            }
            s.m = m ? Memory::NVM : Memory::DRAM;
            MissPoly poly;
            poly.miss_coeffs.resize(nm);
            for (auto& c : poly.miss_coeffs) in >> c;
            in >> nd;
            poly.demote_coeffs.resize(nd);
            for (auto& c : poly.demote_coeffs) in >> c;
            if (!in) {
                res.status = Status::Corrupt;
                res.entries.clear();
                return res;
            }
            res.entries.emplace_back(s, std::move(poly));
        }
        std::filesystem::last_write_time(path, std::filesystem::file_time_type::clock::now(), ec);
        res.status = Status::Loaded;
        return res;
    }

    /// Merges entries into the fingerprint's file; entries already on disk win.
    void store(const std::string& fingerprint, const std::vector<std::pair<MarkovState, MissPoly>>& entries) const {
        std::filesystem::create_directories(dir_);
        auto existing = load(fingerprint);
        std::unordered_map<MarkovState, MissPoly, MarkovStateHash> merged;
        if (existing.status == Status::Loaded)
            for (auto& [k, v] : existing.entries) merged.emplace(k, std::move(v));
        for (const auto& [k, v] : entries) merged.try_emplace(k, v);

        std::ostringstream out;
        out.precision(17);
        out << "hymem-formula-cache " << kVersion << "\nfingerprint " << fingerprint << "\nentries " << merged.size() << '\n';
        for (const auto& [s, poly] : merged) {
            out << s.r << ' ' << s.u << ' ' << (s.m == Memory::NVM ? 1 : 0) << ' ' << s.p << ' ' << poly.miss_coeffs.size();
            for (double c : poly.miss_coeffs) out << ' ' << c;
            out << ' ' << poly.demote_coeffs.size();
            for (double c : poly.demote_coeffs) out << ' ' << c;
            out << '\n';
        }
        const auto target = file_for(fingerprint);
        auto tmp = target;
        tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
        write_gz(tmp, out.str());
        std::filesystem::rename(tmp, target);
        enforce_limit(target);
    }

    DirStats stats() const {
        DirStats s;
        std::error_code ec;
        if (!std::filesystem::exists(dir_, ec)) return s;
        const std::string cur = "v" + std::to_string(kVersion) + "-";
        for (const auto& e : std::filesystem::directory_iterator(dir_, ec)) {
            const auto name = e.path().filename().string();
            if (!ends_with(name, ".hfc.gz")) continue;
            if (name.rfind(cur, 0) == 0) {
                ++s.files;
                s.bytes += e.file_size(ec);
            } else {
                ++s.stale_files;
            }
        }
        return s;
    }

private:
    static bool read_gz(const std::filesystem::path& p, std::string& out) {
        gzFile gz = gzopen(p.string().c_str(), "rb");
        if (!gz) return false;
        char buf[1 << 15];
        int n;
        while ((n = gzread(gz, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
        const bool ok = n == 0;
        gzclose(gz);
        return ok;
    }

    static void write_gz(const std::filesystem::path& p, const std::string& data) {
        gzFile gz = gzopen(p.string().c_str(), "wb");
        if (!gz) throw std::runtime_error("cannot write cache file: " + p.string());
        gzwrite(gz, data.data(), static_cast<unsigned>(data.size()));
        gzclose(gz);
    }

    /// Removes least recently used current-version files until the directory fits the budget.
    void enforce_limit(const std::filesystem::path& keep) const {
        std::error_code ec;
        const std::string cur = "v" + std::to_string(kVersion) + "-";
        struct F {
            std::filesystem::path path;
            std::filesystem::file_time_type t;
            std::uintmax_t size;
        };
        std::vector<F> files;
        std::uintmax_t total = 0;
        for (const auto& e : std::filesystem::directory_iterator(dir_, ec)) {
            const auto name = e.path().filename().string();
            if (name.rfind(cur, 0) != 0 || !ends_with(name, ".hfc.gz")) continue;
            F f{e.path(), e.last_write_time(ec), e.file_size(ec)};
            total += f.size;
            files.push_back(f);
        }
        std::sort(files.begin(), files.end(), [](const F& a, const F& b) { return a.t < b.t; });
        for (const auto& f : files) {
            if (total <= max_bytes_) break;
            if (f.path == keep) continue;
            std::filesystem::remove(f.path, ec);
            total -= f.size;
        }
    }

    std::filesystem::path dir_;
    std::uintmax_t max_bytes_;
};

}  // namespace hymem
