#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

namespace hymem {

using page_t = std::uint64_t;

enum class Op : std::uint8_t { Read, Write };

struct PageAccess {
    page_t page = 0;
    Op op = Op::Read;

    friend bool operator==(const PageAccess&, const PageAccess&) = default;
};

struct Trace {
    std::vector<PageAccess> accesses;
    int page_size_log2 = 12;
    std::string source;

    std::size_t size() const { return accesses.size(); }
    bool empty() const { return accesses.empty(); }
};

class TraceError : public std::runtime_error {
public:
    TraceError(const std::string& what, std::size_t line)
        : std::runtime_error(what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class EmptyTraceError : public std::runtime_error {
public:
    EmptyTraceError() : std::runtime_error("empty trace: no accesses") {}
};

namespace detail {

inline bool parse_address(const std::string& tok, std::uint64_t& out) {
    if (tok.empty()) return false;
    int base = 10;
    std::size_t start = 0;
    if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X')) {
        base = 16;
        start = 2;
    }
    std::uint64_t v = 0;
    for (std::size_t i = start; i < tok.size(); ++i) {
        char c = tok[i];
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (base == 16 && c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (base == 16 && c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else return false;
        if (v > (UINT64_MAX - static_cast<std::uint64_t>(d)) / static_cast<std::uint64_t>(base))
            return false;
        v = v * static_cast<std::uint64_t>(base) + static_cast<std::uint64_t>(d);
    }
    out = v;
    return true;
}

inline void parse_line(const std::string& raw, std::size_t lineno, int shift, Trace& t) {
    std::istringstream ss(raw);
    std::string op, addr, extra;
    if (!(ss >> op)) return;
    if (op[0] == '#') return;
    if (!(ss >> addr) || (ss >> extra))
        throw TraceError("line " + std::to_string(lineno) + ": expected '<R|W> <address>'", lineno);
    PageAccess a;
    if (op == "R" || op == "r") a.op = Op::Read;
    else if (op == "W" || op == "w") a.op = Op::Write;
    else throw TraceError("line " + std::to_string(lineno) + ": bad operation '" + op + "'", lineno);
    std::uint64_t v;
    if (!parse_address(addr, v))
        throw TraceError("line " + std::to_string(lineno) + ": bad address '" + addr + "'", lineno);
    a.page = v >> shift;
    t.accesses.push_back(a);
}

}  // namespace detail

/// Parses `<R|W> <hex-or-decimal address>` lines; blank lines and `#` comments are skipped.
inline Trace parse_trace(std::istream& in, int page_size_log2 = 12, std::string source = {}) {
    if (page_size_log2 < 0 || page_size_log2 > 63) throw std::invalid_argument("page_size_log2 out of range");
    Trace t;
    t.page_size_log2 = page_size_log2;
    t.source = std::move(source);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        detail::parse_line(line, lineno, page_size_log2, t);
    }
    if (t.empty()) throw EmptyTraceError();
    return t;
}

inline Trace parse_trace_string(const std::string& text, int page_size_log2 = 12) {
    std::istringstream in(text);
    return parse_trace(in, page_size_log2, "<string>");
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// Reads a trace file; names ending in `.gz` are decompressed on the fly.
inline Trace load_trace(const std::string& path, int page_size_log2 = 12) {
    if (!ends_with(path, ".gz")) {
        std::ifstream f(path);
        if (!f) throw std::runtime_error("cannot open trace file: " + path);
        return parse_trace(f, page_size_log2, path);
    }
    gzFile gz = gzopen(path.c_str(), "rb");
    if (!gz) throw std::runtime_error("cannot open trace file: " + path);
    Trace t;
    t.page_size_log2 = page_size_log2;
    t.source = path;
    std::string line;
    std::size_t lineno = 0;
    char buf[4096];
    try {
        while (gzgets(gz, buf, sizeof buf)) {
            line += buf;
            if (!line.empty() && line.back() != '\n' && !gzeof(gz)) continue;
            ++lineno;
            if (!line.empty() && line.back() == '\n') line.pop_back();
            detail::parse_line(line, lineno, page_size_log2, t);
            line.clear();
        }
    } catch (...) {
        gzclose(gz);
        throw;
    }
    gzclose(gz);
    if (t.empty()) throw EmptyTraceError();
    return t;
}

/// Emits one `<R|W> 0x<address>` line per access, with address = page << page_size_log2.
inline std::string serialize_trace(const Trace& t) {
    std::ostringstream out;
    for (const auto& a : t.accesses) {
        out << (a.op == Op::Write ? 'W' : 'R') << " 0x" << std::hex << (a.page << t.page_size_log2) << std::dec << '\n';
    }
    return out.str();
}

inline void save_trace(const Trace& t, const std::string& path) {
    std::string text = serialize_trace(t);
    if (ends_with(path, ".gz")) {
        gzFile gz = gzopen(path.c_str(), "wb");
        if (!gz) throw std::runtime_error("cannot write trace file: " + path);
        gzwrite(gz, text.data(), static_cast<unsigned>(text.size()));
        gzclose(gz);
        return;
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write trace file: " + path);
    f << text;
}

/// Page i is drawn with probability proportional to (i+1)^-alpha.
inline Trace generate_zipf_trace(std::size_t n, std::size_t pages, double alpha, double write_ratio,
                                 std::uint64_t seed) {
    if (n == 0 || pages == 0) throw std::invalid_argument("zipf: n and pages must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("zipf: alpha must be positive");
    if (!(write_ratio >= 0.0 && write_ratio <= 1.0)) throw std::invalid_argument("zipf: write_ratio must lie in [0,1]");

    std::vector<double> cdf(pages);
    double acc = 0.0;
    for (std::size_t i = 0; i < pages; ++i) {
        acc += std::pow(static_cast<double>(i + 1), -alpha);
        cdf[i] = acc;
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Trace t;
    t.source = "zipf";
    t.accesses.resize(n);
    for (auto& a : t.accesses) {
        double x = unit(rng) * acc;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), x);
        a.page = static_cast<page_t>(std::min<std::size_t>(it - cdf.begin(), pages - 1));
        a.op = unit(rng) < write_ratio ? Op::Write : Op::Read;
    }
    return t;
}

}  // namespace hymem
