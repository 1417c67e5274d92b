#pragma once

#include "ghost/core.hpp"
#include "ghost/loops.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

namespace ghost {

// Shortest text form that round-trips a double exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Write-then-rename so readers never observe partial files.
inline void atomic_write_text(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + tmp.string());
        os << content;
        if (!os) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// CSV with '#' comment header lines followed by a column-name line.
inline void write_csv(const std::filesystem::path& path,
                      const std::vector<std::string>& comments,
                      const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows) {
    std::ostringstream os;
    for (const auto& c : comments) os << "# " << c << "\n";
    os << "# columns:";
    for (const auto& c : columns) os << " " << c;
    os << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
        os << "\n";
    }
    atomic_write_text(path, os.str());
}

// ---------------------------------------------------------------------------
// Loop files: self-describing text records, bit-exact round trip.

inline void save_loop(const std::filesystem::path& path, const Loop& loop,
                      const std::string& system_name,
                      const std::map<std::string, double>& params) {
    std::ostringstream os;
    os << "ghost-loop 1\n";
    os << "system " << system_name << "\n";
    for (const auto& [k, v] : params) os << "param " << k << " " << format_double(v) << "\n";
    os << "Ns " << loop.ns() << "\n";
    os << "dim " << loop.dim() << "\n";
    os << "T " << format_double(loop.T) << "\n";
    if (loop.component_weights.size()) {
        os << "cweights";
        for (Eigen::Index c = 0; c < loop.component_weights.size(); ++c)
            os << " " << format_double(loop.component_weights[c]);
        os << "\n";
    }
    os << "samples\n";
    for (Eigen::Index j = 0; j < loop.ns(); ++j) {
        for (Eigen::Index c = 0; c < loop.dim(); ++c)
            os << (c ? " " : "") << format_double(loop.samples(j, c));
        os << "\n";
    }
    atomic_write_text(path, os.str());
}

struct LoadedLoop {
    Loop loop;
    std::string system;
    std::map<std::string, double> params;
};

inline LoadedLoop load_loop(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open loop file " + path.string());
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "ghost-loop" || version != 1)
        throw std::runtime_error("not a ghost-loop file: " + path.string());
    LoadedLoop out;
    long ns = -1, dim = -1;
    std::string key;
    while (is >> key) {
        if (key == "system") {
            is >> out.system;
        } else if (key == "param") {
            std::string name;
            double v;
            is >> name >> v;
            out.params[name] = v;
        } else if (key == "Ns") {
            is >> ns;
        } else if (key == "dim") {
            is >> dim;
        } else if (key == "T") {
            is >> out.loop.T;
        } else if (key == "cweights") {
            if (dim < 0) throw std::runtime_error("loop file: cweights before dim");
            out.loop.component_weights.resize(dim);
            for (long c = 0; c < dim; ++c) is >> out.loop.component_weights[c];
        } else if (key == "samples") {
            if (ns < 0 || dim < 0) throw std::runtime_error("loop file: samples before shape");
            out.loop.samples.resize(ns, dim);
            for (long j = 0; j < ns; ++j)
                for (long c = 0; c < dim; ++c) is >> out.loop.samples(j, c);
            if (!is) throw std::runtime_error("loop file: truncated samples");
            return out;
        } else {
            throw std::runtime_error("loop file: unknown key '" + key + "'");
        }
    }
    throw std::runtime_error("loop file: missing samples section");
}

// State files: one coordinate per line after a small header.
inline void save_state(const std::filesystem::path& path, const Vector& coords,
                       const std::string& system_name,
                       const std::map<std::string, double>& params) {
    std::ostringstream os;
    os << "ghost-state 1\n";
    os << "system " << system_name << "\n";
    for (const auto& [k, v] : params) os << "param " << k << " " << format_double(v) << "\n";
    os << "dim " << coords.size() << "\n";
    os << "coords\n";
    for (Eigen::Index i = 0; i < coords.size(); ++i) os << format_double(coords[i]) << "\n";
    atomic_write_text(path, os.str());
}

struct LoadedState {
    Vector coords;
    std::string system;
    std::map<std::string, double> params;
};

inline LoadedState load_state(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open state file " + path.string());
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "ghost-state" || version != 1)
        throw std::runtime_error("not a ghost-state file: " + path.string());
    LoadedState out;
    long dim = -1;
    std::string key;
    while (is >> key) {
        if (key == "system") {
            is >> out.system;
        } else if (key == "param") {
            std::string name;
            double v;
            is >> name >> v;
            out.params[name] = v;
        } else if (key == "dim") {
            is >> dim;
        } else if (key == "coords") {
            if (dim < 0) throw std::runtime_error("state file: coords before dim");
            out.coords.resize(dim);
            for (long i = 0; i < dim; ++i) is >> out.coords[i];
            if (!is) throw std::runtime_error("state file: truncated coords");
            return out;
        } else {
            throw std::runtime_error("state file: unknown key '" + key + "'");
        }
    }
    throw std::runtime_error("state file: missing coords section");
}

}  // namespace ghost
