#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "darboux/errors.hpp"

namespace darboux {

/// Full double precision, locale-independent.
inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Numeric table with fixed column order; CSV always, JSON mirror on request.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::initializer_list<double> vals) { rows.emplace_back(vals); }

    void write_csv(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw numerical_error("cli", "cannot write '" + path + "'");
        for (size_t i = 0; i < columns.size(); ++i)
            out << columns[i] << (i + 1 < columns.size() ? "," : "\n");
        for (const auto& r : rows) {
            for (size_t i = 0; i < r.size(); ++i) out << g17(r[i]) << (i + 1 < r.size() ? "," : "\n");
        }
    }

    void write_json(const std::string& path) const {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : rows) {
            nlohmann::json o;
            for (size_t i = 0; i < columns.size() && i < r.size(); ++i) o[columns[i]] = r[i];
            j.push_back(o);
        }
        std::ofstream out(path);
        if (!out) throw numerical_error("cli", "cannot write '" + path + "'");
        out << j.dump(1) << "\n";
    }

    void write(const std::string& dir, const std::string& stem, bool json) const {
        std::filesystem::create_directories(dir);
        write_csv(dir + "/" + stem + ".csv");
        if (json) write_json(dir + "/" + stem + ".json");
    }
};

/// Worker count: DARBOUX_THREADS, else hardware concurrency (capped).
inline unsigned thread_count() {
    if (const char* env = std::getenv("DARBOUX_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return static_cast<unsigned>(std::min(n, 64));
    }
    unsigned hc = std::thread::hardware_concurrency();
    return std::min(hc == 0 ? 1u : hc, 8u);
}

/// Deterministic parallel map: results land in index order regardless of the
/// execution schedule.
template <class Fn>
void parallel_for(size_t n, Fn&& fn) {
    unsigned workers = std::min<size_t>(thread_count(), n);
    if (workers <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::future<void>> futs;
    std::atomic<size_t> next{0};
    for (unsigned w = 0; w < workers; ++w) {
        futs.push_back(std::async(std::launch::async, [&] {
            for (size_t i = next++; i < n; i = next++) fn(i);
        }));
    }
    for (auto& f : futs) f.get();
}

} // namespace darboux
