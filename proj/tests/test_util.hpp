#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "creditlift/types.hpp"

namespace testutil {

// Self-cleaning directory under the build tree working directory.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& name) : path(std::filesystem::path("test_tmp") / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }

    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline long count_lines(const std::string& text) {
    long n = 0;
    for (const char c : text)
        if (c == '\n') ++n;
    return n;
}

// A record with every invariant satisfied; fields vary with the index so
// round-trips exercise distinct values.
inline creditlift::CustomerRecord sample_record(int i) {
    creditlift::CustomerRecord r;
    r.id = 1000 + i;
    r.bureau_score = 600.0 + i * 0.25;
    r.est_income = 2500.0 + 13.5 * i;
    r.interest_rate = 0.02 + 0.0001 * (i % 50);
    r.months_on_book = 12 + (i % 90);
    r.limit_m3 = 1000.0 + 7.0 * i;
    r.limit_m6 = r.limit_m3 * 1.1;
    r.avg_balance = 300.0 + 3.0 * i;
    r.avg_consumption = 120.0 + i;
    r.balance_m1 = 310.0 + i;
    r.balance_m2 = 305.0 + i;
    r.balance_m3 = 300.0 + i;
    r.cons_in_m1 = 50 + (i % 7);
    r.cons_in_m2 = 45 + (i % 5);
    r.cons_in_m3 = 40 + (i % 3);
    r.cons_out_m1 = 30 + (i % 11);
    r.cons_out_m2 = 28.5;
    r.cons_out_m3 = 27.25;
    r.fees_avg_m1 = 1.5;
    r.fees_avg_m2 = 1.25;
    r.fees_avg_m3 = 1.125;
    r.fees_max_m1 = 4.0;
    r.fees_max_m2 = 3.5;
    r.fees_max_m3 = 3.0;
    r.fees_min_m1 = 0.5;
    r.fees_min_m2 = 0.25;
    r.fees_min_m3 = 0.0;
    r.txn_m1 = 10 + (i % 4);
    r.txn_m2 = 9;
    r.txn_m3 = 8;
    r.max_unpaid_life = i % 3;
    r.unpaid_m1_m3 = i % 2;
    r.pd_m3 = 0.01 + 0.0004 * (i % 100);
    r.pd_m6 = 0.015 + 0.0003 * (i % 100);
    r.observed_dosage = (i % 4 == 0) ? 0.0 : 1.05 + 0.01 * (i % 140);
    r.ep_m3 = 10.0 - 0.125 * (i % 160);
    r.ep_m6 = 12.0 - 0.0625 * (i % 320);
    return r;
}

}  // namespace testutil
