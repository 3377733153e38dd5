#include "creditlift/portfolio_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "creditlift/csv.hpp"
#include "creditlift/datagen.hpp"
#include "creditlift/errors.hpp"

namespace creditlift {

namespace {

struct Field {
    const char* name;
    double CustomerRecord::* member;
};

// Every column after id, in schema order.
constexpr std::array<Field, 36> kFields{{
    {"bureau_score", &CustomerRecord::bureau_score},
    {"est_income", &CustomerRecord::est_income},
    {"interest_rate", &CustomerRecord::interest_rate},
    {"months_on_book", &CustomerRecord::months_on_book},
    {"limit_m3", &CustomerRecord::limit_m3},
    {"limit_m6", &CustomerRecord::limit_m6},
    {"avg_balance", &CustomerRecord::avg_balance},
    {"avg_consumption", &CustomerRecord::avg_consumption},
    {"balance_m1", &CustomerRecord::balance_m1},
    {"balance_m2", &CustomerRecord::balance_m2},
    {"balance_m3", &CustomerRecord::balance_m3},
    {"cons_in_m1", &CustomerRecord::cons_in_m1},
    {"cons_in_m2", &CustomerRecord::cons_in_m2},
    {"cons_in_m3", &CustomerRecord::cons_in_m3},
    {"cons_out_m1", &CustomerRecord::cons_out_m1},
    {"cons_out_m2", &CustomerRecord::cons_out_m2},
    {"cons_out_m3", &CustomerRecord::cons_out_m3},
    {"fees_avg_m1", &CustomerRecord::fees_avg_m1},
    {"fees_avg_m2", &CustomerRecord::fees_avg_m2},
    {"fees_avg_m3", &CustomerRecord::fees_avg_m3},
    {"fees_max_m1", &CustomerRecord::fees_max_m1},
    {"fees_max_m2", &CustomerRecord::fees_max_m2},
    {"fees_max_m3", &CustomerRecord::fees_max_m3},
    {"fees_min_m1", &CustomerRecord::fees_min_m1},
    {"fees_min_m2", &CustomerRecord::fees_min_m2},
    {"fees_min_m3", &CustomerRecord::fees_min_m3},
    {"txn_m1", &CustomerRecord::txn_m1},
    {"txn_m2", &CustomerRecord::txn_m2},
    {"txn_m3", &CustomerRecord::txn_m3},
    {"max_unpaid_life", &CustomerRecord::max_unpaid_life},
    {"unpaid_m1_m3", &CustomerRecord::unpaid_m1_m3},
    {"pd_m3", &CustomerRecord::pd_m3},
    {"pd_m6", &CustomerRecord::pd_m6},
    {"observed_dosage", &CustomerRecord::observed_dosage},
    {"ep_m3", &CustomerRecord::ep_m3},
    {"ep_m6", &CustomerRecord::ep_m6},
}};

// Range rule per column beyond plain finiteness; empty string when in range.
std::string range_check(const char* name, double v) {
    const std::string col(name);
    if (col == "pd_m3" || col == "pd_m6") {
        if (v < 0.0 || v > 1.0) return "probability outside [0,1]";
    } else if (col == "interest_rate") {
        if (v <= 0.0 || v >= 1.0) return "interest rate outside (0,1)";
    } else if (col == "limit_m3" || col == "limit_m6") {
        if (v <= 0.0) return "limit not positive";
    } else if (col == "observed_dosage") {
        if (v != 0.0 && (v < kDosageMin || v > kDosageMax)) return "dosage neither 0 nor in range";
    }
    return {};
}

}  // namespace

std::string validate_record(const CustomerRecord& r) {
    for (const auto& f : kFields) {
        const double v = r.*(f.member);
        if (!std::isfinite(v)) return std::string(f.name) + ": not finite";
        const std::string err = range_check(f.name, v);
        if (!err.empty()) return std::string(f.name) + ": " + err;
    }
    return {};
}

std::vector<CustomerRecord> load_portfolio(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open portfolio file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("portfolio file '" + path + "' is empty (no header)");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = csv::split_line(line);
    const auto& expected = portfolio_columns();
    if (header != expected) {
        for (const auto& col : expected) {
            if (std::find(header.begin(), header.end(), col) == header.end())
                throw DataError("portfolio file '" + path + "': missing column '" + col + "'");
        }
        throw DataError("portfolio file '" + path + "': header does not match schema column order");
    }

    std::vector<CustomerRecord> records;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const auto fields = csv::split_line(line);
        if (fields.size() != expected.size()) {
            throw DataError("portfolio file '" + path + "', row " + csv::format_int(static_cast<long long>(row)) +
                            ": expected " + csv::format_int(static_cast<long long>(expected.size())) +
                            " fields, got " + csv::format_int(static_cast<long long>(fields.size())));
        }
        CustomerRecord r;
        const auto cell_error = [&](std::size_t col, const std::string& what) -> DataError {
            return DataError("portfolio file '" + path + "', row " + csv::format_int(static_cast<long long>(row)) +
                             ", column '" + expected[col] + "': " + what);
        };
        try {
            r.id = csv::parse_int(fields[0]);
        } catch (const std::invalid_argument& e) {
            throw cell_error(0, e.what());
        }
        for (std::size_t i = 0; i < kFields.size(); ++i) {
            double v;
            try {
                v = csv::parse_double(fields[i + 1]);
            } catch (const std::invalid_argument& e) {
                throw cell_error(i + 1, e.what());
            }
            if (!std::isfinite(v)) throw cell_error(i + 1, "not finite");
            const std::string err = range_check(kFields[i].name, v);
            if (!err.empty()) throw cell_error(i + 1, err);
            r.*(kFields[i].member) = v;
        }
        records.push_back(r);
    }
    return records;
}

void write_portfolio(const std::vector<CustomerRecord>& records, const std::string& path) {
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::string err = validate_record(records[i]);
        if (!err.empty())
            throw DataError("record " + csv::format_int(static_cast<long long>(i)) + " (id " +
                            csv::format_int(records[i].id) + ") invalid, " + err);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write portfolio file '" + path + "'");
    const auto& cols = portfolio_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) out << ',';
        out << cols[i];
    }
    out << '\n';
    for (const auto& r : records) {
        out << csv::format_int(r.id);
        for (const auto& f : kFields) out << ',' << csv::format_double(r.*(f.member));
        out << '\n';
    }
    if (!out) throw DataError("write to portfolio file '" + path + "' failed");
}

}  // namespace creditlift
