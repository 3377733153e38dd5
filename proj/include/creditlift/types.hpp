#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace creditlift {

// One cardholder: pretreatment features, observed dosage, observed outcomes.
// ep_m3 is the pretreatment outcome Y_R, ep_m6 the post-treatment outcome Y.
struct CustomerRecord {
    std::int64_t id = 0;
    double bureau_score = 0;
    double est_income = 0;
    double interest_rate = 0;   // monthly fraction, in (0,1)
    double months_on_book = 0;
    double limit_m3 = 0;        // L_R
    double limit_m6 = 0;
    double avg_balance = 0;
    double avg_consumption = 0;
    double balance_m1 = 0, balance_m2 = 0, balance_m3 = 0;
    double cons_in_m1 = 0, cons_in_m2 = 0, cons_in_m3 = 0;
    double cons_out_m1 = 0, cons_out_m2 = 0, cons_out_m3 = 0;
    double fees_avg_m1 = 0, fees_avg_m2 = 0, fees_avg_m3 = 0;
    double fees_max_m1 = 0, fees_max_m2 = 0, fees_max_m3 = 0;
    double fees_min_m1 = 0, fees_min_m2 = 0, fees_min_m3 = 0;
    double txn_m1 = 0, txn_m2 = 0, txn_m3 = 0;
    double max_unpaid_life = 0;
    double unpaid_m1_m3 = 0;
    double pd_m3 = 0, pd_m6 = 0;
    double observed_dosage = 0; // 0 = control, else increase factor
    double ep_m3 = 0;           // EP_R
    double ep_m6 = 0;           // EP_P
};

// Exact CSV column order of the portfolio schema.
inline const std::vector<std::string>& portfolio_columns() {
    static const std::vector<std::string> cols = {
        "id", "bureau_score", "est_income", "interest_rate", "months_on_book",
        "limit_m3", "limit_m6", "avg_balance", "avg_consumption",
        "balance_m1", "balance_m2", "balance_m3",
        "cons_in_m1", "cons_in_m2", "cons_in_m3",
        "cons_out_m1", "cons_out_m2", "cons_out_m3",
        "fees_avg_m1", "fees_avg_m2", "fees_avg_m3",
        "fees_max_m1", "fees_max_m2", "fees_max_m3",
        "fees_min_m1", "fees_min_m2", "fees_min_m3",
        "txn_m1", "txn_m2", "txn_m3",
        "max_unpaid_life", "unpaid_m1_m3",
        "pd_m3", "pd_m6", "observed_dosage", "ep_m3", "ep_m6"};
    return cols;
}

// Pretreatment modeling features. Post-treatment columns (limit_m6, pd_m6,
// ep_m6) and the treatment itself are excluded; ep_m3 is pretreatment and
// stays in, as does everything observed before the decision.
inline const std::vector<std::string>& feature_names() {
    static const std::vector<std::string> cols = {
        "bureau_score", "est_income", "interest_rate", "months_on_book",
        "limit_m3", "avg_balance", "avg_consumption",
        "balance_m1", "balance_m2", "balance_m3",
        "cons_in_m1", "cons_in_m2", "cons_in_m3",
        "cons_out_m1", "cons_out_m2", "cons_out_m3",
        "fees_avg_m1", "fees_avg_m2", "fees_avg_m3",
        "fees_max_m1", "fees_max_m2", "fees_max_m3",
        "fees_min_m1", "fees_min_m2", "fees_min_m3",
        "txn_m1", "txn_m2", "txn_m3",
        "max_unpaid_life", "unpaid_m1_m3", "pd_m3", "ep_m3"};
    return cols;
}

inline Eigen::RowVectorXd feature_row(const CustomerRecord& r) {
    Eigen::RowVectorXd x(32);
    x << r.bureau_score, r.est_income, r.interest_rate, r.months_on_book,
        r.limit_m3, r.avg_balance, r.avg_consumption,
        r.balance_m1, r.balance_m2, r.balance_m3,
        r.cons_in_m1, r.cons_in_m2, r.cons_in_m3,
        r.cons_out_m1, r.cons_out_m2, r.cons_out_m3,
        r.fees_avg_m1, r.fees_avg_m2, r.fees_avg_m3,
        r.fees_max_m1, r.fees_max_m2, r.fees_max_m3,
        r.fees_min_m1, r.fees_min_m2, r.fees_min_m3,
        r.txn_m1, r.txn_m2, r.txn_m3,
        r.max_unpaid_life, r.unpaid_m1_m3, r.pd_m3, r.ep_m3;
    return x;
}

inline Eigen::MatrixXd feature_matrix(const std::vector<CustomerRecord>& records) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(records.size()), 32);
    for (std::size_t i = 0; i < records.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = feature_row(records[i]);
    return X;
}

// Returns an empty string when the record is valid, else the violated field.
std::string validate_record(const CustomerRecord& r);

}  // namespace creditlift
