#include <doctest.h>

#include <cmath>
#include <memory>

#include "creditlift/errors.hpp"
#include "creditlift/rng.hpp"
#include "creditlift/treatments.hpp"
#include "test_util.hpp"

using namespace creditlift;

namespace {

// Deterministic classifier for overlap tests: probability depends only on the
// first feature.
class StepClassifier : public Classifier {
public:
    explicit StepClassifier(int n_features) : Classifier(n_features) {}

private:
    double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const override {
        if (x(0) < 0.0) return 0.0;
        if (x(0) > 0.5) return 1.0;
        return 0.5;
    }
};

LevelSlice synthetic_slice(const Eigen::MatrixXd& X, const Eigen::VectorXd& t) {
    LevelSlice slice;
    slice.X = X;
    slice.t = t;
    slice.y = Eigen::VectorXd::Zero(t.size());
    slice.ids.resize(static_cast<std::size_t>(t.size()));
    for (std::size_t i = 0; i < slice.ids.size(); ++i) slice.ids[i] = static_cast<std::int64_t>(i + 1);
    slice.level = 1;
    slice.beta = 1.5;
    return slice;
}

}  // namespace

TEST_CASE("discretize averages dosages within each bin and skips control") {
    const std::vector<double> dosages = {0.0, 1.1, 1.2, 1.3, 0.0, 2.0, 2.4};
    const auto part = discretize(dosages, {1.5});
    REQUIRE(part.k() == 2);
    CHECK(part.levels[0] == doctest::Approx(1.2).epsilon(1e-12));
    CHECK(part.levels[1] == doctest::Approx(2.2).epsilon(1e-12));
    CHECK(part.counts[0] == 3);
    CHECK(part.counts[1] == 2);
    CHECK(part.defined(1));
    CHECK(part.defined(2));
    CHECK(part.dosage_of(0) == 0.0);
    CHECK(part.dosage_of(2) == doctest::Approx(2.2));
}

TEST_CASE("no cut points collapse all treated dosages into one level") {
    const auto part = discretize({0.0, 1.1, 1.6, 2.4}, {});
    REQUIRE(part.k() == 1);
    CHECK(part.levels[0] == doctest::Approx((1.1 + 1.6 + 2.4) / 3.0));
    CHECK(part.counts[0] == 3);
}

TEST_CASE("six-bin partition places boundary dosages in the lower bin") {
    const std::vector<double> cuts = {1.25, 1.5, 1.75, 2.0, 2.25};
    const std::vector<double> dosages = {1.1, 1.25, 1.4, 1.5, 1.6, 1.9, 2.1, 2.5};
    const auto part = discretize(dosages, cuts);
    REQUIRE(part.k() == 6);
    CHECK(part.levels[0] == doctest::Approx((1.1 + 1.25) / 2.0));  // upper bound inclusive
    CHECK(part.levels[1] == doctest::Approx((1.4 + 1.5) / 2.0));
    CHECK(part.levels[2] == doctest::Approx(1.6));
    CHECK(part.levels[3] == doctest::Approx(1.9));
    CHECK(part.levels[4] == doctest::Approx(2.1));
    CHECK(part.levels[5] == doctest::Approx(2.5));
    CHECK(assign_level(1.25, part) == 1);
    CHECK(assign_level(1.2500001, part) == 2);
    CHECK(assign_level(2.5, part) == 6);
    CHECK(assign_level(0.0, part) == 0);
}

TEST_CASE("empty bins are kept but flagged undefined") {
    const auto part = discretize({1.1, 2.4}, {1.5, 2.0});
    REQUIRE(part.k() == 3);
    CHECK(part.defined(1));
    CHECK_FALSE(part.defined(2));
    CHECK(part.defined(3));
    CHECK(std::isnan(part.levels[1]));
    CHECK(part.counts[1] == 0);
    // Assignment still lands in the empty bin; downstream decides what to do.
    CHECK(assign_level(1.7, part) == 2);
}

TEST_CASE("discretize rejects bad inputs") {
    CHECK_THROWS_AS(discretize({1.1}, {2.0, 1.5}), ConfigError);          // not ascending
    CHECK_THROWS_AS(discretize({1.1}, {1.5, 1.5}), ConfigError);          // not strict
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(discretize({1.1}, {inf}), ConfigError);               // non-finite cut
    CHECK_THROWS_AS(discretize({-0.5}, {1.5}), DataError);                // negative dosage
    CHECK_THROWS_AS(discretize({std::nan("")}, {1.5}), DataError);        // non-finite dosage
    CHECK_THROWS_AS(discretize({0.0, 0.0}, {1.5}), DataError);            // nobody treated
    CHECK_THROWS_AS(assign_level(-1.0, discretize({1.1}, {})), std::domain_error);
}

TEST_CASE("partition JSON round-trips including undefined levels") {
    const auto part = discretize({1.1, 2.4}, {1.5, 2.0});
    const auto loaded = partition_from_json(partition_to_json(part));
    CHECK(loaded.cut_points == part.cut_points);
    CHECK(loaded.counts == part.counts);
    REQUIRE(loaded.levels.size() == part.levels.size());
    for (std::size_t i = 0; i < part.levels.size(); ++i) {
        if (std::isnan(part.levels[i])) CHECK(std::isnan(loaded.levels[i]));
        else CHECK(loaded.levels[i] == part.levels[i]);
    }
}

TEST_CASE("malformed partition JSON raises DataError") {
    CHECK_THROWS_AS(partition_from_json("not json"), DataError);
    CHECK_THROWS_AS(partition_from_json("{\"cut_points\": [1.5]}"), DataError);
    CHECK_THROWS_AS(
        partition_from_json("{\"cut_points\": [1.5], \"levels\": [1.2], \"counts\": [1]}"),
        DataError);  // levels size must be cuts+1
    CHECK_THROWS_AS(
        partition_from_json("{\"cut_points\": [2.0, 1.5], \"levels\": [1.2, 1.7, 2.2], "
                            "\"counts\": [1, 1, 1]}"),
        ConfigError);  // descending cuts rejected after parse
}

TEST_CASE("propensity on unrelated features estimates the marginal rate") {
    const int n = 5000;
    Rng rng(99);
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = rng.normal();
        X(i, 1) = rng.normal();
        t(i) = i % 2 == 0 ? 1.0 : 0.0;
    }
    const auto slice = synthetic_slice(X, t);
    const auto pm = fit_propensity(slice, LearnerSpec::Logistic(1e-3), 0.05);
    CHECK(pm.level == 1);
    Eigen::RowVectorXd probe(2);
    probe << 0.3, -0.8;
    CHECK(pm.predict(probe) == doctest::Approx(0.5).epsilon(0.1));
    CHECK(pm.in_band(probe));
}

TEST_CASE("separable assignment leaves an empty overlap subset") {
    const int n = 60;
    Eigen::MatrixXd X(n, 1);
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) {
        const bool hi = i % 2 == 0;
        X(i, 0) = hi ? 5.0 + 0.01 * i : -5.0 - 0.01 * i;
        t(i) = hi ? 1.0 : 0.0;
    }
    const auto slice = synthetic_slice(X, t);
    const auto pm = fit_propensity(slice, LearnerSpec::Logistic(1e-3), 0.25);
    const auto data = overlap_subset(slice, pm);
    CHECK(data.n() == 0);
}

TEST_CASE("zero trim still drops rows with degenerate propensity") {
    Eigen::MatrixXd X(6, 1);
    X << -1.0, -0.2, 0.1, 0.4, 0.9, 2.0;
    Eigen::VectorXd t(6);
    t << 0, 0, 1, 0, 1, 1;
    auto slice = synthetic_slice(X, t);
    PropensityModel pm;
    pm.level = 1;
    pm.trim_eps = 0.0;
    pm.model = std::make_shared<StepClassifier>(1);
    const auto data = overlap_subset(slice, pm);
    // Only the two rows with g strictly inside (0,1) survive.
    REQUIRE(data.n() == 2);
    CHECK(data.X(0, 0) == doctest::Approx(0.1));
    CHECK(data.X(1, 0) == doctest::Approx(0.4));
    CHECK((data.g.array() == 0.5).all());
    CHECK(data.trim_eps == 0.0);
}

TEST_CASE("chained trimming narrows the band monotonically") {
    const int n = 200;
    Rng rng(7);
    Eigen::MatrixXd X(n, 1);
    Eigen::VectorXd t(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = rng.normal();
        t(i) = rng.uniform() < norm_cdf(X(i, 0)) ? 1.0 : 0.0;
    }
    if (t.sum() < 2 || t.sum() > n - 2) FAIL("degenerate draw");
    const auto slice = synthetic_slice(X, t);
    const auto loose = fit_propensity(slice, LearnerSpec::Logistic(1e-3), 0.05);
    auto tight = loose;
    tight.trim_eps = 0.3;
    const auto wide = overlap_subset(slice, loose);
    const auto narrow = overlap_subset(wide, tight);
    CHECK(narrow.n() <= wide.n());
    for (Eigen::Index i = 0; i < narrow.n(); ++i) {
        CHECK(narrow.g(i) >= 0.3);
        CHECK(narrow.g(i) <= 0.7);
    }
}

TEST_CASE("level slices pair each treated level with the full control group") {
    std::vector<CustomerRecord> records;
    for (int i = 0; i < 40; ++i) records.push_back(testutil::sample_record(i));
    std::vector<double> dosages;
    for (const auto& r : records) dosages.push_back(r.observed_dosage);
    const auto part = discretize(dosages, {1.5});
    const auto slice = make_level_slice(records, part, 1);

    std::size_t expected = 0;
    for (const auto& r : records) {
        const int lv = assign_level(r.observed_dosage, part);
        expected += lv == 0 || lv == 1;
    }
    REQUIRE(static_cast<std::size_t>(slice.y.size()) == expected);
    CHECK(slice.level == 1);
    CHECK(slice.beta == doctest::Approx(part.levels[0]));
    CHECK(slice.X.cols() == static_cast<Eigen::Index>(feature_names().size()));

    std::size_t row = 0;
    for (const auto& r : records) {
        const int lv = assign_level(r.observed_dosage, part);
        if (lv != 0 && lv != 1) continue;
        CHECK(slice.ids[row] == r.id);
        CHECK(slice.y(static_cast<Eigen::Index>(row)) == r.ep_m6);
        CHECK(slice.t(static_cast<Eigen::Index>(row)) == (lv == 1 ? 1.0 : 0.0));
        CHECK((slice.X.row(static_cast<Eigen::Index>(row)) - feature_row(r)).cwiseAbs().maxCoeff() ==
              0.0);
        ++row;
    }
    CHECK_THROWS_AS(make_level_slice(records, part, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_level_slice(records, part, 3), std::invalid_argument);
}
