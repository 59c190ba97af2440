#include <doctest.h>

#include "matef/analysis.hpp"
#include "matef/errors.hpp"
#include "matef/rng.hpp"

#include <cmath>

using namespace matef;

namespace {

std::vector<ErrorSample> samples_from(const std::vector<double>& errors,
                                      ArtifactCategory category = ArtifactCategory::FileCreated) {
    std::vector<ErrorSample> out;
    int i = 0;
    for (double e : errors) {
        ErrorSample sample;
        sample.run_id = "r/" + std::to_string(i++);
        sample.category = category;
        sample.error = e;
        out.push_back(sample);
    }
    return out;
}

ExpectedCounts expected_with(ArtifactCategory category, double mean) {
    ExpectedCounts expected;
    expected.sample_sha256 = std::string(64, 'a');
    for (auto c : all_categories()) {
        expected.per_category[static_cast<std::size_t>(c)].n_records = 1;
        expected.per_category[static_cast<std::size_t>(c)].mean = 0.0;
    }
    expected.per_category[static_cast<std::size_t>(category)].mean = mean;
    return expected;
}

const ErrorSample& sample_for(const std::vector<ErrorSample>& samples,
                              ArtifactCategory category) {
    for (const auto& sample : samples) {
        if (sample.category == category)
            return sample;
    }
    throw std::runtime_error("category missing from error samples");
}

} // namespace

TEST_SUITE("analysis") {

TEST_CASE("compute_error definition and relative error guard") {
    CountVector observed;
    observed[ArtifactCategory::FileCreated] = 12;
    auto samples = compute_error(observed, expected_with(ArtifactCategory::FileCreated, 10.0),
                                 "run-1");
    const auto& fc = sample_for(samples, ArtifactCategory::FileCreated);
    CHECK(fc.error == doctest::Approx(2.0));
    REQUIRE(fc.relative_error.has_value());
    CHECK(*fc.relative_error == doctest::Approx(0.2));

    SUBCASE("observed equals expected") {
        CountVector even;
        even[ArtifactCategory::FileCreated] = 10;
        auto s = compute_error(even, expected_with(ArtifactCategory::FileCreated, 10.0), "r");
        CHECK(sample_for(s, ArtifactCategory::FileCreated).error == doctest::Approx(0.0));
    }

    SUBCASE("expected zero leaves relative error undefined") {
        CountVector three;
        three[ArtifactCategory::RegDeleted] = 3;
        auto s = compute_error(three, expected_with(ArtifactCategory::FileCreated, 10.0), "r");
        const auto& rd = sample_for(s, ArtifactCategory::RegDeleted);
        CHECK(rd.error == doctest::Approx(3.0));
        CHECK_FALSE(rd.relative_error.has_value());
    }
}

TEST_CASE("aggregate_errors reproduces the hand-computed example") {
    auto samples = samples_from({0, 2, 1, -1, 3});
    auto stats = aggregate_errors(samples, 0.95);
    CHECK(stats.n == 5);
    CHECK(stats.mean_error == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(stats.sample_std == doctest::Approx(1.5811).epsilon(1e-3));
    CHECK(stats.std_of_mean == doctest::Approx(0.7071).epsilon(1e-3));
    CHECK(stats.ci_low == doctest::Approx(-0.963).epsilon(2e-3));
    CHECK(stats.ci_high == doctest::Approx(2.963).epsilon(2e-3));
}

TEST_CASE("all-equal errors give zero dispersion and a point interval") {
    auto stats = aggregate_errors(samples_from({2.5, 2.5, 2.5, 2.5}), 0.95);
    CHECK(stats.sample_std == doctest::Approx(0.0));
    CHECK(stats.ci_low == doctest::Approx(2.5));
    CHECK(stats.ci_high == doctest::Approx(2.5));
}

TEST_CASE("a single error is insufficient") {
    try {
        aggregate_errors(samples_from({1.0}), 0.95);
        FAIL("expected InsufficientData");
    } catch (const MatefError& e) {
        CHECK(e.code() == ErrorCode::InsufficientData);
    }
}

TEST_CASE("t critical values match the reference table") {
    CHECK(t_critical(4, 0.95) == doctest::Approx(2.776).epsilon(1e-3));
    CHECK(t_critical(1, 0.95) == doctest::Approx(12.706).epsilon(1e-3));
    CHECK(t_critical(10, 0.99) == doctest::Approx(3.1693).epsilon(1e-3));
    CHECK(t_critical(30, 0.90) == doctest::Approx(1.6973).epsilon(1e-3));
    // interpolated rows stay within 0.01 of the exact quantile
    CHECK(t_critical(35, 0.95) == doctest::Approx(2.0301).epsilon(5e-3));
    CHECK(t_critical(80, 0.95) == doctest::Approx(1.9901).epsilon(5e-3));
    // normal fallback above the table
    CHECK(t_critical(1000000, 0.95) == doctest::Approx(1.959964).epsilon(1e-4));
    CHECK(t_critical(121, 0.80) == doctest::Approx(1.281552).epsilon(1e-3));
}

TEST_CASE("untabulated level at tabulated df is unsupported") {
    try {
        t_critical(5, 0.80);
        FAIL("expected UnsupportedLevel");
    } catch (const MatefError& e) {
        CHECK(e.code() == ErrorCode::UnsupportedLevel);
    }
}

TEST_CASE("normal quantile inverts the CDF") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
    CHECK(normal_quantile(0.025) == doctest::Approx(-1.959964).epsilon(1e-6));
    CHECK(normal_quantile(0.9999) == doctest::Approx(3.719016).epsilon(1e-4));
}

TEST_CASE("frequency distribution") {
    SUBCASE("degenerate all-equal input collapses to one bin") {
        auto dist = frequency_distribution(samples_from({0, 0, 0}), 7);
        REQUIRE(dist.counts.size() == 1);
        CHECK(dist.counts[0] == 3);
        CHECK(dist.bin_edges[0] < dist.bin_edges[1]);
    }
    SUBCASE("two equal-width bins") {
        auto dist = frequency_distribution(samples_from({0, 1, 2, 3}), 2);
        REQUIRE(dist.counts.size() == 2);
        CHECK(dist.bin_edges[0] == doctest::Approx(0.0));
        CHECK(dist.bin_edges[1] == doctest::Approx(1.5));
        CHECK(dist.bin_edges[2] == doctest::Approx(3.0));
        CHECK(dist.counts[0] == 2);
        CHECK(dist.counts[1] == 2);
    }
    SUBCASE("counts always sum to n and edges ascend strictly") {
        RandomStream stream(404);
        std::vector<double> errors;
        for (int i = 0; i < 1000; ++i)
            errors.push_back(static_cast<double>(stream.poisson(6.0)));
        auto dist = frequency_distribution(samples_from(errors), 12);
        std::uint64_t total = 0;
        for (auto c : dist.counts)
            total += c;
        CHECK(total == 1000);
        for (std::size_t i = 1; i < dist.bin_edges.size(); ++i)
            CHECK(dist.bin_edges[i - 1] < dist.bin_edges[i]);
    }
    SUBCASE("empty input is an error") {
        CHECK_THROWS_AS(frequency_distribution({}, 3), MatefError);
    }
}

TEST_CASE("fitness verdict") {
    ErrorStats stats;
    stats.category = ArtifactCategory::FileCreated;
    stats.n = 10;

    SUBCASE("zero mean and width pass any positive thresholds") {
        auto verdict = fitness_verdict(stats, {0.5, 2.0});
        CHECK(verdict.pass);
        REQUIRE(verdict.criteria.size() == 2);
        CHECK(verdict.criteria[0].pass);
        CHECK(verdict.criteria[1].pass);
    }
    SUBCASE("mean above threshold fails with the criterion flagged") {
        stats.mean_error = 5.0;
        auto verdict = fitness_verdict(stats, {1.0, 2.0});
        CHECK_FALSE(verdict.pass);
        CHECK(verdict.criteria[0].name == "abs_mean_error");
        CHECK_FALSE(verdict.criteria[0].pass);
        CHECK(verdict.criteria[0].actual == doctest::Approx(5.0));
        CHECK(verdict.criteria[0].threshold == doctest::Approx(1.0));
        CHECK(verdict.criteria[1].pass);
    }
    SUBCASE("negative thresholds are invalid") {
        try {
            fitness_verdict(stats, {0.5, -1.0});
            FAIL("expected InvalidThresholds");
        } catch (const MatefError& e) {
            CHECK(e.code() == ErrorCode::InvalidThresholds);
        }
    }
}

TEST_CASE("ci width is non-increasing in n for fixed sample std") {
    double previous = std::numeric_limits<double>::infinity();
    for (int n = 2; n <= 120; ++n) {
        double width = 2.0 * t_critical(n - 1, 0.95) / std::sqrt(static_cast<double>(n));
        CHECK(width <= previous + 1e-12);
        previous = width;
    }
}

TEST_CASE("shift equivariance: adding k moves the mean and interval, not the spread") {
    std::vector<double> base = {0.4, -1.2, 2.2, 0.9, -0.3, 1.6, 0.0};
    const double k = 3.25;
    std::vector<double> shifted;
    for (double e : base)
        shifted.push_back(e + k);
    auto s0 = aggregate_errors(samples_from(base), 0.95);
    auto s1 = aggregate_errors(samples_from(shifted), 0.95);
    CHECK(s1.mean_error == doctest::Approx(s0.mean_error + k).epsilon(1e-12));
    CHECK(s1.sample_std == doctest::Approx(s0.sample_std).epsilon(1e-12));
    CHECK(s1.ci_low == doctest::Approx(s0.ci_low + k).epsilon(1e-9));
    CHECK(s1.ci_high == doctest::Approx(s0.ci_high + k).epsilon(1e-9));
}

TEST_CASE("95% intervals cover the true mean about 95% of the time") {
    // Lighter version of the acceptance criterion: 400 experiments of n=10.
    const int experiments = 400, n = 10;
    int covered = 0;
    for (int i = 0; i < experiments; ++i) {
        RandomStream stream(derive_stream_seed(2024, "coverage/" + std::to_string(i), "normal"));
        std::vector<double> errors;
        for (int j = 0; j < n; ++j)
            errors.push_back(stream.normal(0.0, 1.0));
        auto stats = aggregate_errors(samples_from(errors), 0.95);
        if (stats.ci_low <= 0.0 && 0.0 <= stats.ci_high)
            ++covered;
    }
    double coverage = static_cast<double>(covered) / experiments;
    CHECK(coverage > 0.90);
    CHECK(coverage < 0.99);
}

} // TEST_SUITE
