#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "matef/category.hpp"
#include "matef/oracle.hpp"

namespace matef {

/// Per-run, per-category validation metric: e = O - E, over-reporting
/// positive. Relative error is undefined at E = 0 and never substituted.
struct ErrorSample {
    std::string run_id;
    ArtifactCategory category = ArtifactCategory::FileCreated;
    std::uint64_t observed = 0;
    double expected = 0.0;
    double error = 0.0;
    std::optional<double> relative_error;
};

/// Uncertainty of the mean error due to random effects: the experimental
/// standard deviation of the mean s/sqrt(n) and the Student-t interval
/// around the arithmetic mean.
struct ErrorStats {
    ArtifactCategory category = ArtifactCategory::FileCreated;
    int n = 0;
    double mean_error = 0.0;
    double sample_std = 0.0;
    double std_of_mean = 0.0;
    double confidence_level = 0.95;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct FrequencyDistribution {
    ArtifactCategory category = ArtifactCategory::FileCreated;
    std::vector<double> bin_edges;        // ascending; counts.size() + 1 edges
    std::vector<std::uint64_t> counts;
};

struct VerdictThresholds {
    double abs_mean_max = 0.5; // operator-configurable defaults, not
    double ci_width_max = 2.0; // regulator-endorsed values
};

struct CriterionResult {
    std::string name;
    double threshold = 0.0;
    double actual = 0.0;
    bool pass = false;
};

struct Verdict {
    ArtifactCategory category = ArtifactCategory::FileCreated;
    bool pass = false;
    std::vector<CriterionResult> criteria;
};

/// One sample per category present in either input; absent counts are zero.
std::vector<ErrorSample> compute_error(const CountVector& observed,
                                       const ExpectedCounts& expected,
                                       const std::string& run_id);

/// n >= 2 required. CI = mean +/- t(1 - alpha/2, n - 1) * s/sqrt(n).
ErrorStats aggregate_errors(std::span<const ErrorSample> samples, double confidence_level);

/// Student-t critical value for a two-sided interval. Embedded table for
/// df in {1..30, 40, 60, 120} at levels 0.90/0.95/0.99, linear interpolation
/// in 1/df between rows, normal-quantile fallback above df 120 (any level).
double t_critical(int df, double two_sided_level);

/// Inverse standard normal CDF (rational approximation, refined to near
/// machine precision). Exposed for the t fallback and coverage tests.
double normal_quantile(double p);

/// Equal-width bins over [min e, max e]; an all-equal input degenerates to a
/// single bin holding everything.
FrequencyDistribution frequency_distribution(std::span<const ErrorSample> samples,
                                             int bin_count);

Verdict fitness_verdict(const ErrorStats& stats, const VerdictThresholds& thresholds);

/// Expected-value source for experiment analysis: the oracle store's
/// aggregated mean, or each run's own ground truth (sim executor only).
enum class ExpectedSource { Oracle, GroundTruth };

struct AnalyzeOptions {
    double confidence_level = 0.95;
    VerdictThresholds thresholds;
    ExpectedSource expected_source = ExpectedSource::Oracle;
    int bin_count = 10;
};

/// Builds the full analysis document for one experiment: ErrorSamples,
/// ErrorStats, distributions and verdicts per (tool, sample, category).
nlohmann::ordered_json analyze_experiment(const std::filesystem::path& home,
                                          const std::string& experiment_id,
                                          const AnalyzeOptions& options);

} // namespace matef
