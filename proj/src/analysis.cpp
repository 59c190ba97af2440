#include "matef/analysis.hpp"

#include "matef/errors.hpp"
#include "matef/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace matef {

using nlohmann::ordered_json;

namespace {

constexpr int kTableDfs[] = {1,  2,  3,  4,  5,  6,  7,  8,  9,  10, 11, 12, 13, 14, 15, 16, 17,
                             18, 19, 20, 21, 22, 23, 24, 25, 26, 27, 28, 29, 30, 40, 60, 120};
constexpr int kTableRows = 33;

// Two-sided critical values at 0.90 / 0.95 / 0.99.
constexpr double kTable90[kTableRows] = {
    6.3138, 2.9200, 2.3534, 2.1318, 2.0150, 1.9432, 1.8946, 1.8595, 1.8331, 1.8125, 1.7959,
    1.7823, 1.7709, 1.7613, 1.7531, 1.7459, 1.7396, 1.7341, 1.7291, 1.7247, 1.7207, 1.7171,
    1.7139, 1.7109, 1.7081, 1.7056, 1.7033, 1.7011, 1.6991, 1.6973, 1.6839, 1.6706, 1.6577};
constexpr double kTable95[kTableRows] = {
    12.7062, 4.3027, 3.1824, 2.7764, 2.5706, 2.4469, 2.3646, 2.3060, 2.2622, 2.2281, 2.2010,
    2.1788,  2.1604, 2.1448, 2.1314, 2.1199, 2.1098, 2.1009, 2.0930, 2.0860, 2.0796, 2.0739,
    2.0687,  2.0639, 2.0595, 2.0555, 2.0518, 2.0484, 2.0452, 2.0423, 2.0211, 2.0003, 1.9799};
constexpr double kTable99[kTableRows] = {
    63.6567, 9.9248, 5.8409, 4.6041, 4.0321, 3.7074, 3.4995, 3.3554, 3.2498, 3.1693, 3.1058,
    3.0545,  3.0123, 2.9768, 2.9467, 2.9208, 2.8982, 2.8784, 2.8609, 2.8453, 2.8314, 2.8188,
    2.8073,  2.7969, 2.7874, 2.7787, 2.7707, 2.7633, 2.7564, 2.7500, 2.7045, 2.6603, 2.6174};

const double* table_for_level(double level) {
    auto close = [&](double v) { return std::abs(level - v) < 1e-9; };
    if (close(0.90))
        return kTable90;
    if (close(0.95))
        return kTable95;
    if (close(0.99))
        return kTable99;
    return nullptr;
}

} // namespace

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        raise(ErrorCode::UnsupportedLevel, "normal quantile requires p in (0,1)");

    // Acklam's rational approximation, then one Halley refinement against
    // erfc for near machine precision.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

double t_critical(int df, double two_sided_level) {
    if (df < 1)
        raise(ErrorCode::InsufficientData, "t critical value requires df >= 1");
    if (!(two_sided_level > 0.0 && two_sided_level < 1.0))
        raise(ErrorCode::UnsupportedLevel, "confidence level must be in (0,1)");

    if (df > kTableDfs[kTableRows - 1])
        return normal_quantile(0.5 + two_sided_level / 2.0);

    const double* table = table_for_level(two_sided_level);
    if (!table)
        raise(ErrorCode::UnsupportedLevel,
              "tabulated levels are 0.90, 0.95 and 0.99 for df <= 120");

    int row = 0;
    while (row < kTableRows && kTableDfs[row] < df)
        ++row;
    if (kTableDfs[row] == df)
        return table[row];
    // Between tabulated rows: linear interpolation in 1/df.
    const int lo = kTableDfs[row - 1], hi = kTableDfs[row];
    const double w = (1.0 / lo - 1.0 / df) / (1.0 / lo - 1.0 / hi);
    return table[row - 1] + w * (table[row] - table[row - 1]);
}

std::vector<ErrorSample> compute_error(const CountVector& observed,
                                       const ExpectedCounts& expected,
                                       const std::string& run_id) {
    std::vector<ErrorSample> samples;
    samples.reserve(kCategoryCount);
    for (auto category : all_categories()) {
        ErrorSample sample;
        sample.run_id = run_id;
        sample.category = category;
        sample.observed = observed[category];
        sample.expected = expected.at(category).mean;
        sample.error = static_cast<double>(sample.observed) - sample.expected;
        if (sample.expected > 0.0)
            sample.relative_error = sample.error / sample.expected;
        samples.push_back(std::move(sample));
    }
    return samples;
}

ErrorStats aggregate_errors(std::span<const ErrorSample> samples, double confidence_level) {
    const int n = static_cast<int>(samples.size());
    if (n < 2)
        raise(ErrorCode::InsufficientData,
              "aggregation requires at least 2 error samples, got " + std::to_string(n));
    if (!(confidence_level > 0.0 && confidence_level < 1.0))
        raise(ErrorCode::UnsupportedLevel, "confidence level must be in (0,1)");

    ErrorStats stats;
    stats.category = samples.front().category;
    stats.n = n;
    stats.confidence_level = confidence_level;

    double sum = 0.0;
    for (const auto& sample : samples)
        sum += sample.error;
    stats.mean_error = sum / n;

    double ss = 0.0;
    for (const auto& sample : samples) {
        double d = sample.error - stats.mean_error;
        ss += d * d;
    }
    stats.sample_std = std::sqrt(ss / (n - 1));
    stats.std_of_mean = stats.sample_std / std::sqrt(static_cast<double>(n));

    const double t = t_critical(n - 1, confidence_level);
    stats.ci_low = stats.mean_error - t * stats.std_of_mean;
    stats.ci_high = stats.mean_error + t * stats.std_of_mean;
    return stats;
}

FrequencyDistribution frequency_distribution(std::span<const ErrorSample> samples,
                                             int bin_count) {
    if (samples.empty())
        raise(ErrorCode::InsufficientData, "frequency distribution requires samples");
    if (bin_count < 1)
        raise(ErrorCode::InsufficientData, "bin_count must be >= 1");

    FrequencyDistribution dist;
    dist.category = samples.front().category;

    double lo = samples.front().error, hi = samples.front().error;
    for (const auto& sample : samples) {
        lo = std::min(lo, sample.error);
        hi = std::max(hi, sample.error);
    }
    if (lo == hi) {
        // Degenerate range: one unit-width bin around the value keeps the
        // edges strictly ascending.
        dist.bin_edges = {lo - 0.5, lo + 0.5};
        dist.counts = {samples.size()};
        return dist;
    }

    const double width = (hi - lo) / bin_count;
    for (int i = 0; i <= bin_count; ++i)
        dist.bin_edges.push_back(i == bin_count ? hi : lo + width * i);
    dist.counts.assign(static_cast<std::size_t>(bin_count), 0);
    for (const auto& sample : samples) {
        auto bin = static_cast<int>((sample.error - lo) / width);
        bin = std::clamp(bin, 0, bin_count - 1); // hi lands in the last bin
        ++dist.counts[static_cast<std::size_t>(bin)];
    }
    return dist;
}

Verdict fitness_verdict(const ErrorStats& stats, const VerdictThresholds& thresholds) {
    if (thresholds.abs_mean_max < 0.0 || thresholds.ci_width_max < 0.0)
        raise(ErrorCode::InvalidThresholds, "verdict thresholds must be non-negative");
    Verdict verdict;
    verdict.category = stats.category;

    CriterionResult mean_criterion;
    mean_criterion.name = "abs_mean_error";
    mean_criterion.threshold = thresholds.abs_mean_max;
    mean_criterion.actual = std::abs(stats.mean_error);
    mean_criterion.pass = mean_criterion.actual <= mean_criterion.threshold;

    CriterionResult width_criterion;
    width_criterion.name = "ci_width";
    width_criterion.threshold = thresholds.ci_width_max;
    width_criterion.actual = stats.ci_high - stats.ci_low;
    width_criterion.pass = width_criterion.actual <= width_criterion.threshold;

    verdict.criteria = {mean_criterion, width_criterion};
    verdict.pass = mean_criterion.pass && width_criterion.pass;
    return verdict;
}

namespace {

ordered_json sample_to_json(const ErrorSample& sample) {
    ordered_json doc;
    doc["run_id"] = sample.run_id;
    doc["observed"] = sample.observed;
    doc["expected"] = sample.expected;
    doc["error"] = sample.error;
    if (sample.relative_error)
        doc["relative_error"] = *sample.relative_error;
    else
        doc["relative_error"] = nullptr;
    return doc;
}

ordered_json stats_to_json(const ErrorStats& stats) {
    ordered_json doc;
    doc["n"] = stats.n;
    doc["mean_error"] = stats.mean_error;
    doc["sample_std"] = stats.sample_std;
    doc["std_of_mean"] = stats.std_of_mean;
    doc["confidence_level"] = stats.confidence_level;
    doc["ci_low"] = stats.ci_low;
    doc["ci_high"] = stats.ci_high;
    return doc;
}

ordered_json verdict_to_json(const Verdict& verdict) {
    ordered_json doc;
    doc["pass"] = verdict.pass;
    doc["criteria"] = ordered_json::array();
    for (const auto& criterion : verdict.criteria) {
        ordered_json c;
        c["name"] = criterion.name;
        c["threshold"] = criterion.threshold;
        c["actual"] = criterion.actual;
        c["pass"] = criterion.pass;
        doc["criteria"].push_back(c);
    }
    return doc;
}

} // namespace

ordered_json analyze_experiment(const std::filesystem::path& home,
                                const std::string& experiment_id,
                                const AnalyzeOptions& options) {
    if (options.thresholds.abs_mean_max < 0.0 || options.thresholds.ci_width_max < 0.0)
        raise(ErrorCode::InvalidThresholds, "verdict thresholds must be non-negative");

    Harness harness(home);
    ExperimentPlan plan = harness.load_plan(experiment_id);
    auto records = harness.results(experiment_id);
    OracleStore oracle(home / "oracle" / "records.jsonl");

    // Oracle expectations are per sample; look them up once.
    std::map<std::string, ExpectedCounts> oracle_expected;
    if (options.expected_source == ExpectedSource::Oracle) {
        for (const auto& sample : plan.sample_ids) {
            try {
                oracle_expected.emplace(sample, oracle.expected_counts(sample));
            } catch (const MatefError& e) {
                if (e.code() == ErrorCode::NoOracleData)
                    raise(ErrorCode::MissingExpected,
                          "no oracle data for sample " + sample);
                throw;
            }
        }
    }

    ordered_json doc;
    doc["schema"] = "matef-analysis-1";
    doc["experiment_id"] = experiment_id;
    doc["confidence_level"] = options.confidence_level;
    doc["expected_source"] =
        options.expected_source == ExpectedSource::Oracle ? "oracle" : "ground_truth";
    doc["thresholds"] = {{"abs_mean_max", options.thresholds.abs_mean_max},
                         {"ci_width_max", options.thresholds.ci_width_max}};
    doc["results"] = ordered_json::array();

    for (const auto& tool_id : plan.tool_ids) {
        for (const auto& sample_id : plan.sample_ids) {
            std::array<std::vector<ErrorSample>, kCategoryCount> per_category;
            int completed = 0, failed = 0;
            for (const auto& record : records) {
                if (record.tool_id != tool_id || record.sample_sha256 != sample_id)
                    continue;
                if (record.status == RunStatus::Failed) {
                    ++failed;
                    continue;
                }
                if (record.status != RunStatus::Completed || !record.observed_counts)
                    continue;
                ++completed;

                ExpectedCounts expected;
                if (options.expected_source == ExpectedSource::Oracle) {
                    expected = oracle_expected.at(sample_id);
                } else {
                    if (!record.ground_truth_counts)
                        raise(ErrorCode::MissingExpected,
                              "run " + record.run_id +
                                  " has no ground truth; ground_truth mode needs the sim executor");
                    expected.sample_sha256 = sample_id;
                    for (auto category : all_categories()) {
                        auto& slot = expected.per_category[static_cast<std::size_t>(category)];
                        slot.n_records = 1;
                        slot.mean =
                            static_cast<double>((*record.ground_truth_counts)[category]);
                    }
                }
                for (auto& sample :
                     compute_error(*record.observed_counts, expected, record.run_id))
                    per_category[static_cast<std::size_t>(sample.category)]
                        .push_back(std::move(sample));
            }

            ordered_json result;
            result["tool_id"] = tool_id;
            result["sample_sha256"] = sample_id;
            result["completed_runs"] = completed;
            result["failed_runs"] = failed;
            result["categories"] = ordered_json::array();
            for (auto category : all_categories()) {
                const auto& samples = per_category[static_cast<std::size_t>(category)];
                ordered_json entry;
                entry["category"] = std::string(category_token(category));
                entry["samples"] = ordered_json::array();
                for (const auto& sample : samples)
                    entry["samples"].push_back(sample_to_json(sample));
                double expected_sum = 0.0;
                for (const auto& sample : samples)
                    expected_sum += sample.expected;
                const double expected_mean =
                    samples.empty() ? 0.0 : expected_sum / static_cast<double>(samples.size());
                entry["expected_mean"] = expected_mean;
                if (samples.size() >= 2) {
                    ErrorStats stats = aggregate_errors(samples, options.confidence_level);
                    entry["stats"] = stats_to_json(stats);
                    if (expected_mean > 0.0)
                        entry["mean_relative_error"] = stats.mean_error / expected_mean;
                    else
                        entry["mean_relative_error"] = nullptr;
                    auto dist = frequency_distribution(samples, options.bin_count);
                    entry["distribution"] = {{"bin_edges", dist.bin_edges},
                                             {"counts", dist.counts}};
                    entry["verdict"] = verdict_to_json(
                        fitness_verdict(stats, options.thresholds));
                } else {
                    entry["stats"] = nullptr;
                    entry["mean_relative_error"] = nullptr;
                    entry["distribution"] = nullptr;
                    entry["verdict"] = nullptr;
                    entry["note"] = "insufficient data (fewer than 2 completed runs)";
                }
                result["categories"].push_back(std::move(entry));
            }
            doc["results"].push_back(std::move(result));
        }
    }
    return doc;
}

} // namespace matef
