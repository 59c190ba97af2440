#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "matef/category.hpp"
#include "matef/time_util.hpp"

namespace matef {

class SampleLibrary;

/// One independent-source observation of a sample's artifact quantities.
struct OracleRecord {
    std::string sample_sha256;
    std::string source_id;
    UnixSeconds captured_at = 0;
    double run_duration_s = 0.0;
    CountVector counts;
};

struct CategoryExpectation {
    int n_records = 0;
    double mean = 0.0;                // this is E
    std::optional<double> sample_std; // undefined when n_records < 2
};

/// Aggregated expected quantities for one sample; every category is reported,
/// with absence in a record counted as an observation of zero.
struct ExpectedCounts {
    std::string sample_sha256;
    std::array<CategoryExpectation, kCategoryCount> per_category;

    const CategoryExpectation& at(ArtifactCategory c) const {
        return per_category[static_cast<std::size_t>(c)];
    }
};

/// Append-only store of oracle reports (<MATEF_HOME>/oracle/records.jsonl).
class OracleStore {
public:
    explicit OracleStore(std::filesystem::path records_path);

    /// Validates against the matef-oracle-1 schema and appends. Duplicate
    /// (sample, source_id, captured_at) triples are rejected.
    OracleRecord ingest(const nlohmann::json& document, const SampleLibrary& library);

    ExpectedCounts expected_counts(const std::string& sample_sha256) const;

    std::vector<OracleRecord> records_for(const std::string& sample_sha256) const;

    /// source_id -> record count, for provenance reporting.
    std::map<std::string, int> provenance_for(const std::string& sample_sha256) const;

private:
    std::vector<OracleRecord> load_all() const;

    std::filesystem::path records_path_;
};

} // namespace matef
