#include "matef/oracle.hpp"

#include "matef/errors.hpp"
#include "matef/fs_util.hpp"
#include "matef/hash.hpp"
#include "matef/library.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace matef {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kSchemaId = "matef-oracle-1";

OracleRecord record_from_json_inner(const json& doc);

OracleRecord record_from_json(const json& doc) {
    try {
        return record_from_json_inner(doc);
    } catch (const json::exception& e) {
        raise(ErrorCode::SchemaError, std::string("oracle report is malformed: ") + e.what());
    }
}

OracleRecord record_from_json_inner(const json& doc) {
    if (!doc.is_object())
        raise(ErrorCode::SchemaError, "oracle report must be a JSON object");
    if (doc.value("schema", "") != kSchemaId)
        raise(ErrorCode::SchemaError, "oracle report schema must be '" + std::string(kSchemaId) + "'");
    for (const char* field : {"sample_sha256", "source_id", "captured_at", "run_duration_s", "counts"}) {
        if (!doc.contains(field))
            raise(ErrorCode::SchemaError, std::string("oracle report is missing '") + field + "'");
    }
    OracleRecord record;
    record.sample_sha256 = doc.at("sample_sha256").get<std::string>();
    if (!is_sha256_hex(record.sample_sha256))
        raise(ErrorCode::SchemaError, "sample_sha256 must be 64 lowercase hex characters");
    record.source_id = doc.at("source_id").get<std::string>();
    if (record.source_id.empty())
        raise(ErrorCode::SchemaError, "source_id must be non-empty");
    auto captured = parse_rfc3339(doc.at("captured_at").get<std::string>());
    if (!captured)
        raise(ErrorCode::SchemaError, "captured_at must be an RFC 3339 UTC timestamp");
    record.captured_at = *captured;
    if (!doc.at("run_duration_s").is_number())
        raise(ErrorCode::SchemaError, "run_duration_s must be a number");
    record.run_duration_s = doc.at("run_duration_s").get<double>();
    if (!(record.run_duration_s > 0.0))
        raise(ErrorCode::SchemaError, "run_duration_s must be positive");
    record.counts = CountVector::from_json(doc.at("counts"));
    return record;
}

ordered_json record_to_json(const OracleRecord& record) {
    ordered_json doc;
    doc["schema"] = kSchemaId;
    doc["sample_sha256"] = record.sample_sha256;
    doc["source_id"] = record.source_id;
    doc["captured_at"] = format_rfc3339(record.captured_at);
    doc["run_duration_s"] = record.run_duration_s;
    doc["counts"] = record.counts.to_json();
    return doc;
}

} // namespace

OracleStore::OracleStore(fs::path records_path) : records_path_(std::move(records_path)) {}

std::vector<OracleRecord> OracleStore::load_all() const {
    std::vector<OracleRecord> records;
    if (!fs::exists(records_path_))
        return records;
    std::ifstream in(records_path_);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty())
            continue;
        try {
            records.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception&) {
            raise(ErrorCode::SchemaError,
                  "oracle store line " + std::to_string(line_number) + " is not valid JSON");
        }
    }
    return records;
}

OracleRecord OracleStore::ingest(const json& document, const SampleLibrary& library) {
    OracleRecord record = record_from_json(document);
    if (!library.contains(record.sample_sha256))
        raise(ErrorCode::UnknownSample,
              "sample " + record.sample_sha256 + " is not in the library");
    DirectoryLock lock(records_path_.parent_path()); // serialized appends
    for (const auto& existing : load_all()) {
        if (existing.sample_sha256 == record.sample_sha256 &&
            existing.source_id == record.source_id &&
            existing.captured_at == record.captured_at)
            raise(ErrorCode::DuplicateRecord,
                  "oracle record for (" + record.sample_sha256 + ", " + record.source_id +
                      ", " + format_rfc3339(record.captured_at) + ") already ingested");
    }
    append_line(records_path_, record_to_json(record).dump());
    return record;
}

ExpectedCounts OracleStore::expected_counts(const std::string& sample_sha256) const {
    auto records = records_for(sample_sha256);
    if (records.empty())
        raise(ErrorCode::NoOracleData, "no oracle records for sample " + sample_sha256);

    ExpectedCounts expected;
    expected.sample_sha256 = sample_sha256;
    const auto n = static_cast<int>(records.size());
    for (auto category : all_categories()) {
        auto& slot = expected.per_category[static_cast<std::size_t>(category)];
        slot.n_records = n;
        double sum = 0.0;
        for (const auto& record : records)
            sum += static_cast<double>(record.counts[category]);
        slot.mean = sum / n;
        if (n >= 2) {
            double ss = 0.0;
            for (const auto& record : records) {
                double d = static_cast<double>(record.counts[category]) - slot.mean;
                ss += d * d;
            }
            slot.sample_std = std::sqrt(ss / (n - 1));
        }
    }
    return expected;
}

std::vector<OracleRecord> OracleStore::records_for(const std::string& sample_sha256) const {
    std::vector<OracleRecord> out;
    for (auto& record : load_all()) {
        if (record.sample_sha256 == sample_sha256)
            out.push_back(std::move(record));
    }
    return out;
}

std::map<std::string, int> OracleStore::provenance_for(const std::string& sample_sha256) const {
    std::map<std::string, int> out;
    for (const auto& record : records_for(sample_sha256))
        ++out[record.source_id];
    return out;
}

} // namespace matef
