#include "matef/library.hpp"

#include "matef/errors.hpp"
#include "matef/fs_util.hpp"
#include "matef/hash.hpp"
#include "matef/zip_container.hpp"

#include <json.hpp>

#include <algorithm>

namespace matef {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json record_to_json(const SampleRecord& record, bool include_imported_at) {
    ordered_json doc;
    doc["sha256"] = record.sha256;
    doc["original_name"] = record.original_name;
    doc["size_bytes"] = record.size_bytes;
    if (include_imported_at)
        doc["imported_at"] = format_rfc3339(record.imported_at);
    doc["tags"] = record.tags; // std::set keeps tags sorted
    return doc;
}

SampleRecord record_from_json(const json& doc) {
    SampleRecord record;
    if (!doc.is_object() || !doc.contains("sha256") || !doc.contains("original_name") ||
        !doc.contains("size_bytes") || !doc.contains("imported_at") || !doc.contains("tags"))
        raise(ErrorCode::ManifestCorrupt, "manifest entry is missing required fields");
    record.sha256 = doc.at("sha256").get<std::string>();
    if (!is_sha256_hex(record.sha256))
        raise(ErrorCode::ManifestCorrupt, "manifest entry has a malformed sha256");
    record.original_name = doc.at("original_name").get<std::string>();
    record.size_bytes = doc.at("size_bytes").get<std::uint64_t>();
    if (record.size_bytes == 0)
        raise(ErrorCode::ManifestCorrupt, "manifest entry has size_bytes == 0");
    auto imported = parse_rfc3339(doc.at("imported_at").get<std::string>());
    if (!imported)
        raise(ErrorCode::ManifestCorrupt, "manifest entry has a malformed imported_at");
    record.imported_at = *imported;
    for (const auto& tag : doc.at("tags"))
        record.tags.insert(tag.get<std::string>());
    record.container_path = "samples/" + record.sha256 + ".zip";
    return record;
}

} // namespace

SampleLibrary::SampleLibrary(fs::path root, std::string default_password,
                             std::shared_ptr<Clock> clock)
    : root_(std::move(root)),
      default_password_(std::move(default_password)),
      clock_(clock ? std::move(clock) : std::shared_ptr<Clock>(default_clock())) {}

fs::path SampleLibrary::manifest_path() const {
    return root_ / "manifest.json";
}

fs::path SampleLibrary::container_path(const std::string& sha256) const {
    return root_ / "samples" / (sha256 + ".zip");
}

std::vector<SampleRecord> SampleLibrary::load_manifest() const {
    if (!fs::exists(manifest_path()))
        return {};
    json doc;
    try {
        doc = json::parse(read_file_text(manifest_path()));
    } catch (const json::exception& e) {
        raise(ErrorCode::ManifestCorrupt, std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("manifest_version", 0) != 1 || !doc.contains("entries"))
        raise(ErrorCode::ManifestCorrupt, "manifest header is invalid");
    std::vector<SampleRecord> records;
    try {
        for (const auto& entry : doc.at("entries"))
            records.push_back(record_from_json(entry));
    } catch (const json::exception& e) {
        raise(ErrorCode::ManifestCorrupt, std::string("manifest entry is malformed: ") + e.what());
    }
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i - 1].sha256 >= records[i].sha256)
            raise(ErrorCode::ManifestCorrupt, "manifest entries are not strictly sorted by sha256");
    }
    return records;
}

void SampleLibrary::save_manifest(const std::vector<SampleRecord>& records) const {
    ordered_json doc;
    doc["manifest_version"] = 1;
    doc["created_at"] = format_rfc3339(clock_->now());
    doc["entries"] = ordered_json::array();
    for (const auto& record : records)
        doc["entries"].push_back(record_to_json(record, true));
    atomic_write_file(manifest_path(), doc.dump(2) + "\n");
}

SampleRecord SampleLibrary::import_sample(std::span<const std::uint8_t> bytes,
                                          const std::string& original_name,
                                          const std::string& password,
                                          const std::set<std::string>& tags) {
    if (bytes.empty())
        raise(ErrorCode::InvalidSample, "sample bytes are empty");
    const std::string& effective_password = password.empty() ? default_password_ : password;
    if (effective_password.empty())
        raise(ErrorCode::InvalidSample, "container password is empty");

    DirectoryLock lock(root_); // single writer

    const std::string digest = sha256_hex(bytes);
    auto records = load_manifest();
    auto existing = std::find_if(records.begin(), records.end(),
                                 [&](const SampleRecord& r) { return r.sha256 == digest; });
    if (existing != records.end())
        return *existing;

    auto archive = write_encrypted_container(digest + ".bin", bytes, effective_password);
    atomic_write_file(container_path(digest), archive);

    SampleRecord record;
    record.sha256 = digest;
    record.original_name = original_name;
    record.size_bytes = bytes.size();
    record.imported_at = clock_->now();
    record.tags = tags;
    record.container_path = "samples/" + digest + ".zip";

    records.push_back(record);
    std::sort(records.begin(), records.end(),
              [](const SampleRecord& a, const SampleRecord& b) { return a.sha256 < b.sha256; });
    save_manifest(records);
    return record;
}

IntegrityReport SampleLibrary::verify_integrity(const std::string& sha256,
                                                const std::string& password) const {
    auto record = find(sha256);
    if (!record)
        raise(ErrorCode::NotFound, "no sample with sha256 " + sha256);

    auto path = container_path(sha256);
    if (!fs::exists(path))
        raise(ErrorCode::ContainerUnreadable, "container file missing: " + path.string());
    auto archive = read_file_bytes(path);
    auto entry = read_encrypted_container(
        archive, password.empty() ? default_password_ : password);
    if (entry.name != sha256 + ".bin")
        raise(ErrorCode::ContainerUnreadable,
              "container entry name mismatch: " + entry.name);

    IntegrityReport report;
    report.stored_sha256 = sha256;
    report.recomputed_sha256 = sha256_hex(entry.payload);
    report.ok = report.recomputed_sha256 == sha256;
    return report;
}

std::string SampleLibrary::export_dataset_manifest() const {
    auto records = load_manifest();
    for (const auto& record : records) {
        if (!fs::exists(container_path(record.sha256)))
            raise(ErrorCode::ManifestCorrupt,
                  "container missing for manifest entry " + record.sha256);
    }
    ordered_json doc;
    doc["manifest_version"] = 1;
    doc["entries"] = ordered_json::array();
    for (const auto& record : records)
        doc["entries"].push_back(record_to_json(record, false));
    return doc.dump(2) + "\n";
}

std::vector<SampleRecord> SampleLibrary::entries() const {
    return load_manifest();
}

bool SampleLibrary::contains(const std::string& sha256) const {
    return find(sha256).has_value();
}

std::optional<SampleRecord> SampleLibrary::find(const std::string& sha256) const {
    for (auto& record : load_manifest()) {
        if (record.sha256 == sha256)
            return record;
    }
    return std::nullopt;
}

} // namespace matef
