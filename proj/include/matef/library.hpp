#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "matef/time_util.hpp"

namespace matef {

inline constexpr const char* kDefaultContainerPassword = "infected";

/// One immutable, hash-identified binary held in the library.
struct SampleRecord {
    std::string sha256;
    std::string original_name;
    std::uint64_t size_bytes = 0;
    UnixSeconds imported_at = 0;
    std::set<std::string> tags;
    std::string container_path; // library-relative, always samples/<sha256>.zip
};

struct IntegrityReport {
    bool ok = false;
    std::string stored_sha256;     // the manifest key
    std::string recomputed_sha256; // digest of the decrypted entry bytes
};

/// Content-addressed store of malware binaries in password-protected zip
/// containers, with a single sorted JSON manifest. Single writer, many
/// readers; the manifest is replaced atomically.
class SampleLibrary {
public:
    /// root is the library directory, e.g. <MATEF_HOME>/library.
    explicit SampleLibrary(std::filesystem::path root,
                           std::string default_password = kDefaultContainerPassword,
                           std::shared_ptr<Clock> clock = nullptr);

    /// Content-addressed and idempotent: re-importing identical bytes returns
    /// the existing record without touching the container.
    SampleRecord import_sample(std::span<const std::uint8_t> bytes,
                               const std::string& original_name,
                               const std::string& password = "",
                               const std::set<std::string>& tags = {});

    /// Decrypts the stored entry, recomputes its digest and compares against
    /// the manifest key.
    IntegrityReport verify_integrity(const std::string& sha256,
                                     const std::string& password = "") const;

    /// Canonical manifest document: sorted by sha256, timestamps excluded, so
    /// identical entry sets serialize to identical bytes.
    std::string export_dataset_manifest() const;

    std::vector<SampleRecord> entries() const;
    bool contains(const std::string& sha256) const;
    std::optional<SampleRecord> find(const std::string& sha256) const;

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path manifest_path() const;
    std::filesystem::path container_path(const std::string& sha256) const;
    std::vector<SampleRecord> load_manifest() const;
    void save_manifest(const std::vector<SampleRecord>& records) const;

    std::filesystem::path root_;
    std::string default_password_;
    std::shared_ptr<Clock> clock_;
};

} // namespace matef
