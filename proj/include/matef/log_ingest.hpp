#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "matef/category.hpp"
#include "matef/time_util.hpp"

namespace matef {

struct ArtifactEvent {
    std::optional<UnixSeconds> at;
    std::optional<std::string> process;
    ArtifactCategory category = ArtifactCategory::FileCreated;
    std::string detail;
};

/// Adapter for one text log format. matef-csv-1 maps fixed comma-separated
/// columns; generic-lines-1 applies a regex with named captures so third-party
/// tool logs are onboarded without code changes.
struct AdapterSpec {
    enum class Format { MatefCsv1, GenericLines1 };

    struct Columns {
        int timestamp = 0;
        int process = 1;
        int pid = 2;
        int operation = 3;
        int detail = 4;
        int result = 5;
    };

    std::string adapter_id;
    Format format = Format::MatefCsv1;
    Columns columns;                    // matef-csv-1 only
    std::string pattern;                // generic-lines-1 only; named groups
                                        // (?<operation>) and (?<detail>) required,
                                        // (?<timestamp>), (?<process>), (?<result>) optional
    std::map<std::string, ArtifactCategory> operation_map;
    bool strict = false;

    /// Throws InvalidAdapter on malformed specs (bad category token, regex
    /// that does not compile, missing required capture groups).
    static AdapterSpec from_json(const nlohmann::json& doc);
    nlohmann::ordered_json to_json() const;

    /// Canonical token -> category map shared by both builtin adapters.
    static const std::map<std::string, ArtifactCategory>& canonical_operation_map();
};

struct ParseResult {
    std::vector<ArtifactEvent> events;
    std::size_t skipped = 0; // structurally unmappable lines + unknown operation tokens
};

/// Maps each line through the adapter. Rows whose result field is present and
/// not SUCCESS parse cleanly but produce no event. Strict mode raises
/// ParseError with a 1-based line number exactly where lenient mode would
/// skip a structurally malformed line; unknown operation tokens are always
/// skipped-with-count so unanticipated tool chatter cannot abort ingestion.
ParseResult parse_log(std::string_view bytes, const AdapterSpec& adapter);

CountVector count_artifacts(const std::vector<ArtifactEvent>& events);

/// Renders one matef-csv-1 row. Commas and control characters in fields are
/// replaced with '_' since the format is unquoted.
std::string matef_csv_line(UnixSeconds at, std::string_view process, std::uint64_t pid,
                           std::string_view operation, std::string_view detail,
                           std::string_view result);

/// Category -> canonical matef-csv-1 operation token (FILE_CREATED -> FILE_CREATE...).
std::string_view operation_token(ArtifactCategory category);

/// Directory-backed adapter registry (<MATEF_HOME>/adapters/*.json) with the
/// two builtin adapters always resolvable: "matef-csv-1" and "plain-lines-1".
/// Registered files override builtins of the same id.
class AdapterRegistry {
public:
    explicit AdapterRegistry(std::filesystem::path directory);

    /// Persists the spec; re-registering an id replaces it.
    std::string register_adapter(const AdapterSpec& spec);

    AdapterSpec resolve(const std::string& adapter_id) const;
    bool has(const std::string& adapter_id) const;

    static AdapterSpec builtin_matef_csv_1();
    static AdapterSpec builtin_plain_lines_1();

private:
    std::filesystem::path directory_;
};

} // namespace matef
