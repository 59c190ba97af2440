#include "matef/log_ingest.hpp"

#include "matef/errors.hpp"
#include "matef/fs_util.hpp"

#include <algorithm>
#include <regex>
#include <sstream>

namespace matef {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string sanitize_field(std::string_view field) {
    std::string out(field);
    for (char& c : out) {
        if (c == ',' || c == '\n' || c == '\r')
            c = '_';
    }
    return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    // Trailing newline leaves one empty tail segment; drop it.
    if (!lines.empty() && lines.back().empty())
        lines.pop_back();
    for (auto& line : lines) {
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
    }
    return lines;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t end = line.find(',', start);
        if (end == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, end - start));
        start = end + 1;
    }
    return fields;
}

[[noreturn]] void parse_failure(bool strict_unused, std::size_t line_number, const std::string& why) {
    (void)strict_unused;
    raise(ErrorCode::ParseError, "line " + std::to_string(line_number) + ": " + why);
}

// std::regex has no named capture groups, so (?<name>...) and (?P<name>...)
// are rewritten to plain capturing groups with a name -> submatch-index map.
// Group numbering is unchanged by the rewrite.
struct NamedPattern {
    std::string translated;
    std::map<std::string, int> group_index; // 1-based submatch indices
};

NamedPattern translate_named_pattern(const std::string& pattern) {
    NamedPattern out;
    int group = 0;
    bool in_class = false;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        char c = pattern[i];
        if (c == '\\' && i + 1 < pattern.size()) {
            out.translated += c;
            out.translated += pattern[i + 1];
            ++i;
            continue;
        }
        if (in_class) {
            if (c == ']')
                in_class = false;
            out.translated += c;
            continue;
        }
        if (c == '[') {
            in_class = true;
            out.translated += c;
            continue;
        }
        if (c != '(') {
            out.translated += c;
            continue;
        }
        if (i + 1 < pattern.size() && pattern[i + 1] == '?') {
            std::size_t name_at = 0;
            if (i + 2 < pattern.size() && pattern[i + 2] == '<') {
                if (i + 3 < pattern.size() && (pattern[i + 3] == '=' || pattern[i + 3] == '!'))
                    raise(ErrorCode::InvalidAdapter,
                          "lookbehind is not supported in adapter patterns");
                name_at = i + 3;
            } else if (i + 3 < pattern.size() && pattern[i + 2] == 'P' &&
                       pattern[i + 3] == '<') {
                name_at = i + 4;
            }
            if (name_at == 0) {
                out.translated += c; // (?: (?= (?! pass through, non-capturing
                continue;
            }
            auto close = pattern.find('>', name_at);
            if (close == std::string::npos || close == name_at)
                raise(ErrorCode::InvalidAdapter, "unterminated capture group name");
            std::string name = pattern.substr(name_at, close - name_at);
            for (std::size_t j = 0; j < name.size(); ++j) {
                char n = name[j];
                bool ok = n == '_' || (n >= 'a' && n <= 'z') || (n >= 'A' && n <= 'Z') ||
                          (j > 0 && n >= '0' && n <= '9');
                if (!ok)
                    raise(ErrorCode::InvalidAdapter, "invalid capture group name '" + name + "'");
            }
            ++group;
            if (!out.group_index.emplace(name, group).second)
                raise(ErrorCode::InvalidAdapter, "duplicate capture group name '" + name + "'");
            out.translated += '(';
            i = close; // resume after '>'
            continue;
        }
        ++group;
        out.translated += c;
    }
    return out;
}

std::regex compile_pattern(const NamedPattern& pattern) {
    try {
        return std::regex(pattern.translated, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
        raise(ErrorCode::InvalidAdapter, std::string("pattern does not compile: ") + e.what());
    }
}

struct LineOutcome {
    std::optional<ArtifactEvent> event; // set when the line yields an artifact
    bool skipped = false;
    std::string error; // non-empty when structurally malformed
};

LineOutcome map_csv_line(std::string_view line, const AdapterSpec& adapter) {
    LineOutcome out;
    auto fields = split_csv(line);
    const auto& cols = adapter.columns;
    int needed = std::max({cols.timestamp, cols.process, cols.pid, cols.operation,
                           cols.detail, cols.result}) + 1;
    if (static_cast<int>(fields.size()) < needed) {
        out.error = "expected at least " + std::to_string(needed) + " fields, got " +
                    std::to_string(fields.size());
        return out;
    }
    std::string op(fields[static_cast<std::size_t>(cols.operation)]);
    auto mapped = adapter.operation_map.find(op);
    if (mapped == adapter.operation_map.end()) {
        out.skipped = true; // unknown token: never a hard error
        return out;
    }
    if (fields[static_cast<std::size_t>(cols.result)] != "SUCCESS")
        return out; // valid row, not counted
    ArtifactEvent event;
    event.category = mapped->second;
    event.detail = std::string(fields[static_cast<std::size_t>(cols.detail)]);
    event.at = parse_rfc3339(fields[static_cast<std::size_t>(cols.timestamp)]);
    event.process = std::string(fields[static_cast<std::size_t>(cols.process)]);
    out.event = std::move(event);
    return out;
}

LineOutcome map_generic_line(std::string_view line, const AdapterSpec& adapter,
                             const NamedPattern& names, const std::regex& pattern) {
    LineOutcome out;
    std::cmatch match;
    if (!std::regex_match(line.begin(), line.end(), match, pattern)) {
        out.error = "line does not match adapter pattern";
        return out;
    }
    auto group = [&](const char* name) -> std::optional<std::string> {
        auto it = names.group_index.find(name);
        if (it == names.group_index.end())
            return std::nullopt;
        const auto& sub = match[static_cast<std::size_t>(it->second)];
        if (!sub.matched)
            return std::nullopt;
        return std::string(sub.first, sub.second);
    };
    auto op = group("operation");
    if (!op) {
        out.error = "pattern matched but captured no operation";
        return out;
    }
    auto mapped = adapter.operation_map.find(*op);
    if (mapped == adapter.operation_map.end()) {
        out.skipped = true;
        return out;
    }
    if (auto result = group("result"); result && *result != "SUCCESS")
        return out;
    ArtifactEvent event;
    event.category = mapped->second;
    if (auto detail = group("detail"))
        event.detail = *detail;
    if (auto ts = group("timestamp"))
        event.at = parse_rfc3339(*ts);
    event.process = group("process");
    out.event = std::move(event);
    return out;
}

} // namespace

const std::map<std::string, ArtifactCategory>& AdapterSpec::canonical_operation_map() {
    static const std::map<std::string, ArtifactCategory> kMap = {
        {"FILE_CREATE", ArtifactCategory::FileCreated},
        {"FILE_WRITE", ArtifactCategory::FileModified},
        {"FILE_DELETE", ArtifactCategory::FileDeleted},
        {"REG_CREATE", ArtifactCategory::RegCreated},
        {"REG_SET", ArtifactCategory::RegModified},
        {"REG_DELETE", ArtifactCategory::RegDeleted},
        {"PROC_START", ArtifactCategory::ProcSpawned},
        {"PORT_OPEN", ArtifactCategory::PortOpened},
        {"DNS", ArtifactCategory::DnsQuery},
        {"HTTP", ArtifactCategory::HttpRequest},
    };
    return kMap;
}

static AdapterSpec adapter_from_json_inner(const json& doc) {
    if (!doc.is_object())
        raise(ErrorCode::InvalidAdapter, "adapter spec must be a JSON object");
    AdapterSpec spec;
    spec.adapter_id = doc.value("adapter_id", "");
    if (spec.adapter_id.empty())
        raise(ErrorCode::InvalidAdapter, "adapter_id must be non-empty");
    std::string format = doc.value("format", "");
    if (format == "matef-csv-1") {
        spec.format = AdapterSpec::Format::MatefCsv1;
    } else if (format == "generic-lines-1") {
        spec.format = AdapterSpec::Format::GenericLines1;
    } else {
        raise(ErrorCode::InvalidAdapter, "unknown adapter format '" + format + "'");
    }
    if (doc.contains("columns")) {
        const auto& cols = doc.at("columns");
        spec.columns.timestamp = cols.value("timestamp", spec.columns.timestamp);
        spec.columns.process = cols.value("process", spec.columns.process);
        spec.columns.pid = cols.value("pid", spec.columns.pid);
        spec.columns.operation = cols.value("operation", spec.columns.operation);
        spec.columns.detail = cols.value("detail", spec.columns.detail);
        spec.columns.result = cols.value("result", spec.columns.result);
        for (int index : {spec.columns.timestamp, spec.columns.process, spec.columns.pid,
                          spec.columns.operation, spec.columns.detail, spec.columns.result}) {
            if (index < 0)
                raise(ErrorCode::InvalidAdapter, "column indices must be non-negative");
        }
    }
    if (spec.format == AdapterSpec::Format::GenericLines1) {
        spec.pattern = doc.value("pattern", "");
        if (spec.pattern.empty())
            raise(ErrorCode::InvalidAdapter, "generic-lines-1 adapter requires a pattern");
        NamedPattern names = translate_named_pattern(spec.pattern);
        compile_pattern(names);
        for (const char* required : {"operation", "detail"}) {
            if (!names.group_index.count(required))
                raise(ErrorCode::InvalidAdapter,
                      std::string("pattern is missing required capture group (?<") + required + ">)");
        }
    }
    if (!doc.contains("operation_map") || !doc.at("operation_map").is_object())
        raise(ErrorCode::InvalidAdapter, "operation_map must be an object");
    for (const auto& [token, value] : doc.at("operation_map").items()) {
        auto category = category_from_token(value.get<std::string>());
        if (!category)
            raise(ErrorCode::InvalidAdapter,
                  "operation_map value for '" + token + "' is not a valid category");
        spec.operation_map[token] = *category;
    }
    if (spec.operation_map.empty())
        raise(ErrorCode::InvalidAdapter, "operation_map must not be empty");
    spec.strict = doc.value("strict", false);
    return spec;
}

AdapterSpec AdapterSpec::from_json(const json& doc) {
    try {
        return adapter_from_json_inner(doc);
    } catch (const json::exception& e) {
        raise(ErrorCode::InvalidAdapter, std::string("adapter spec is malformed: ") + e.what());
    }
}

ordered_json AdapterSpec::to_json() const {
    ordered_json doc;
    doc["adapter_id"] = adapter_id;
    doc["format"] = format == Format::MatefCsv1 ? "matef-csv-1" : "generic-lines-1";
    if (format == Format::MatefCsv1) {
        doc["columns"] = {{"timestamp", columns.timestamp}, {"process", columns.process},
                          {"pid", columns.pid},             {"operation", columns.operation},
                          {"detail", columns.detail},       {"result", columns.result}};
    } else {
        doc["pattern"] = pattern;
    }
    ordered_json map = ordered_json::object();
    for (const auto& [token, category] : operation_map)
        map[token] = std::string(category_token(category));
    doc["operation_map"] = map;
    doc["strict"] = strict;
    return doc;
}

ParseResult parse_log(std::string_view bytes, const AdapterSpec& adapter) {
    ParseResult result;
    NamedPattern names;
    std::regex pattern;
    if (adapter.format == AdapterSpec::Format::GenericLines1) {
        names = translate_named_pattern(adapter.pattern);
        pattern = compile_pattern(names);
    }
    std::size_t line_number = 0;
    for (auto line : split_lines(bytes)) {
        ++line_number;
        if (line.empty())
            continue;
        LineOutcome outcome = adapter.format == AdapterSpec::Format::MatefCsv1
                                  ? map_csv_line(line, adapter)
                                  : map_generic_line(line, adapter, names, pattern);
        if (!outcome.error.empty()) {
            if (adapter.strict)
                parse_failure(true, line_number, outcome.error);
            ++result.skipped;
            continue;
        }
        if (outcome.skipped) {
            ++result.skipped;
            continue;
        }
        if (outcome.event)
            result.events.push_back(std::move(*outcome.event));
    }
    return result;
}

CountVector count_artifacts(const std::vector<ArtifactEvent>& events) {
    CountVector counts;
    for (const auto& event : events)
        ++counts[event.category];
    return counts;
}

std::string matef_csv_line(UnixSeconds at, std::string_view process, std::uint64_t pid,
                           std::string_view operation, std::string_view detail,
                           std::string_view result) {
    std::ostringstream line;
    line << format_rfc3339(at) << ',' << sanitize_field(process) << ',' << pid << ','
         << sanitize_field(operation) << ',' << sanitize_field(detail) << ','
         << sanitize_field(result);
    return line.str();
}

std::string_view operation_token(ArtifactCategory category) {
    switch (category) {
    case ArtifactCategory::FileCreated: return "FILE_CREATE";
    case ArtifactCategory::FileModified: return "FILE_WRITE";
    case ArtifactCategory::FileDeleted: return "FILE_DELETE";
    case ArtifactCategory::RegCreated: return "REG_CREATE";
    case ArtifactCategory::RegModified: return "REG_SET";
    case ArtifactCategory::RegDeleted: return "REG_DELETE";
    case ArtifactCategory::ProcSpawned: return "PROC_START";
    case ArtifactCategory::PortOpened: return "PORT_OPEN";
    case ArtifactCategory::DnsQuery: return "DNS";
    case ArtifactCategory::HttpRequest: return "HTTP";
    }
    return "UNKNOWN";
}

AdapterRegistry::AdapterRegistry(fs::path directory) : directory_(std::move(directory)) {}

std::string AdapterRegistry::register_adapter(const AdapterSpec& spec) {
    if (spec.adapter_id.find('/') != std::string::npos)
        raise(ErrorCode::InvalidAdapter, "adapter_id must not contain '/'");
    // Round-trip through from_json so file-backed and in-memory specs pass
    // the same validation.
    AdapterSpec validated = AdapterSpec::from_json(spec.to_json());
    atomic_write_file(directory_ / (validated.adapter_id + ".json"),
                      validated.to_json().dump(2) + "\n");
    return validated.adapter_id;
}

AdapterSpec AdapterRegistry::resolve(const std::string& adapter_id) const {
    auto path = directory_ / (adapter_id + ".json");
    if (fs::exists(path)) {
        try {
            return AdapterSpec::from_json(json::parse(read_file_text(path)));
        } catch (const json::exception& e) {
            raise(ErrorCode::InvalidAdapter,
                  "adapter file " + path.string() + " is not valid JSON: " + e.what());
        }
    }
    if (adapter_id == "matef-csv-1")
        return builtin_matef_csv_1();
    if (adapter_id == "plain-lines-1")
        return builtin_plain_lines_1();
    raise(ErrorCode::NotFound, "no adapter registered with id '" + adapter_id + "'");
}

bool AdapterRegistry::has(const std::string& adapter_id) const {
    if (adapter_id == "matef-csv-1" || adapter_id == "plain-lines-1")
        return true;
    return fs::exists(directory_ / (adapter_id + ".json"));
}

AdapterSpec AdapterRegistry::builtin_matef_csv_1() {
    AdapterSpec spec;
    spec.adapter_id = "matef-csv-1";
    spec.format = AdapterSpec::Format::MatefCsv1;
    spec.operation_map = AdapterSpec::canonical_operation_map();
    return spec;
}

AdapterSpec AdapterRegistry::builtin_plain_lines_1() {
    AdapterSpec spec;
    spec.adapter_id = "plain-lines-1";
    spec.format = AdapterSpec::Format::GenericLines1;
    spec.pattern = "^(?<timestamp>\\S+) (?<process>\\S+)\\[(?<pid>\\d+)\\] "
                   "(?<operation>[A-Z_]+) (?<detail>.*) (?<result>\\S+)$";
    spec.operation_map = AdapterSpec::canonical_operation_map();
    return spec;
}

} // namespace matef
