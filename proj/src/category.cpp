#include "matef/category.hpp"

#include "matef/errors.hpp"

namespace matef {

namespace {

constexpr std::array<std::string_view, kCategoryCount> kTokens = {
    "FILE_CREATED", "FILE_MODIFIED", "FILE_DELETED",
    "REG_CREATED",  "REG_MODIFIED",  "REG_DELETED",
    "PROC_SPAWNED", "PORT_OPENED",   "DNS_QUERY",    "HTTP_REQUEST",
};

} // namespace

std::string_view category_token(ArtifactCategory category) {
    return kTokens[static_cast<std::size_t>(category)];
}

std::optional<ArtifactCategory> category_from_token(std::string_view token) {
    for (int i = 0; i < kCategoryCount; ++i) {
        if (kTokens[static_cast<std::size_t>(i)] == token)
            return static_cast<ArtifactCategory>(i);
    }
    return std::nullopt;
}

std::uint64_t CountVector::total() const {
    std::uint64_t sum = 0;
    for (auto v : counts_)
        sum += v;
    return sum;
}

CountVector& CountVector::operator+=(const CountVector& other) {
    for (std::size_t i = 0; i < counts_.size(); ++i)
        counts_[i] += other.counts_[i];
    return *this;
}

nlohmann::ordered_json CountVector::to_json() const {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    for (auto c : all_categories()) {
        if ((*this)[c] != 0)
            doc[std::string(category_token(c))] = (*this)[c];
    }
    return doc;
}

CountVector CountVector::from_json(const nlohmann::json& doc) {
    if (!doc.is_object())
        raise(ErrorCode::SchemaError, "counts must be a JSON object");
    CountVector out;
    for (const auto& [key, value] : doc.items()) {
        auto category = category_from_token(key);
        if (!category)
            raise(ErrorCode::SchemaError, "unknown artifact category '" + key + "'");
        if (!value.is_number_integer() || value.is_number_float())
            raise(ErrorCode::SchemaError, "count for " + key + " must be an integer");
        if (value.is_number_integer() && !value.is_number_unsigned() &&
            value.get<std::int64_t>() < 0)
            raise(ErrorCode::SchemaError, "count for " + key + " must be non-negative");
        out[*category] = value.get<std::uint64_t>();
    }
    return out;
}

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidSample: return "InvalidSample";
    case ErrorCode::StorageError: return "StorageError";
    case ErrorCode::ManifestCorrupt: return "ManifestCorrupt";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::ContainerUnreadable: return "ContainerUnreadable";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::UnknownSample: return "UnknownSample";
    case ErrorCode::DuplicateRecord: return "DuplicateRecord";
    case ErrorCode::NoOracleData: return "NoOracleData";
    case ErrorCode::InvalidProfile: return "InvalidProfile";
    case ErrorCode::UnsupportedLogFormat: return "UnsupportedLogFormat";
    case ErrorCode::UnknownTool: return "UnknownTool";
    case ErrorCode::DuplicateExperiment: return "DuplicateExperiment";
    case ErrorCode::UnknownExperiment: return "UnknownExperiment";
    case ErrorCode::ExecutorError: return "ExecutorError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidAdapter: return "InvalidAdapter";
    case ErrorCode::MissingExpected: return "MissingExpected";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::UnsupportedLevel: return "UnsupportedLevel";
    case ErrorCode::InvalidThresholds: return "InvalidThresholds";
    case ErrorCode::IncompleteAnalysis: return "IncompleteAnalysis";
    }
    return "UnknownError";
}

} // namespace matef
