#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include <json.hpp>

namespace matef {

/// Closed set of artifact categories. Enumeration order is canonical: category
/// streams, serialized count maps and report tables all follow it.
enum class ArtifactCategory : int {
    FileCreated,
    FileModified,
    FileDeleted,
    RegCreated,
    RegModified,
    RegDeleted,
    ProcSpawned,
    PortOpened,
    DnsQuery,
    HttpRequest,
};

inline constexpr int kCategoryCount = 10;

constexpr std::array<ArtifactCategory, kCategoryCount> all_categories() {
    return {
        ArtifactCategory::FileCreated,  ArtifactCategory::FileModified,
        ArtifactCategory::FileDeleted,  ArtifactCategory::RegCreated,
        ArtifactCategory::RegModified,  ArtifactCategory::RegDeleted,
        ArtifactCategory::ProcSpawned,  ArtifactCategory::PortOpened,
        ArtifactCategory::DnsQuery,     ArtifactCategory::HttpRequest,
    };
}

std::string_view category_token(ArtifactCategory category);
std::optional<ArtifactCategory> category_from_token(std::string_view token);

/// Per-category non-negative counts; absent categories are zero. Houses both
/// the observed quantity O and ground-truth tallies.
class CountVector {
public:
    std::uint64_t& operator[](ArtifactCategory c) {
        return counts_[static_cast<std::size_t>(c)];
    }
    std::uint64_t operator[](ArtifactCategory c) const {
        return counts_[static_cast<std::size_t>(c)];
    }

    std::uint64_t total() const;

    CountVector& operator+=(const CountVector& other);

    bool operator==(const CountVector&) const = default;

    /// Serializes nonzero entries only, in canonical category order.
    nlohmann::ordered_json to_json() const;

    /// Rejects unknown tokens, negative values and non-integers.
    static CountVector from_json(const nlohmann::json& doc);

private:
    std::array<std::uint64_t, kCategoryCount> counts_{};
};

} // namespace matef
