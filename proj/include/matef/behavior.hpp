#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "matef/category.hpp"

namespace matef {

/// Per-category count distribution. Parameters are validated at load; Poisson
/// rates are capped well below exp() underflow since draws use Knuth's method.
struct Distribution {
    enum class Kind { Constant, Uniform, Poisson };
    Kind kind = Kind::Constant;
    std::int64_t constant = 0;
    std::int64_t low = 0, high = 0; // Uniform, inclusive
    double lambda = 0.0;
};

/// Controllable model of one sample's nondeterministic behavior: how many
/// artifacts of each category a run generates.
struct BehaviorProfile {
    std::string profile_id;
    std::map<ArtifactCategory, Distribution> distributions;

    static BehaviorProfile from_json(const nlohmann::json& doc); // InvalidProfile
    nlohmann::ordered_json to_json() const;
};

/// Imperfect observer standing in for a tool under test: per-category
/// detection probability plus a Poisson rate of spurious events per run.
/// Unlisted categories default to p = 1 and fp = 0.
struct ToolModel {
    std::string tool_id;
    std::array<double, kCategoryCount> detection_prob;
    std::array<double, kCategoryCount> false_positive_rate;
    std::string log_format = "matef-csv-1"; // adapter identifier

    ToolModel() {
        detection_prob.fill(1.0);
        false_positive_rate.fill(0.0);
    }

    double p(ArtifactCategory c) const { return detection_prob[static_cast<std::size_t>(c)]; }
    double fp(ArtifactCategory c) const { return false_positive_rate[static_cast<std::size_t>(c)]; }

    static ToolModel from_json(const nlohmann::json& doc); // SchemaError
    nlohmann::ordered_json to_json() const;
};

struct TruthEvent {
    ArtifactCategory category;
    std::string detail;
};

/// The actual events of one simulated run; directly known only here.
struct GroundTruth {
    std::string run_id;
    std::vector<TruthEvent> events;
    CountVector counts;
};

/// Deterministic given (profile, master_seed, run_id). Category draws use one
/// stream per (run, category), seeded in canonical enumeration order, so
/// adding a category never perturbs existing streams.
GroundTruth generate_ground_truth(const BehaviorProfile& profile, std::uint64_t master_seed,
                                  std::string_view run_id);

struct SimulatedLog {
    std::string log_bytes;
    CountVector internal_counts;
};

/// Applies the tool model to the ground truth: each event detected with its
/// category's probability, spurious events drawn Poisson(fp), all rendered in
/// the model's log format. Deterministic given (model, truth, master_seed).
SimulatedLog simulate_tool(const ToolModel& model, const GroundTruth& truth,
                           std::uint64_t master_seed);

/// Log formats the simulator can render; each id is also a resolvable
/// adapter id so round-trip parsing holds.
std::vector<std::string> shipped_log_formats();

/// Directory-backed registries (<MATEF_HOME>/profiles, <MATEF_HOME>/tools).
class ProfileRegistry {
public:
    explicit ProfileRegistry(std::filesystem::path directory);
    void register_profile(const BehaviorProfile& profile);
    BehaviorProfile resolve(const std::string& profile_id) const; // InvalidProfile / NotFound
    bool has(const std::string& profile_id) const;

private:
    std::filesystem::path directory_;
};

class ToolRegistry {
public:
    explicit ToolRegistry(std::filesystem::path directory);
    void register_tool(const ToolModel& model);
    ToolModel resolve(const std::string& tool_id) const; // UnknownTool
    bool has(const std::string& tool_id) const;

private:
    std::filesystem::path directory_;
};

} // namespace matef
