#include "matef/behavior.hpp"

#include "matef/errors.hpp"
#include "matef/fs_util.hpp"
#include "matef/log_ingest.hpp"
#include "matef/rng.hpp"

#include <sstream>

namespace matef {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Knuth's method multiplies uniforms against exp(-lambda); keep rates in a
// range where that stays exact and fast.
constexpr double kMaxPoissonRate = 500.0;

// Synthetic log timestamps count up from a fixed instant; wall clock never
// enters simulated output.
constexpr UnixSeconds kSyntheticLogEpoch = 1577836800; // 2020-01-01T00:00:00Z

void validate_distribution(const Distribution& dist, const std::string& context) {
    switch (dist.kind) {
    case Distribution::Kind::Constant:
        if (dist.constant < 0)
            raise(ErrorCode::InvalidProfile, context + ": constant must be non-negative");
        break;
    case Distribution::Kind::Uniform:
        if (dist.low < 0 || dist.high < dist.low)
            raise(ErrorCode::InvalidProfile, context + ": uniform requires 0 <= a <= b");
        break;
    case Distribution::Kind::Poisson:
        if (dist.lambda < 0.0)
            raise(ErrorCode::InvalidProfile, context + ": poisson rate must be non-negative");
        if (dist.lambda > kMaxPoissonRate)
            raise(ErrorCode::InvalidProfile,
                  context + ": poisson rate above supported maximum " +
                      std::to_string(kMaxPoissonRate));
        break;
    }
}

std::int64_t draw_count(const Distribution& dist, RandomStream& stream) {
    switch (dist.kind) {
    case Distribution::Kind::Constant:
        return dist.constant;
    case Distribution::Kind::Uniform:
        return stream.uniform_int(dist.low, dist.high);
    case Distribution::Kind::Poisson:
        return static_cast<std::int64_t>(stream.poisson(dist.lambda));
    }
    return 0;
}

std::string render_log(const std::vector<TruthEvent>& events, const ToolModel& model) {
    std::ostringstream log;
    UnixSeconds at = kSyntheticLogEpoch;
    if (model.log_format == "matef-csv-1") {
        for (const auto& event : events) {
            log << matef_csv_line(at++, model.tool_id, 1000,
                                  operation_token(event.category), event.detail, "SUCCESS")
                << '\n';
        }
    } else if (model.log_format == "plain-lines-1") {
        for (const auto& event : events) {
            log << format_rfc3339(at++) << ' ' << model.tool_id << "[1000] "
                << operation_token(event.category) << ' ' << event.detail << " SUCCESS\n";
        }
    } else {
        raise(ErrorCode::UnsupportedLogFormat,
              "tool " + model.tool_id + " requests unknown log format '" + model.log_format + "'");
    }
    return log.str();
}

} // namespace

static BehaviorProfile profile_from_json_inner(const json& doc) {
    if (!doc.is_object())
        raise(ErrorCode::InvalidProfile, "profile must be a JSON object");
    BehaviorProfile profile;
    profile.profile_id = doc.value("profile_id", "");
    if (profile.profile_id.empty())
        raise(ErrorCode::InvalidProfile, "profile_id must be non-empty");
    if (!doc.contains("distributions") || !doc.at("distributions").is_object())
        raise(ErrorCode::InvalidProfile, "profile requires a distributions object");
    for (const auto& [token, spec] : doc.at("distributions").items()) {
        auto category = category_from_token(token);
        if (!category)
            raise(ErrorCode::InvalidProfile, "unknown category '" + token + "' in profile");
        Distribution dist;
        std::string kind = spec.value("kind", "");
        if (kind == "constant") {
            dist.kind = Distribution::Kind::Constant;
            if (!spec.contains("k"))
                raise(ErrorCode::InvalidProfile, token + ": constant requires 'k'");
            dist.constant = spec.at("k").get<std::int64_t>();
        } else if (kind == "uniform") {
            dist.kind = Distribution::Kind::Uniform;
            if (!spec.contains("a") || !spec.contains("b"))
                raise(ErrorCode::InvalidProfile, token + ": uniform requires 'a' and 'b'");
            dist.low = spec.at("a").get<std::int64_t>();
            dist.high = spec.at("b").get<std::int64_t>();
        } else if (kind == "poisson") {
            dist.kind = Distribution::Kind::Poisson;
            if (!spec.contains("lambda"))
                raise(ErrorCode::InvalidProfile, token + ": poisson requires 'lambda'");
            dist.lambda = spec.at("lambda").get<double>();
        } else {
            raise(ErrorCode::InvalidProfile, token + ": unknown distribution kind '" + kind + "'");
        }
        validate_distribution(dist, profile.profile_id + "/" + token);
        profile.distributions[*category] = dist;
    }
    return profile;
}

BehaviorProfile BehaviorProfile::from_json(const json& doc) {
    try {
        return profile_from_json_inner(doc);
    } catch (const json::exception& e) {
        raise(ErrorCode::InvalidProfile, std::string("profile is malformed: ") + e.what());
    }
}

ordered_json BehaviorProfile::to_json() const {
    ordered_json doc;
    doc["profile_id"] = profile_id;
    ordered_json dists = ordered_json::object();
    for (auto category : all_categories()) {
        auto it = distributions.find(category);
        if (it == distributions.end())
            continue;
        ordered_json spec;
        switch (it->second.kind) {
        case Distribution::Kind::Constant:
            spec["kind"] = "constant";
            spec["k"] = it->second.constant;
            break;
        case Distribution::Kind::Uniform:
            spec["kind"] = "uniform";
            spec["a"] = it->second.low;
            spec["b"] = it->second.high;
            break;
        case Distribution::Kind::Poisson:
            spec["kind"] = "poisson";
            spec["lambda"] = it->second.lambda;
            break;
        }
        dists[std::string(category_token(category))] = spec;
    }
    doc["distributions"] = dists;
    return doc;
}

static ToolModel tool_from_json_inner(const json& doc) {
    if (!doc.is_object())
        raise(ErrorCode::SchemaError, "tool model must be a JSON object");
    ToolModel model;
    model.tool_id = doc.value("tool_id", "");
    if (model.tool_id.empty())
        raise(ErrorCode::SchemaError, "tool_id must be non-empty");
    if (doc.contains("detection")) {
        for (const auto& [token, value] : doc.at("detection").items()) {
            auto category = category_from_token(token);
            if (!category)
                raise(ErrorCode::SchemaError, "unknown category '" + token + "' in detection map");
            double p = value.get<double>();
            if (p < 0.0 || p > 1.0)
                raise(ErrorCode::SchemaError, token + ": detection probability must be in [0,1]");
            model.detection_prob[static_cast<std::size_t>(*category)] = p;
        }
    }
    if (doc.contains("false_positives")) {
        for (const auto& [token, value] : doc.at("false_positives").items()) {
            auto category = category_from_token(token);
            if (!category)
                raise(ErrorCode::SchemaError,
                      "unknown category '" + token + "' in false_positives map");
            double rate = value.get<double>();
            if (rate < 0.0 || rate > kMaxPoissonRate)
                raise(ErrorCode::SchemaError,
                      token + ": false positive rate must be in [0," +
                          std::to_string(kMaxPoissonRate) + "]");
            model.false_positive_rate[static_cast<std::size_t>(*category)] = rate;
        }
    }
    model.log_format = doc.value("log_format", "matef-csv-1");
    if (model.log_format.empty())
        raise(ErrorCode::SchemaError, "log_format must be non-empty");
    return model;
}

ToolModel ToolModel::from_json(const json& doc) {
    try {
        return tool_from_json_inner(doc);
    } catch (const json::exception& e) {
        raise(ErrorCode::SchemaError, std::string("tool model is malformed: ") + e.what());
    }
}

ordered_json ToolModel::to_json() const {
    ordered_json doc;
    doc["tool_id"] = tool_id;
    ordered_json detection = ordered_json::object();
    ordered_json fps = ordered_json::object();
    for (auto category : all_categories()) {
        if (p(category) != 1.0)
            detection[std::string(category_token(category))] = p(category);
        if (fp(category) != 0.0)
            fps[std::string(category_token(category))] = fp(category);
    }
    doc["detection"] = detection;
    doc["false_positives"] = fps;
    doc["log_format"] = log_format;
    return doc;
}

GroundTruth generate_ground_truth(const BehaviorProfile& profile, std::uint64_t master_seed,
                                  std::string_view run_id) {
    for (const auto& [category, dist] : profile.distributions)
        validate_distribution(dist, profile.profile_id + "/" +
                                        std::string(category_token(category)));
    GroundTruth truth;
    truth.run_id = std::string(run_id);
    for (auto category : all_categories()) {
        auto it = profile.distributions.find(category);
        if (it == profile.distributions.end())
            continue;
        std::string purpose = "truth/" + std::string(category_token(category));
        RandomStream stream(derive_stream_seed(master_seed, run_id, purpose));
        auto count = draw_count(it->second, stream);
        for (std::int64_t i = 0; i < count; ++i) {
            truth.events.push_back(
                {category, std::string(category_token(category)) + "#" + std::to_string(i)});
        }
        truth.counts[category] = static_cast<std::uint64_t>(count);
    }
    return truth;
}

SimulatedLog simulate_tool(const ToolModel& model, const GroundTruth& truth,
                           std::uint64_t master_seed) {
    for (auto category : all_categories()) {
        if (model.p(category) < 0.0 || model.p(category) > 1.0)
            raise(ErrorCode::SchemaError, "tool model detection probability out of range");
        if (model.fp(category) < 0.0)
            raise(ErrorCode::SchemaError, "tool model false positive rate negative");
    }

    std::array<std::optional<RandomStream>, kCategoryCount> detect_streams;
    auto detect_stream = [&](ArtifactCategory c) -> RandomStream& {
        auto& slot = detect_streams[static_cast<std::size_t>(c)];
        if (!slot) {
            std::string purpose =
                "detect/" + model.tool_id + "/" + std::string(category_token(c));
            slot.emplace(derive_stream_seed(master_seed, truth.run_id, purpose));
        }
        return *slot;
    };

    std::vector<TruthEvent> observed;
    for (const auto& event : truth.events) {
        if (detect_stream(event.category).bernoulli(model.p(event.category)))
            observed.push_back(event);
    }
    for (auto category : all_categories()) {
        double rate = model.fp(category);
        if (rate <= 0.0)
            continue;
        std::string purpose =
            "fp/" + model.tool_id + "/" + std::string(category_token(category));
        RandomStream stream(derive_stream_seed(master_seed, truth.run_id, purpose));
        auto spurious = stream.poisson(rate);
        for (std::uint64_t i = 0; i < spurious; ++i)
            observed.push_back({category, "fp#" + std::to_string(i)});
    }

    SimulatedLog out;
    out.log_bytes = render_log(observed, model);
    for (const auto& event : observed)
        ++out.internal_counts[event.category];
    return out;
}

std::vector<std::string> shipped_log_formats() {
    return {"matef-csv-1", "plain-lines-1"};
}

ProfileRegistry::ProfileRegistry(fs::path directory) : directory_(std::move(directory)) {}

void ProfileRegistry::register_profile(const BehaviorProfile& profile) {
    BehaviorProfile validated = BehaviorProfile::from_json(profile.to_json());
    atomic_write_file(directory_ / (validated.profile_id + ".json"),
                      validated.to_json().dump(2) + "\n");
}

BehaviorProfile ProfileRegistry::resolve(const std::string& profile_id) const {
    auto path = directory_ / (profile_id + ".json");
    if (!fs::exists(path))
        raise(ErrorCode::NotFound, "no profile registered with id '" + profile_id + "'");
    try {
        return BehaviorProfile::from_json(json::parse(read_file_text(path)));
    } catch (const json::exception& e) {
        raise(ErrorCode::InvalidProfile,
              "profile file " + path.string() + " is not valid JSON: " + e.what());
    }
}

bool ProfileRegistry::has(const std::string& profile_id) const {
    return fs::exists(directory_ / (profile_id + ".json"));
}

ToolRegistry::ToolRegistry(fs::path directory) : directory_(std::move(directory)) {}

void ToolRegistry::register_tool(const ToolModel& model) {
    ToolModel validated = ToolModel::from_json(model.to_json());
    atomic_write_file(directory_ / (validated.tool_id + ".json"),
                      validated.to_json().dump(2) + "\n");
}

ToolModel ToolRegistry::resolve(const std::string& tool_id) const {
    auto path = directory_ / (tool_id + ".json");
    if (!fs::exists(path))
        raise(ErrorCode::UnknownTool, "no tool model registered with id '" + tool_id + "'");
    try {
        return ToolModel::from_json(json::parse(read_file_text(path)));
    } catch (const json::exception& e) {
        raise(ErrorCode::SchemaError,
              "tool model file " + path.string() + " is not valid JSON: " + e.what());
    }
}

bool ToolRegistry::has(const std::string& tool_id) const {
    return fs::exists(directory_ / (tool_id + ".json"));
}

} // namespace matef
