#include "matef/harness.hpp"

#include "matef/errors.hpp"
#include "matef/fs_util.hpp"
#include "matef/hash.hpp"
#include "matef/library.hpp"
#include "matef/log_ingest.hpp"
#include "matef/netsim.hpp"
#include "matef/rng.hpp"
#include "matef/time_util.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <thread>

namespace matef {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void validate_plan(const ExperimentPlan& plan) {
    if (plan.experiment_id.empty())
        raise(ErrorCode::SchemaError, "experiment_id must be non-empty");
    if (plan.experiment_id.find('/') != std::string::npos)
        raise(ErrorCode::SchemaError, "experiment_id must not contain '/'");
    if (plan.sample_ids.empty())
        raise(ErrorCode::SchemaError, "sample_ids must be non-empty");
    if (plan.tool_ids.empty())
        raise(ErrorCode::SchemaError, "tool_ids must be non-empty");
    if (plan.repetitions < 1)
        raise(ErrorCode::SchemaError, "repetitions must be >= 1");
    if (plan.parallelism < 1)
        raise(ErrorCode::SchemaError, "parallelism must be >= 1");
    if (!(plan.max_run_duration_s > 0.0))
        raise(ErrorCode::SchemaError, "max_run_duration_s must be positive");
    std::set<std::string> samples(plan.sample_ids.begin(), plan.sample_ids.end());
    if (samples.size() != plan.sample_ids.size())
        raise(ErrorCode::SchemaError, "sample_ids contain duplicates");
    std::set<std::string> tools(plan.tool_ids.begin(), plan.tool_ids.end());
    if (tools.size() != plan.tool_ids.size())
        raise(ErrorCode::SchemaError, "tool_ids contain duplicates");
}

std::string canonical_dump(const ordered_json& doc) {
    // Plain json sorts object keys, giving a canonical byte representation.
    return json(doc).dump();
}

} // namespace

ExperimentPlan ExperimentPlan::from_json(const json& doc) {
    if (!doc.is_object())
        raise(ErrorCode::SchemaError, "plan must be a JSON object");
    ExperimentPlan plan;
    try {
        plan.experiment_id = doc.value("experiment_id", "");
        if (doc.contains("sample_ids"))
            plan.sample_ids = doc.at("sample_ids").get<std::vector<std::string>>();
        if (doc.contains("tool_ids"))
            plan.tool_ids = doc.at("tool_ids").get<std::vector<std::string>>();
        plan.repetitions = doc.value("repetitions", 1);
        plan.master_seed = doc.value("master_seed", std::uint64_t(0));
        plan.executor = doc.value("executor", "sim");
        plan.max_run_duration_s = doc.value("max_run_duration_s", 60.0);
        plan.parallelism = doc.value("parallelism", 1);
    } catch (const json::exception& e) {
        raise(ErrorCode::SchemaError, std::string("plan is malformed: ") + e.what());
    }
    validate_plan(plan);
    return plan;
}

ordered_json ExperimentPlan::to_json() const {
    ordered_json doc;
    doc["experiment_id"] = experiment_id;
    doc["sample_ids"] = sample_ids;
    doc["tool_ids"] = tool_ids;
    doc["repetitions"] = repetitions;
    doc["master_seed"] = master_seed;
    doc["executor"] = executor;
    doc["max_run_duration_s"] = max_run_duration_s;
    doc["parallelism"] = parallelism;
    return doc;
}

std::string_view run_status_name(RunStatus status) {
    switch (status) {
    case RunStatus::Planned: return "PLANNED";
    case RunStatus::Completed: return "COMPLETED";
    case RunStatus::Failed: return "FAILED";
    }
    return "UNKNOWN";
}

ordered_json RunRecord::to_json() const {
    ordered_json doc;
    doc["run_id"] = run_id;
    doc["sample_sha256"] = sample_sha256;
    doc["tool_id"] = tool_id;
    doc["rep_index"] = rep_index;
    doc["seed"] = seed;
    doc["status"] = std::string(run_status_name(status));
    if (!status_detail.empty())
        doc["status_detail"] = status_detail;
    if (ground_truth_counts)
        doc["ground_truth_counts"] = ground_truth_counts->to_json();
    if (observed_counts)
        doc["observed_counts"] = observed_counts->to_json();
    doc["log_path"] = log_path;
    doc["config_hash"] = config_hash;
    return doc;
}

RunRecord RunRecord::from_json(const json& doc) {
    RunRecord record;
    record.run_id = doc.at("run_id").get<std::string>();
    record.sample_sha256 = doc.at("sample_sha256").get<std::string>();
    record.tool_id = doc.at("tool_id").get<std::string>();
    record.rep_index = doc.at("rep_index").get<int>();
    record.seed = doc.at("seed").get<std::uint64_t>();
    std::string status = doc.at("status").get<std::string>();
    if (status == "PLANNED")
        record.status = RunStatus::Planned;
    else if (status == "COMPLETED")
        record.status = RunStatus::Completed;
    else if (status == "FAILED")
        record.status = RunStatus::Failed;
    else
        raise(ErrorCode::SchemaError, "unknown run status '" + status + "'");
    record.status_detail = doc.value("status_detail", "");
    if (doc.contains("ground_truth_counts"))
        record.ground_truth_counts = CountVector::from_json(doc.at("ground_truth_counts"));
    if (doc.contains("observed_counts"))
        record.observed_counts = CountVector::from_json(doc.at("observed_counts"));
    record.log_path = doc.value("log_path", "");
    record.config_hash = doc.value("config_hash", "");
    return record;
}

SimExecutor::SimExecutor(ProfileRegistry profiles, ToolRegistry tools)
    : profiles_(std::move(profiles)), tools_(std::move(tools)) {}

void SimExecutor::prepare(const RunContext& ctx) {
    std::error_code ec;
    fs::create_directories(ctx.run_dir, ec);
    if (ec)
        raise(ErrorCode::ExecutorError, "cannot create run directory " + ctx.run_dir.string());
}

void SimExecutor::run(const RunContext& ctx) {
    if (fail_run_ids_.count(ctx.record.run_id))
        raise(ErrorCode::ExecutorError, "fault injection requested for " + ctx.record.run_id);

    if (!profiles_.has(ctx.record.sample_sha256))
        raise(ErrorCode::ExecutorError,
              "no behavior profile registered for sample " + ctx.record.sample_sha256);
    BehaviorProfile profile = profiles_.resolve(ctx.record.sample_sha256);
    ToolModel tool = tools_.resolve(ctx.record.tool_id);

    GroundTruth truth =
        generate_ground_truth(profile, ctx.plan.master_seed, ctx.record.run_id);
    SimulatedLog simulated = simulate_tool(tool, truth, ctx.plan.master_seed);

    atomic_write_file(ctx.run_dir / "tool.log", simulated.log_bytes);

    // The network witness: ground-truth network artifacts as the internet
    // simulation would have logged them.
    std::vector<NetEvent> net_events;
    UnixSeconds at = 1577836800;
    for (const auto& event : truth.events) {
        if (event.category == ArtifactCategory::DnsQuery ||
            event.category == ArtifactCategory::HttpRequest)
            net_events.push_back({at++, event.category, "10.0.0.2", event.detail});
    }
    atomic_write_file(ctx.run_dir / "net.log", net_events_to_csv(net_events));

    RunArtifacts artifacts;
    artifacts.ground_truth_counts = truth.counts;
    artifacts.tool_log = ctx.run_dir / "tool.log";
    artifacts.log_adapter_id = tool.log_format;
    std::lock_guard lock(mutex_);
    pending_[ctx.record.run_id] = std::move(artifacts);
}

RunArtifacts SimExecutor::collect(const RunContext& ctx) {
    std::lock_guard lock(mutex_);
    auto it = pending_.find(ctx.record.run_id);
    if (it == pending_.end())
        raise(ErrorCode::ExecutorError, "no artifacts produced for " + ctx.record.run_id);
    RunArtifacts artifacts = std::move(it->second);
    pending_.erase(it);
    return artifacts;
}

Harness::Harness(fs::path home) : home_(std::move(home)) {}

fs::path Harness::experiment_dir(const std::string& experiment_id) const {
    return home_ / "experiments" / experiment_id;
}

fs::path Harness::run_dir(const std::string& run_id) const {
    return home_ / "experiments" / run_id;
}

std::string Harness::config_hash(const ExperimentPlan& plan) const {
    ordered_json plan_doc = plan.to_json();
    plan_doc.erase("parallelism"); // execution knob, not part of the experiment identity
    std::string material = canonical_dump(plan_doc) + "\n";

    ToolRegistry tools(home_ / "tools");
    for (const auto& tool_id : plan.tool_ids) {
        if (tools.has(tool_id))
            material += canonical_dump(tools.resolve(tool_id).to_json()) + "\n";
    }
    ProfileRegistry profiles(home_ / "profiles");
    for (const auto& sample : plan.sample_ids) {
        if (profiles.has(sample))
            material += canonical_dump(profiles.resolve(sample).to_json()) + "\n";
    }
    return sha256_hex(material);
}

std::vector<RunRecord> Harness::plan_experiment(const ExperimentPlan& plan) {
    validate_plan(plan);

    SampleLibrary library(home_ / "library");
    for (const auto& sample : plan.sample_ids) {
        if (!library.contains(sample))
            raise(ErrorCode::UnknownSample, "sample " + sample + " is not in the library");
    }
    ToolRegistry tools(home_ / "tools");
    AdapterRegistry adapters(home_ / "adapters");
    for (const auto& tool_id : plan.tool_ids) {
        if (!tools.has(tool_id))
            raise(ErrorCode::UnknownTool, "tool " + tool_id + " has no registered model");
        ToolModel model = tools.resolve(tool_id);
        if (!adapters.has(model.log_format))
            raise(ErrorCode::UnknownTool,
                  "tool " + tool_id + " uses unregistered adapter '" + model.log_format + "'");
    }

    if (fs::exists(experiment_dir(plan.experiment_id)))
        raise(ErrorCode::DuplicateExperiment,
              "experiment " + plan.experiment_id + " already exists");

    const std::string fingerprint = config_hash(plan);
    std::vector<RunRecord> records;
    records.reserve(plan.sample_ids.size() * plan.tool_ids.size() *
                    static_cast<std::size_t>(plan.repetitions));
    for (const auto& sample : plan.sample_ids) {
        for (const auto& tool_id : plan.tool_ids) {
            for (int rep = 0; rep < plan.repetitions; ++rep) {
                RunRecord record;
                record.run_id = plan.experiment_id + "/" + sample + "/" + tool_id + "/" +
                                std::to_string(rep);
                record.sample_sha256 = sample;
                record.tool_id = tool_id;
                record.rep_index = rep;
                record.seed = derive_stream_seed(plan.master_seed, record.run_id, "run");
                record.status = RunStatus::Planned;
                record.config_hash = fingerprint;
                records.push_back(std::move(record));
            }
        }
    }

    fs::create_directories(experiment_dir(plan.experiment_id));
    atomic_write_file(experiment_dir(plan.experiment_id) / "plan.json",
                      plan.to_json().dump(2) + "\n");
    persist_records(plan.experiment_id, records);
    return records;
}

std::vector<RunRecord> Harness::execute(const ExperimentPlan& plan,
                                        std::vector<RunRecord> records, Executor& executor) {
    DirectoryLock lock(experiment_dir(plan.experiment_id));

    for (const auto& record : records) {
        if (record.status != RunStatus::Planned)
            raise(ErrorCode::ExecutorError,
                  "run " + record.run_id + " is not PLANNED; experiment already executed");
    }

    AdapterRegistry adapters(home_ / "adapters");
    SystemClock wall;

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t index = next.fetch_add(1);
            if (index >= records.size())
                return;
            RunRecord& record = records[index];
            RunContext ctx{plan, record, home_, run_dir(record.run_id)};
            UnixSeconds started = wall.now();
            try {
                executor.prepare(ctx);
                executor.run(ctx);
                RunArtifacts artifacts = executor.collect(ctx);

                AdapterSpec adapter = adapters.resolve(artifacts.log_adapter_id);
                ParseResult parsed = parse_log(read_file_text(artifacts.tool_log), adapter);
                record.observed_counts = count_artifacts(parsed.events);
                record.ground_truth_counts = artifacts.ground_truth_counts;
                record.log_path =
                    fs::relative(artifacts.tool_log, home_).generic_string();
                record.status = RunStatus::Completed;
            } catch (const std::exception& e) {
                record.status = RunStatus::Failed;
                record.status_detail = e.what();
            }
            // Per-run metadata with wall clock; never part of results.jsonl.
            try {
                ordered_json run_doc = record.to_json();
                run_doc["started_at"] = format_rfc3339(started);
                run_doc["finished_at"] = format_rfc3339(wall.now());
                atomic_write_file(run_dir(record.run_id) / "run.json",
                                  run_doc.dump(2) + "\n");
            } catch (const std::exception&) {
                // run.json is informational; its failure must not fail the run
            }
        }
    };

    const int workers = std::max(1, std::min<int>(plan.parallelism,
                                                  static_cast<int>(records.size())));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i)
        pool.emplace_back(worker);
    for (auto& thread : pool)
        thread.join();

    persist_records(plan.experiment_id, records);
    return records;
}

void Harness::persist_records(const std::string& experiment_id,
                              std::vector<RunRecord> const& records) const {
    std::vector<const RunRecord*> sorted;
    sorted.reserve(records.size());
    for (const auto& record : records)
        sorted.push_back(&record);
    std::sort(sorted.begin(), sorted.end(),
              [](const RunRecord* a, const RunRecord* b) { return a->run_id < b->run_id; });
    std::string lines;
    for (const auto* record : sorted)
        lines += record->to_json().dump() + "\n";
    atomic_write_file(experiment_dir(experiment_id) / "results.jsonl", lines);
}

std::vector<RunRecord> Harness::results(const std::string& experiment_id) const {
    auto path = experiment_dir(experiment_id) / "results.jsonl";
    if (!fs::exists(path))
        raise(ErrorCode::UnknownExperiment, "no experiment named " + experiment_id);
    std::vector<RunRecord> records;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        try {
            records.push_back(RunRecord::from_json(json::parse(line)));
        } catch (const json::exception& e) {
            raise(ErrorCode::SchemaError,
                  "results.jsonl for " + experiment_id + " is corrupt: " + e.what());
        }
    }
    std::sort(records.begin(), records.end(),
              [](const RunRecord& a, const RunRecord& b) { return a.run_id < b.run_id; });
    return records;
}

ExperimentPlan Harness::load_plan(const std::string& experiment_id) const {
    auto path = experiment_dir(experiment_id) / "plan.json";
    if (!fs::exists(path))
        raise(ErrorCode::UnknownExperiment, "no experiment named " + experiment_id);
    try {
        return ExperimentPlan::from_json(json::parse(read_file_text(path)));
    } catch (const json::exception& e) {
        raise(ErrorCode::SchemaError,
              "plan.json for " + experiment_id + " is corrupt: " + e.what());
    }
}

void Harness::update_record(const RunRecord& record) {
    auto slash = record.run_id.find('/');
    if (slash == std::string::npos)
        raise(ErrorCode::SchemaError, "run_id has no experiment prefix: " + record.run_id);
    std::string experiment_id = record.run_id.substr(0, slash);
    auto records = results(experiment_id);
    bool replaced = false;
    for (auto& existing : records) {
        if (existing.run_id == record.run_id) {
            existing = record;
            replaced = true;
            break;
        }
    }
    if (!replaced)
        raise(ErrorCode::NotFound, "no run record with id " + record.run_id);
    persist_records(experiment_id, records);
}

} // namespace matef
