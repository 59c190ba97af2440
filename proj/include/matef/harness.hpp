#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "matef/behavior.hpp"
#include "matef/category.hpp"

namespace matef {

/// Experiment matrix: samples x tools x repetitions under one master seed.
struct ExperimentPlan {
    std::string experiment_id;
    std::vector<std::string> sample_ids;
    std::vector<std::string> tool_ids;
    int repetitions = 1;
    std::uint64_t master_seed = 0;
    std::string executor = "sim";
    double max_run_duration_s = 60.0;
    int parallelism = 1;

    static ExperimentPlan from_json(const nlohmann::json& doc); // SchemaError
    nlohmann::ordered_json to_json() const;
};

enum class RunStatus { Planned, Completed, Failed };

std::string_view run_status_name(RunStatus status);

/// One execution of one sample under one tool. Persisted records carry no
/// wall-clock fields, so results.jsonl is byte-stable across reruns; wall
/// clock lives only in each run directory's run.json.
struct RunRecord {
    std::string run_id; // <experiment_id>/<sample>/<tool>/<rep_index>
    std::string sample_sha256;
    std::string tool_id;
    int rep_index = 0;
    std::uint64_t seed = 0;
    RunStatus status = RunStatus::Planned;
    std::string status_detail; // failure reason, set when Failed
    std::optional<CountVector> ground_truth_counts; // absent for non-sim executors
    std::optional<CountVector> observed_counts;     // absent until ingestion
    std::string log_path; // MATEF_HOME-relative
    std::string config_hash;

    nlohmann::ordered_json to_json() const;
    static RunRecord from_json(const nlohmann::json& doc);
};

struct RunContext {
    const ExperimentPlan& plan;
    const RunRecord& record;
    std::filesystem::path home;
    std::filesystem::path run_dir;
};

struct RunArtifacts {
    std::optional<CountVector> ground_truth_counts;
    std::filesystem::path tool_log; // produced log to ingest
    std::string log_adapter_id;
};

/// Executor contract: prepare the run directory, run the sample under the
/// tool, collect the produced logs. A real-VM driver implements the same
/// three steps; only the simulator ships.
class Executor {
public:
    virtual ~Executor() = default;
    virtual void prepare(const RunContext& ctx) = 0;
    virtual void run(const RunContext& ctx) = 0;
    virtual RunArtifacts collect(const RunContext& ctx) = 0;
};

/// Reference executor: generates seeded ground truth from the sample's
/// behavior profile (profile_id == sample sha256), simulates the tool and
/// writes tool.log plus net.log into the run directory.
class SimExecutor : public Executor {
public:
    SimExecutor(ProfileRegistry profiles, ToolRegistry tools);

    /// Fault-injection hook: listed run_ids raise ExecutorError inside run().
    void fail_runs(std::set<std::string> run_ids) { fail_run_ids_ = std::move(run_ids); }

    void prepare(const RunContext& ctx) override;
    void run(const RunContext& ctx) override;
    RunArtifacts collect(const RunContext& ctx) override;

private:
    ProfileRegistry profiles_;
    ToolRegistry tools_;
    std::set<std::string> fail_run_ids_;
    std::mutex mutex_;
    std::map<std::string, RunArtifacts> pending_; // run_id -> artifacts from run()
};

/// Plans and executes experiments under <MATEF_HOME>/experiments, persisting
/// RunRecords to results.jsonl before and after execution.
class Harness {
public:
    explicit Harness(std::filesystem::path home);

    /// Persists plan.json and all PLANNED records before any execution.
    std::vector<RunRecord> plan_experiment(const ExperimentPlan& plan);

    /// Executes every PLANNED record on a bounded worker pool; one failed run
    /// never aborts its siblings. Final records are persisted sorted by
    /// run_id.
    std::vector<RunRecord> execute(const ExperimentPlan& plan, std::vector<RunRecord> records,
                                   Executor& executor);

    std::vector<RunRecord> results(const std::string& experiment_id) const;
    ExperimentPlan load_plan(const std::string& experiment_id) const;

    /// Replaces one record (matched by run_id) and persists; used by external
    /// log ingestion.
    void update_record(const RunRecord& record);

    std::filesystem::path experiment_dir(const std::string& experiment_id) const;
    std::filesystem::path run_dir(const std::string& run_id) const;

    /// Reproducibility fingerprint: SHA-256 over the canonicalized plan
    /// (parallelism excluded) plus every referenced tool model and behavior
    /// profile document.
    std::string config_hash(const ExperimentPlan& plan) const;

private:
    void persist_records(const std::string& experiment_id,
                         const std::vector<RunRecord>& records) const;

    std::filesystem::path home_;
};

} // namespace matef
