#include <doctest.h>

#include "matef/errors.hpp"
#include "matef/fs_util.hpp"
#include "matef/harness.hpp"
#include "matef/rng.hpp"

#include "test_fixture.hpp"

using namespace matef;

namespace {

ExperimentPlan small_plan(const test::SimHome& fixture, const std::string& id,
                          int repetitions = 3) {
    ExperimentPlan plan;
    plan.experiment_id = id;
    plan.sample_ids = fixture.samples;
    plan.tool_ids = {"perfect"};
    plan.repetitions = repetitions;
    plan.master_seed = 4242;
    plan.max_run_duration_s = 30.0;
    return plan;
}

std::string results_bytes(const std::filesystem::path& home, const std::string& id) {
    return read_file_text(home / "experiments" / id / "results.jsonl");
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("planning produces the full matrix, persisted as PLANNED") {
    test::SimHome fixture;
    fixture.add_sample("s1", test::mixed_profile());
    fixture.add_sample("s2", test::mixed_profile());
    fixture.add_tool(test::perfect_tool("perfect"));

    Harness harness(fixture.home());
    auto records = harness.plan_experiment(small_plan(fixture, "exp-plan"));
    CHECK(records.size() == 6); // 2 samples x 1 tool x 3 reps
    for (const auto& record : records) {
        CHECK(record.status == RunStatus::Planned);
        CHECK(record.seed ==
              derive_stream_seed(4242, record.run_id, "run"));
        CHECK_FALSE(record.config_hash.empty());
    }
    auto loaded = harness.results("exp-plan");
    CHECK(loaded.size() == 6);
}

TEST_CASE("unknown tool fails planning atomically") {
    test::SimHome fixture;
    fixture.add_sample("s1", test::mixed_profile());

    Harness harness(fixture.home());
    auto plan = small_plan(fixture, "exp-unknown-tool");
    plan.tool_ids = {"ghost"};
    try {
        harness.plan_experiment(plan);
        FAIL("expected UnknownTool");
    } catch (const MatefError& e) {
        CHECK(e.code() == ErrorCode::UnknownTool);
    }
    CHECK_FALSE(std::filesystem::exists(fixture.home() / "experiments" / "exp-unknown-tool"));
}

TEST_CASE("unknown sample fails planning") {
    test::SimHome fixture;
    fixture.add_sample("s1", test::mixed_profile());
    fixture.add_tool(test::perfect_tool("perfect"));

    Harness harness(fixture.home());
    auto plan = small_plan(fixture, "exp-unknown-sample");
    plan.sample_ids.push_back(std::string(64, 'f'));
    try {
        harness.plan_experiment(plan);
        FAIL("expected UnknownSample");
    } catch (const MatefError& e) {
        CHECK(e.code() == ErrorCode::UnknownSample);
    }
}

TEST_CASE("replanning the same experiment id is rejected") {
    test::SimHome fixture;
    fixture.add_sample("s1", test::mixed_profile());
    fixture.add_tool(test::perfect_tool("perfect"));

    Harness harness(fixture.home());
    harness.plan_experiment(small_plan(fixture, "exp-dup"));
    try {
        harness.plan_experiment(small_plan(fixture, "exp-dup"));
        FAIL("expected DuplicateExperiment");
    } catch (const MatefError& e) {
        CHECK(e.code() == ErrorCode::DuplicateExperiment);
    }
}

TEST_CASE("executing an all-sim plan completes every run with observed counts") {
    test::SimHome fixture;
    fixture.add_sample("s1", test::mixed_profile());
    fixture.add_sample("s2", test::mixed_profile());
    fixture.add_tool(test::perfect_tool("perfect"));

    Harness harness(fixture.home());
    auto plan = small_plan(fixture, "exp-run");
    auto records = harness.plan_experiment(plan);
    SimExecutor executor(ProfileRegistry(fixture.home() / "profiles"),
                         ToolRegistry(fixture.home() / "tools"));
    records = harness.execute(plan, std::move(records), executor);

    CHECK(records.size() == 6);
    for (const auto& record : records) {
        CHECK(record.status == RunStatus::Completed);
        REQUIRE(record.observed_counts.has_value());
        REQUIRE(record.ground_truth_counts.has_value());
        // perfect tool: observed equals truth
        CHECK(*record.observed_counts == *record.ground_truth_counts);
        CHECK(std::filesystem::exists(fixture.home() / record.log_path));
        CHECK(std::filesystem::exists(harness.run_dir(record.run_id) / "net.log"));
        CHECK(std::filesystem::exists(harness.run_dir(record.run_id) / "run.json"));
    }
}

TEST_CASE("a failing run is isolated from its siblings") {
    test::SimHome fixture;
    fixture.add_sample("s1", test::mixed_profile());
    fixture.add_sample("s2", test::mixed_profile());
    fixture.add_tool(test::perfect_tool("perfect"));

    Harness harness(fixture.home());
    auto plan = small_plan(fixture, "exp-fault");
    auto records = harness.plan_experiment(plan);
    SimExecutor executor(ProfileRegistry(fixture.home() / "profiles"),
                         ToolRegistry(fixture.home() / "tools"));
    executor.fail_runs({records[2].run_id});
    records = harness.execute(plan, std::move(records), executor);

    int failed = 0, completed = 0;
    for (const auto& record : records) {
        if (record.status == RunStatus::Failed) {
            ++failed;
            CHECK(record.status_detail.find("fault injection") != std::string::npos);
            CHECK_FALSE(record.observed_counts.has_value());
        } else {
            CHECK(record.status == RunStatus::Completed);
            ++completed;
        }
    }
    CHECK(failed == 1);
    CHECK(completed == 5);
}

TEST_CASE("rerunning the same plan in a fresh home is byte-identical") {
    auto run_once = [](const std::string& filler) {
        test::SimHome fixture;
        fixture.add_sample("alpha", test::mixed_profile());
        fixture.add_tool(test::lossy_tool("lossy", 0.75, 0.5));
        ExperimentPlan plan;
        plan.experiment_id = "exp-det";
        plan.sample_ids = fixture.samples;
        plan.tool_ids = {"lossy"};
        plan.repetitions = 10;
        plan.master_seed = 777;
        plan.max_run_duration_s = 30.0;
        Harness harness(fixture.home());
        auto records = harness.plan_experiment(plan);
        SimExecutor executor(ProfileRegistry(fixture.home() / "profiles"),
                             ToolRegistry(fixture.home() / "tools"));
        harness.execute(plan, std::move(records), executor);
        (void)filler;
        return results_bytes(fixture.home(), "exp-det");
    };
    CHECK(run_once("a") == run_once("b"));
}

TEST_CASE("scheduling independence: parallelism 1 and 8 persist identical results") {
    auto run_with = [](int parallelism) {
        test::SimHome fixture;
        fixture.add_sample("alpha", test::mixed_profile());
        fixture.add_sample("beta", test::mixed_profile());
        fixture.add_tool(test::lossy_tool("lossy", 0.6, 1.0));
        ExperimentPlan plan;
        plan.experiment_id = "exp-sched";
        plan.sample_ids = fixture.samples;
        plan.tool_ids = {"lossy"};
        plan.repetitions = 8;
        plan.master_seed = 31337;
        plan.max_run_duration_s = 30.0;
        plan.parallelism = parallelism;
        Harness harness(fixture.home());
        auto records = harness.plan_experiment(plan);
        SimExecutor executor(ProfileRegistry(fixture.home() / "profiles"),
                             ToolRegistry(fixture.home() / "tools"));
        harness.execute(plan, std::move(records), executor);
        return results_bytes(fixture.home(), "exp-sched");
    };
    CHECK(run_with(1) == run_with(8));
}

TEST_CASE("config hash fingerprints plan, tool and profile changes") {
    test::SimHome fixture;
    fixture.add_sample("s1", test::mixed_profile());
    fixture.add_tool(test::perfect_tool("perfect"));
    Harness harness(fixture.home());
    auto plan = small_plan(fixture, "exp-hash");
    auto base = harness.config_hash(plan);

    SUBCASE("plan change") {
        plan.repetitions += 1;
        CHECK(harness.config_hash(plan) != base);
    }
    SUBCASE("master seed change") {
        plan.master_seed += 1;
        CHECK(harness.config_hash(plan) != base);
    }
    SUBCASE("parallelism is excluded") {
        plan.parallelism = 16;
        CHECK(harness.config_hash(plan) == base);
    }
    SUBCASE("tool model change") {
        fixture.add_tool(test::lossy_tool("perfect", 0.5));
        CHECK(harness.config_hash(plan) != base);
    }
    SUBCASE("profile change") {
        BehaviorProfile profile = test::mixed_profile();
        profile.profile_id = fixture.samples[0];
        profile.distributions[ArtifactCategory::HttpRequest] =
            {Distribution::Kind::Constant, 9, 0, 0, 0.0};
        ProfileRegistry(fixture.home() / "profiles").register_profile(profile);
        CHECK(harness.config_hash(plan) != base);
    }
}

TEST_CASE("results are sorted and unknown experiments rejected") {
    test::SimHome fixture;
    fixture.add_sample("s1", test::mixed_profile());
    fixture.add_tool(test::perfect_tool("perfect"));
    Harness harness(fixture.home());
    harness.plan_experiment(small_plan(fixture, "exp-sorted"));
    auto records = harness.results("exp-sorted");
    for (std::size_t i = 1; i < records.size(); ++i)
        CHECK(records[i - 1].run_id < records[i].run_id);

    try {
        harness.results("missing-experiment");
        FAIL("expected UnknownExperiment");
    } catch (const MatefError& e) {
        CHECK(e.code() == ErrorCode::UnknownExperiment);
    }
}

TEST_CASE("run record json round trip keeps canonical fields") {
    RunRecord record;
    record.run_id = "e/s/t/0";
    record.sample_sha256 = std::string(64, 'a');
    record.tool_id = "t";
    record.rep_index = 0;
    record.seed = 0xFFFFFFFFFFFFFFFFULL; // uint64 max survives json
    record.status = RunStatus::Completed;
    CountVector counts;
    counts[ArtifactCategory::DnsQuery] = 3;
    record.observed_counts = counts;
    record.log_path = "experiments/e/s/t/0/tool.log";
    record.config_hash = std::string(64, 'b');

    auto round = RunRecord::from_json(nlohmann::json::parse(record.to_json().dump()));
    CHECK(round.to_json().dump() == record.to_json().dump());
    CHECK(round.seed == record.seed);
}

} // TEST_SUITE
