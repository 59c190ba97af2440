#include <doctest.h>

#include "matef/analysis.hpp"
#include "matef/errors.hpp"
#include "matef/report.hpp"

#include "test_fixture.hpp"

using namespace matef;
using nlohmann::json;

namespace {

struct ReportFixture {
    test::SimHome fixture;
    ExperimentPlan plan;
    nlohmann::ordered_json analysis;

    ReportFixture() {
        fixture.add_sample("r1", test::mixed_profile());
        fixture.add_sample("r2", test::mixed_profile());
        fixture.add_tool(test::perfect_tool("perfect"));
        plan.experiment_id = "exp-report";
        plan.sample_ids = fixture.samples;
        plan.tool_ids = {"perfect"};
        plan.repetitions = 5;
        plan.master_seed = 99;
        plan.max_run_duration_s = 30.0;

        Harness harness(fixture.home());
        auto records = harness.plan_experiment(plan);
        SimExecutor executor(ProfileRegistry(fixture.home() / "profiles"),
                             ToolRegistry(fixture.home() / "tools"));
        harness.execute(plan, std::move(records), executor);

        AnalyzeOptions options;
        options.expected_source = ExpectedSource::GroundTruth;
        analysis = analyze_experiment(fixture.home(), "exp-report", options);
    }
};

} // namespace

TEST_SUITE("report") {

TEST_CASE("completed experiment renders L1/L3 evidence and outside-artifact L2/L4") {
    ReportFixture fx;
    FixedClock clock(1600423200);
    auto outputs = generate_report(fx.fixture.home(), "exp-report", fx.analysis, clock);

    const auto& lundy = outputs.document.at("lundy_checklist");
    REQUIRE(lundy.size() == 4);
    CHECK(lundy[0].at("id") == "L1");
    CHECK(lundy[0].at("status") == "met");
    CHECK_FALSE(lundy[0].at("evidence").get<std::string>().empty());
    CHECK(lundy[1].at("status") == "outside the artifact — social process");
    CHECK(lundy[2].at("id") == "L3");
    CHECK(lundy[2].at("status") == "met");
    CHECK(lundy[3].at("status") == "outside the artifact — social process");

    CHECK(outputs.markdown.find("outside the artifact — social process") != std::string::npos);
    CHECK(outputs.markdown.find("## Results") != std::string::npos);
    CHECK(outputs.markdown.find("## Traceability appendix") != std::string::npos);

    // codes checklist covers requirements 1, 4, 7-15 (minus the social ones)
    std::set<int> covered;
    for (const auto& entry : outputs.document.at("codes_checklist"))
        covered.insert(entry.at("requirement").get<int>());
    CHECK(covered == std::set<int>{1, 4, 7, 8, 9, 10, 11, 12, 13, 14, 15});
}

TEST_CASE("statistics are copied byte-for-byte from the analysis document") {
    ReportFixture fx;
    FixedClock clock(1600423200);
    auto outputs = generate_report(fx.fixture.home(), "exp-report", fx.analysis, clock);

    // the analysis "results" subtree is embedded verbatim
    CHECK(json(outputs.document.at("results")) == json(fx.analysis.at("results")));

    // and markdown prints numbers with the same serialization
    const auto& stats =
        fx.analysis.at("results").at(0).at("categories").at(0).at("stats");
    REQUIRE_FALSE(stats.is_null());
    std::string mean_text = stats.at("mean_error").dump();
    CHECK(outputs.markdown.find(mean_text) != std::string::npos);
}

TEST_CASE("report generation is deterministic under a frozen clock") {
    ReportFixture fx;
    FixedClock clock(1600423200);
    auto a = generate_report(fx.fixture.home(), "exp-report", fx.analysis, clock);
    auto b = generate_report(fx.fixture.home(), "exp-report", fx.analysis, clock);
    CHECK(a.markdown == b.markdown);
    CHECK(a.document.dump() == b.document.dump());
}

TEST_CASE("analysis missing a tool raises IncompleteAnalysis naming it") {
    ReportFixture fx;
    auto pruned = fx.analysis;
    auto results = pruned.at("results");
    nlohmann::ordered_json kept = nlohmann::ordered_json::array();
    for (const auto& entry : results) {
        if (entry.at("sample_sha256") != fx.fixture.samples[1])
            kept.push_back(entry);
    }
    pruned["results"] = kept;
    FixedClock clock(0);
    try {
        generate_report(fx.fixture.home(), "exp-report", pruned, clock);
        FAIL("expected IncompleteAnalysis");
    } catch (const MatefError& e) {
        CHECK(e.code() == ErrorCode::IncompleteAnalysis);
        CHECK(std::string(e.what()).find("perfect") != std::string::npos);
    }
}

TEST_CASE("traceability appendix lists every plan sample and the fingerprint") {
    ReportFixture fx;
    auto appendix = traceability_appendix(fx.fixture.home(), "exp-report");
    CHECK(appendix.at("experiment_id") == "exp-report");
    CHECK(appendix.at("config_hash").get<std::string>().size() == 64);
    REQUIRE(appendix.at("samples").size() == 2);

    std::set<std::string> listed;
    for (const auto& sample : appendix.at("samples"))
        listed.insert(sample.at("sha256").get<std::string>());
    CHECK(listed == std::set<std::string>(fx.fixture.samples.begin(),
                                          fx.fixture.samples.end()));
    CHECK(appendix.at("plan").at("master_seed") == 99);
}

TEST_CASE("unknown experiment rejected") {
    test::SimHome fixture;
    try {
        traceability_appendix(fixture.home(), "ghost");
        FAIL("expected UnknownExperiment");
    } catch (const MatefError& e) {
        CHECK(e.code() == ErrorCode::UnknownExperiment);
    }
}

} // TEST_SUITE
