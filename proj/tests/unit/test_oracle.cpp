#include <doctest.h>

#include "matef/errors.hpp"
#include "matef/library.hpp"
#include "matef/oracle.hpp"

#include "test_support.hpp"

#include <algorithm>
#include <cmath>

using namespace matef;
using nlohmann::json;

namespace {

struct Fixture {
    test::TempDir home;
    SampleLibrary library;
    OracleStore store;
    std::string sample;

    Fixture()
        : library(home.path() / "library"),
          store(home.path() / "oracle" / "records.jsonl") {
        sample = library.import_sample(test::mz_bytes(), "sample.exe").sha256;
    }

    json report(const std::string& source, const std::string& at,
                json counts = json::object()) const {
        return {{"schema", "matef-oracle-1"}, {"sample_sha256", sample},
                {"source_id", source},        {"captured_at", at},
                {"run_duration_s", 120.0},    {"counts", counts}};
    }
};

} // namespace

TEST_SUITE("oracle") {

TEST_CASE("ingest stores pass-through counts") {
    Fixture fx;
    auto record = fx.store.ingest(
        fx.report("sandbox-a", "2020-09-18T10:00:00Z", {{"FILE_CREATED", 5}}), fx.library);
    CHECK(record.counts[ArtifactCategory::FileCreated] == 5);
    CHECK(fx.store.records_for(fx.sample).size() == 1);
}

TEST_CASE("unknown sample is rejected") {
    Fixture fx;
    auto doc = fx.report("sandbox-a", "2020-09-18T10:00:00Z");
    doc["sample_sha256"] = std::string(64, '0');
    CHECK_THROWS_AS(fx.store.ingest(doc, fx.library), MatefError);
    try {
        fx.store.ingest(doc, fx.library);
    } catch (const MatefError& e) {
        CHECK(e.code() == ErrorCode::UnknownSample);
    }
}

TEST_CASE("duplicate (sample, source, captured_at) is rejected") {
    Fixture fx;
    auto doc = fx.report("sandbox-a", "2020-09-18T10:00:00Z", {{"FILE_CREATED", 5}});
    fx.store.ingest(doc, fx.library);
    try {
        fx.store.ingest(doc, fx.library);
        FAIL("expected DuplicateRecord");
    } catch (const MatefError& e) {
        CHECK(e.code() == ErrorCode::DuplicateRecord);
    }
}

TEST_CASE("schema violations raise SchemaError") {
    Fixture fx;
    auto check_schema_error = [&](json doc) {
        try {
            fx.store.ingest(doc, fx.library);
            FAIL("expected SchemaError");
        } catch (const MatefError& e) {
            CHECK(e.code() == ErrorCode::SchemaError);
        }
    };
    auto base = fx.report("s", "2020-09-18T10:00:00Z");
    json bad = base;
    bad["schema"] = "wrong";
    check_schema_error(bad);
    bad = base;
    bad.erase("counts");
    check_schema_error(bad);
    bad = base;
    bad["run_duration_s"] = 0;
    check_schema_error(bad);
    bad = base;
    bad["counts"] = {{"NOT_A_CATEGORY", 1}};
    check_schema_error(bad);
    bad = base;
    bad["counts"] = {{"FILE_CREATED", -1}};
    check_schema_error(bad);
}

TEST_CASE("expected counts: single record means itself, std undefined") {
    Fixture fx;
    fx.store.ingest(fx.report("a", "2020-09-18T10:00:00Z", {{"FILE_CREATED", 5}}),
                    fx.library);
    auto expected = fx.store.expected_counts(fx.sample);
    CHECK(expected.at(ArtifactCategory::FileCreated).mean == doctest::Approx(5.0));
    CHECK(expected.at(ArtifactCategory::FileCreated).n_records == 1);
    CHECK_FALSE(expected.at(ArtifactCategory::FileCreated).sample_std.has_value());
}

TEST_CASE("expected counts: 4 and 6 give mean 5, sample std sqrt(2)") {
    Fixture fx;
    fx.store.ingest(fx.report("a", "2020-09-18T10:00:00Z", {{"FILE_CREATED", 4}}),
                    fx.library);
    fx.store.ingest(fx.report("a", "2020-09-18T11:00:00Z", {{"FILE_CREATED", 6}}),
                    fx.library);
    auto expected = fx.store.expected_counts(fx.sample);
    const auto& slot = expected.at(ArtifactCategory::FileCreated);
    CHECK(slot.mean == doctest::Approx(5.0));
    REQUIRE(slot.sample_std.has_value());
    CHECK(*slot.sample_std == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("category absent from every record reports mean 0 with full n") {
    Fixture fx;
    fx.store.ingest(fx.report("a", "2020-09-18T10:00:00Z", {{"FILE_CREATED", 4}}),
                    fx.library);
    fx.store.ingest(fx.report("a", "2020-09-18T11:00:00Z", json::object()), fx.library);
    auto expected = fx.store.expected_counts(fx.sample);
    CHECK(expected.at(ArtifactCategory::RegCreated).mean == doctest::Approx(0.0));
    CHECK(expected.at(ArtifactCategory::RegCreated).n_records == 2);
    // absent counts as zero, so FILE_CREATED averages 4 and 0
    CHECK(expected.at(ArtifactCategory::FileCreated).mean == doctest::Approx(2.0));
}

TEST_CASE("no records raises NoOracleData") {
    Fixture fx;
    try {
        fx.store.expected_counts(fx.sample);
        FAIL("expected NoOracleData");
    } catch (const MatefError& e) {
        CHECK(e.code() == ErrorCode::NoOracleData);
    }
}

TEST_CASE("expected value is permutation invariant over records") {
    test::TempDir home_a, home_b;
    SampleLibrary lib_a(home_a.path() / "library"), lib_b(home_b.path() / "library");
    OracleStore store_a(home_a.path() / "oracle" / "records.jsonl");
    OracleStore store_b(home_b.path() / "oracle" / "records.jsonl");
    auto sample_a = lib_a.import_sample(test::mz_bytes(), "s").sha256;
    auto sample_b = lib_b.import_sample(test::mz_bytes(), "s").sha256;

    std::vector<json> reports;
    for (int i = 0; i < 7; ++i) {
        reports.push_back({{"schema", "matef-oracle-1"},
                           {"sample_sha256", sample_a},
                           {"source_id", "src-" + std::to_string(i % 3)},
                           {"captured_at", format_rfc3339(1600423200 + i * 60)},
                           {"run_duration_s", 60.0},
                           {"counts", {{"FILE_CREATED", i}, {"DNS_QUERY", 2 * i}}}});
    }
    for (const auto& doc : reports)
        store_a.ingest(doc, lib_a);
    std::reverse(reports.begin(), reports.end());
    for (const auto& doc : reports)
        store_b.ingest(doc, lib_b);

    auto ea = store_a.expected_counts(sample_a);
    auto eb = store_b.expected_counts(sample_b);
    for (auto category : all_categories()) {
        CHECK(ea.at(category).mean == doctest::Approx(eb.at(category).mean));
        CHECK(ea.at(category).n_records == eb.at(category).n_records);
    }
}

TEST_CASE("adding a record equal to the mean keeps the mean and does not widen std") {
    Fixture fx;
    fx.store.ingest(fx.report("a", "2020-09-18T10:00:00Z", {{"FILE_CREATED", 4}}),
                    fx.library);
    fx.store.ingest(fx.report("a", "2020-09-18T11:00:00Z", {{"FILE_CREATED", 6}}),
                    fx.library);
    auto before = fx.store.expected_counts(fx.sample).at(ArtifactCategory::FileCreated);
    fx.store.ingest(fx.report("a", "2020-09-18T12:00:00Z", {{"FILE_CREATED", 5}}),
                    fx.library);
    auto after = fx.store.expected_counts(fx.sample).at(ArtifactCategory::FileCreated);
    CHECK(after.mean == doctest::Approx(before.mean));
    CHECK(*after.sample_std <= *before.sample_std + 1e-12);
}

TEST_CASE("mean never exceeds the max over records") {
    Fixture fx;
    int values[] = {3, 9, 1, 7};
    int i = 0;
    for (int v : values) {
        fx.store.ingest(
            fx.report("a", format_rfc3339(1600423200 + 60 * i++), {{"PROC_SPAWNED", v}}),
            fx.library);
    }
    auto slot = fx.store.expected_counts(fx.sample).at(ArtifactCategory::ProcSpawned);
    CHECK(slot.mean >= 0.0);
    CHECK(slot.mean <= 9.0);
}

} // TEST_SUITE
