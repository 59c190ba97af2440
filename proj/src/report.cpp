#include "matef/report.hpp"

#include "matef/errors.hpp"
#include "matef/harness.hpp"
#include "matef/library.hpp"
#include "matef/oracle.hpp"

#include <set>
#include <sstream>

namespace matef {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kOutsideArtifact = "outside the artifact — social process";

/// Numbers printed in the markdown reuse nlohmann's serialization so they are
/// byte-identical to the analysis document they were copied from.
std::string num(const json& value) {
    return value.dump();
}

std::string relative_error_text(const json& entry) {
    const auto& rel = entry.at("mean_relative_error");
    return rel.is_null() ? "n/a (expected zero)" : num(rel);
}

ordered_json lundy_checklist(const ExperimentPlan& plan, std::size_t run_count) {
    ordered_json list = ordered_json::array();

    ordered_json l1;
    l1["id"] = "L1";
    l1["question"] = "Can the technique be, or has it been, tested?";
    l1["status"] = "met";
    l1["evidence"] = "Tested: " + std::to_string(run_count) + " seeded runs (" +
                     std::to_string(plan.sample_ids.size()) + " samples x " +
                     std::to_string(plan.tool_ids.size()) + " tools x " +
                     std::to_string(plan.repetitions) + " repetitions, master seed " +
                     std::to_string(plan.master_seed) + ", executor '" + plan.executor +
                     "'). Identical seeds reproduce results bit-for-bit.";
    list.push_back(l1);

    ordered_json l2;
    l2["id"] = "L2";
    l2["question"] = "Has the technique been subjected to peer review and publication?";
    l2["status"] = kOutsideArtifact;
    list.push_back(l2);

    ordered_json l3;
    l3["id"] = "L3";
    l3["question"] = "Is there a known or potential rate of error, or standards?";
    l3["status"] = "met";
    l3["evidence"] = "Per-category error rates (observed minus expected) with confidence "
                     "intervals are reported in the results section, copied from the "
                     "analysis document.";
    list.push_back(l3);

    ordered_json l4;
    l4["id"] = "L4";
    l4["question"] = "Is the technique generally accepted?";
    l4["status"] = kOutsideArtifact;
    list.push_back(l4);

    return list;
}

ordered_json codes_checklist(const ExperimentPlan& plan) {
    auto item = [](int requirement, const char* title, const char* status,
                   const std::string& evidence) {
        ordered_json entry;
        entry["requirement"] = requirement;
        entry["title"] = title;
        entry["status"] = status;
        entry["evidence"] = evidence;
        return entry;
    };

    ordered_json list = ordered_json::array();
    list.push_back(item(1, "Controlled handling of malware", "met",
                        "Samples are stored in password-protected containers under a "
                        "content-addressed library; network services are simulated on a "
                        "closed network with no outbound connections."));
    list.push_back(item(4, "Novel methods must be validated", "partially",
                        "Validation compares observed counts against an independent "
                        "oracle source; see results and limitations."));
    list.push_back(item(7, "Tools must be validated", "partially",
                        "The difference between expected and observed artifact counts is "
                        "measured per category across repeated runs."));
    list.push_back(item(8, "Estimate of uncertainty", "met",
                        "Sample standard deviation, standard deviation of the mean and "
                        "Student-t confidence intervals are reported per category."));
    list.push_back(item(9, "Traceability of reference datasets", "met",
                        "Sample digests and the configuration fingerprint are listed in "
                        "the traceability appendix; the library manifest export is "
                        "canonical and byte-stable."));
    list.push_back(item(10, "Use a virtual machine", "met by design",
                        "Execution goes through a pluggable executor; experiment '" +
                            plan.executor + "' executor ran with parallelism " +
                            std::to_string(plan.parallelism) +
                            ". A real-VM driver is a documented extension point."));
    list.push_back(item(11, "Network service provision", "met",
                        "DNS and HTTP simulation answers every request inside the closed "
                        "test network and logs each request as a network artifact."));
    list.push_back(item(12, "Use a vulnerable environment", "delegated",
                        "Environment configuration belongs to the executor; the reference "
                        "executor models behavior directly via profiles."));
    list.push_back(item(13, "Black box testing approach", "met",
                        "Tools are characterized only through their exported logs; no "
                        "knowledge of tool internals is used."));
    list.push_back(item(14, "Expected quantity from an independent source", "met",
                        "The oracle store aggregates per-category means over independent "
                        "reports; record counts per source are listed per sample."));
    list.push_back(item(15, "Observed counts from a variety of tools", "met",
                        "Adapter-driven log ingestion normalizes text logs into one "
                        "canonical event schema before counting."));
    return list;
}

ordered_json limitations(const json& analysis) {
    ordered_json list = ordered_json::array();
    list.push_back("Error sign convention: e = observed - expected, so over-reporting is "
                   "positive.");
    list.push_back("Relative error is undefined when the expected value is zero and is "
                   "reported as 'n/a (expected zero)'; no pseudo-count is substituted.");
    list.push_back("Each operation is counted independently: a file created and then "
                   "deleted in one run counts in both categories.");
    list.push_back("Rows whose result field is not SUCCESS are parsed but not counted.");
    list.push_back(std::string("Verdict thresholds (abs_mean_max = ") +
                   num(analysis.at("thresholds").at("abs_mean_max")) +
                   ", ci_width_max = " + num(analysis.at("thresholds").at("ci_width_max")) +
                   ") are operator policy, not regulator-endorsed values.");
    list.push_back("Oracle record counts per sample are listed so the reader can judge "
                   "whether the expected values rest on enough observations.");
    list.push_back("The maximum run duration is surfaced from the plan; no default is "
                   "endorsed as correct.");
    list.push_back("Requirements 2, 5 and 6 (admissibility, peer review, general "
                   "acceptance) are social processes outside this artifact.");
    return list;
}

std::string render_markdown(const ordered_json& doc) {
    std::ostringstream md;
    md << "# Validation report: experiment " << doc.at("experiment_id").get<std::string>()
       << "\n\n";
    md << "Generated at " << doc.at("generated_at").get<std::string>() << ".\n\n";

    const auto& method = doc.at("methodology");
    md << "## Methodology\n\n";
    md << "- Executor: " << method.at("executor").get<std::string>() << "\n";
    md << "- Master seed: " << num(method.at("master_seed")) << "\n";
    md << "- Repetitions per (sample, tool): " << num(method.at("repetitions")) << "\n";
    md << "- Maximum run duration (s): " << num(method.at("max_run_duration_s")) << "\n";
    md << "- Parallelism: " << num(method.at("parallelism")) << "\n";
    md << "- Configuration fingerprint: " << method.at("config_hash").get<std::string>()
       << "\n";
    md << "- Expected values taken from: "
       << method.at("expected_source").get<std::string>() << "\n\n";

    md << "## Dataset\n\n";
    for (const auto& sample : doc.at("dataset")) {
        md << "- `" << sample.at("sha256").get<std::string>() << "` ("
           << sample.at("original_name").get<std::string>() << ", "
           << num(sample.at("size_bytes")) << " bytes)\n";
    }
    md << "\n## Oracle provenance\n\n";
    for (const auto& sample : doc.at("oracle_provenance")) {
        md << "- `" << sample.at("sample_sha256").get<std::string>() << "`: ";
        const auto& sources = sample.at("sources");
        if (sources.empty()) {
            md << "no oracle records";
        } else {
            bool first = true;
            for (const auto& source : sources) {
                if (!first)
                    md << ", ";
                first = false;
                md << source.at("source_id").get<std::string>() << " ("
                   << num(source.at("n_records")) << " records)";
            }
        }
        md << "\n";
    }

    md << "\n## Results\n\n";
    for (const auto& result : doc.at("results")) {
        md << "### Tool " << result.at("tool_id").get<std::string>() << " on `"
           << result.at("sample_sha256").get<std::string>() << "`\n\n";
        md << "Completed runs: " << num(result.at("completed_runs"))
           << ", failed runs: " << num(result.at("failed_runs")) << "\n\n";
        md << "| category | n | mean error | relative error | sample std | std of mean "
              "| CI | verdict |\n";
        md << "|---|---|---|---|---|---|---|---|\n";
        for (const auto& entry : result.at("categories")) {
            md << "| " << entry.at("category").get<std::string>() << " | ";
            if (entry.at("stats").is_null()) {
                md << "- | - | - | - | - | - | insufficient data |\n";
                continue;
            }
            const auto& stats = entry.at("stats");
            md << num(stats.at("n")) << " | " << num(stats.at("mean_error")) << " | "
               << relative_error_text(entry) << " | " << num(stats.at("sample_std"))
               << " | " << num(stats.at("std_of_mean")) << " | ["
               << num(stats.at("ci_low")) << ", " << num(stats.at("ci_high")) << "] at "
               << num(stats.at("confidence_level")) << " | "
               << (entry.at("verdict").at("pass").get<bool>() ? "pass" : "fail") << " |\n";
        }
        md << "\n";
    }

    md << "## Reliability checklist\n\n";
    for (const auto& entry : doc.at("lundy_checklist")) {
        md << "- **" << entry.at("id").get<std::string>() << "** "
           << entry.at("question").get<std::string>() << " — status: "
           << entry.at("status").get<std::string>();
        if (entry.contains("evidence"))
            md << ". " << entry.at("evidence").get<std::string>();
        md << "\n";
    }

    md << "\n## Regulatory requirements checklist\n\n";
    for (const auto& entry : doc.at("codes_checklist")) {
        md << "- Requirement " << num(entry.at("requirement")) << " ("
           << entry.at("title").get<std::string>() << "): "
           << entry.at("status").get<std::string>() << ". "
           << entry.at("evidence").get<std::string>() << "\n";
    }

    md << "\n## Limitations\n\n";
    for (const auto& entry : doc.at("limitations"))
        md << "- " << entry.get<std::string>() << "\n";

    const auto& appendix = doc.at("traceability_appendix");
    md << "\n## Traceability appendix\n\n";
    md << "Configuration fingerprint: `" << appendix.at("config_hash").get<std::string>()
       << "`\n\nSamples:\n\n";
    for (const auto& sample : appendix.at("samples"))
        md << "- `" << sample.at("sha256").get<std::string>() << "`\n";
    md << "\nPlan (canonical):\n\n```json\n" << appendix.at("plan").dump(2) << "\n```\n";
    return md.str();
}

} // namespace

ordered_json traceability_appendix(const std::filesystem::path& home,
                                   const std::string& experiment_id) {
    Harness harness(home);
    ExperimentPlan plan = harness.load_plan(experiment_id);
    SampleLibrary library(home / "library");
    OracleStore oracle(home / "oracle" / "records.jsonl");

    ordered_json appendix;
    appendix["experiment_id"] = experiment_id;
    appendix["config_hash"] = harness.config_hash(plan);
    appendix["samples"] = ordered_json::array();
    for (const auto& sample_id : plan.sample_ids) {
        ordered_json entry;
        entry["sha256"] = sample_id;
        if (auto record = library.find(sample_id))
            entry["original_name"] = record->original_name;
        entry["oracle_records"] = ordered_json::array();
        for (const auto& [source_id, count] : oracle.provenance_for(sample_id)) {
            ordered_json source;
            source["source_id"] = source_id;
            source["n_records"] = count;
            entry["oracle_records"].push_back(source);
        }
        appendix["samples"].push_back(entry);
    }
    appendix["plan"] = plan.to_json();
    return appendix;
}

ReportOutputs generate_report(const std::filesystem::path& home,
                              const std::string& experiment_id,
                              const json& analysis_document, const Clock& clock) {
    Harness harness(home);
    ExperimentPlan plan = harness.load_plan(experiment_id);
    auto records = harness.results(experiment_id);

    if (!analysis_document.is_object() ||
        analysis_document.value("schema", "") != "matef-analysis-1")
        raise(ErrorCode::IncompleteAnalysis, "analysis document has the wrong schema");
    if (analysis_document.value("experiment_id", "") != experiment_id)
        raise(ErrorCode::IncompleteAnalysis,
              "analysis document is for experiment '" +
                  analysis_document.value("experiment_id", "") + "', not '" + experiment_id +
                  "'");

    // Every (tool, sample) pair must be analyzed, with stats wherever the
    // experiment produced enough runs.
    for (const auto& tool_id : plan.tool_ids) {
        for (const auto& sample_id : plan.sample_ids) {
            bool found = false;
            for (const auto& result : analysis_document.at("results")) {
                if (result.value("tool_id", "") == tool_id &&
                    result.value("sample_sha256", "") == sample_id) {
                    found = true;
                    break;
                }
            }
            if (!found)
                raise(ErrorCode::IncompleteAnalysis,
                      "analysis is missing stats for tool '" + tool_id + "' on sample " +
                          sample_id);
        }
    }

    SampleLibrary library(home / "library");
    OracleStore oracle(home / "oracle" / "records.jsonl");

    ordered_json doc;
    doc["schema"] = "matef-report-1";
    doc["experiment_id"] = experiment_id;
    doc["generated_at"] = format_rfc3339(clock.now());

    ordered_json method;
    method["executor"] = plan.executor;
    method["master_seed"] = plan.master_seed;
    method["repetitions"] = plan.repetitions;
    method["max_run_duration_s"] = plan.max_run_duration_s;
    method["parallelism"] = plan.parallelism;
    method["config_hash"] = records.empty() ? harness.config_hash(plan)
                                            : records.front().config_hash;
    method["expected_source"] = analysis_document.value("expected_source", "oracle");
    method["statistics_source"] =
        "analysis document (matef-analysis-1), embedded verbatim under 'results'";
    doc["methodology"] = method;

    doc["dataset"] = ordered_json::array();
    for (const auto& sample_id : plan.sample_ids) {
        auto record = library.find(sample_id);
        if (!record)
            raise(ErrorCode::UnknownSample,
                  "sample " + sample_id + " from the plan is not in the library");
        ordered_json entry;
        entry["sha256"] = record->sha256;
        entry["original_name"] = record->original_name;
        entry["size_bytes"] = record->size_bytes;
        entry["tags"] = record->tags;
        doc["dataset"].push_back(entry);
    }

    doc["oracle_provenance"] = ordered_json::array();
    for (const auto& sample_id : plan.sample_ids) {
        ordered_json entry;
        entry["sample_sha256"] = sample_id;
        entry["sources"] = ordered_json::array();
        for (const auto& [source_id, count] : oracle.provenance_for(sample_id)) {
            ordered_json source;
            source["source_id"] = source_id;
            source["n_records"] = count;
            entry["sources"].push_back(source);
        }
        doc["oracle_provenance"].push_back(entry);
    }

    // Copied, never recomputed.
    doc["results"] = analysis_document.at("results");

    doc["lundy_checklist"] = lundy_checklist(plan, records.size());
    doc["codes_checklist"] = codes_checklist(plan);
    doc["limitations"] = limitations(analysis_document);
    doc["traceability_appendix"] = traceability_appendix(home, experiment_id);

    ReportOutputs outputs;
    outputs.document = doc;
    outputs.markdown = render_markdown(doc);
    return outputs;
}

} // namespace matef
