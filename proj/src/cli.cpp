#include "matef/cli.hpp"

#include "matef/analysis.hpp"
#include "matef/behavior.hpp"
#include "matef/errors.hpp"
#include "matef/fs_util.hpp"
#include "matef/harness.hpp"
#include "matef/library.hpp"
#include "matef/log_ingest.hpp"
#include "matef/netsim.hpp"
#include "matef/oracle.hpp"
#include "matef/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

namespace matef {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_interrupted{false};

void on_interrupt(int) {
    g_interrupted = true;
}

json parse_json_file(const fs::path& path) {
    try {
        return json::parse(read_file_text(path));
    } catch (const json::exception& e) {
        raise(ErrorCode::SchemaError, path.string() + " is not valid JSON: " + e.what());
    }
}

struct GlobalConfig {
    fs::path home;
    std::string default_password = kDefaultContainerPassword;
    double default_confidence = 0.95;
    bool verbose = false;
};

int cmd_import(const GlobalConfig& config, const std::string& file,
               const std::string& name, const std::string& password,
               const std::vector<std::string>& tags) {
    SampleLibrary library(config.home / "library", config.default_password);
    auto bytes = read_file_bytes(file);
    std::set<std::string> tag_set(tags.begin(), tags.end());
    std::string original = name.empty() ? fs::path(file).filename().string() : name;
    auto record = library.import_sample(bytes, original, password, tag_set);
    std::cout << record.sha256 << "\n";
    return 0;
}

int cmd_oracle_ingest(const GlobalConfig& config, const std::string& file) {
    SampleLibrary library(config.home / "library", config.default_password);
    OracleStore store(config.home / "oracle" / "records.jsonl");
    auto record = store.ingest(parse_json_file(file), library);
    std::cout << "ingested oracle record for " << record.sample_sha256 << " from "
              << record.source_id << "\n";
    return 0;
}

int cmd_verify(const GlobalConfig& config, const std::string& sha256,
               const std::string& password) {
    SampleLibrary library(config.home / "library", config.default_password);
    std::vector<SampleRecord> targets;
    if (sha256.empty()) {
        targets = library.entries();
    } else {
        auto record = library.find(sha256);
        if (!record)
            raise(ErrorCode::NotFound, "no sample with sha256 " + sha256);
        targets.push_back(*record);
    }
    bool all_ok = true;
    for (const auto& target : targets) {
        auto report = library.verify_integrity(target.sha256, password);
        if (report.ok) {
            std::cout << "ok " << target.sha256 << "\n";
        } else {
            all_ok = false;
            std::cout << "MISMATCH " << target.sha256
                      << " recomputed=" << report.recomputed_sha256 << "\n";
        }
    }
    return all_ok ? 0 : 1;
}

int cmd_netsim(const GlobalConfig&, NetSimConfig net_config, const std::string& log_file,
               double duration_s) {
    NetSimServer server(std::move(net_config), default_clock());
    server.start();
    std::cout << "netsim listening: dns udp/" << server.dns_port() << ", http tcp/"
              << server.http_port() << "\n"
              << std::flush;

    std::signal(SIGINT, on_interrupt);
    std::signal(SIGTERM, on_interrupt);
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(static_cast<long>(duration_s * 1000.0));
    auto flush_events = [&]() {
        auto events = server.drain_events();
        if (events.empty())
            return;
        std::error_code ec;
        fs::path path(log_file);
        if (path.has_parent_path())
            fs::create_directories(path.parent_path(), ec);
        std::ofstream out(path, std::ios::app);
        out << net_events_to_csv(events);
    };
    while (!g_interrupted) {
        if (duration_s > 0.0 && std::chrono::steady_clock::now() >= deadline)
            break;
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        flush_events();
    }
    server.stop();
    flush_events();
    std::cout << "netsim stopped; events logged to " << log_file << " (malformed packets: "
              << server.malformed_count() << ")\n";
    return 0;
}

int cmd_run(const GlobalConfig& config, const std::string& plan_file, int parallelism) {
    ExperimentPlan plan = ExperimentPlan::from_json(parse_json_file(plan_file));
    if (parallelism > 0)
        plan.parallelism = parallelism;
    if (plan.executor != "sim")
        raise(ErrorCode::ExecutorError,
              "unknown executor '" + plan.executor + "'; the reference executor is 'sim'");

    Harness harness(config.home);
    auto records = harness.plan_experiment(plan);
    SimExecutor executor(ProfileRegistry(config.home / "profiles"),
                         ToolRegistry(config.home / "tools"));
    records = harness.execute(plan, std::move(records), executor);

    int completed = 0, failed = 0;
    for (const auto& record : records) {
        if (record.status == RunStatus::Completed)
            ++completed;
        else if (record.status == RunStatus::Failed)
            ++failed;
    }
    std::cout << "experiment " << plan.experiment_id << ": " << completed << " completed, "
              << failed << " failed, results in "
              << (harness.experiment_dir(plan.experiment_id) / "results.jsonl").string()
              << "\n";
    if (failed > 0) {
        for (const auto& record : records) {
            if (record.status == RunStatus::Failed)
                std::cerr << "failed: " << record.run_id << ": " << record.status_detail
                          << "\n";
        }
        return 1;
    }
    return 0;
}

int cmd_ingest(const GlobalConfig& config, const std::string& run_id,
               const std::string& adapter_id, const std::string& log_file) {
    auto slash = run_id.find('/');
    if (slash == std::string::npos)
        raise(ErrorCode::SchemaError, "run id must look like <experiment>/<sample>/<tool>/<rep>");
    Harness harness(config.home);
    auto records = harness.results(run_id.substr(0, slash));
    RunRecord* target = nullptr;
    for (auto& record : records) {
        if (record.run_id == run_id) {
            target = &record;
            break;
        }
    }
    if (!target)
        raise(ErrorCode::NotFound, "no run record with id " + run_id);

    AdapterRegistry adapters(config.home / "adapters");
    AdapterSpec adapter = adapters.resolve(adapter_id);
    auto text = read_file_text(log_file);
    auto parsed = parse_log(text, adapter);

    // Keep the ingested log with the run for traceability.
    fs::path run_directory = harness.run_dir(run_id);
    fs::create_directories(run_directory);
    fs::path stored = run_directory / "tool.log";
    atomic_write_file(stored, text);

    RunRecord updated = *target;
    updated.observed_counts = count_artifacts(parsed.events);
    updated.log_path = fs::relative(stored, config.home).generic_string();
    updated.status = RunStatus::Completed;
    updated.status_detail.clear();
    harness.update_record(updated);

    std::cout << "ingested " << parsed.events.size() << " events (" << parsed.skipped
              << " lines skipped) into " << run_id << "\n";
    return 0;
}

int cmd_analyze(const GlobalConfig& config, const std::string& experiment_id,
                double confidence, const std::string& thresholds_file,
                const std::string& expected_source, int bins, std::string out_file) {
    AnalyzeOptions options;
    options.confidence_level = confidence > 0.0 ? confidence : config.default_confidence;
    options.bin_count = bins;
    if (expected_source == "oracle") {
        options.expected_source = ExpectedSource::Oracle;
    } else if (expected_source == "truth") {
        options.expected_source = ExpectedSource::GroundTruth;
    } else {
        raise(ErrorCode::SchemaError, "--expected must be 'oracle' or 'truth'");
    }
    if (!thresholds_file.empty()) {
        auto doc = parse_json_file(thresholds_file);
        options.thresholds.abs_mean_max =
            doc.value("abs_mean_max", options.thresholds.abs_mean_max);
        options.thresholds.ci_width_max =
            doc.value("ci_width_max", options.thresholds.ci_width_max);
    }

    auto analysis = analyze_experiment(config.home, experiment_id, options);
    Harness harness(config.home);
    if (out_file.empty())
        out_file = (harness.experiment_dir(experiment_id) / "analysis.json").string();
    atomic_write_file(out_file, analysis.dump(2) + "\n");
    std::cout << "wrote " << out_file << "\n";
    return 0;
}

int cmd_report(const GlobalConfig& config, const std::string& experiment_id,
               const std::string& analysis_file, const std::string& out_md,
               const std::string& out_json) {
    Harness harness(config.home);
    fs::path analysis_path = analysis_file.empty()
                                 ? harness.experiment_dir(experiment_id) / "analysis.json"
                                 : fs::path(analysis_file);
    if (!fs::exists(analysis_path))
        raise(ErrorCode::IncompleteAnalysis,
              "no analysis document at " + analysis_path.string() +
                  "; run 'matef analyze' first");
    auto clock = default_clock();
    auto outputs =
        generate_report(config.home, experiment_id, parse_json_file(analysis_path), *clock);

    fs::path md_path = out_md.empty()
                           ? harness.experiment_dir(experiment_id) / "report.md"
                           : fs::path(out_md);
    atomic_write_file(md_path, outputs.markdown);
    std::cout << "wrote " << md_path.string() << "\n";
    if (!out_json.empty()) {
        atomic_write_file(out_json, outputs.document.dump(2) + "\n");
        std::cout << "wrote " << out_json << "\n";
    }
    return 0;
}

} // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"MATEF: quantifiable evaluation of dynamic malware-analysis tools"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "matef 1.0");

    GlobalConfig config;
    config.home = matef_home();
    std::string home_flag;
    app.add_option("--home", home_flag, "Data root (default: $MATEF_HOME or ./matef-data)");
    app.add_flag("--verbose", config.verbose, "Verbose diagnostics");

    // import
    auto* import_cmd = app.add_subcommand("import", "Import a sample into the library");
    std::string import_file, import_name, import_password;
    std::vector<std::string> import_tags;
    import_cmd->add_option("file", import_file, "Sample file")->required();
    import_cmd->add_option("--name", import_name, "Original name (default: file name)");
    import_cmd->add_option("--password", import_password, "Container password");
    import_cmd->add_option("--tag", import_tags, "Tag (repeatable)");

    // oracle ingest
    auto* oracle_cmd = app.add_subcommand("oracle", "Oracle store operations");
    auto* oracle_ingest = oracle_cmd->add_subcommand("ingest", "Ingest an oracle report");
    std::string oracle_file;
    oracle_ingest->add_option("report", oracle_file, "matef-oracle-1 JSON document")->required();
    oracle_cmd->require_subcommand(1);

    // netsim
    auto* netsim_cmd = app.add_subcommand("netsim", "Run the internet-services simulation");
    NetSimConfig net_config;
    std::string netsim_log = "net.log";
    double netsim_duration = 0.0;
    netsim_cmd->add_option("--dns-port", net_config.dns_port,
                           "UDP port (default 5353, 0 = OS-assigned)")
        ->check(CLI::Range(0, 65535));
    netsim_cmd->add_option("--http-port", net_config.http_port,
                           "TCP port (default 8080, 0 = OS-assigned)")
        ->check(CLI::Range(0, 65535));
    netsim_cmd->add_option("--answer-ip", net_config.answer_ip,
                           "IPv4 answer for every A query (default 10.0.0.1)");
    netsim_cmd->add_option("--dns-ttl", net_config.dns_ttl, "Answer TTL seconds");
    netsim_cmd->add_option("--http-body", net_config.http_body, "Fixed HTTP response body");
    netsim_cmd->add_option("--log", netsim_log, "Event log file (matef-csv-1)");
    netsim_cmd->add_option("--duration-s", netsim_duration,
                           "Stop after this many seconds (0 = until SIGINT)");

    // run
    auto* run_cmd = app.add_subcommand("run", "Plan and execute an experiment");
    std::string plan_file;
    int run_parallelism = 0;
    run_cmd->add_option("--plan", plan_file, "ExperimentPlan JSON")->required();
    run_cmd->add_option("--parallelism", run_parallelism, "Override the plan's parallelism")
        ->check(CLI::PositiveNumber);

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Ingest a tool log into a run record");
    std::string ingest_run, ingest_adapter, ingest_file;
    ingest_cmd->add_option("--run", ingest_run, "Run id")->required();
    ingest_cmd->add_option("--adapter", ingest_adapter, "Adapter id")->required();
    ingest_cmd->add_option("logfile", ingest_file, "Tool log file")->required();

    // analyze
    auto* analyze_cmd = app.add_subcommand("analyze", "Compute error and uncertainty statistics");
    std::string analyze_experiment_id, thresholds_file, analyze_out;
    std::string expected_source = "oracle";
    double analyze_confidence = 0.0;
    int analyze_bins = 10;
    analyze_cmd->add_option("--experiment", analyze_experiment_id, "Experiment id")->required();
    analyze_cmd->add_option("--confidence", analyze_confidence,
                            "Confidence level (default 0.95)");
    analyze_cmd->add_option("--thresholds", thresholds_file,
                            "JSON with abs_mean_max / ci_width_max");
    analyze_cmd->add_option("--expected", expected_source,
                            "Expected-value source: oracle | truth");
    analyze_cmd->add_option("--bins", analyze_bins, "Histogram bin count")
        ->check(CLI::PositiveNumber);
    analyze_cmd->add_option("-o,--out", analyze_out, "Output file (default: analysis.json)");

    // report
    auto* report_cmd = app.add_subcommand("report", "Render the validation report");
    std::string report_experiment_id, report_analysis, report_md, report_json;
    report_cmd->add_option("--experiment", report_experiment_id, "Experiment id")->required();
    report_cmd->add_option("--analysis", report_analysis,
                           "Analysis document (default: the experiment's analysis.json)");
    report_cmd->add_option("-o,--out", report_md, "Markdown output (default: report.md)");
    report_cmd->add_option("--json", report_json, "Also write the JSON document here");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "Verify container integrity");
    std::string verify_sha, verify_password;
    verify_cmd->add_option("sha256", verify_sha, "Verify one sample (default: all)");
    verify_cmd->add_option("--password", verify_password, "Container password");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << "matef 1.0\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    if (!home_flag.empty())
        config.home = home_flag;
    if (config.verbose)
        std::cerr << "matef home: " << config.home.string() << "\n";

    try {
        if (*import_cmd)
            return cmd_import(config, import_file, import_name, import_password, import_tags);
        if (*oracle_ingest)
            return cmd_oracle_ingest(config, oracle_file);
        if (*netsim_cmd)
            return cmd_netsim(config, net_config, netsim_log, netsim_duration);
        if (*run_cmd)
            return cmd_run(config, plan_file, run_parallelism);
        if (*ingest_cmd)
            return cmd_ingest(config, ingest_run, ingest_adapter, ingest_file);
        if (*analyze_cmd)
            return cmd_analyze(config, analyze_experiment_id, analyze_confidence,
                               thresholds_file, expected_source, analyze_bins, analyze_out);
        if (*report_cmd)
            return cmd_report(config, report_experiment_id, report_analysis, report_md,
                              report_json);
        if (*verify_cmd)
            return cmd_verify(config, verify_sha, verify_password);
    } catch (const MatefError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "no subcommand selected\n";
    return 2;
}

} // namespace matef
