#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "matef/time_util.hpp"

namespace matef {

struct ReportOutputs {
    nlohmann::ordered_json document; // machine-readable
    std::string markdown;            // self-contained human rendering
};

/// Renders the validation report for one completed experiment: dataset and
/// oracle provenance, methodology, per-tool statistics copied verbatim from
/// the analysis document, the reliability checklist (L1-L4) and the
/// regulatory requirements checklist. Deterministic given the inputs and a
/// frozen clock.
ReportOutputs generate_report(const std::filesystem::path& home,
                              const std::string& experiment_id,
                              const nlohmann::json& analysis_document,
                              const Clock& clock);

/// Everything a third party needs to reproduce the experiment bit-for-bit
/// with the sim executor: sample digests, oracle record provenance, the plan
/// and its configuration fingerprint.
nlohmann::ordered_json traceability_appendix(const std::filesystem::path& home,
                                             const std::string& experiment_id);

} // namespace matef
