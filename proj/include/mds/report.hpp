#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "mds/experiment.hpp"

namespace mds {

struct ExperimentReport {
    nlohmann::json metrics = nlohmann::json::object();
    std::vector<Curve> curves;

    bool empty() const { return (metrics.is_null() || metrics.empty()) && curves.empty(); }
};

nlohmann::json report_to_json(const ExperimentReport& r);
ExperimentReport report_from_json(const nlohmann::json& j);

/// Writes <dir>/metrics.json (metrics plus every curve) and <dir>/<curve name>.csv
/// with columns parameter,ccc_mean,ccc_std. Output bytes depend only on the report.
/// Throws InvalidArgument for an empty report and IoError when dir is not writable.
void emit_report(const ExperimentReport& report, const std::filesystem::path& dir);

ExperimentReport load_report(const std::filesystem::path& metrics_json);

}  // namespace mds
