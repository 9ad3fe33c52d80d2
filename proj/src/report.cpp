#include "mds/report.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "mds/error.hpp"

namespace mds {

using nlohmann::json;

json report_to_json(const ExperimentReport& r) {
    json curves = json::array();
    for (const auto& c : r.curves) curves.push_back(curve_to_json(c));
    return json{{"metrics", r.metrics.is_null() ? json::object() : r.metrics}, {"curves", curves}};
}

ExperimentReport report_from_json(const json& j) {
    ExperimentReport r;
    r.metrics = j.value("metrics", json::object());
    for (const auto& c : j.value("curves", json::array())) r.curves.push_back(curve_from_json(c));
    return r;
}

namespace {

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

void emit_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    if (report.empty()) throw InvalidArgument("emit_report: nothing to report");
    std::set<std::string> names;
    for (const auto& c : report.curves) {
        if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos) {
            throw InvalidArgument("emit_report: curve names must be plain file stems");
        }
        if (!names.insert(c.name).second) throw InvalidArgument("emit_report: duplicate curve '" + c.name + "'");
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create report directory " + dir.string());

    write_file(dir / "metrics.json", report_to_json(report).dump(2) + "\n");
    for (const auto& c : report.curves) {
        std::string csv = "parameter,ccc_mean,ccc_std\n";
        for (const auto& p : c.points) {
            csv += format_number(p.parameter) + "," + format_number(p.ccc_mean) + "," + format_number(p.ccc_std) + "\n";
        }
        write_file(dir / (c.name + ".csv"), csv);
    }
}

ExperimentReport load_report(const std::filesystem::path& metrics_json) {
    std::ifstream in(metrics_json);
    if (!in) throw IoError("cannot open " + metrics_json.string());
    try {
        return report_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ParseError(metrics_json.string() + ": " + e.what(), 0);
    }
}

}  // namespace mds
