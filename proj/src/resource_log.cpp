#include "wfbench/resource_log.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "wfbench/error.hpp"

namespace wfbench {

using nlohmann::ordered_json;

std::uint64_t ResourceLog::total_request_bytes() const {
    std::uint64_t total = 0;
    for (const auto& e : entries) total += e.size_request;
    return total;
}

std::uint64_t ResourceLog::total_response_bytes() const {
    std::uint64_t total = 0;
    for (const auto& e : entries) total += e.size_response;
    return total;
}

void validate_resource_log(const ResourceLog& log, const std::string& context) {
    if (log.label.empty()) throw ValidationError(context + ": empty label");
    if (log.entries.empty()) throw ValidationError(context + ": log has no entries");
    for (std::size_t i = 0; i < log.entries.size(); ++i) {
        const auto& e = log.entries[i];
        if (!std::isfinite(e.t_request) || !std::isfinite(e.t_response))
            throw ValidationError(context + ": entry " + std::to_string(i) + ": non-finite time");
        if (e.t_response < e.t_request)
            throw ValidationError(context + ": entry " + std::to_string(i) + ": t_resp before t_req");
    }
}

std::vector<ResourceLog> load_resource_logs(std::istream& in) {
    std::vector<ResourceLog> logs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string context = "line " + std::to_string(line_no);
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const ordered_json::parse_error& e) {
            throw ValidationError(context + ": malformed JSON: " + e.what());
        }
        ResourceLog log;
        if (!j.contains("label") || !j["label"].is_string())
            throw ValidationError(context + ": missing string field 'label'");
        log.label = j["label"].get<std::string>();
        log.site_domain = j.value("site_domain", std::string{});
        if (!j.contains("entries") || !j["entries"].is_array() || j["entries"].empty())
            throw ValidationError(context + ": 'entries' must be a non-empty array");
        for (const auto& je : j["entries"]) {
            ResourceEntry e;
            e.t_request = je.value("t_req", 0.0);
            e.t_response = je.value("t_resp", 0.0);
            if (!je.contains("size_req") || !je["size_req"].is_number_integer() || je["size_req"].get<std::int64_t>() < 0)
                throw ValidationError(context + ": 'size_req' must be a non-negative integer");
            if (!je.contains("size_resp") || !je["size_resp"].is_number_integer() ||
                je["size_resp"].get<std::int64_t>() < 0)
                throw ValidationError(context + ": 'size_resp' must be a non-negative integer");
            e.size_request = je["size_req"].get<std::uint64_t>();
            e.size_response = je["size_resp"].get<std::uint64_t>();
            e.url = je.value("url", std::string{});
            e.domain = je.value("domain", std::string{});
            if (je.contains("originator") && !je["originator"].is_null())
                e.originator = je["originator"].get<std::string>();
            log.entries.push_back(std::move(e));
        }
        validate_resource_log(log, context);
        logs.push_back(std::move(log));
    }
    if (logs.empty()) throw ValidationError("input contains no resource logs");
    return logs;
}

std::vector<ResourceLog> load_resource_logs_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return load_resource_logs(in);
}

void save_resource_logs(const std::vector<ResourceLog>& logs, std::ostream& out) {
    for (const auto& log : logs) {
        ordered_json j;
        j["label"] = log.label;
        j["site_domain"] = log.site_domain;
        j["entries"] = ordered_json::array();
        for (const auto& e : log.entries) {
            ordered_json je;
            je["t_req"] = e.t_request;
            je["size_req"] = e.size_request;
            je["t_resp"] = e.t_response;
            je["size_resp"] = e.size_response;
            je["url"] = e.url;
            je["domain"] = e.domain;
            je["originator"] = e.originator ? ordered_json(*e.originator) : ordered_json(nullptr);
            j["entries"].push_back(std::move(je));
        }
        out << j.dump() << '\n';
    }
    if (!out) throw PipelineError("failed writing resource logs");
}

void save_resource_logs_file(const std::vector<ResourceLog>& logs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw PipelineError("cannot open '" + path + "' for writing");
    save_resource_logs(logs, out);
}

}  // namespace wfbench
