#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wfbench {

enum class Party { kUnlabeled, kFirst, kThird };

// One HTTP request/response pair recorded during a page load.
struct ResourceEntry {
    double t_request = 0.0;
    std::uint64_t size_request = 0;
    double t_response = 0.0;
    std::uint64_t size_response = 0;
    std::string url;
    std::string domain;  // eTLD+1 of the serving host
    std::optional<std::string> originator;

    // in-memory bookkeeping; never serialized
    Party party = Party::kUnlabeled;
    bool dummy = false;
};

// Application-layer record of one page load.
struct ResourceLog {
    std::string label;
    std::string site_domain;  // eTLD+1 of the page
    std::vector<ResourceEntry> entries;

    std::uint64_t total_request_bytes() const;
    std::uint64_t total_response_bytes() const;
    std::uint64_t total_bytes() const { return total_request_bytes() + total_response_bytes(); }
};

void validate_resource_log(const ResourceLog& log, const std::string& context);

// Resource-log JSONL, one log per line:
// {"label": "...", "site_domain": "...", "entries": [{"t_req": 0.0,
//  "size_req": 500, "t_resp": 0.2, "size_resp": 30000, "url": "...",
//  "domain": "...", "originator": null}]}
// Party tags and dummy flags are in-memory only and never written, so a
// defended log is indistinguishable from a recorded one on disk.
std::vector<ResourceLog> load_resource_logs(std::istream& in);
std::vector<ResourceLog> load_resource_logs_file(const std::string& path);
void save_resource_logs(const std::vector<ResourceLog>& logs, std::ostream& out);
void save_resource_logs_file(const std::vector<ResourceLog>& logs, const std::string& path);

}  // namespace wfbench
