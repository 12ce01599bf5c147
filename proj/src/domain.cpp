#include "wfbench/domain.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>
#include <vector>

namespace wfbench {

namespace {

// Snapshot of the public suffix list: generic TLDs, country suffixes with
// registration at the second level, and common hosting suffixes. Names
// absent here fall back to the PSL default rule (last label).
const char* const kSuffixRules[] = {
    // generic
    "com", "net", "org", "edu", "gov", "mil", "int", "info", "biz", "name", "pro", "mobi",
    "app", "dev", "io", "co", "ai", "me", "tv", "cc", "ws", "us", "eu", "asia", "cat",
    "xyz", "site", "online", "store", "tech", "blog", "cloud", "space", "live", "news",
    "agency", "digital", "systems", "solutions", "email", "expert", "guru", "link", "media",
    "network", "photo", "pics", "press", "rocks", "social", "today", "website", "wiki",
    "work", "zone", "shop", "art", "bank", "fit", "icu", "ink", "law", "lol", "ltd", "men",
    "one", "ooo", "page", "pub", "red", "run", "top", "uno", "vip", "win",
    // country TLDs
    "uk", "fr", "de", "jp", "cn", "ru", "br", "in", "it", "nl", "es", "se", "no", "fi",
    "dk", "pl", "ch", "at", "be", "cz", "sk", "hu", "ro", "bg", "gr", "pt", "ie", "il",
    "tr", "ua", "za", "au", "nz", "ca", "mx", "ar", "cl", "pe", "kr", "tw", "hk", "sg",
    "my", "th", "vn", "ph", "id", "is", "lt", "lv", "ee", "si", "hr", "rs", "by", "kz",
    // second-level country suffixes
    "co.uk", "org.uk", "me.uk", "ltd.uk", "plc.uk", "net.uk", "sch.uk", "ac.uk", "gov.uk",
    "nhs.uk", "police.uk",
    "com.au", "net.au", "org.au", "edu.au", "gov.au", "asn.au", "id.au",
    "co.jp", "or.jp", "ne.jp", "ac.jp", "ad.jp", "ed.jp", "go.jp", "gr.jp", "lg.jp",
    "com.cn", "net.cn", "org.cn", "gov.cn", "edu.cn", "ac.cn",
    "com.br", "net.br", "org.br", "gov.br", "edu.br",
    "co.in", "net.in", "org.in", "firm.in", "gen.in", "ind.in",
    "co.nz", "net.nz", "org.nz", "govt.nz", "ac.nz", "school.nz",
    "co.za", "net.za", "org.za", "web.za", "gov.za", "ac.za",
    "com.mx", "org.mx", "net.mx", "gob.mx", "edu.mx",
    "com.ar", "net.ar", "org.ar", "gob.ar", "edu.ar",
    "com.tr", "net.tr", "org.tr", "gov.tr", "edu.tr",
    "com.sg", "net.sg", "org.sg", "edu.sg", "gov.sg", "per.sg",
    "com.hk", "net.hk", "org.hk", "edu.hk", "gov.hk", "idv.hk",
    "com.tw", "net.tw", "org.tw", "edu.tw", "gov.tw", "idv.tw",
    "co.kr", "ne.kr", "or.kr", "re.kr", "go.kr", "ac.kr", "pe.kr",
    "com.ua", "net.ua", "org.ua", "gov.ua", "edu.ua", "in.ua",
    "com.pl", "net.pl", "org.pl", "edu.pl", "gov.pl", "info.pl", "waw.pl",
    "com.ru", "net.ru", "org.ru", "pp.ru", "msk.ru", "spb.ru",
    "co.il", "org.il", "net.il", "ac.il", "gov.il", "muni.il",
    "nom.es", "org.es", "gob.es", "edu.es",
    "co.th", "in.th", "ac.th", "go.th", "net.th", "or.th",
    "com.my", "net.my", "org.my", "gov.my", "edu.my",
    "com.ph", "net.ph", "org.ph", "gov.ph", "edu.ph",
    "com.vn", "net.vn", "org.vn", "gov.vn", "edu.vn",
    "co.id", "net.id", "or.id", "web.id", "sch.id", "go.id", "ac.id",
    "or.at", "co.at", "ac.at", "gv.at",
    "asso.fr", "nom.fr", "gouv.fr",
    "qc.ca", "on.ca", "bc.ca", "ab.ca", "gc.ca",
    // hosting / platform suffixes
    "github.io", "gitlab.io", "bitbucket.io", "netlify.app", "vercel.app", "herokuapp.com",
    "appspot.com", "web.app", "firebaseapp.com", "blogspot.com", "wordpress.com",
    "tumblr.com", "weebly.com", "wixsite.com", "cloudfront.net", "s3.amazonaws.com",
    "elb.amazonaws.com", "azurewebsites.net", "cloudapp.net", "blob.core.windows.net",
    "azureedge.net", "pages.dev", "workers.dev", "r2.dev", "glitch.me", "onrender.com",
    "fly.dev", "deno.dev",
    // wildcard and exception rules
    "*.ck", "!www.ck", "*.compute.amazonaws.com", "*.compute-1.amazonaws.com",
};

struct SuffixTable {
    std::unordered_set<std::string> exact;
    std::unordered_set<std::string> wildcard;   // base of "*.base"
    std::unordered_set<std::string> exception;  // full name of "!name"
};

const SuffixTable& suffix_table() {
    static const SuffixTable table = [] {
        SuffixTable t;
        for (const char* rule : kSuffixRules) {
            std::string s(rule);
            if (s[0] == '!')
                t.exception.insert(s.substr(1));
            else if (s.rfind("*.", 0) == 0)
                t.wildcard.insert(s.substr(2));
            else
                t.exact.insert(std::move(s));
        }
        return t;
    }();
    return table;
}

std::optional<std::vector<std::string>> split_labels(std::string_view domain) {
    std::string name;
    name.reserve(domain.size());
    for (char c : domain) name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    while (!name.empty() && name.back() == '.') name.pop_back();
    if (name.empty()) return std::nullopt;
    if (name.find(':') != std::string::npos) return std::nullopt;  // IPv6 / port

    std::vector<std::string> labels;
    std::size_t start = 0;
    bool all_numeric = true;
    while (true) {
        const std::size_t dot = name.find('.', start);
        const std::string label = name.substr(start, dot == std::string::npos ? dot : dot - start);
        if (label.empty()) return std::nullopt;
        if (!std::all_of(label.begin(), label.end(), [](unsigned char c) { return std::isdigit(c); }))
            all_numeric = false;
        labels.push_back(label);
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (all_numeric) return std::nullopt;  // IPv4 literal
    return labels;
}

std::string join_tail(const std::vector<std::string>& labels, std::size_t count) {
    std::string out;
    for (std::size_t i = labels.size() - count; i < labels.size(); ++i) {
        if (!out.empty()) out.push_back('.');
        out += labels[i];
    }
    return out;
}

// Length in labels of the public suffix of `labels`, per the PSL
// algorithm (longest matching rule; exceptions win; default rule "*").
std::size_t public_suffix_labels(const std::vector<std::string>& labels) {
    const SuffixTable& t = suffix_table();
    std::size_t best = 1;  // default rule: the TLD itself
    for (std::size_t k = 1; k <= labels.size(); ++k) {
        const std::string tail = join_tail(labels, k);
        if (t.exception.count(tail)) return k - 1;
        if (t.exact.count(tail)) best = std::max(best, k);
        if (k >= 2 && t.wildcard.count(join_tail(labels, k - 1))) best = std::max(best, k);
    }
    return best;
}

}  // namespace

std::optional<std::string> etld_plus_one(std::string_view domain) {
    auto labels = split_labels(domain);
    if (!labels || labels->size() < 2) return std::nullopt;
    const std::size_t suffix = public_suffix_labels(*labels);
    if (labels->size() < suffix + 1) return std::nullopt;
    return join_tail(*labels, suffix + 1);
}

bool is_public_suffix(std::string_view domain) {
    auto labels = split_labels(domain);
    if (!labels) return false;
    return public_suffix_labels(*labels) == labels->size();
}

}  // namespace wfbench
