#include "wfbench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wfbench/domain.hpp"
#include "wfbench/error.hpp"
#include "wfbench/rng.hpp"

namespace wfbench {

namespace {

constexpr std::size_t kCdnPoolSize = 40;
constexpr std::size_t kGooglePoolSize = 6;

const char* const kGoogleSnis[] = {"fonts.gstatic.com", "www.google.com", "s.youtube.com",
                                   "ad.doubleclick.com", "lh3.ggpht.com"};
const char* const kTransitAses[] = {"AS-T0", "AS-T1", "AS-T2", "AS-T3", "AS-T4", "AS-T5"};

struct FlowSignature {
    std::string sni;
    std::string dst;
    std::string dest_as;
    bool google = false;
    double packet_count_mean = 0.0;
    double in_size_mean = 0.0;
    double out_size_mean = 0.0;
    double in_ratio = 0.0;   // fraction of non-leading packets that are incoming
    double gap_scale = 0.0;  // seconds between packets
    std::vector<std::string> transit;
};

struct ClassSignature {
    std::string label;
    std::string primary_ip;
    std::vector<FlowSignature> flows;
};

double lerp(double lo, double hi, double pos) { return lo + (hi - lo) * pos; }

// overlap pulls every signature value toward its center; overlap 1 makes
// all classes identical
double blend(double value, double center, double overlap) {
    return (1.0 - overlap) * value + overlap * center;
}

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.bounded(i)]);
    return p;
}

}  // namespace

SynthBundle generate_synthetic(const SynthParams& params) {
    if (params.num_classes < 2) throw ValidationError("need at least 2 classes");
    if (params.samples_per_class < 2) throw ValidationError("need at least 2 samples per class");
    if (params.min_flows < 1 || params.max_flows < params.min_flows)
        throw ValidationError("infeasible flow range");
    if (params.min_packets < 3 || params.max_packets < params.min_packets)
        throw ValidationError("infeasible packet range (need >= 3 per flow)");
    if (params.overlap < 0.0 || params.overlap > 1.0) throw ValidationError("overlap must be in [0, 1]");
    if (params.google_fraction < 0.0 || params.google_fraction > 1.0)
        throw ValidationError("google_fraction must be in [0, 1]");

    const auto n_classes = static_cast<std::size_t>(params.num_classes);
    const double o = params.overlap;
    const double packet_center = (params.min_packets + params.max_packets) / 2.0;
    const double flow_center = (params.min_flows + params.max_flows) / 2.0;

    SynthBundle bundle;
    bundle.owners = OwnerMap::default_google();
    for (std::size_t g = 0; g < kGooglePoolSize; ++g)
        bundle.owners.endpoints["142.251.0." + std::to_string(g + 1)] = "Google";

    Rng rng_global(mix_seed(params.seed, 0xA11));
    const auto volume_perm = permutation(n_classes, rng_global);
    const auto size_perm = permutation(n_classes, rng_global);
    const auto timing_perm = permutation(n_classes, rng_global);
    auto grid = [&](const std::vector<std::size_t>& perm, std::size_t c) {
        return n_classes == 1 ? 0.5 : static_cast<double>(perm[c]) / static_cast<double>(n_classes - 1);
    };

    // shared Google routes; site-specific routes are added per class below
    for (const char* sni : kGoogleSnis)
        bundle.paths.routes[sni] = {kSynthClientAs, kTransitAses[0], kSynthGoogleAs};

    std::vector<ClassSignature> classes(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        Rng rng(mix_seed(params.seed, 0xC1A55ULL + c));
        auto& sig = classes[c];
        sig.label = "site" + std::to_string(c) + ".com";
        sig.primary_ip = "198.51.100." + std::to_string(c + 1);

        const double volume_mult = blend(lerp(0.6, 2.4, grid(volume_perm, c)), 1.5, o);
        const double in_size = blend(lerp(450.0, 1300.0, grid(size_perm, c)), 875.0, o);
        const double gap = blend(lerp(0.002, 0.05, grid(timing_perm, c)), 0.026, o);

        std::vector<std::string> cdn_pool;
        const std::size_t pool_size = 3 + rng.bounded(3);
        for (std::size_t i = 0; i < pool_size; ++i)
            cdn_pool.push_back("203.0.113." + std::to_string(rng.bounded(kCdnPoolSize) + 1));

        const auto drawn_flows = static_cast<double>(
            params.min_flows + static_cast<int>(rng.bounded(
                                   static_cast<std::uint64_t>(params.max_flows - params.min_flows + 1))));
        const auto n_flows = static_cast<std::size_t>(
            std::max(1.0, std::llround(blend(drawn_flows, flow_center, o)) * 1.0));

        for (std::size_t f = 0; f < n_flows; ++f) {
            FlowSignature flow;
            const double base_count = rng.uniform(params.min_packets, params.max_packets);
            flow.packet_count_mean =
                std::max(3.0, blend(base_count * volume_mult, packet_center * 1.5, o));
            flow.in_size_mean = std::clamp(blend(in_size + rng.uniform(-120.0, 120.0), 875.0, o), 150.0, 1390.0);
            flow.out_size_mean = blend(rng.uniform(90.0, 280.0), 185.0, o);
            flow.in_ratio = blend(rng.uniform(0.55, 0.85), 0.7, o);
            flow.gap_scale = std::max(1e-4, blend(gap * rng.uniform(0.6, 1.4), 0.026, o));

            if (f == 0) {
                flow.sni = sig.label;
                flow.dst = sig.primary_ip;
                flow.dest_as = "AS-SITE-" + std::to_string(c);
            } else if (rng.bernoulli(params.google_fraction)) {
                flow.google = true;
                flow.sni = kGoogleSnis[rng.bounded(std::size(kGoogleSnis))];
                flow.dst = "142.251.0." + std::to_string(rng.bounded(kGooglePoolSize) + 1);
                flow.dest_as = kSynthGoogleAs;
            } else if (rng.bernoulli(0.35)) {
                flow.sni = "static" + std::to_string(f) + ".site" + std::to_string(c) + ".com";
                flow.dst = sig.primary_ip;
                flow.dest_as = "AS-SITE-" + std::to_string(c);
            } else {
                flow.sni = "cdn" + std::to_string(f) + ".assets" + std::to_string(c) + ".net";
                flow.dst = cdn_pool[rng.bounded(cdn_pool.size())];
                flow.dest_as = "AS-CDN-" + std::to_string(rng.bounded(4));
            }
            flow.transit.push_back(kTransitAses[rng.bounded(std::size(kTransitAses))]);
            if (rng.bernoulli(0.5)) flow.transit.push_back(kTransitAses[rng.bounded(std::size(kTransitAses))]);
            sig.flows.push_back(std::move(flow));
        }

        // routes and fingerprint database entries follow the signature
        auto& db_entry = bundle.ip_db.sites[sig.label];
        db_entry.primary_ips.insert(sig.primary_ip);
        for (const auto& flow : sig.flows) {
            if (!flow.google) {
                auto route = std::vector<std::string>{kSynthClientAs};
                route.insert(route.end(), flow.transit.begin(), flow.transit.end());
                route.push_back(flow.dest_as);
                bundle.paths.routes[flow.sni] = std::move(route);
            }
            const auto domain = etld_plus_one(flow.sni).value_or(flow.sni);
            if (domain != etld_plus_one(sig.label).value_or(sig.label))
                db_entry.secondary[domain].insert(flow.dst);
        }
    }

    std::vector<Observation> observations;
    observations.reserve(n_classes * static_cast<std::size_t>(params.samples_per_class));
    for (std::size_t c = 0; c < n_classes; ++c) {
        const auto& sig = classes[c];
        for (int s = 0; s < params.samples_per_class; ++s) {
            Rng rng(mix_seed(params.seed,
                             0x0B5ULL + c * static_cast<std::size_t>(params.samples_per_class) +
                                 static_cast<std::size_t>(s)));
            Observation obs;
            obs.label = sig.label;

            ResourceLog log;
            log.label = sig.label;
            log.site_domain = sig.label;

            for (std::size_t f = 0; f < sig.flows.size(); ++f) {
                const auto& fs = sig.flows[f];
                Flow flow;
                flow.sni = fs.sni;
                flow.dst = fs.dst;
                flow.src = "10.0.0.2";

                const auto count = static_cast<std::size_t>(
                    std::max<long long>(3, std::llround(fs.packet_count_mean * (1.0 + 0.10 * rng.normal()))));
                double t = f == 0 ? 0.0 : rng.uniform(0.005, 0.4);
                // leading outgoing packet stands in for the ClientHello
                flow.packets.push_back(
                    {t, static_cast<std::int64_t>(std::clamp(rng.normal(fs.out_size_mean, 40.0), 50.0, 700.0))});
                for (std::size_t i = 1; i < count; ++i) {
                    t += rng.exponential(fs.gap_scale);
                    const bool incoming = rng.bernoulli(fs.in_ratio);
                    const double mean = incoming ? fs.in_size_mean : fs.out_size_mean;
                    const double sigma = incoming ? 0.15 * fs.in_size_mean : 35.0;
                    const auto size =
                        static_cast<std::int64_t>(std::clamp(rng.normal(mean, sigma), 64.0, 1400.0));
                    flow.packets.push_back({t, incoming ? -size : size});
                }

                ResourceEntry entry;
                std::uint64_t out_bytes = 0, in_bytes = 0;
                double first_in = -1.0;
                for (const auto& p : flow.packets) {
                    if (p.outgoing())
                        out_bytes += p.bytes();
                    else {
                        in_bytes += p.bytes();
                        if (first_in < 0.0) first_in = p.time;
                    }
                }
                entry.t_request = flow.packets.front().time;
                entry.size_request = out_bytes;
                entry.t_response = first_in < 0.0 ? entry.t_request : std::max(entry.t_request, first_in);
                entry.size_response = in_bytes;
                entry.url = "https://" + fs.sni + "/r" + std::to_string(f);
                entry.domain = etld_plus_one(fs.sni).value_or(fs.sni);
                log.entries.push_back(std::move(entry));

                obs.flows.push_back(std::move(flow));
            }
            observations.push_back(std::move(obs));
            bundle.logs.push_back(std::move(log));
        }
    }
    bundle.dataset = make_dataset(std::move(observations));
    return bundle;
}

}  // namespace wfbench
