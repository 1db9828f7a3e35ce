#include "linkbait/obfuscation.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

namespace linkbait {

ObfuscationState::ObfuscationState(const Topology& topo, const SiftingPlan& plan,
                                   std::uint64_t seed, ObfuscationConfig cfg)
    : topo_(topo), cfg_(cfg) {
    // Target rules take precedence when a link is both a target and a bait
    // member: hiding the target matters more than boosting the converge.
    for (const auto& b : plan.baits) {
        if (b.converge < 0) continue;
        for (int m : b.members) {
            if (m == b.converge) continue;
            RerouteRule r;
            r.scope = RerouteRule::Scope::bait_member;
            r.match_link = m;
            r.converge = b.converge;
            r.rng_seed = derive_seed(seed, "bait", static_cast<std::uint64_t>(m));
            rules_[m] = std::move(r);
        }
    }
    for (const auto& t : plan.targets) {
        RerouteRule r;
        r.scope = RerouteRule::Scope::target_link;
        r.match_link = t.link;
        r.branches = t.branches;
        r.rng_seed = derive_seed(seed, "target", static_cast<std::uint64_t>(t.link));
        rules_[t.link] = std::move(r);
    }
}

void ObfuscationState::inspect_ingress(const ProbePacketObs& obs) {
    ProberRecord& rec = probers_.try_emplace(obs.endpoint).first->second;
    if (rec.endpoint < 0) {
        rec.endpoint = obs.endpoint;
        rec.first_seen = obs.tick;
    }
    rec.last_seen = obs.tick;
    if (!obs.probe) return;  // TCP-like samples only touch the seen timestamps

    int bit = std::clamp(obs.ttl, 1, 64) - 1;
    rec.ttl_mask |= (1ULL << bit);
    rec.distinct_ttls = std::popcount(rec.ttl_mask);
    if (obs.dst_port > cfg_.invalid_port_floor) rec.invalid_port_hits += 1;

    if (!rec.flagged) {
        bool by_ttl = rec.distinct_ttls >= cfg_.ttl_threshold && rec.invalid_port_hits >= 1;
        // Repeating one TTL per bot masks the TTL feature but exacerbates the
        // invalid-port one, so ports alone flag after enough repeats.
        bool by_port = rec.invalid_port_hits >= cfg_.invalid_port_threshold;
        if (by_ttl || by_port) {
            rec.flagged = true;
            rec.flagged_tick = obs.tick;
        }
    }
}

bool ObfuscationState::is_labeled(int endpoint) const {
    auto it = probers_.find(endpoint);
    return it != probers_.end() && it->second.flagged;
}

int ObfuscationState::pick_branch(const RerouteRule& rule, int flow_id) const {
    std::mt19937_64 rng(splitmix64(rule.rng_seed ^ splitmix64(static_cast<std::uint64_t>(flow_id))));
    return rule.branches[rand_below(rng, rule.branches.size())];
}

std::vector<int> ObfuscationState::effective_probe_path(int flow_id, int src_router,
                                                        const std::vector<int>& base_path,
                                                        int dst_server, int* first_rewrite_pos,
                                                        bool* transient) {
    if (first_rewrite_pos) *first_rewrite_pos = -1;
    if (transient) *transient = false;

    std::vector<int> path = base_path;
    std::set<int> applied;
    std::size_t pos = 0;
    int guard = 0;
    while (pos < path.size() && guard++ < 128) {
        int lid = path[pos];
        auto it = rules_.find(lid);
        if (it == rules_.end() || applied.count(lid)) {
            ++pos;
            continue;
        }
        RerouteRule& rule = it->second;
        applied.insert(lid);

        int via = -1;
        if (rule.scope == RerouteRule::Scope::target_link) {
            if (rule.branches.empty())
                fail(errc::no_branch_available,
                     "target link " + std::to_string(lid) + " has no branch links");
            via = pick_branch(rule, flow_id);
        } else {
            via = rule.converge;
            if (via == lid) {
                ++pos;
                continue;
            }
        }

        // Splice at the latest hop from which the detour head is reachable
        // without crossing the matched link; rerouting only rewrites partial
        // hops, so the probe still reaches its original destination.
        const Link& via_link = topo_.link(via);
        std::vector<int> routers = topo_.routers_on_path(src_router, path);
        bool spliced = false;
        for (int idx = static_cast<int>(pos); idx >= 0; --idx) {
            auto conn = topo_.connect(routers[idx], via_link.src, lid);
            if (!conn) continue;
            std::vector<int> rebuilt(path.begin(), path.begin() + idx);
            rebuilt.insert(rebuilt.end(), conn->begin(), conn->end());
            rebuilt.push_back(via);
            std::vector<int> onward = topo_.route_from_router(via_link.dst, dst_server);
            rebuilt.insert(rebuilt.end(), onward.begin(), onward.end());
            path = std::move(rebuilt);
            if (first_rewrite_pos && (*first_rewrite_pos < 0 || idx < *first_rewrite_pos))
                *first_rewrite_pos = idx;
            if (transient && rule.transient_pending) {
                *transient = true;
                rule.transient_pending = false;
            }
            pos = static_cast<std::size_t>(idx);
            spliced = true;
            break;
        }
        if (!spliced) ++pos;  // converge unreachable from anywhere upstream; leave as is
    }
    return path;
}

std::string ObfuscationState::rules_csv() const {
    std::ostringstream out;
    out << "scope,match_link,action\n";
    for (const auto& [lid, r] : rules_) {
        if (r.scope == RerouteRule::Scope::target_link) {
            out << "target_link," << lid << ",";
            for (std::size_t i = 0; i < r.branches.size(); ++i)
                out << (i ? ";" : "") << r.branches[i];
            out << "\n";
        } else {
            out << "bait_member," << lid << "," << r.converge << "\n";
        }
    }
    return out.str();
}

std::string ObfuscationState::prober_csv() const {
    std::ostringstream out;
    out << "endpoint_id,distinct_ttls,invalid_port_hits,flagged_tick\n";
    for (const auto& [id, rec] : probers_)
        out << id << "," << rec.distinct_ttls << "," << rec.invalid_port_hits << ","
            << rec.flagged_tick << "\n";
    return out.str();
}

}  // namespace linkbait
