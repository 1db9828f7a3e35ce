#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "linkbait/sifting.hpp"
#include "linkbait/traffic.hpp"

namespace linkbait {

struct ProberRecord {
    int endpoint = -1;
    std::uint64_t ttl_mask = 0;
    int distinct_ttls = 0;
    int invalid_port_hits = 0;
    int first_seen = -1;
    int last_seen = -1;
    bool flagged = false;
    int flagged_tick = -1;
};

struct RerouteRule {
    enum class Scope { target_link, bait_member };
    Scope scope = Scope::target_link;
    int match_link = -1;
    std::vector<int> branches;  // target_link: sampled uniformly per flow
    int converge = -1;          // bait_member: fixed redirect
    std::uint64_t rng_seed = 0;
    bool transient_pending = true;  // one-time +1 tick on first redirected packet
};

struct ObfuscationConfig {
    int ttl_threshold = 3;         // distinct TTLs that mark a prober
    int invalid_port_floor = 30000;  // ports strictly above are invalid
    int invalid_port_threshold = 3;  // repeated invalid ports alone also flag
};

// Runtime defense state: prober table plus the rule set derived from one
// SiftingPlan. Owned by a single world; hand off whole between threads only.
class ObfuscationState : public DefensePolicy {
public:
    ObfuscationState(const Topology& topo, const SiftingPlan& plan, std::uint64_t seed,
                     ObfuscationConfig cfg = {});

    void inspect_ingress(const ProbePacketObs& obs) override;
    bool is_labeled(int endpoint) const override;
    std::vector<int> effective_probe_path(int flow_id, int src_router,
                                          const std::vector<int>& base_path, int dst_server,
                                          int* first_rewrite_pos, bool* transient) override;

    const std::map<int, ProberRecord>& prober_table() const { return probers_; }
    const std::map<int, RerouteRule>& rules() const { return rules_; }
    const ObfuscationConfig& config() const { return cfg_; }

    std::string rules_csv() const;
    std::string prober_csv() const;

private:
    const Topology& topo_;
    ObfuscationConfig cfg_;
    std::map<int, ProberRecord> probers_;
    std::map<int, RerouteRule> rules_;  // keyed by match link

    int pick_branch(const RerouteRule& rule, int flow_id) const;
};

}  // namespace linkbait
