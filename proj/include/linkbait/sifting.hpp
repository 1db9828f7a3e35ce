#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "linkbait/topology.hpp"

namespace linkbait {

// Defender-side view from LG tracing: per-link flow sets T(l), the total flow
// universe F (one flow per LG vantage), and the trace census.
struct DefenderLinkmap {
    std::map<int, std::set<int>> flows_by_link;  // link id -> LG/source ids
    std::set<int> all_flows;                     // F
    PathCensus census;

    int density(int link_id) const {
        auto it = flows_by_link.find(link_id);
        return it == flows_by_link.end() ? 0 : static_cast<int>(it->second.size());
    }
};

DefenderLinkmap lg_trace_all(const Topology& topo, const std::vector<int>& lg_servers,
                             const std::vector<int>& servers);

// Recorded-trace ingestion: CSV rows of lg_server_id,server_id,hop_index,router_id.
DefenderLinkmap ingest_path_corpus(const Topology& topo, std::istream& csv);

struct TargetLink {
    int link = -1;
    int density = 0;
    std::vector<int> branches;
};

std::vector<TargetLink> identify_target_links(const Topology& topo, const DefenderLinkmap& map,
                                              int k);

struct BaitLink {
    int id = -1;
    std::vector<int> members;  // n_b = members.size()
    int converge = -1;         // max-bandwidth non-target member
    int density = 0;           // |union of member T(l)|
    double weight = 0.0;       // n_b / density
};

struct SiftingPlan {
    std::vector<TargetLink> targets;
    std::vector<BaitLink> baits;
    double coverage = 0.0;  // p_a as a set fraction
    double tau = 0.0;
    int nl_th = 1;
    bool exhausted_links = false;
    std::vector<int> selection_order;

    double total_weight() const;
    bool is_bait_member(int link_id) const;
    std::string to_json_string() const;
};

SiftingPlan group_bait_links(const Topology& topo, const DefenderLinkmap& map, double tau,
                             int nl_th, int k_targets);

struct AttackCost {
    long n_p = 0;  // ceil(B/U)
    long n_b = 0;  // n_targets * n_p + n_un
    std::vector<std::pair<int, long>> n_l_per_bait;  // bait id -> bots to flood it
};

AttackCost attack_cost(const SiftingPlan& plan, double b_bw, double u, int n_targets, long n_un,
                       const std::map<int, std::vector<double>>& alphas);

std::map<int, std::vector<double>> alphas_from_topology(const Topology& topo,
                                                        const SiftingPlan& plan, double b_bw);

}  // namespace linkbait
