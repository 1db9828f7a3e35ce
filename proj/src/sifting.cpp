#include "linkbait/sifting.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <sstream>

#include "json.hpp"

namespace linkbait {

using nlohmann::ordered_json;

namespace {

DefenderLinkmap linkmap_from_paths(
    const std::map<std::pair<int, int>, std::vector<int>>& paths_by_pair) {
    DefenderLinkmap map;
    std::set<std::vector<int>> distinct;
    long hop_sum = 0;
    for (const auto& [key, links] : paths_by_pair) {
        map.all_flows.insert(key.first);
        for (int lid : links) map.flows_by_link[lid].insert(key.first);
        if (distinct.insert(links).second) hop_sum += static_cast<long>(links.size()) + 1;
    }
    map.census.non_identical_paths = static_cast<int>(distinct.size());
    map.census.mean_hops =
        distinct.empty() ? 0.0 : static_cast<double>(hop_sum) / distinct.size();
    return map;
}

}  // namespace

DefenderLinkmap lg_trace_all(const Topology& topo, const std::vector<int>& lg_servers,
                             const std::vector<int>& servers) {
    if (lg_servers.empty()) fail(errc::no_lg_servers, "LG tracing requires at least one LG server");
    // The defender measures its own network with no obfuscation active, so a
    // trace observes exactly the routed path.
    std::map<std::pair<int, int>, std::vector<int>> paths;
    for (int lg : lg_servers)
        for (int s : servers) paths[{lg, s}] = topo.route(lg, s);
    return linkmap_from_paths(paths);
}

DefenderLinkmap ingest_path_corpus(const Topology& topo, std::istream& csv) {
    // lg_server_id,server_id,hop_index,router_id
    std::map<std::pair<int, int>, std::map<int, int>> hops;
    std::string line;
    bool first = true;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        if (first && line.find("lg_server_id") != std::string::npos) {
            first = false;
            continue;
        }
        first = false;
        std::stringstream ss(line);
        std::string field;
        int vals[4];
        for (int i = 0; i < 4; ++i) {
            if (!std::getline(ss, field, ','))
                fail(errc::config_invalid, "malformed path corpus row: " + line);
            vals[i] = std::stoi(field);
        }
        hops[{vals[0], vals[1]}][vals[2]] = vals[3];
    }
    std::map<std::pair<int, int>, std::vector<int>> paths;
    for (const auto& [key, by_index] : hops) {
        std::vector<int> links;
        int prev = -1;
        for (const auto& [idx, router] : by_index) {
            if (prev >= 0) {
                int lid = topo.link_between(prev, router);
                if (lid >= 0) links.push_back(lid);
            }
            prev = router;
        }
        paths[key] = std::move(links);
    }
    return linkmap_from_paths(paths);
}

std::vector<TargetLink> identify_target_links(const Topology& topo, const DefenderLinkmap& map,
                                              int k) {
    if (map.flows_by_link.empty()) fail(errc::empty_linkmap, "linkmap has no traced links");
    if (k < 1) fail(errc::k_too_large, "k must be >= 1");
    std::vector<std::pair<int, int>> ranked;  // (link, density)
    for (const auto& [lid, flows] : map.flows_by_link)
        if (!flows.empty()) ranked.push_back({lid, static_cast<int>(flows.size())});
    if (k > static_cast<int>(ranked.size()))
        fail(errc::k_too_large, "k exceeds the number of traced links");
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    ranked.resize(k);

    std::vector<TargetLink> out;
    for (const auto& [lid, density] : ranked) {
        TargetLink t;
        t.link = lid;
        t.density = density;
        const Link& tl = topo.link(lid);
        for (const Link& b : topo.links()) {
            if (b.id == lid) continue;
            int d1 = topo.hop_distance(tl.src, b.src);
            int d2 = topo.hop_distance(tl.src, b.dst);
            int d3 = topo.hop_distance(tl.dst, b.src);
            int d4 = topo.hop_distance(tl.dst, b.dst);
            int d = -1;
            for (int x : {d1, d2, d3, d4})
                if (x >= 0 && (d < 0 || x < d)) d = x;
            if (d < 0 || d > 2) continue;
            // A useful branch diverts around the target: its head must be
            // reachable without crossing the target and must not already sit
            // downstream of it.
            if (topo.connect(tl.dst, b.src).has_value()) continue;
            if (!topo.connect(tl.src, b.src, lid).has_value()) continue;
            t.branches.push_back(b.id);
        }
        out.push_back(std::move(t));
    }
    return out;
}

double SiftingPlan::total_weight() const {
    double w = 0.0;
    for (const auto& b : baits) w += b.weight;
    return w;
}

bool SiftingPlan::is_bait_member(int link_id) const {
    for (const auto& b : baits)
        for (int m : b.members)
            if (m == link_id) return true;
    return false;
}

std::string SiftingPlan::to_json_string() const {
    ordered_json j;
    j["tau"] = tau;
    j["nl_th"] = nl_th;
    j["coverage"] = coverage;
    j["exhausted_links"] = exhausted_links;
    j["target_links"] = ordered_json::array();
    for (const auto& t : targets)
        j["target_links"].push_back(
            {{"link", t.link}, {"density", t.density}, {"branches", t.branches}});
    j["bait_links"] = ordered_json::array();
    for (const auto& b : baits)
        j["bait_links"].push_back({{"id", b.id},
                                   {"members", b.members},
                                   {"converge", b.converge},
                                   {"density", b.density},
                                   {"weight", b.weight}});
    j["selection_order"] = selection_order;
    return j.dump(2) + "\n";
}

SiftingPlan group_bait_links(const Topology& topo, const DefenderLinkmap& map, double tau,
                             int nl_th, int k_targets) {
    if (tau < 0.0 || tau > 1.0) fail(errc::invalid_tau, "tau must lie in [0, 1]");
    if (nl_th < 1) fail(errc::invalid_tau, "NL_th must be >= 1");

    SiftingPlan plan;
    plan.tau = tau;
    plan.nl_th = nl_th;
    plan.targets = identify_target_links(topo, map, k_targets);
    if (tau == 0.0) return plan;  // nothing to cover

    std::set<int> target_set;
    for (const auto& t : plan.targets) target_set.insert(t.link);

    // Candidates: links carrying at least one LG path. Partial flows toward
    // true target links stay in the pool; only the converge choice excludes
    // them.
    struct Cand {
        int link;
        const std::set<int>* flows;
        int rho;
    };
    std::vector<Cand> cands;
    std::vector<int> densities;
    for (const auto& [lid, flows] : map.flows_by_link) {
        if (flows.empty()) continue;
        cands.push_back({lid, &flows, static_cast<int>(flows.size())});
        densities.push_back(static_cast<int>(flows.size()));
    }
    std::sort(densities.begin(), densities.end());
    int median_density = densities.empty() ? 0 : densities[(densities.size() - 1) / 2];

    const double phi = static_cast<double>(map.all_flows.size());
    std::set<int> covered;
    double sum_rho = 0.0;
    std::vector<int> selected;

    // Stop once the summed density estimate clears tau strictly and the set
    // cover itself reaches tau.
    auto stop_met = [&] {
        return sum_rho > tau * phi && static_cast<double>(covered.size()) + 1e-9 >= tau * phi;
    };

    while (!stop_met() && !cands.empty()) {
        int best = -1;
        bool best_positive = false;
        double best_ratio = -1.0;
        int best_rho = -1;
        for (std::size_t i = 0; i < cands.size(); ++i) {
            long gain = 0;
            for (int f : *cands[i].flows)
                if (!covered.count(f)) ++gain;
            if (gain > 0) {
                // w(X) = 1/rho(X) for a single candidate link, so the greedy
                // ratio |X ∩ F'| / w(X) is gain * rho.
                double ratio = static_cast<double>(gain) * cands[i].rho;
                bool better = !best_positive || ratio > best_ratio ||
                              (ratio == best_ratio && cands[i].link < cands[best].link);
                if (better) {
                    best = static_cast<int>(i);
                    best_positive = true;
                    best_ratio = ratio;
                }
            } else if (!best_positive) {
                // Zero-gain round: these picks only pad the density estimate,
                // so take the densest (cheapest-weight) remaining link.
                bool better = best < 0 || cands[i].rho > best_rho ||
                              (cands[i].rho == best_rho && cands[i].link < cands[best].link);
                if (better) {
                    best = static_cast<int>(i);
                    best_rho = cands[i].rho;
                }
            }
        }
        if (best < 0) break;
        selected.push_back(cands[best].link);
        covered.insert(cands[best].flows->begin(), cands[best].flows->end());
        sum_rho += cands[best].rho;
        cands.erase(cands.begin() + best);
    }

    plan.selection_order = selected;

    // Partition the greedy order into bait links: close a group at NL_th
    // members once its density clears the median single-link density; stray
    // leftovers merge into the last group. A group needs a non-target member
    // to serve as converge link.
    auto union_density = [&](const std::vector<int>& members) {
        std::set<int> u;
        for (int m : members) {
            auto it = map.flows_by_link.find(m);
            if (it != map.flows_by_link.end()) u.insert(it->second.begin(), it->second.end());
        }
        return static_cast<int>(u.size());
    };
    auto has_non_target = [&](const std::vector<int>& members) {
        for (int m : members)
            if (!target_set.count(m)) return true;
        return false;
    };

    std::vector<std::vector<int>> groups;
    std::vector<int> open;
    for (int lid : selected) {
        open.push_back(lid);
        if (static_cast<int>(open.size()) >= nl_th && union_density(open) >= median_density &&
            has_non_target(open)) {
            groups.push_back(open);
            open.clear();
        }
    }
    if (!open.empty()) {
        if (!groups.empty()) {
            auto& last = groups.back();
            last.insert(last.end(), open.begin(), open.end());
        } else if (has_non_target(open)) {
            groups.push_back(open);
        }
        // An all-target leftover with no group to join cannot form a bait link.
    }

    int next_bait = 0;
    for (auto& members : groups) {
        BaitLink b;
        b.id = next_bait++;
        b.members = members;
        b.density = union_density(members);
        b.weight = static_cast<double>(members.size()) / std::max(1, b.density);
        std::int64_t best_bw = -1;
        for (int m : members) {
            if (target_set.count(m)) continue;
            const Link& l = topo.link(m);
            if (l.bandwidth > best_bw) {
                best_bw = l.bandwidth;
                b.converge = m;
            } else if (l.bandwidth == best_bw && m < b.converge) {
                b.converge = m;
            }
        }
        plan.baits.push_back(std::move(b));
    }

    std::set<int> bait_union;
    for (const auto& b : plan.baits)
        for (int m : b.members) {
            auto it = map.flows_by_link.find(m);
            if (it != map.flows_by_link.end())
                bait_union.insert(it->second.begin(), it->second.end());
        }
    plan.coverage = phi > 0 ? static_cast<double>(bait_union.size()) / phi : 0.0;
    plan.exhausted_links = plan.coverage + 1e-12 < tau;
    return plan;
}

AttackCost attack_cost(const SiftingPlan& plan, double b_bw, double u, int n_targets, long n_un,
                       const std::map<int, std::vector<double>>& alphas) {
    if (u <= 0.0) fail(errc::config_invalid, "bot upstream bandwidth must be positive");
    AttackCost cost;
    cost.n_p = static_cast<long>(std::ceil(b_bw / u - 1e-9));
    cost.n_b = static_cast<long>(n_targets) * cost.n_p + n_un;
    for (const auto& b : plan.baits) {
        auto it = alphas.find(b.id);
        if (it == alphas.end() || it->second.empty())
            fail(errc::config_invalid, "missing alphas for bait link " + std::to_string(b.id));
        double sum = 0.0;
        for (double a : it->second) sum += a;
        cost.n_l_per_bait.push_back(
            {b.id, static_cast<long>(std::ceil(sum * cost.n_p - 1e-9))});
    }
    return cost;
}

std::map<int, std::vector<double>> alphas_from_topology(const Topology& topo,
                                                        const SiftingPlan& plan, double b_bw) {
    std::map<int, std::vector<double>> out;
    for (const auto& b : plan.baits) {
        std::vector<double> a;
        for (int m : b.members) a.push_back(static_cast<double>(topo.link(m).bandwidth) / b_bw);
        out[b.id] = std::move(a);
    }
    return out;
}

}  // namespace linkbait
