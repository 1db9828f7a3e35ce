#include "linkbait/adversary.hpp"

#include <algorithm>
#include <sstream>

namespace linkbait {

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::baseline: return "baseline";
        case Strategy::prolonged_interval: return "prolonged_interval";
        case Strategy::randomized_headers: return "randomized_headers";
        case Strategy::one_in_all: return "one_in_all";
    }
    return "baseline";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "baseline") return Strategy::baseline;
    if (s == "prolonged_interval") return Strategy::prolonged_interval;
    if (s == "randomized_headers") return Strategy::randomized_headers;
    if (s == "one_in_all") return Strategy::one_in_all;
    fail(errc::config_invalid, "unknown adversary strategy: " + s);
}

std::vector<std::pair<int, int>> AdversaryLinkmap::ranking() const {
    std::vector<std::pair<int, int>> out;
    for (const auto& [lid, bots] : occupancy)
        if (!bots.empty()) out.push_back({lid, static_cast<int>(bots.size())});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

std::string AdversaryLinkmap::dump_csv(const std::vector<int>& chosen) const {
    std::ostringstream out;
    out << "link_id,bot_count,is_chosen\n";
    for (const auto& [lid, count] : ranking()) {
        bool is_chosen = std::find(chosen.begin(), chosen.end(), lid) != chosen.end();
        out << lid << "," << count << "," << (is_chosen ? 1 : 0) << "\n";
    }
    return out.str();
}

AdversaryLinkmap run_probe_phase(World& world, const AdversaryConfig& cfg,
                                 const std::vector<int>& servers, int phase_begin,
                                 int phase_end) {
    const Topology& topo = world.topology();
    AdversaryLinkmap map;

    std::vector<int> bots = cfg.bots;
    std::sort(bots.begin(), bots.end());
    std::vector<int> probers = bots;
    if (cfg.strategy == Strategy::one_in_all) {
        int n = static_cast<int>(std::max(1.0, cfg.probing_fraction * bots.size() + 0.5));
        probers.resize(std::min<std::size_t>(n, probers.size()));
    }
    map.probing_bots = probers;

    std::mt19937_64 rng(derive_seed(cfg.seed, "probe-schedule"));
    int phase = phase_end - phase_begin;
    int pacing = cfg.strategy == Strategy::prolonged_interval ? cfg.prolong_factor : 1;
    int spacing;
    int stagger_span;
    if (cfg.strategy == Strategy::prolonged_interval) {
        spacing = std::max(64 * pacing / 16, (phase - 400) / std::max<int>(1, servers.size()));
        stagger_span = std::max(1, phase / 8);
    } else {
        spacing = 48;
        stagger_span = std::max(1, phase / 4);
    }

    std::set<int> prober_set(probers.begin(), probers.end());
    for (std::size_t bi = 0; bi < probers.size(); ++bi) {
        int bot = probers[bi];
        int bot_start =
            phase_begin + static_cast<int>(bi * static_cast<std::size_t>(stagger_span) /
                                           std::max<std::size_t>(1, probers.size()));
        for (std::size_t si = 0; si < servers.size(); ++si) {
            int start = bot_start + static_cast<int>(si) * spacing +
                        static_cast<int>(rand_below(rng, std::max(1, cfg.probe_interval)));
            int fixed_ttl = -1;
            if (cfg.strategy == Strategy::randomized_headers) {
                std::size_t depth = topo.route(bot, servers[si]).size() + 1;
                fixed_ttl = 1 + static_cast<int>((bi + si) % depth);
            }
            world.schedule_traceroute(bot, servers[si], start, pacing, fixed_ttl);
            ++map.trace_attempts;
        }
    }

    world.run_until(phase_end);

    // Linkmap assembly from observed hops: consecutive observed routers that
    // correspond to a real link count as occupied.
    auto credit = [&](int bot, int server, int a, int b) {
        int lid = topo.link_between(a, b);
        if (lid < 0) return;
        map.occupancy[lid].insert(bot);
        map.servers_via_link[lid].insert(server);
        map.links_of_bot[bot].insert(lid);
    };

    // For the fixed-TTL strategy, bots sharing an ingress pool their one-hop
    // observations into a joint path per server.
    std::map<std::pair<int, int>, std::map<int, int>> pooled;  // (attach, server) -> ttl -> router
    std::map<std::pair<int, int>, std::set<int>> pool_bots;

    for (const auto& res : world.trace_log()) {
        if (res.start_tick < phase_begin || res.start_tick >= phase_end) continue;
        if (!prober_set.count(res.prober)) continue;
        if (cfg.strategy == Strategy::randomized_headers) {
            int attach = topo.endpoint(res.prober).attach;
            for (const auto& h : res.hops) pooled[{attach, res.dst_server}].emplace(h.ttl, h.router);
            pool_bots[{attach, res.dst_server}].insert(res.prober);
            continue;
        }
        for (std::size_t i = 0; i + 1 < res.hops.size(); ++i)
            credit(res.prober, res.dst_server, res.hops[i].router, res.hops[i + 1].router);
    }
    for (const auto& [key, by_ttl] : pooled) {
        std::vector<std::pair<int, int>> hops(by_ttl.begin(), by_ttl.end());
        for (std::size_t i = 0; i + 1 < hops.size(); ++i) {
            if (hops[i + 1].first != hops[i].first + 1) continue;
            for (int bot : pool_bots.at(key))
                credit(bot, key.second, hops[i].second, hops[i + 1].second);
        }
    }
    return map;
}

FloodPlan select_and_flood(World& world, const AdversaryConfig& cfg, const AdversaryLinkmap& map,
                           int flood_begin, int flood_end) {
    if (map.occupancy.empty()) fail(errc::empty_linkmap, "adversary linkmap is empty");

    FloodPlan plan;
    plan.flood_begin = flood_begin;
    plan.flood_end = flood_end;
    auto ranked = map.ranking();
    for (int i = 0; i < cfg.n_targets && i < static_cast<int>(ranked.size()); ++i)
        plan.chosen.push_back(ranked[i].first);

    std::mt19937_64 rng(derive_seed(cfg.seed, "decoys"));
    std::vector<int> bots = cfg.bots;
    std::sort(bots.begin(), bots.end());
    std::set<int> prober_set(map.probing_bots.begin(), map.probing_bots.end());

    for (int bot : bots) {
        int believed = -1;
        auto it = map.links_of_bot.find(bot);
        if (it != map.links_of_bot.end()) {
            for (int c : plan.chosen)
                if (it->second.count(c)) {
                    believed = c;
                    break;
                }
        } else if (!prober_set.count(bot)) {
            // Non-probing bot in one_in_all: floods per the botmaster's pooled
            // decoy list rather than its own (never gathered) linkmap.
            for (int c : plan.chosen) {
                auto sv = map.servers_via_link.find(c);
                if (sv != map.servers_via_link.end() && !sv->second.empty()) {
                    believed = c;
                    break;
                }
            }
        }
        if (believed < 0) {
            plan.unused_bots.push_back(bot);
            continue;
        }
        const auto& pool_set = map.servers_via_link.at(believed);
        std::vector<int> pool(pool_set.begin(), pool_set.end());
        int decoy = pool[rand_below(rng, pool.size())];
        int flow = world.add_tcp_flow(bot, decoy, cfg.flood_rate, flood_begin, flood_end);
        plan.flows.push_back({bot, decoy, believed, flow});
    }
    return plan;
}

std::map<int, bool> verify_congestion(World& world, const FloodPlan& plan) {
    const Topology& topo = world.topology();
    std::set<int> congested_now;
    for (const auto& row : world.last_loads())
        if (row.congested) congested_now.insert(row.link);

    std::map<int, bool> verdict;
    for (int chosen : plan.chosen) {
        verdict[chosen] = false;
        const FloodPlan::BotFlood* rep = nullptr;
        for (const auto& f : plan.flows)
            if (f.believed_link == chosen && (!rep || f.bot < rep->bot)) rep = &f;
        if (!rep) continue;
        std::vector<int> path = topo.route(rep->bot, rep->decoy_server);
        if (world.defense() && world.defense()->is_labeled(rep->bot)) {
            int pos = -1;
            bool transient = false;
            path = world.defense()->effective_probe_path(
                -1, topo.endpoint(rep->bot).attach, path, rep->decoy_server, &pos, &transient);
        }
        for (int lid : path)
            if (congested_now.count(lid)) {
                verdict[chosen] = true;
                break;
            }
    }
    return verdict;
}

std::string FloodPlan::flood_log_csv(double flood_rate) const {
    std::ostringstream out;
    out << "tick,bot_id,target_link_id,offered\n";
    for (int t = flood_begin; t < flood_end; ++t)
        for (const auto& f : flows)
            out << t << "," << f.bot << "," << f.believed_link << "," << flood_rate << "\n";
    return out.str();
}

}  // namespace linkbait
