#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "linkbait/traffic.hpp"

namespace linkbait {

enum class Strategy { baseline, prolonged_interval, randomized_headers, one_in_all };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct AdversaryConfig {
    std::vector<int> bots;
    double flood_rate = 3.0;  // U, bytes per tick per bot
    Strategy strategy = Strategy::baseline;
    double probing_fraction = 1.0;  // used by one_in_all
    int probe_interval = 2;         // gap between a bot's trace runs
    int prolong_factor = 20;
    int n_targets = 3;
    std::uint64_t seed = 0;
};

struct AdversaryLinkmap {
    std::map<int, std::set<int>> occupancy;         // link id -> bot ids observing it
    std::map<int, std::set<int>> servers_via_link;  // link id -> servers whose observed path crosses it
    std::map<int, std::set<int>> links_of_bot;      // bot -> observed link ids
    std::vector<int> probing_bots;
    int trace_attempts = 0;

    std::vector<std::pair<int, int>> ranking() const;  // (link, occupancy) desc, id asc
    std::string dump_csv(const std::vector<int>& chosen) const;
};

// Schedules every participating bot's traceroutes across [phase_begin,
// phase_end), runs the world through the phase, and assembles the linkmap the
// adversary would infer from the observed hops.
AdversaryLinkmap run_probe_phase(World& world, const AdversaryConfig& cfg,
                                 const std::vector<int>& servers, int phase_begin, int phase_end);

struct FloodPlan {
    struct BotFlood {
        int bot = -1;
        int decoy_server = -1;
        int believed_link = -1;
        int flow_id = -1;
    };
    std::vector<int> chosen;  // believed target links, ranked
    std::vector<BotFlood> flows;
    std::vector<int> unused_bots;  // N_un realized
    int flood_begin = 0;
    int flood_end = 0;

    std::string flood_log_csv(double flood_rate) const;
};

// Picks the top-occupancy links and starts unlabeled TCP-like flood flows for
// every bot whose observed path crosses a chosen link.
FloodPlan select_and_flood(World& world, const AdversaryConfig& cfg, const AdversaryLinkmap& map,
                           int flood_begin, int flood_end);

// Adversary-side check at the current tick: a believed target counts as
// congested when the representative bot's probe would cross a congested hop.
std::map<int, bool> verify_congestion(World& world, const FloodPlan& plan);

}  // namespace linkbait
