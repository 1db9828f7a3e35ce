#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "linkbait/topology.hpp"

namespace linkbait {

struct Flow {
    int id = -1;
    int src = -1;         // endpoint id
    int dst_server = -1;  // endpoint id
    double rate = 0.0;    // bytes per tick
    int start_tick = 0;
    int end_tick = 0;  // exclusive
    std::vector<int> path;  // link ids; tcp flows are never rerouted
};

// One packet observation at an ingress router (mirrored, zero-latency).
struct ProbePacketObs {
    int endpoint = -1;
    int ttl = 0;
    int dst_port = 0;
    bool probe = false;  // false for TCP-like traffic samples
    int tick = 0;
};

struct TraceHop {
    int index = 0;  // 1-based, contiguous per run
    int ttl = 0;
    int router = -1;
    int response_tick = 0;
};

struct TraceResult {
    int flow_id = -1;
    int prober = -1;
    int dst_server = -1;
    int start_tick = 0;
    std::vector<TraceHop> hops;
    std::vector<int> actual_links;  // links actually traversed, ascending
    bool completed = false;
};

struct LinkLoadRow {
    int link = -1;
    double offered = 0.0;
    double delivered = 0.0;
    bool congested = false;
};

// Interface the obfuscation module implements. The engine consults it for
// ingress inspection and for rewriting labeled probe paths; TCP-like flows
// never pass through it.
class DefensePolicy {
public:
    virtual ~DefensePolicy() = default;
    virtual void inspect_ingress(const ProbePacketObs& obs) = 0;
    virtual bool is_labeled(int endpoint) const = 0;
    // Returns the effective path for a labeled probe flow. first_rewrite_pos
    // receives the earliest rewritten position (-1 if untouched); transient is
    // set once per rule, on the first packet it ever redirects.
    virtual std::vector<int> effective_probe_path(int flow_id, int src_router,
                                                  const std::vector<int>& base_path,
                                                  int dst_server, int* first_rewrite_pos,
                                                  bool* transient) = 0;
};

struct RateModel {
    double low_min = 0.5;
    double low_max = 2.0;
    double high_min = 2.0;
    double high_max = 3.5;
    double high_prob = 0.15;
};

// Single-threaded deterministic tick engine. Distinct RNG substreams keep
// legitimate traffic draws identical whether or not a defense is attached.
class World {
public:
    World(const Topology& topo, std::uint64_t seed, int interval_ticks = 10);

    const Topology& topology() const { return topo_; }
    int now() const { return tick_; }

    void set_defense(DefensePolicy* policy) { defense_ = policy; }
    DefensePolicy* defense() const { return defense_; }
    void set_self_check(bool on) { self_check_ = on; }

    using LoadSink = std::function<void(int tick, const std::vector<LinkLoadRow>&)>;
    void set_load_sink(LoadSink sink) { load_sink_ = std::move(sink); }

    int add_tcp_flow(int src, int dst_server, double rate, int start_tick, int end_tick);
    int schedule_traceroute(int prober, int dst_server, int start_tick, int pacing = 1,
                            int fixed_ttl = -1, int fixed_packets = 4);
    void schedule_legitimate_traffic(const std::vector<int>& hosts,
                                     const std::vector<int>& servers, const RateModel& rates,
                                     double diagnostic_probability, int period_ticks,
                                     int horizon_ticks);

    void step();
    void run_until(int tick);

    // Blocking convenience used by LG tracing and tests; steps the world until
    // the trace completes. Throws on TTL exhaustion.
    TraceResult emulate_traceroute(int prober, int dst_server, int pacing = 1);

    const std::vector<TraceResult>& trace_log() const { return trace_log_; }
    const std::vector<Flow>& tcp_flows() const { return tcp_flows_; }
    const std::vector<LinkLoadRow>& last_loads() const { return last_loads_; }

    void reset_window_counters();
    long window_congested_ticks(int link_id) const;
    double window_max_offered(int link_id) const;
    long total_congested_ticks(int link_id) const;

    // Per-host offered bytes by (link, interval index); basis of the FMs.
    const std::map<int, std::map<int, std::vector<double>>>& host_link_bytes() const {
        return host_bytes_;
    }
    int interval_ticks() const { return interval_ticks_; }

    int tcp_ttl(int endpoint) const { return 12 + endpoint % 5; }

    void write_linkload_csv_header(std::ostream& out) const;

private:
    struct ProbeRun {
        int id = -1;
        int prober = -1;
        int dst_server = -1;
        int start_tick = 0;
        int pacing = 1;
        int fixed_ttl = -1;
        int fixed_packets = 4;
        int packets_sent = 0;
        int next_ttl = 1;
        std::vector<int> base_path;
        std::vector<int> eff_path;
        bool have_eff = false;
        bool transient_bonus = false;
        std::vector<TraceHop> hops;
        std::set<int> actual_links;
        bool done = false;
        bool completed = false;
    };

    const Topology& topo_;
    int tick_ = 0;
    int interval_ticks_;
    DefensePolicy* defense_ = nullptr;
    bool self_check_ = false;
    LoadSink load_sink_;

    std::vector<Flow> tcp_flows_;
    std::vector<int> pending_tcp_;  // indices sorted by start (min-heap style scan)
    std::vector<int> active_tcp_;
    // Cached per-interval byte vectors for active flows, one per path link.
    std::vector<std::vector<std::vector<double>*>> flow_acc_;

    std::vector<ProbeRun> probe_runs_;
    std::vector<int> active_probes_;

    std::vector<TraceResult> trace_log_;
    std::map<int, std::map<int, std::vector<double>>> host_bytes_;

    std::vector<double> offered_;  // by link index, rebuilt per tick
    std::vector<int> touched_;
    std::vector<LinkLoadRow> last_loads_;
    std::vector<long> window_congested_;
    std::vector<double> window_max_offered_;
    std::vector<long> total_congested_;

    std::mt19937_64 port_rng_;
    std::mt19937_64 legit_rng_;

    int next_flow_id_ = 0;

    int link_idx(int link_id) const;
    void process_probe(ProbeRun& run);
    void finish_probe(ProbeRun& run);
    std::vector<double>* acc_vector(int host, int link);
};

}  // namespace linkbait
