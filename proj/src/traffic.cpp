#include "linkbait/traffic.hpp"

#include <algorithm>
#include <cassert>
#include <ostream>

namespace linkbait {

World::World(const Topology& topo, std::uint64_t seed, int interval_ticks)
    : topo_(topo),
      interval_ticks_(interval_ticks),
      port_rng_(derive_seed(seed, "ports")),
      legit_rng_(derive_seed(seed, "legit")) {
    offered_.assign(topo_.links().size(), 0.0);
    window_congested_.assign(topo_.links().size(), 0);
    window_max_offered_.assign(topo_.links().size(), 0.0);
    total_congested_.assign(topo_.links().size(), 0);
}

int World::link_idx(int link_id) const {
    const auto& links = topo_.links();
    auto it = std::lower_bound(links.begin(), links.end(), link_id,
                               [](const Link& l, int id) { return l.id < id; });
    if (it == links.end() || it->id != link_id)
        fail(errc::config_invalid, "unknown link id " + std::to_string(link_id));
    return static_cast<int>(it - links.begin());
}

std::vector<double>* World::acc_vector(int host, int link) {
    auto& v = host_bytes_[host][link];
    return &v;
}

int World::add_tcp_flow(int src, int dst_server, double rate, int start_tick, int end_tick) {
    if (rate <= 0.0) fail(errc::config_invalid, "flow rate must be positive");
    if (start_tick < tick_) fail(errc::config_invalid, "flow start is in the past");
    Flow f;
    f.id = next_flow_id_++;
    f.src = src;
    f.dst_server = dst_server;
    f.rate = rate;
    f.start_tick = start_tick;
    f.end_tick = end_tick;
    f.path = topo_.route(src, dst_server);
    tcp_flows_.push_back(std::move(f));
    pending_tcp_.push_back(static_cast<int>(tcp_flows_.size()) - 1);
    return tcp_flows_.back().id;
}

int World::schedule_traceroute(int prober, int dst_server, int start_tick, int pacing,
                               int fixed_ttl, int fixed_packets) {
    if (start_tick < tick_) fail(errc::config_invalid, "trace start is in the past");
    ProbeRun run;
    run.id = next_flow_id_++;
    run.prober = prober;
    run.dst_server = dst_server;
    run.start_tick = start_tick;
    run.pacing = std::max(1, pacing);
    run.fixed_ttl = fixed_ttl;
    run.fixed_packets = fixed_packets;
    run.base_path = topo_.route(prober, dst_server);
    probe_runs_.push_back(std::move(run));
    active_probes_.push_back(static_cast<int>(probe_runs_.size()) - 1);
    return probe_runs_.back().id;
}

void World::schedule_legitimate_traffic(const std::vector<int>& hosts,
                                        const std::vector<int>& servers, const RateModel& rates,
                                        double diagnostic_probability, int period_ticks,
                                        int horizon_ticks) {
    if (servers.empty()) fail(errc::config_invalid, "no servers for legitimate traffic");
    std::vector<int> ordered = hosts;
    std::sort(ordered.begin(), ordered.end());
    for (int h : ordered) {
        double r = rand_unit(legit_rng_) < rates.high_prob
                       ? rand_range(legit_rng_, rates.high_min, rates.high_max)
                       : rand_range(legit_rng_, rates.low_min, rates.low_max);
        int server = servers[rand_below(legit_rng_, servers.size())];
        add_tcp_flow(h, server, r, tick_, horizon_ticks);
    }
    if (diagnostic_probability <= 0.0 || period_ticks <= 0) return;
    int periods = std::max(1, horizon_ticks / period_ticks);
    for (int h : ordered) {
        for (int p = 0; p < periods; ++p) {
            if (rand_unit(legit_rng_) >= diagnostic_probability) continue;
            int span = std::max(1, period_ticks - 80);
            int at = p * period_ticks + static_cast<int>(rand_below(legit_rng_, span));
            int server = servers[rand_below(legit_rng_, servers.size())];
            if (at >= tick_) schedule_traceroute(h, server, at);
        }
    }
}

void World::process_probe(ProbeRun& run) {
    int ttl = run.fixed_ttl > 0 ? run.fixed_ttl : run.next_ttl;
    int port = 30001 + static_cast<int>(rand_below(port_rng_, 35535));

    bool labeled_before = defense_ && defense_->is_labeled(run.prober);
    if (defense_) defense_->inspect_ingress({run.prober, ttl, port, true, tick_});

    const std::vector<int>* path = &run.base_path;
    if (labeled_before) {
        if (!run.have_eff) {
            int rewrite_pos = -1;
            bool transient = false;
            run.eff_path = defense_->effective_probe_path(
                run.id, topo_.endpoint(run.prober).attach, run.base_path, run.dst_server,
                &rewrite_pos, &transient);
            run.have_eff = true;
            run.transient_bonus = transient;
        }
        path = &run.eff_path;
    }

    std::vector<int> routers = topo_.routers_on_path(topo_.endpoint(run.prober).attach, *path);
    int hop_at = std::min<int>(ttl, static_cast<int>(routers.size()));
    int router = routers[hop_at - 1];

    int resp = tick_ + 1 + (run.transient_bonus ? 1 : 0);
    run.transient_bonus = false;

    run.hops.push_back({run.packets_sent + 1, ttl, router, resp});
    for (int i = 0; i < hop_at - 1 && i < static_cast<int>(path->size()); ++i)
        run.actual_links.insert((*path)[i]);

    run.packets_sent += 1;
    run.next_ttl = ttl + 1;

    if (run.fixed_ttl > 0) {
        if (run.packets_sent >= run.fixed_packets) {
            run.completed = true;
            run.done = true;
        }
    } else if (router == topo_.endpoint(run.dst_server).attach) {
        // Egress answers port-unreachable: trace finished.
        run.completed = true;
        run.done = true;
    } else if (ttl >= 64) {
        run.completed = false;
        run.done = true;
    }
    if (run.done) finish_probe(run);
}

void World::finish_probe(ProbeRun& run) {
    TraceResult res;
    res.flow_id = run.id;
    res.prober = run.prober;
    res.dst_server = run.dst_server;
    res.start_tick = run.start_tick;
    res.hops = run.hops;
    res.actual_links.assign(run.actual_links.begin(), run.actual_links.end());
    res.completed = run.completed;
    trace_log_.push_back(std::move(res));
}

void World::step() {
    // 1. flow lifecycle
    for (std::size_t i = 0; i < pending_tcp_.size();) {
        int fi = pending_tcp_[i];
        if (tcp_flows_[fi].start_tick <= tick_) {
            active_tcp_.push_back(fi);
            if (static_cast<int>(flow_acc_.size()) <= fi) flow_acc_.resize(fi + 1);
            auto& acc = flow_acc_[fi];
            acc.clear();
            for (int lid : tcp_flows_[fi].path) acc.push_back(acc_vector(tcp_flows_[fi].src, lid));
            if (defense_)
                defense_->inspect_ingress(
                    {tcp_flows_[fi].src, tcp_ttl(tcp_flows_[fi].src), 443, false, tick_});
            pending_tcp_[i] = pending_tcp_.back();
            pending_tcp_.pop_back();
        } else {
            ++i;
        }
    }
    for (std::size_t i = 0; i < active_tcp_.size();) {
        if (tick_ >= tcp_flows_[active_tcp_[i]].end_tick) {
            active_tcp_[i] = active_tcp_.back();
            active_tcp_.pop_back();
        } else {
            ++i;
        }
    }

    // 2. probe packets
    for (std::size_t i = 0; i < active_probes_.size();) {
        ProbeRun& run = probe_runs_[active_probes_[i]];
        if (!run.done && run.start_tick <= tick_ &&
            (tick_ - run.start_tick) % run.pacing == 0) {
            process_probe(run);
        }
        if (run.done) {
            active_probes_[i] = active_probes_.back();
            active_probes_.pop_back();
        } else {
            ++i;
        }
    }

    // 3. per-link load accounting (TCP flows only; probes carry no payload)
    for (int t : touched_) offered_[t] = 0.0;
    touched_.clear();
    int interval = tick_ / interval_ticks_;
    std::sort(active_tcp_.begin(), active_tcp_.end());
    for (int fi : active_tcp_) {
        const Flow& f = tcp_flows_[fi];
        auto& acc = flow_acc_[fi];
        for (std::size_t k = 0; k < f.path.size(); ++k) {
            int li = link_idx(f.path[k]);
            if (offered_[li] == 0.0) touched_.push_back(li);
            offered_[li] += f.rate;
            auto* vec = acc[k];
            if (static_cast<int>(vec->size()) <= interval) vec->resize(interval + 1, 0.0);
            (*vec)[interval] += f.rate;
        }
    }
    std::sort(touched_.begin(), touched_.end());
    last_loads_.clear();
    for (int li : touched_) {
        const Link& l = topo_.links()[li];
        double off = offered_[li];
        bool congested = off > static_cast<double>(l.bandwidth);
        double delivered = congested ? static_cast<double>(l.bandwidth) : off;
        last_loads_.push_back({l.id, off, delivered, congested});
        if (congested) {
            window_congested_[li] += 1;
            total_congested_[li] += 1;
        }
        window_max_offered_[li] = std::max(window_max_offered_[li], off);
    }
    if (load_sink_) load_sink_(tick_, last_loads_);

    if (self_check_) {
        for (int fi : active_tcp_) {
            const Flow& f = tcp_flows_[fi];
            if (f.path != topo_.route(f.src, f.dst_server))
                fail(errc::invariant_violation,
                     "tcp flow " + std::to_string(f.id) + " deviated from its routed path");
        }
    }

    ++tick_;
}

void World::run_until(int tick) {
    while (tick_ < tick) step();
}

TraceResult World::emulate_traceroute(int prober, int dst_server, int pacing) {
    int id = schedule_traceroute(prober, dst_server, tick_, pacing);
    std::size_t before = trace_log_.size();
    while (true) {
        step();
        for (std::size_t i = before; i < trace_log_.size(); ++i) {
            if (trace_log_[i].flow_id == id) {
                if (!trace_log_[i].completed)
                    fail(errc::unreachable_destination,
                         "traceroute exceeded max TTL toward server " + std::to_string(dst_server));
                return trace_log_[i];
            }
        }
    }
}

void World::reset_window_counters() {
    std::fill(window_congested_.begin(), window_congested_.end(), 0);
    std::fill(window_max_offered_.begin(), window_max_offered_.end(), 0.0);
}

long World::window_congested_ticks(int link_id) const { return window_congested_[link_idx(link_id)]; }

double World::window_max_offered(int link_id) const { return window_max_offered_[link_idx(link_id)]; }

long World::total_congested_ticks(int link_id) const { return total_congested_[link_idx(link_id)]; }

void World::write_linkload_csv_header(std::ostream& out) const {
    out << "tick,link_id,offered,delivered,congested\n";
}

}  // namespace linkbait
