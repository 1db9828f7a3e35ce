#include "linkbait/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace linkbait {

using nlohmann::json;

const char* to_string(RouterKind k) {
    switch (k) {
        case RouterKind::ingress: return "ingress";
        case RouterKind::egress: return "egress";
        case RouterKind::core: return "core";
    }
    return "core";
}

const char* to_string(EndpointRole r) {
    switch (r) {
        case EndpointRole::legitimate_host: return "legitimate_host";
        case EndpointRole::bot: return "bot";
        case EndpointRole::lg_server: return "lg_server";
        case EndpointRole::server: return "server";
    }
    return "legitimate_host";
}

RouterKind router_kind_from_string(const std::string& s) {
    if (s == "ingress") return RouterKind::ingress;
    if (s == "egress") return RouterKind::egress;
    if (s == "core") return RouterKind::core;
    fail(errc::config_invalid, "unknown router kind: " + s);
}

EndpointRole endpoint_role_from_string(const std::string& s) {
    if (s == "legitimate_host") return EndpointRole::legitimate_host;
    if (s == "bot") return EndpointRole::bot;
    if (s == "lg_server") return EndpointRole::lg_server;
    if (s == "server") return EndpointRole::server;
    fail(errc::config_invalid, "unknown endpoint role: " + s);
}

// --- descriptor JSON -------------------------------------------------------

std::string TopologyDescriptor::to_json_string() const {
    json j;
    j["routers"] = json::array();
    for (const auto& r : routers) {
        j["routers"].push_back({{"id", r.id}, {"kind", to_string(r.kind)}});
    }
    j["links"] = json::array();
    for (const auto& l : links) {
        j["links"].push_back(
            {{"id", l.id}, {"src", l.src}, {"dst", l.dst}, {"bandwidth", l.bandwidth}});
    }
    j["endpoints"] = json::array();
    for (const auto& e : endpoints) {
        j["endpoints"].push_back({{"id", e.id}, {"role", to_string(e.role)}, {"attach", e.attach}});
    }
    return j.dump(2) + "\n";
}

TopologyDescriptor TopologyDescriptor::from_json_string(const std::string& text) {
    TopologyDescriptor d;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(errc::config_invalid, std::string("topology descriptor parse error: ") + e.what());
    }
    try {
        for (const auto& r : j.at("routers")) {
            d.routers.push_back({r.at("id").get<int>(),
                                 router_kind_from_string(r.at("kind").get<std::string>())});
        }
        for (const auto& l : j.at("links")) {
            d.links.push_back({l.at("id").get<int>(), l.at("src").get<int>(),
                               l.at("dst").get<int>(), l.at("bandwidth").get<std::int64_t>()});
        }
        if (j.contains("endpoints")) {
            for (const auto& e : j.at("endpoints")) {
                d.endpoints.push_back({e.at("id").get<int>(),
                                       endpoint_role_from_string(e.at("role").get<std::string>()),
                                       e.at("attach").get<int>()});
            }
        }
    } catch (const json::exception& e) {
        fail(errc::config_invalid, std::string("topology descriptor field error: ") + e.what());
    }
    return d;
}

TopologyDescriptor TopologyDescriptor::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::config_invalid, "cannot open topology file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_string(ss.str());
}

void TopologyDescriptor::save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail(errc::config_invalid, "cannot write topology file: " + path);
    out << to_json_string();
}

// --- topology construction -------------------------------------------------

namespace {
std::int64_t pair_key(int src, int dst) {
    return (static_cast<std::int64_t>(src) << 32) | static_cast<std::uint32_t>(dst);
}
}  // namespace

Topology Topology::build(const TopologyDescriptor& desc) {
    Topology t;
    t.desc_ = desc;
    t.routers_ = desc.routers;
    t.links_ = desc.links;
    t.endpoints_ = desc.endpoints;

    std::sort(t.routers_.begin(), t.routers_.end(),
              [](const Router& a, const Router& b) { return a.id < b.id; });
    std::sort(t.links_.begin(), t.links_.end(),
              [](const Link& a, const Link& b) { return a.id < b.id; });
    std::sort(t.endpoints_.begin(), t.endpoints_.end(),
              [](const Endpoint& a, const Endpoint& b) { return a.id < b.id; });

    for (std::size_t i = 0; i < t.routers_.size(); ++i) {
        if (!t.router_index_.emplace(t.routers_[i].id, static_cast<int>(i)).second)
            fail(errc::duplicate_id, "duplicate router id " + std::to_string(t.routers_[i].id));
    }
    for (std::size_t i = 0; i < t.links_.size(); ++i) {
        const Link& l = t.links_[i];
        if (!t.link_index_.emplace(l.id, static_cast<int>(i)).second)
            fail(errc::duplicate_id, "duplicate link id " + std::to_string(l.id));
        if (l.bandwidth <= 0)
            fail(errc::non_positive_bandwidth,
                 "link " + std::to_string(l.id) + " has non-positive bandwidth");
        if (!t.router_index_.count(l.src) || !t.router_index_.count(l.dst))
            fail(errc::config_invalid,
                 "link " + std::to_string(l.id) + " references unknown router");
        if (!t.link_by_pair_.emplace(pair_key(l.src, l.dst), l.id).second)
            fail(errc::duplicate_id, "duplicate link pair (" + std::to_string(l.src) + "," +
                                         std::to_string(l.dst) + ")");
    }
    for (std::size_t i = 0; i < t.endpoints_.size(); ++i) {
        const Endpoint& e = t.endpoints_[i];
        if (!t.endpoint_index_.emplace(e.id, static_cast<int>(i)).second)
            fail(errc::duplicate_id, "duplicate endpoint id " + std::to_string(e.id));
        auto it = t.router_index_.find(e.attach);
        if (it == t.router_index_.end())
            fail(errc::config_invalid,
                 "endpoint " + std::to_string(e.id) + " attaches to unknown router");
        RouterKind k = t.routers_[it->second].kind;
        if (e.role == EndpointRole::server) {
            if (k != RouterKind::egress)
                fail(errc::disconnected_server, "server " + std::to_string(e.id) +
                                                    " must attach to an egress router");
        } else if (k != RouterKind::ingress) {
            fail(errc::disconnected_server,
                 "endpoint " + std::to_string(e.id) + " must attach to an ingress router");
        }
    }

    t.out_links_.assign(t.routers_.size(), {});
    t.in_links_.assign(t.routers_.size(), {});
    for (const Link& l : t.links_) {
        t.out_links_[t.router_idx(l.src)].push_back(l.id);
        t.in_links_[t.router_idx(l.dst)].push_back(l.id);
    }
    for (auto& v : t.out_links_) std::sort(v.begin(), v.end());
    for (auto& v : t.in_links_) std::sort(v.begin(), v.end());

    t.build_routing();

    // Every server must be reachable from every ingress router.
    for (const Endpoint& e : t.endpoints_) {
        if (e.role != EndpointRole::server) continue;
        const auto& nh = t.next_hop_.at(e.attach);
        for (std::size_t ri = 0; ri < t.routers_.size(); ++ri) {
            if (t.routers_[ri].kind != RouterKind::ingress) continue;
            if (t.routers_[ri].id != e.attach && nh[ri] < 0)
                fail(errc::disconnected_server,
                     "server " + std::to_string(e.id) + " unreachable from ingress " +
                         std::to_string(t.routers_[ri].id));
        }
    }
    return t;
}

Topology build_topology(const TopologyDescriptor& desc) { return Topology::build(desc); }

int Topology::router_idx(int id) const {
    auto it = router_index_.find(id);
    if (it == router_index_.end())
        fail(errc::config_invalid, "unknown router id " + std::to_string(id));
    return it->second;
}

const Router& Topology::router(int id) const { return routers_[router_idx(id)]; }

const Link& Topology::link(int id) const {
    auto it = link_index_.find(id);
    if (it == link_index_.end()) fail(errc::config_invalid, "unknown link id " + std::to_string(id));
    return links_[it->second];
}

const Endpoint& Topology::endpoint(int id) const {
    auto it = endpoint_index_.find(id);
    if (it == endpoint_index_.end())
        fail(errc::unknown_endpoint, "unknown endpoint id " + std::to_string(id));
    return endpoints_[it->second];
}

bool Topology::has_endpoint(int id) const { return endpoint_index_.count(id) > 0; }

int Topology::link_between(int src_router, int dst_router) const {
    auto it = link_by_pair_.find(pair_key(src_router, dst_router));
    return it == link_by_pair_.end() ? -1 : it->second;
}

std::vector<int> Topology::ingress_routers() const {
    std::vector<int> out;
    for (const auto& r : routers_)
        if (r.kind == RouterKind::ingress) out.push_back(r.id);
    return out;
}

std::vector<int> Topology::egress_routers() const {
    std::vector<int> out;
    for (const auto& r : routers_)
        if (r.kind == RouterKind::egress) out.push_back(r.id);
    return out;
}

std::vector<int> Topology::endpoints_with_role(EndpointRole role) const {
    std::vector<int> out;
    for (const auto& e : endpoints_)
        if (e.role == role) out.push_back(e.id);
    return out;
}

void Topology::build_routing() {
    constexpr int kInf = std::numeric_limits<int>::max();
    for (const Router& egress : routers_) {
        if (egress.kind != RouterKind::egress) continue;
        std::vector<int> dist(routers_.size(), kInf);
        std::deque<int> queue;
        dist[router_idx(egress.id)] = 0;
        queue.push_back(egress.id);
        while (!queue.empty()) {
            int cur = queue.front();
            queue.pop_front();
            int d = dist[router_idx(cur)];
            for (int lid : in_links_[router_idx(cur)]) {
                int prev = links_[link_index_.at(lid)].src;
                if (dist[router_idx(prev)] == kInf) {
                    dist[router_idx(prev)] = d + 1;
                    queue.push_back(prev);
                }
            }
        }
        std::vector<int> nh(routers_.size(), -1);
        for (std::size_t ri = 0; ri < routers_.size(); ++ri) {
            if (dist[ri] == kInf || dist[ri] == 0) continue;
            // out_links_ is ascending, so the first qualifying link is the
            // lowest-id tie-break.
            for (int lid : out_links_[ri]) {
                int nxt = links_[link_index_.at(lid)].dst;
                if (dist[router_idx(nxt)] == dist[ri] - 1) {
                    nh[ri] = lid;
                    break;
                }
            }
        }
        next_hop_[egress.id] = std::move(nh);
    }
}

std::vector<int> Topology::route_from_router(int router_id, int to_server) const {
    const Endpoint& dst = endpoint(to_server);
    if (dst.role != EndpointRole::server)
        fail(errc::unknown_endpoint, "route destination is not a server");
    auto it = next_hop_.find(dst.attach);
    if (it == next_hop_.end())
        fail(errc::disconnected_server, "no routing toward egress " + std::to_string(dst.attach));
    std::vector<int> path;
    int cur = router_id;
    std::size_t guard = 0;
    while (cur != dst.attach) {
        int lid = it->second[router_idx(cur)];
        if (lid < 0)
            fail(errc::disconnected_server,
                 "router " + std::to_string(cur) + " cannot reach server " + std::to_string(to_server));
        path.push_back(lid);
        cur = links_[link_index_.at(lid)].dst;
        if (++guard > routers_.size())
            fail(errc::invariant_violation, "routing loop detected");
    }
    return path;
}

std::vector<int> Topology::route(int from_endpoint, int to_server) const {
    const Endpoint& src = endpoint(from_endpoint);
    if (src.role == EndpointRole::server)
        fail(errc::unknown_endpoint, "route source must not be a server");
    return route_from_router(src.attach, to_server);
}

std::vector<int> Topology::routers_on_path(int first_router, const std::vector<int>& link_path) const {
    std::vector<int> out;
    out.push_back(first_router);
    for (int lid : link_path) out.push_back(link(lid).dst);
    return out;
}

std::optional<std::vector<int>> Topology::connect(int from_router, int to_router,
                                                  int avoid_link) const {
    if (from_router == to_router) return std::vector<int>{};
    std::vector<int> via(routers_.size(), -1);
    std::vector<bool> seen(routers_.size(), false);
    std::deque<int> queue;
    seen[router_idx(from_router)] = true;
    queue.push_back(from_router);
    while (!queue.empty()) {
        int cur = queue.front();
        queue.pop_front();
        for (int lid : out_links_[router_idx(cur)]) {
            if (lid == avoid_link) continue;
            int nxt = links_[link_index_.at(lid)].dst;
            int ni = router_idx(nxt);
            if (seen[ni]) continue;
            seen[ni] = true;
            via[ni] = lid;
            if (nxt == to_router) {
                std::vector<int> path;
                int r = nxt;
                while (r != from_router) {
                    int l = via[router_idx(r)];
                    path.push_back(l);
                    r = links_[link_index_.at(l)].src;
                }
                std::reverse(path.begin(), path.end());
                return path;
            }
            queue.push_back(nxt);
        }
    }
    return std::nullopt;
}

int Topology::hop_distance(int a, int b) const {
    if (a == b) return 0;
    std::vector<int> dist(routers_.size(), -1);
    std::deque<int> queue;
    dist[router_idx(a)] = 0;
    queue.push_back(a);
    while (!queue.empty()) {
        int cur = queue.front();
        queue.pop_front();
        int d = dist[router_idx(cur)];
        auto visit = [&](int nxt) {
            int ni = router_idx(nxt);
            if (dist[ni] < 0) {
                dist[ni] = d + 1;
                if (nxt == b) return true;
                queue.push_back(nxt);
            }
            return false;
        };
        for (int lid : out_links_[router_idx(cur)])
            if (visit(links_[link_index_.at(lid)].dst)) return d + 1;
        for (int lid : in_links_[router_idx(cur)])
            if (visit(links_[link_index_.at(lid)].src)) return d + 1;
    }
    return -1;
}

PathCensus Topology::census() const {
    std::set<std::vector<int>> distinct;
    long hop_sum = 0;
    for (const Router& in : routers_) {
        if (in.kind != RouterKind::ingress) continue;
        for (const auto& [egress_id, nh] : next_hop_) {
            if (nh[router_idx(in.id)] < 0) continue;
            std::vector<int> path;
            int cur = in.id;
            while (cur != egress_id) {
                int lid = nh[router_idx(cur)];
                path.push_back(lid);
                cur = links_[link_index_.at(lid)].dst;
            }
            if (distinct.insert(path).second) hop_sum += static_cast<long>(path.size()) + 1;
        }
    }
    PathCensus c;
    c.non_identical_paths = static_cast<int>(distinct.size());
    c.mean_hops = distinct.empty() ? 0.0 : static_cast<double>(hop_sum) / distinct.size();
    return c;
}

// --- synthetic generator ----------------------------------------------------
//
// Structure: per-ingress access chains feed one of G parallel trunk chains;
// trunks fan out to the egress side. Head links and level crossovers connect
// adjacent trunks so reroute detours exist, but they never win a shortest-path
// tie (higher link ids). density_skew >= 0.995 inserts a shared pre-egress
// hop that every path crosses, pushing top-link LG coverage to 1.0.

namespace {

struct GenLayout {
    int n_ingress = 0;
    int n_egress = 0;
    bool shared_tail = false;
    int trunk_len = 6;    // links per trunk chain
    int access_base = 2;  // access routers per ingress before jitter
    std::vector<int> group_of_ingress;
    int n_groups = 1;
};

constexpr std::int64_t kBwTrunkPrimary = 300;
constexpr std::int64_t kBwTrunkSecondary = 260;
constexpr std::int64_t kBwAccess = 80;
constexpr std::int64_t kBwTail = 500;
constexpr std::int64_t kBwSharedTail = 900;
constexpr std::int64_t kBwCross = 240;

}  // namespace

TopologyDescriptor synthesize_descriptor(std::uint64_t seed, const SynthProfile& profile) {
    if (profile.n_paths < 1) fail(errc::infeasible_profile, "n_paths must be >= 1");
    if (profile.mean_hops < 2.0) fail(errc::infeasible_profile, "mean_hops must be >= 2");

    GenLayout lay;
    lay.shared_tail = profile.density_skew >= 0.995;

    // Factor n_paths = ingresses x egresses with the ingress count capped;
    // distinct routed (ingress, egress) paths then equal n_paths exactly.
    int best_i = 1;
    for (int d = 1; d <= profile.n_paths && d <= profile.max_ingress; ++d) {
        if (profile.n_paths % d == 0) best_i = d;
    }
    lay.n_ingress = best_i;
    lay.n_egress = profile.n_paths / best_i;

    // Hops per path (routers) = access + trunk_len + 3 + shared_tail.
    int fixed = 3 + (lay.shared_tail ? 1 : 0);
    lay.trunk_len = 6;
    while (lay.trunk_len > 2 && profile.mean_hops - (lay.trunk_len + fixed) < 1.0) --lay.trunk_len;
    double access_mean = profile.mean_hops - (lay.trunk_len + fixed);
    if (access_mean < 1.0)
        fail(errc::infeasible_profile, "mean_hops too small for generator structure");
    if (access_mean > 48.0)
        fail(errc::infeasible_profile, "mean_hops exceeds what the generator supports");
    lay.access_base = static_cast<int>(std::llround(access_mean));

    lay.n_groups = lay.n_ingress >= 6 ? 3 : 1;
    double primary_share =
        lay.shared_tail ? 0.55 : std::clamp(profile.density_skew, 0.5, 0.95);
    std::vector<int> group_sizes;
    if (lay.n_groups == 1) {
        group_sizes = {lay.n_ingress};
    } else {
        int n0 = std::clamp(static_cast<int>(std::llround(primary_share * lay.n_ingress)), 1,
                            lay.n_ingress - (lay.n_groups - 1));
        int rest = lay.n_ingress - n0;
        int n1 = (rest + 1) / 2;
        group_sizes = {n0, n1, rest - n1};
    }
    lay.group_of_ingress.resize(lay.n_ingress);
    {
        int at = 0;
        for (int g = 0; g < lay.n_groups; ++g)
            for (int k = 0; k < group_sizes[g]; ++k) lay.group_of_ingress[at++] = g;
    }

    // Access-length jitter in a zero-sum cycle keeps the census mean exact.
    std::vector<int> access_len(lay.n_ingress, lay.access_base);
    if (lay.access_base >= 2 && std::abs(access_mean - lay.access_base) < 1e-9) {
        int full = lay.n_ingress / 3 * 3;
        for (int i = 0; i < full; i += 3) {
            access_len[i + 1] += 1;
            access_len[i + 2] -= 1;
        }
        if (lay.n_ingress - full == 2) {
            access_len[full] += 1;
            access_len[full + 1] -= 1;
        }
    } else {
        // Non-integer target: alternate base/base+1 to hit the fractional mean.
        double frac = access_mean - std::floor(access_mean);
        int extras = static_cast<int>(std::llround(frac * lay.n_ingress));
        lay.access_base = static_cast<int>(std::floor(access_mean));
        for (int i = 0; i < lay.n_ingress; ++i)
            access_len[i] = lay.access_base + (static_cast<long>(i) * extras / lay.n_ingress <
                                                       (static_cast<long>(i) + 1) * extras / lay.n_ingress
                                                   ? 1
                                                   : 0);
    }

    TopologyDescriptor d;
    int next_router = 0;
    auto add_router = [&](RouterKind k) {
        d.routers.push_back({next_router, k});
        return next_router++;
    };

    std::vector<int> ingress_ids(lay.n_ingress);
    for (int i = 0; i < lay.n_ingress; ++i) ingress_ids[i] = add_router(RouterKind::ingress);
    std::vector<std::vector<int>> access_ids(lay.n_ingress);
    for (int i = 0; i < lay.n_ingress; ++i)
        for (int k = 0; k < access_len[i]; ++k) access_ids[i].push_back(add_router(RouterKind::core));
    std::vector<std::vector<int>> trunk_ids(lay.n_groups);
    for (int g = 0; g < lay.n_groups; ++g)
        for (int j = 0; j <= lay.trunk_len; ++j) trunk_ids[g].push_back(add_router(RouterKind::core));
    std::vector<int> shared_ids;
    if (lay.shared_tail)
        for (int e = 0; e < lay.n_egress; ++e) shared_ids.push_back(add_router(RouterKind::core));
    std::vector<int> egress_ids(lay.n_egress);
    for (int e = 0; e < lay.n_egress; ++e) egress_ids[e] = add_router(RouterKind::egress);

    int next_link = 0;
    auto add_link = [&](int src, int dst, std::int64_t bw) {
        d.links.push_back({next_link, src, dst, bw});
        return next_link++;
    };

    // Trunk chains first: lowest link ids win routing and density tie-breaks,
    // which pins the default target-link selection onto the primary trunk.
    for (int g = 0; g < lay.n_groups; ++g)
        for (int j = 0; j < lay.trunk_len; ++j)
            add_link(trunk_ids[g][j], trunk_ids[g][j + 1],
                     g == 0 ? kBwTrunkPrimary : kBwTrunkSecondary);

    if (lay.shared_tail) {
        for (int g = 0; g < lay.n_groups; ++g)
            for (int e = 0; e < lay.n_egress; ++e)
                add_link(trunk_ids[g][lay.trunk_len], shared_ids[e], kBwTail);
        for (int e = 0; e < lay.n_egress; ++e)
            add_link(shared_ids[e], egress_ids[e], kBwSharedTail);
    } else {
        for (int g = 0; g < lay.n_groups; ++g)
            for (int e = 0; e < lay.n_egress; ++e)
                add_link(trunk_ids[g][lay.trunk_len], egress_ids[e], kBwTail);
    }

    for (int i = 0; i < lay.n_ingress; ++i) {
        int g = lay.group_of_ingress[i];
        int prev = ingress_ids[i];
        for (int r : access_ids[i]) {
            add_link(prev, r, kBwAccess);
            prev = r;
        }
        add_link(prev, trunk_ids[g][0], kBwAccess);
    }

    // Detour plumbing between trunks, ids above everything that routes.
    if (lay.n_groups > 1) {
        for (int g = 0; g < lay.n_groups; ++g)
            for (int h = 0; h < lay.n_groups; ++h)
                if (g != h) add_link(trunk_ids[g][0], trunk_ids[h][0], kBwCross);
        for (int g = 0; g + 1 < lay.n_groups; ++g)
            for (int j = 0; j < lay.trunk_len; ++j) {
                add_link(trunk_ids[g][j], trunk_ids[g + 1][j + 1], kBwCross);
                add_link(trunk_ids[g + 1][j], trunk_ids[g][j + 1], kBwCross);
            }
        if (lay.trunk_len >= 2)
            for (int g = 0; g < lay.n_groups; ++g)
                for (int h = 0; h < lay.n_groups; ++h)
                    if (g != h) add_link(trunk_ids[g][0], trunk_ids[h][2], kBwCross);
    }

    (void)seed;  // layout is fully deterministic; seed reserved for future variation
    return d;
}

Topology synthesize_topology(std::uint64_t seed, const SynthProfile& profile) {
    return Topology::build(synthesize_descriptor(seed, profile));
}

}  // namespace linkbait
