#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "linkbait/common.hpp"

namespace linkbait {

enum class RouterKind { ingress, egress, core };
enum class EndpointRole { legitimate_host, bot, lg_server, server };

const char* to_string(RouterKind k);
const char* to_string(EndpointRole r);
RouterKind router_kind_from_string(const std::string& s);
EndpointRole endpoint_role_from_string(const std::string& s);

struct Router {
    int id = -1;
    RouterKind kind = RouterKind::core;
};

struct Link {
    int id = -1;
    int src = -1;
    int dst = -1;
    std::int64_t bandwidth = 0;  // abstract bytes per tick
};

struct Endpoint {
    int id = -1;
    EndpointRole role = EndpointRole::legitimate_host;
    int attach = -1;  // router id
};

// Declarative network description. Hand-written files and the synthetic
// generator both produce this; build_topology() validates it.
struct TopologyDescriptor {
    std::vector<Router> routers;
    std::vector<Link> links;
    std::vector<Endpoint> endpoints;

    std::string to_json_string() const;
    static TopologyDescriptor from_json_string(const std::string& text);
    static TopologyDescriptor load_file(const std::string& path);
    void save_file(const std::string& path) const;
};

struct PathCensus {
    int non_identical_paths = 0;
    double mean_hops = 0.0;  // routers per distinct path
};

// Immutable router graph with a precomputed deterministic next-hop table
// (shortest path, ties broken by lowest link id). Safe to share read-only
// across concurrent worlds.
class Topology {
public:
    static Topology build(const TopologyDescriptor& desc);

    const std::vector<Router>& routers() const { return routers_; }
    const std::vector<Link>& links() const { return links_; }
    const std::vector<Endpoint>& endpoints() const { return endpoints_; }
    const TopologyDescriptor& descriptor() const { return desc_; }

    const Router& router(int id) const;
    const Link& link(int id) const;
    const Endpoint& endpoint(int id) const;
    bool has_endpoint(int id) const;

    // Link lookup by (src router, dst router); -1 when absent.
    int link_between(int src_router, int dst_router) const;

    std::vector<int> ingress_routers() const;
    std::vector<int> egress_routers() const;
    std::vector<int> endpoints_with_role(EndpointRole role) const;

    // Deterministic path from an endpoint to a server, as link ids.
    std::vector<int> route(int from_endpoint, int to_server) const;
    // Same, starting at an arbitrary router.
    std::vector<int> route_from_router(int router_id, int to_server) const;

    // Routers visited by a link path starting at `first_router`.
    std::vector<int> routers_on_path(int first_router, const std::vector<int>& link_path) const;

    // Shortest router-to-router connector (BFS, lowest-link-id ties),
    // optionally refusing to traverse one link. Empty path when from == to.
    std::optional<std::vector<int>> connect(int from_router, int to_router,
                                            int avoid_link = -1) const;

    // Undirected hop distance between routers (for branch-link neighborhoods).
    int hop_distance(int a, int b) const;

    // Census over distinct (ingress router, server egress) routed paths.
    PathCensus census() const;

private:
    TopologyDescriptor desc_;
    std::vector<Router> routers_;
    std::vector<Link> links_;
    std::vector<Endpoint> endpoints_;

    std::unordered_map<int, int> router_index_;
    std::unordered_map<int, int> link_index_;
    std::unordered_map<int, int> endpoint_index_;
    std::unordered_map<std::int64_t, int> link_by_pair_;  // (src<<32|dst) -> link id

    std::vector<std::vector<int>> out_links_;  // router index -> link ids, ascending
    std::vector<std::vector<int>> in_links_;

    // next_hop_[egress router index][router index] -> link id or -1
    std::unordered_map<int, std::vector<int>> next_hop_;

    int router_idx(int id) const;
    void build_routing();
};

Topology build_topology(const TopologyDescriptor& desc);

// Profile for the synthetic AS-style generator. density_skew is the target
// LG coverage of the top-15 flow-density links: 1.0 adds a shared pre-egress
// hop every path crosses; lower values split ingress groups across parallel
// trunk planes so the top links only cover the primary plane's share.
struct SynthProfile {
    int n_paths = 100;
    double mean_hops = 12.0;
    double density_skew = 1.0;
    int max_ingress = 126;
};

TopologyDescriptor synthesize_descriptor(std::uint64_t seed, const SynthProfile& profile);
Topology synthesize_topology(std::uint64_t seed, const SynthProfile& profile);

}  // namespace linkbait
