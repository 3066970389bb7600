#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lac/cache.hpp"
#include "lac/metrics.hpp"
#include "lac/rng.hpp"
#include "lac/workload.hpp"

namespace lac {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class NodeKind { User, Cache, Repository };

struct NodeSpec {
    std::string name;
    NodeKind kind = NodeKind::Cache;
    std::uint64_t cache_capacity_objects = 0;   // Cache only
    std::optional<InsertionPolicy> policy;       // Cache only; scenario default when empty
    std::optional<double> rate;                  // User only; scenario default when empty
};

/// A link between a downstream node (`from`, closer to the users) and its
/// upstream next hop (`to`, closer to the repository). Interests travel
/// from -> to with propagation delay only; data travels to -> from through a
/// FIFO transmitter of the given capacity.
struct LinkSpec {
    std::size_t from = 0;
    std::size_t to = 0;
    double data_capacity_bps = 0.0;
    double prop_delay_s = 0.0;
};

struct Topology {
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;

    std::size_t add_user(std::string name, std::optional<double> rate = std::nullopt) {
        nodes.push_back({std::move(name), NodeKind::User, 0, std::nullopt, rate});
        return nodes.size() - 1;
    }
    std::size_t add_cache(std::string name, std::uint64_t capacity_objects,
                          std::optional<InsertionPolicy> policy = std::nullopt) {
        nodes.push_back({std::move(name), NodeKind::Cache, capacity_objects, policy, std::nullopt});
        return nodes.size() - 1;
    }
    std::size_t add_repository(std::string name) {
        nodes.push_back({std::move(name), NodeKind::Repository, 0, std::nullopt, std::nullopt});
        return nodes.size() - 1;
    }
    std::size_t add_link(std::size_t from, std::size_t to, double capacity_bps, double prop_delay_s = 0.0) {
        links.push_back({from, to, capacity_bps, prop_delay_s});
        return links.size() - 1;
    }

    std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].name == name) return i;
        return std::nullopt;
    }

    std::string link_name(std::size_t l) const { return nodes[links[l].from].name + "->" + nodes[links[l].to].name; }

    std::vector<std::size_t> users() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].kind == NodeKind::User) out.push_back(i);
        return out;
    }
};

inline constexpr std::size_t kNoLink = std::numeric_limits<std::size_t>::max();

/// Next-hop link toward the repository for every node. Throws ConfigError
/// unless the links form a tree rooted at a single repository with every user
/// attached to a cache.
inline std::vector<std::size_t> compute_routes(const Topology& topo) {
    const auto n = topo.nodes.size();
    std::size_t repositories = 0;
    for (const auto& node : topo.nodes) repositories += node.kind == NodeKind::Repository;
    if (repositories != 1) throw ConfigError("topology must contain exactly one repository");

    std::vector<std::size_t> up(n, kNoLink);
    for (std::size_t l = 0; l < topo.links.size(); ++l) {
        const auto& link = topo.links[l];
        if (link.from >= n || link.to >= n || link.from == link.to)
            throw ConfigError("link " + std::to_string(l) + " has invalid endpoints");
        if (!(link.data_capacity_bps > 0.0)) throw ConfigError("link " + topo.link_name(l) + " has zero capacity");
        if (!(link.prop_delay_s >= 0.0)) throw ConfigError("link " + topo.link_name(l) + " has negative delay");
        if (up[link.from] != kNoLink)
            throw ConfigError("node " + topo.nodes[link.from].name + " has more than one upstream link");
        if (topo.nodes[link.from].kind == NodeKind::Repository)
            throw ConfigError("the repository cannot have an upstream link");
        if (topo.nodes[link.to].kind == NodeKind::User)
            throw ConfigError("user " + topo.nodes[link.to].name + " cannot be an upstream hop");
        up[link.from] = l;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& node = topo.nodes[i];
        if (node.kind == NodeKind::Repository) continue;
        if (up[i] == kNoLink) throw ConfigError("node " + node.name + " is unroutable (no upstream link)");
        if (node.kind == NodeKind::User && topo.nodes[topo.links[up[i]].to].kind != NodeKind::Cache)
            throw ConfigError("user " + node.name + " must attach to a cache node");
        std::size_t cur = i;
        for (std::size_t steps = 0; topo.nodes[cur].kind != NodeKind::Repository; ++steps) {
            if (steps > n) throw ConfigError("routing loop through node " + node.name);
            cur = topo.links[up[cur]].to;
        }
    }
    return up;
}

struct ScenarioConfig {
    std::string name = "custom";
    Topology topology;
    std::uint32_t catalog_size = 20000;
    double alpha = 1.7;
    double rate_lambda = 1.0;  // per user population, objects/s
    std::uint64_t object_size_bytes = 10000;
    std::uint64_t packet_size_bytes = 10000;
    InsertionPolicy policy;           // for caches without their own policy
    std::uint64_t horizon = 200000;   // user requests, summed over all users
    std::uint64_t seed = 1;
    std::uint64_t stats_from_request = 0;  // per-rank counters ignore earlier requests
    double max_wall_seconds = 0.0;         // 0 = no cap

    // Policy parameters the presets ship with; used by the command line when a
    // policy is named without arguments.
    double lac_beta = 5.0;
    double lac_gamma = 5.0;
    double lcp_p = 0.1;

    std::uint32_t packets_per_object() const {
        return static_cast<std::uint32_t>((object_size_bytes + packet_size_bytes - 1) / packet_size_bytes);
    }

    void validate() const {
        if (catalog_size == 0) throw ConfigError("catalog_size must be >= 1");
        if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
        if (!(rate_lambda > 0.0)) throw ConfigError("rate must be > 0");
        if (object_size_bytes == 0 || packet_size_bytes == 0) throw ConfigError("object and packet sizes must be > 0");
        if (horizon == 0) throw ConfigError("horizon must be >= 1");
        for (const auto& node : topology.nodes) {
            if (node.policy) node.policy->validate();
            if (node.rate && !(*node.rate > 0.0)) throw ConfigError("user " + node.name + " has a non-positive rate");
        }
        policy.validate();
        if (topology.users().empty()) throw ConfigError("topology has no users");
        compute_routes(topology);
    }
};

/// Transmission time of `bytes` at `bps`.
inline double transmission_time(std::uint64_t bytes, double bps) { return static_cast<double>(bytes) * 8.0 / bps; }

/// Data direction of one link: a FIFO store-and-forward transmitter.
struct LinkState {
    double busy_until = 0.0;
    LinkStats stats;
};

/// Schedules one packet on a FIFO link and returns its delivery time at the
/// far end. Zero-size packets (interests) only pay propagation.
inline double link_transmit(LinkState& state, const LinkSpec& link, std::uint64_t size_bytes, double now) {
    if (size_bytes == 0) return now + link.prop_delay_s;
    const double start = std::max(now, state.busy_until);
    const double tx = transmission_time(size_bytes, link.data_capacity_bps);
    state.busy_until = start + tx;
    state.stats.busy_seconds += tx;
    state.stats.bytes += size_bytes;
    return start + tx + link.prop_delay_s;
}

class Simulator {
public:
    explicit Simulator(const ScenarioConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        const auto& topo = cfg_.topology;
        routes_ = compute_routes(topo);
        model_ = zipf_weights(cfg_.catalog_size, cfg_.alpha);
        packets_ = cfg_.packets_per_object();

        const auto n = topo.nodes.size();
        nodes_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& spec = topo.nodes[i];
            auto& st = nodes_[i];
            st.rng = RandomStream(cfg_.seed, i);
            if (spec.kind == NodeKind::Cache) {
                st.cache.emplace(spec.cache_capacity_objects);
                st.policy = spec.policy.value_or(cfg_.policy);
            } else if (spec.kind == NodeKind::User) {
                st.source = RequestSource{spec.rate.value_or(cfg_.rate_lambda), cfg_.seed, static_cast<std::uint32_t>(i)};
            }
        }
        links_.resize(topo.links.size());
        for (std::size_t l = 0; l < links_.size(); ++l) links_[l].stats.id = topo.link_name(l);

        report_.policy = cfg_.policy.label();
        report_.seed = cfg_.seed;
        report_.rank_stats = RankStats(n);
        report_.nodes.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            report_.node_names.push_back(topo.nodes[i].name);
            if (topo.nodes[i].kind == NodeKind::Cache) report_.cache_nodes.push_back(i);
        }
    }

    MetricsReport run() {
        for (std::size_t u : cfg_.topology.users()) {
            auto& st = nodes_[u];
            push({next_interarrival(st.source, st.rng), 0, EventKind::RequestArrival, static_cast<std::uint32_t>(u)});
        }
        const auto wall_start = std::chrono::steady_clock::now();
        std::uint64_t processed = 0;
        while (!queue_.empty()) {
            const Event ev = queue_.top();
            queue_.pop();
            if (ev.time < now_) throw std::logic_error("simulation clock moved backwards");
            now_ = ev.time;
            switch (ev.kind) {
                case EventKind::RequestArrival: on_request(ev); break;
                case EventKind::InterestArrival: on_interest(ev); break;
                case EventKind::DataArrival: on_data(ev); break;
            }
            if (cfg_.max_wall_seconds > 0.0 && (++processed & 0xfffff) == 0) {
                const std::chrono::duration<double> spent = std::chrono::steady_clock::now() - wall_start;
                if (spent.count() > cfg_.max_wall_seconds) {
                    report_.truncated = true;
                    break;
                }
            }
        }
        report_.elapsed = now_;
        report_.requests_issued = issued_;
        report_.links.clear();
        for (const auto& l : links_) report_.links.push_back(l.stats);
        return std::move(report_);
    }

private:
    enum class EventKind : std::uint8_t { RequestArrival, InterestArrival, DataArrival };

    struct Event {
        double time = 0.0;
        std::uint64_t seq = 0;
        EventKind kind = EventKind::RequestArrival;
        std::uint32_t node = 0;
        std::uint32_t link = 0;  // link the message travelled over
        Rank rank = 0;
        std::uint64_t rid = 0;   // retrieval id at the receiving node
        std::uint64_t request_seq = 0;
        std::uint32_t packet = 0;
        bool from_repository = false;
    };

    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };

    struct Requester {
        std::uint32_t link;  // data goes back over this link
        std::uint64_t rid;   // retrieval id at the downstream node
    };

    struct PitEntry {
        Rank rank = 0;
        std::uint32_t received = 0;
        ObjectLatency latency;
        std::vector<Requester> requesters;
    };

    struct UserRequest {
        Rank rank = 0;
        double issued_at = 0.0;
        std::uint32_t received = 0;
    };

    struct NodeState {
        RandomStream rng{0};
        std::optional<LruCache> cache;
        InsertionPolicy policy;
        LatencyEstimator estimator;
        RequestSource source;
        std::unordered_map<std::uint64_t, PitEntry> pit;
        std::unordered_map<Rank, std::uint64_t> open_by_rank;  // retrievals that can still aggregate
    };

    void push(Event ev) {
        ev.seq = next_seq_++;
        queue_.push(ev);
    }

    bool counted(std::uint64_t request_seq) const { return request_seq >= cfg_.stats_from_request; }

    void send_interest(std::uint32_t from_node, std::uint64_t rid, Rank rank, std::uint64_t request_seq) {
        const auto l = routes_[from_node];
        const auto& spec = cfg_.topology.links[l];
        Event ev;
        ev.time = link_transmit(links_[l], spec, 0, now_);
        ev.kind = EventKind::InterestArrival;
        ev.node = static_cast<std::uint32_t>(spec.to);
        ev.link = static_cast<std::uint32_t>(l);
        ev.rank = rank;
        ev.rid = rid;
        ev.request_seq = request_seq;
        push(ev);
    }

    void send_data(std::uint32_t link, std::uint64_t rid, Rank rank, std::uint32_t packet, bool from_repo) {
        const auto& spec = cfg_.topology.links[link];
        Event ev;
        ev.time = link_transmit(links_[link], spec, cfg_.packet_size_bytes, now_);
        ev.kind = EventKind::DataArrival;
        ev.node = static_cast<std::uint32_t>(spec.from);
        ev.link = link;
        ev.rank = rank;
        ev.rid = rid;
        ev.packet = packet;
        ev.from_repository = from_repo;
        push(ev);
    }

    void send_object(std::uint32_t link, std::uint64_t rid, Rank rank, bool from_repo) {
        for (std::uint32_t i = 0; i < packets_; ++i) send_data(link, rid, rank, i, from_repo);
    }

    void on_request(const Event& ev) {
        if (issued_ >= cfg_.horizon) return;
        auto& st = nodes_[ev.node];
        const auto seq = issued_++;
        const Rank rank = sample_rank(model_, st.rng);
        const auto rid = next_rid_++;
        user_requests_.emplace(rid, UserRequest{rank, now_, 0});
        if (counted(seq)) report_.rank_stats.record(ev.node, rank, false);
        send_interest(ev.node, rid, rank, seq);
        if (issued_ < cfg_.horizon)
            push({now_ + next_interarrival(st.source, st.rng), 0, EventKind::RequestArrival, ev.node});
    }

    void on_interest(const Event& ev) {
        const auto kind = cfg_.topology.nodes[ev.node].kind;
        if (kind == NodeKind::Repository) {
            send_object(ev.link, ev.rid, ev.rank, true);
            return;
        }
        auto& st = nodes_[ev.node];
        auto& counters = report_.nodes[ev.node];
        ++counters.interests_received;
        const bool hit = lookup(*st.cache, ev.rank, st.policy, st.estimator, st.rng) == LookupResult::Hit;
        if (counted(ev.request_seq)) report_.rank_stats.record(ev.node, ev.rank, hit);
        if (hit) {
            ++counters.hits;
            send_object(ev.link, ev.rid, ev.rank, false);
            return;
        }
        if (auto open = st.open_by_rank.find(ev.rank); open != st.open_by_rank.end()) {
            st.pit.at(open->second).requesters.push_back({ev.link, ev.rid});
            ++counters.aggregated;
            return;
        }
        const auto rid = next_rid_++;
        auto& entry = st.pit[rid];
        entry.rank = ev.rank;
        entry.requesters.push_back({ev.link, ev.rid});
        st.open_by_rank.emplace(ev.rank, rid);
        st.estimator.record_forward(rid, now_, packets_);
        ++counters.forwarded;
        send_interest(ev.node, rid, ev.rank, ev.request_seq);
    }

    void on_data(const Event& ev) {
        const auto kind = cfg_.topology.nodes[ev.node].kind;
        if (kind == NodeKind::User) {
            auto it = user_requests_.find(ev.rid);
            if (it == user_requests_.end()) throw ProtocolError("user received data for an unknown request");
            if (++it->second.received == packets_) {
                DeliveryRecord rec;
                rec.completion_seq = ++completed_;
                rec.rank = it->second.rank;
                rec.issued_at = it->second.issued_at;
                rec.completed_at = now_;
                rec.duration = now_ - it->second.issued_at;
                rec.from_repository = ev.from_repository;
                report_.deliveries.push_back(rec);
                user_requests_.erase(it);
            }
            return;
        }

        auto& st = nodes_[ev.node];
        auto it = st.pit.find(ev.rid);
        if (it == st.pit.end()) throw ProtocolError("data arrived at " + cfg_.topology.nodes[ev.node].name +
                                                    " with no pending interest");
        auto& entry = it->second;
        if (entry.received == 0) {
            auto open = st.open_by_rank.find(entry.rank);
            if (open != st.open_by_rank.end() && open->second == ev.rid) st.open_by_rank.erase(open);
        }
        entry.latency.add(st.estimator.measure_delta_t(ev.rid, now_));
        ++entry.received;
        for (const auto& req : entry.requesters) send_data(req.link, req.rid, entry.rank, ev.packet, ev.from_repository);
        if (entry.received < packets_) return;

        auto& cache = *st.cache;
        if (cache.capacity() > 0 && !cache.contains(entry.rank)) {
            auto& counters = report_.nodes[ev.node];
            const double dt = entry.latency.mean();
            const auto d = decide_insertion(st.policy, dt, st.estimator, st.rng);
            ++counters.decisions;
            counters.decision_prob_sum += d.prob_used;
            if (d.decision) {
                if (cache.insert(entry.rank, dt)) ++counters.evictions;
                st.estimator.update(dt);
                ++counters.insertions;
            }
        }
        st.pit.erase(it);
    }

    ScenarioConfig cfg_;
    std::vector<std::size_t> routes_;
    PopularityModel model_;
    std::uint32_t packets_ = 1;
    std::vector<NodeState> nodes_;
    std::vector<LinkState> links_;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::unordered_map<std::uint64_t, UserRequest> user_requests_;
    MetricsReport report_;
    double now_ = 0.0;
    std::uint64_t next_seq_ = 0;
    std::uint64_t next_rid_ = 1;
    std::uint64_t issued_ = 0;
    std::uint64_t completed_ = 0;
};

inline MetricsReport run(const ScenarioConfig& cfg) { return Simulator(cfg).run(); }

/// Default horizon of the presets: this many requests per user population.
inline constexpr std::uint64_t kDefaultRequestsPerUser = 200000;

/// The three evaluation scenarios: one cache, three caches in line, and a
/// binary tree of seven caches over three levels.
inline ScenarioConfig preset(std::string_view name) {
    ScenarioConfig cfg;
    cfg.name = std::string(name);
    cfg.catalog_size = 20000;
    cfg.alpha = 1.7;
    cfg.rate_lambda = 1.0;
    auto& t = cfg.topology;

    if (name == "single") {
        cfg.object_size_bytes = cfg.packet_size_bytes = 10000;
        const auto user = t.add_user("user");
        const auto cache = t.add_cache("cache", 8);  // 80 KB of 10 KB objects
        const auto repo = t.add_repository("repo");
        t.add_link(user, cache, 200e3);
        t.add_link(cache, repo, 30e3);
        cfg.lac_beta = cfg.lac_gamma = 5.0;
        cfg.lcp_p = 0.1;
    } else if (name == "line") {
        cfg.object_size_bytes = cfg.packet_size_bytes = 10000;
        const auto user = t.add_user("user");
        const auto c1 = t.add_cache("cache1", 8);
        const auto c2 = t.add_cache("cache2", 8);
        const auto c3 = t.add_cache("cache3", 8);
        const auto repo = t.add_repository("repo");
        t.add_link(user, c1, 300e3);
        t.add_link(c1, c2, 200e3);
        t.add_link(c2, c3, 200e3);
        t.add_link(c3, repo, 30e3);
        cfg.lac_beta = cfg.lac_gamma = 5.0;
        cfg.lcp_p = 0.1;
    } else if (name == "tree") {
        cfg.object_size_bytes = 1000000;  // 1 MB objects
        cfg.packet_size_bytes = 10000;    // 100 packets each
        const std::uint64_t slots = 8;    // 8 MB caches
        const auto repo = t.add_repository("repo");
        const auto root = t.add_cache("cache-l3", slots);
        t.add_link(root, repo, 9e6);
        for (char mid : {'a', 'b'}) {
            const auto l2 = t.add_cache(std::string("cache-l2") + mid, slots);
            t.add_link(l2, root, 30e6);
            for (int leaf = 0; leaf < 2; ++leaf) {
                const std::string suffix = std::string(1, mid) + static_cast<char>('1' + leaf);
                const auto l1 = t.add_cache("cache-l1" + suffix, slots);
                t.add_link(l1, l2, 30e6);
                const auto user = t.add_user("user-" + suffix);
                t.add_link(user, l1, 30e6);
            }
        }
        cfg.lac_beta = cfg.lac_gamma = 3.0;
        cfg.lcp_p = 0.03;
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "' (expected single, line or tree)");
    }
    cfg.policy = InsertionPolicy::latency_aware(cfg.lac_beta, cfg.lac_gamma);
    cfg.horizon = kDefaultRequestsPerUser * t.users().size();
    return cfg;
}

}  // namespace lac
