#pragma once

// Helpers shared by the command line and the acceptance harness: policy
// calibration, simulation-vs-model comparison and parallel run fan-out.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <vector>

#include "lac/analytics.hpp"
#include "lac/netsim.hpp"

namespace lac {

inline ScenarioConfig with_policy(ScenarioConfig cfg, const InsertionPolicy& policy) {
    cfg.policy = policy;
    for (auto& node : cfg.topology.nodes) node.policy.reset();
    return cfg;
}

inline ScenarioConfig with_seed(ScenarioConfig cfg, std::uint64_t seed) {
    cfg.seed = seed;
    return cfg;
}

/// Index of the link feeding the repository.
inline std::size_t repository_link(const Topology& topo) {
    for (std::size_t l = 0; l < topo.links.size(); ++l)
        if (topo.nodes[topo.links[l].to].kind == NodeKind::Repository) return l;
    throw ConfigError("topology has no link to the repository");
}

/// Cache the first user attaches to; its request stream is the raw IRM input.
inline std::size_t first_user_cache(const Topology& topo) {
    const auto routes = compute_routes(topo);
    return topo.links[routes[topo.users().front()]].to;
}

/// Runs the scenario's latency-aware policy and returns its mean caching
/// probability, the value a fixed-probability baseline should use.
inline double calibrate_lcp(const ScenarioConfig& cfg) {
    const auto lac = with_policy(cfg, InsertionPolicy::latency_aware(cfg.lac_beta, cfg.lac_gamma));
    return run(lac).mean_decision_prob();
}

struct RankDeviation {
    Rank rank;
    std::optional<double> simulated;
    double model;
};

struct Comparison {
    std::size_t node = 0;
    double model_mean_p = 1.0;
    double tau_x = 0.0;
    bool gated = false;  // closed-form model available for this policy
    double max_abs_deviation = 0.0;
    std::vector<RankDeviation> ranks;
};

/// Per-rank miss ratio at `node` next to the single-cache model for the
/// policy: LRU and symmetric policies use mean_p = 1, fixed-probability
/// insertion uses its p. Latency-aware policies are compared against the
/// model at their measured mean decision probability but are not gated.
inline Comparison compare_to_model(const ScenarioConfig& cfg, const MetricsReport& report, std::size_t node,
                                   Rank max_rank) {
    const auto& spec = cfg.topology.nodes.at(node);
    if (spec.kind != NodeKind::Cache) throw ConfigError("compare: node is not a cache");
    const auto policy = spec.policy.value_or(cfg.policy);

    Comparison cmp;
    cmp.node = node;
    switch (policy.kind) {
        case InsertionPolicy::Kind::Always:
            cmp.model_mean_p = 1.0;
            cmp.gated = true;
            break;
        case InsertionPolicy::Kind::FixedProb:
            cmp.model_mean_p = policy.symmetric() ? 1.0 : policy.p;
            cmp.gated = policy.p > 0.0;
            break;
        case InsertionPolicy::Kind::LatencyAware:
            cmp.model_mean_p = policy.symmetric() ? 1.0 : report.nodes.at(node).mean_decision_prob();
            cmp.gated = false;
            break;
    }
    if (!(cmp.model_mean_p > 0.0)) cmp.model_mean_p = 1e-12;

    // Offered rate at the node: the users routed through it.
    const auto routes = compute_routes(cfg.topology);
    double lambda = 0.0;
    for (auto u : cfg.topology.users()) {
        for (std::size_t cur = u; cfg.topology.nodes[cur].kind != NodeKind::Repository;
             cur = cfg.topology.links[routes[cur]].to) {
            if (cur == node) {
                lambda += cfg.topology.nodes[u].rate.value_or(cfg.rate_lambda);
                break;
            }
        }
    }
    const auto model = zipf_weights(cfg.catalog_size, cfg.alpha);
    const auto sol = analytics::solve_tau(static_cast<std::uint32_t>(spec.cache_capacity_objects), lambda, model,
                                          cmp.model_mean_p);
    cmp.tau_x = sol.tau_x;
    for (Rank k = 1; k <= std::min<Rank>(max_rank, cfg.catalog_size); ++k) {
        RankDeviation d{k, report.rank_stats.miss_ratio(node, k),
                        analytics::miss_asym(lambda * model.q(k), sol.tau_x, cmp.model_mean_p)};
        if (d.simulated) cmp.max_abs_deviation = std::max(cmp.max_abs_deviation, std::abs(*d.simulated - d.model));
        cmp.ranks.push_back(d);
    }
    return cmp;
}

/// Runs independent scenarios on up to `jobs` threads; results keep input order.
inline std::vector<MetricsReport> run_many(const std::vector<ScenarioConfig>& configs, unsigned jobs = 1) {
    std::vector<MetricsReport> out(configs.size());
    jobs = std::max(1u, jobs);
    std::size_t next = 0;
    while (next < configs.size()) {
        std::vector<std::future<MetricsReport>> batch;
        const auto start = next;
        for (unsigned j = 0; j < jobs && next < configs.size(); ++j, ++next)
            batch.push_back(std::async(std::launch::async, [&cfg = configs[next]] { return run(cfg); }));
        for (std::size_t i = 0; i < batch.size(); ++i) out[start + i] = batch[i].get();
    }
    return out;
}

}  // namespace lac
