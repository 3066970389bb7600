#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "lac/experiment.hpp"
#include "lac/netsim.hpp"

using namespace lac;
namespace fs = std::filesystem;

namespace {

// user -> cache -> repo with configurable links.
ScenarioConfig chain(std::uint64_t capacity, double down_bps, double up_bps, std::uint32_t catalog) {
    ScenarioConfig cfg;
    cfg.catalog_size = catalog;
    cfg.alpha = 1.0;
    auto& t = cfg.topology;
    const auto u = t.add_user("u");
    const auto c = t.add_cache("c", capacity);
    const auto r = t.add_repository("r");
    t.add_link(u, c, down_bps);
    t.add_link(c, r, up_bps);
    cfg.policy = InsertionPolicy::always();
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

void expect_conservation(const ScenarioConfig& cfg, const MetricsReport& rep) {
    for (auto c : rep.cache_nodes) {
        const auto& n = rep.nodes[c];
        EXPECT_EQ(n.interests_received, n.hits + n.forwarded + n.aggregated) << rep.node_names[c];
        EXPECT_LE(n.insertions, n.decisions);
    }
    EXPECT_EQ(rep.deliveries.size(), cfg.horizon);
    EXPECT_EQ(rep.requests_issued, cfg.horizon);
    for (std::size_t i = 0; i < rep.deliveries.size(); ++i) {
        EXPECT_EQ(rep.deliveries[i].completion_seq, i + 1);
        EXPECT_GE(rep.deliveries[i].duration, 0.0);
        if (i) {
            EXPECT_GE(rep.deliveries[i].completed_at, rep.deliveries[i - 1].completed_at);
        }
    }
    for (std::size_t l = 0; l < rep.links.size(); ++l) EXPECT_LE(rep.link_rho(l), 1.0 + 1e-12);
}

}  // namespace

TEST(LinkTransmit, FifoExamples) {
    LinkSpec slow{0, 1, 30e3, 0.0};
    LinkState st;
    EXPECT_NEAR(link_transmit(st, slow, 10000, 5.0), 5.0 + 80000.0 / 30000.0, 1e-12);
    EXPECT_NEAR(link_transmit(st, slow, 10000, 5.0), 5.0 + 2 * 80000.0 / 30000.0, 1e-12);
    EXPECT_EQ(st.stats.bytes, 20000u);
    EXPECT_NEAR(st.stats.busy_seconds, 2 * 80000.0 / 30000.0, 1e-12);

    EXPECT_EQ(link_transmit(st, slow, 0, 5.0), 5.0);
    LinkSpec delayed{0, 1, 30e3, 0.25};
    LinkState idle;
    EXPECT_EQ(link_transmit(idle, delayed, 0, 1.0), 1.25);
    EXPECT_EQ(idle.stats.bytes, 0u);
}

TEST(Simulator, SingleObjectFitsOneMissThenHits) {
    auto cfg = chain(1, 1e9, 1e9, 1);
    cfg.horizon = 10;
    const auto rep = run(cfg);
    const auto c = *cfg.topology.find("c");
    EXPECT_EQ(rep.nodes[c].forwarded, 1u);
    EXPECT_EQ(rep.nodes[c].hits, 9u);
    EXPECT_EQ(rep.rank_stats.get(c, 1).requests, 10u);
    EXPECT_EQ(rep.rank_stats.get(c, 1).hits, 9u);
    EXPECT_TRUE(rep.deliveries.front().from_repository);
    EXPECT_FALSE(rep.deliveries.back().from_repository);
    expect_conservation(cfg, rep);
}

TEST(Simulator, ZeroCapacityCacheNeverHits) {
    auto cfg = chain(0, 1e9, 1e9, 20);
    cfg.horizon = 500;
    const auto rep = run(cfg);
    const auto c = *cfg.topology.find("c");
    EXPECT_EQ(rep.nodes[c].hits, 0u);
    EXPECT_EQ(rep.nodes[c].decisions, 0u);
    EXPECT_EQ(rep.nodes[c].forwarded + rep.nodes[c].aggregated, 500u);
    EXPECT_DOUBLE_EQ(rep.overall_miss(), 1.0);
    expect_conservation(cfg, rep);
}

TEST(Simulator, ThreePacketObjectDeliveryHandComputed) {
    auto cfg = chain(1, 200e3, 30e3, 5);
    cfg.object_size_bytes = 30000;
    cfg.packet_size_bytes = 10000;
    cfg.horizon = 1;
    const auto rep = run(cfg);
    ASSERT_EQ(rep.deliveries.size(), 1u);
    // Three packets serialise on the 30 kbps hop (8 s), the last one then
    // takes 0.4 s on the 200 kbps hop.
    EXPECT_NEAR(rep.deliveries[0].duration, 8.4, 1e-9);
    EXPECT_NEAR(rep.links[1].busy_seconds, 8.0, 1e-9);
    EXPECT_NEAR(rep.links[0].busy_seconds, 1.2, 1e-9);
    EXPECT_EQ(rep.links[1].bytes, 30000u);
}

TEST(Simulator, LineHorizonOneGivesOneRecord) {
    auto cfg = with_policy(preset("line"), InsertionPolicy::always());
    cfg.horizon = 1;
    const auto rep = run(cfg);
    EXPECT_EQ(rep.deliveries.size(), 1u);
    EXPECT_TRUE(rep.deliveries[0].from_repository);
    // 10 KB through 30, 200, 200 and 300 kbps hops.
    EXPECT_NEAR(rep.deliveries[0].duration, 80000.0 / 30e3 + 2 * 80000.0 / 200e3 + 80000.0 / 300e3, 1e-9);
}

TEST(Simulator, ConservationOnAllPresets) {
    for (const char* name : {"single", "line", "tree"}) {
        for (const auto& pol : {InsertionPolicy::always(), InsertionPolicy::latency_aware(3, 3),
                                InsertionPolicy::fixed_prob(0.2, MtfMode::SymmetricHitAndMiss)}) {
            auto cfg = with_policy(preset(name), pol);
            cfg.horizon = std::string(name) == "tree" ? 2000 : 5000;
            const auto rep = run(cfg);
            SCOPED_TRACE(std::string(name) + " " + pol.label());
            expect_conservation(cfg, rep);
            // The top cache forwards exactly what the repository link carries.
            const auto rl = repository_link(cfg.topology);
            const auto top = cfg.topology.links[rl].from;
            EXPECT_EQ(rep.links[rl].bytes, rep.nodes[top].forwarded * cfg.object_size_bytes);
        }
    }
}

TEST(Simulator, LargeCacheOnlyColdMisses) {
    auto cfg = chain(50, 200e3, 30e3, 50);
    cfg.horizon = 3000;
    const auto rep = run(cfg);
    const auto c = *cfg.topology.find("c");
    std::set<Rank> distinct;
    for (const auto& d : rep.deliveries) distinct.insert(d.rank);
    EXPECT_EQ(rep.nodes[c].forwarded, distinct.size());
    EXPECT_EQ(rep.links[1].bytes, distinct.size() * cfg.object_size_bytes);
}

TEST(Simulator, EqualSeedsGiveByteIdenticalCsv) {
    for (const char* name : {"single", "line", "tree"}) {
        auto cfg = preset(name);
        cfg.horizon = std::string(name) == "tree" ? 2000 : 10000;
        cfg.seed = 42;
        const auto a = fs::temp_directory_path() / "lac-det-a";
        const auto b = fs::temp_directory_path() / "lac-det-b";
        fs::remove_all(a);
        fs::remove_all(b);
        export_csv(run(cfg), a);
        export_csv(run(cfg), b);
        for (const char* f : {"miss_prob.csv", "delivery.csv", "links.csv", "summary.csv"})
            EXPECT_EQ(slurp(a / f), slurp(b / f)) << name << ' ' << f;
        fs::remove_all(a);
        fs::remove_all(b);
    }
}

TEST(Simulator, DifferentSeedsDiffer) {
    auto cfg = preset("single");
    cfg.horizon = 2000;
    const auto a = run(with_seed(cfg, 1));
    const auto b = run(with_seed(cfg, 2));
    EXPECT_NE(a.mean_delivery(), b.mean_delivery());
}

TEST(Simulator, LatencyAwareCarriesNoMoreRepositoryBytesThanLru) {
    auto base = preset("single");
    base.horizon = 100000;
    const auto rl = repository_link(base.topology);
    const auto lru = run(with_policy(base, InsertionPolicy::always()));
    const auto lac = run(base);
    EXPECT_LE(lac.links[rl].bytes, lru.links[rl].bytes);
}

TEST(Simulator, SingleCacheLruTracksCheModel) {
    auto cfg = with_policy(preset("single"), InsertionPolicy::always());
    cfg.stats_from_request = cfg.horizon / 2;
    const auto rep = run(cfg);
    const auto cmp = compare_to_model(cfg, rep, first_user_cache(cfg.topology), 20);
    EXPECT_TRUE(cmp.gated);
    EXPECT_LE(cmp.max_abs_deviation, 0.05);
}

TEST(Simulator, WallClockCapTruncates) {
    auto cfg = preset("tree");
    cfg.max_wall_seconds = 1e-9;
    const auto rep = run(cfg);
    EXPECT_TRUE(rep.truncated);
    EXPECT_LT(rep.deliveries.size(), cfg.horizon);
}

TEST(Preset, Parameters) {
    const auto s = preset("single");
    EXPECT_EQ(s.catalog_size, 20000u);
    EXPECT_DOUBLE_EQ(s.alpha, 1.7);
    EXPECT_DOUBLE_EQ(s.rate_lambda, 1.0);
    EXPECT_EQ(s.object_size_bytes, 10000u);
    EXPECT_EQ(s.packets_per_object(), 1u);
    EXPECT_EQ(s.topology.nodes[*s.topology.find("cache")].cache_capacity_objects, 8u);
    ASSERT_EQ(s.topology.links.size(), 2u);
    EXPECT_DOUBLE_EQ(s.topology.links[0].data_capacity_bps, 200e3);
    EXPECT_DOUBLE_EQ(s.topology.links[1].data_capacity_bps, 30e3);
    EXPECT_EQ(s.policy.label(), "lac:5,5");
    EXPECT_DOUBLE_EQ(s.lcp_p, 0.1);

    const auto l = preset("line");
    ASSERT_EQ(l.topology.links.size(), 4u);
    const double line_bps[] = {300e3, 200e3, 200e3, 30e3};
    for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(l.topology.links[i].data_capacity_bps, line_bps[i]);
    EXPECT_DOUBLE_EQ(l.lcp_p, 0.1);

    const auto t = preset("tree");
    EXPECT_EQ(t.packets_per_object(), 100u);
    int caches = 0;
    for (const auto& n : t.topology.nodes)
        if (n.kind == NodeKind::Cache) {
            ++caches;
            EXPECT_EQ(n.cache_capacity_objects * t.object_size_bytes, 8000000u);
        }
    EXPECT_EQ(caches, 7);
    EXPECT_EQ(t.topology.users().size(), 4u);
    EXPECT_DOUBLE_EQ(t.topology.links[repository_link(t.topology)].data_capacity_bps, 9e6);
    for (std::size_t i = 0; i < t.topology.links.size(); ++i)
        if (i != repository_link(t.topology)) {
            EXPECT_DOUBLE_EQ(t.topology.links[i].data_capacity_bps, 30e6);
        }
    EXPECT_EQ(t.policy.label(), "lac:3,3");
    EXPECT_DOUBLE_EQ(t.lcp_p, 0.03);
    EXPECT_EQ(t.horizon, 4 * kDefaultRequestsPerUser);

    EXPECT_THROW(preset("mesh"), ConfigError);
}

TEST(Topology, InvalidConfigurationsFailBeforeStart) {
    {
        auto cfg = chain(1, 1e6, 0.0, 10);
        EXPECT_THROW(run(cfg), ConfigError);
    }
    {
        auto cfg = chain(1, 1e6, 1e6, 10);
        cfg.topology.add_cache("orphan", 4);
        EXPECT_THROW(run(cfg), ConfigError);
    }
    {
        auto cfg = chain(1, 1e6, 1e6, 10);
        cfg.topology.add_repository("second");
        EXPECT_THROW(run(cfg), ConfigError);
    }
    {
        ScenarioConfig cfg;
        const auto u = cfg.topology.add_user("u");
        const auto r = cfg.topology.add_repository("r");
        cfg.topology.add_link(u, r, 1e6);
        EXPECT_THROW(run(cfg), ConfigError);
    }
    {
        ScenarioConfig cfg;
        const auto u = cfg.topology.add_user("u");
        const auto a = cfg.topology.add_cache("a", 1);
        const auto b = cfg.topology.add_cache("b", 1);
        cfg.topology.add_repository("r");
        cfg.topology.add_link(u, a, 1e6);
        cfg.topology.add_link(a, b, 1e6);
        cfg.topology.add_link(b, a, 1e6);
        EXPECT_THROW(run(cfg), ConfigError);
    }
    {
        auto cfg = chain(1, 1e6, 1e6, 10);
        cfg.horizon = 0;
        EXPECT_THROW(run(cfg), ConfigError);
    }
}
