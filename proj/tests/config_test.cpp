#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "lac/config.hpp"

using namespace lac;
using nlohmann::json;

TEST(ParsePolicy, AllKinds) {
    const auto defaults = preset("tree");
    EXPECT_EQ(parse_policy("lru", defaults).label(), "lru");
    EXPECT_EQ(parse_policy("lcp", defaults).label(), "lcp:0.03");
    EXPECT_EQ(parse_policy("lcp:0.25", defaults).label(), "lcp:0.25");
    EXPECT_EQ(parse_policy("sym:0.1", defaults).label(), "sym:0.1");
    EXPECT_TRUE(parse_policy("sym:0.1", defaults).symmetric());
    EXPECT_EQ(parse_policy("lac", defaults).label(), "lac:3,3");
    EXPECT_EQ(parse_policy("lac:5,2.5", defaults).label(), "lac:5,2.5");
    const auto la = parse_policy("sym-la", defaults);
    EXPECT_EQ(la.kind, InsertionPolicy::Kind::LatencyAware);
    EXPECT_TRUE(la.symmetric());
}

TEST(ParsePolicy, Errors) {
    const auto defaults = preset("single");
    EXPECT_THROW(parse_policy("lfu", defaults), std::invalid_argument);
    EXPECT_THROW(parse_policy("lru:1", defaults), std::invalid_argument);
    EXPECT_THROW(parse_policy("lcp:x", defaults), std::invalid_argument);
    EXPECT_THROW(parse_policy("lcp:1.5", defaults), std::invalid_argument);
    EXPECT_THROW(parse_policy("lac:5", defaults), std::invalid_argument);
    EXPECT_THROW(parse_policy("lac:5,", defaults), std::invalid_argument);
}

TEST(ConfigJson, PresetWithOverrides) {
    const auto cfg = config_from_json(json::parse(R"({"preset": "line", "seed": 9, "horizon": 77,
                                                      "policy": {"kind": "lcp", "p": 0.2}})"));
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_EQ(cfg.horizon, 77u);
    EXPECT_EQ(cfg.policy.label(), "lcp:0.2");
    EXPECT_EQ(cfg.topology.links.size(), 4u);
}

TEST(ConfigJson, CustomTopologyAndPerNodePolicies) {
    const auto cfg = load_config(std::filesystem::path(LAC_CONFIG_DIR) / "two-edges.json");
    EXPECT_EQ(cfg.catalog_size, 5000u);
    EXPECT_EQ(cfg.packets_per_object(), 5u);
    EXPECT_EQ(cfg.topology.users().size(), 2u);
    EXPECT_EQ(cfg.horizon, 2 * kDefaultRequestsPerUser);
    EXPECT_EQ(cfg.policy.label(), "lac:3,3");
    const auto& edge_b = cfg.topology.nodes[*cfg.topology.find("edge-b")];
    ASSERT_TRUE(edge_b.policy.has_value());
    EXPECT_EQ(edge_b.policy->label(), "lcp:0.05");
    EXPECT_EQ(cfg.topology.nodes[*cfg.topology.find("user-a")].rate, 2.0);
    EXPECT_DOUBLE_EQ(cfg.topology.links.back().prop_delay_s, 0.02);

    auto small = cfg;
    small.horizon = 3000;
    const auto rep = run(small);
    EXPECT_EQ(rep.deliveries.size(), 3000u);
}

TEST(ConfigJson, CapacityInBytes) {
    const auto cfg = load_config(std::filesystem::path(LAC_CONFIG_DIR) / "single-delayed.json");
    EXPECT_EQ(cfg.topology.nodes[*cfg.topology.find("cache")].cache_capacity_objects, 8u);
    EXPECT_EQ(cfg.horizon, 50000u);
    EXPECT_EQ(cfg.seed, 7u);
}

TEST(ConfigJson, Errors) {
    EXPECT_THROW(config_from_json(json::parse(R"({"preset": "ring"})")), ConfigError);
    EXPECT_THROW(config_from_json(json::parse(R"({"preset": "single", "alpha": "high"})")), ConfigError);
    EXPECT_THROW(config_from_json(json::parse(R"({"preset": "single", "policy": {"kind": "fifo"}})")), ConfigError);
    EXPECT_THROW(config_from_json(json::parse(R"({"preset": "single", "horizon": 0})")), ConfigError);
    EXPECT_THROW(config_from_json(json::parse(R"({
        "nodes": [{"id": "u", "kind": "user"}, {"id": "c", "kind": "cache"}, {"id": "r", "kind": "repository"}],
        "links": [{"from": "u", "to": "c", "capacity_bps": 1e6}, {"from": "c", "to": "r", "capacity_bps": 1e6}]})")),
                 ConfigError);
    EXPECT_THROW(config_from_json(json::parse(R"({
        "nodes": [{"id": "u", "kind": "user"}, {"id": "c", "kind": "cache", "capacity_objects": 2},
                  {"id": "r", "kind": "repository"}],
        "links": [{"from": "u", "to": "c", "capacity_bps": 1e6}, {"from": "c", "to": "x", "capacity_bps": 1e6}]})")),
                 ConfigError);
    EXPECT_THROW(config_from_json(json::parse(R"({
        "nodes": [{"id": "u", "kind": "user"}, {"id": "u", "kind": "repository"}], "links": []})")),
                 ConfigError);
    EXPECT_THROW(load_config("/nonexistent/scenario.json"), ConfigError);

    const auto bad = std::filesystem::temp_directory_path() / "lac-bad-config.json";
    std::ofstream(bad) << "{ not json";
    EXPECT_THROW(load_config(bad), ConfigError);
    std::filesystem::remove(bad);
}
