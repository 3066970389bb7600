#pragma once

// Scenario files and policy strings.
//
// A scenario file is JSON:
//
//   {
//     "name": "my-scenario",
//     "preset": "single",            // optional base; the keys below override it
//     "catalog_size": 20000, "alpha": 1.7, "rate": 1.0,
//     "object_size_bytes": 10000, "packet_size_bytes": 10000,
//     "horizon": 200000, "seed": 1, "stats_from_request": 0, "max_wall_seconds": 0,
//     "policy": {"kind": "lac", "beta": 5, "gamma": 5, "mode": "asym"},
//     "nodes": [
//       {"id": "user", "kind": "user", "rate": 1.0},
//       {"id": "cache", "kind": "cache", "capacity_objects": 8, "policy": {"kind": "lcp", "p": 0.1}},
//       {"id": "repo", "kind": "repository"}
//     ],
//     "links": [
//       {"from": "user", "to": "cache", "capacity_bps": 200000, "prop_delay_s": 0},
//       {"from": "cache", "to": "repo", "capacity_bps": 30000}
//     ]
//   }
//
// "from" is the end closer to the users. Cache size may be given as
// "capacity_objects" or "capacity_bytes" (divided by object_size_bytes).
// Policy kinds: lru, lcp (p), sym (p), sym-la (beta, gamma), lac (beta, gamma);
// "mode" is accepted for lcp/lac and overrides their asymmetric default.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lac/cache.hpp"
#include "lac/netsim.hpp"

namespace lac {

namespace detail {
inline double parse_number(std::string_view s, std::string_view what) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty())
        throw std::invalid_argument("bad number '" + std::string(s) + "' in " + std::string(what));
    return v;
}
}  // namespace detail

/// Parses lru, lcp[:p], sym[:p], sym-la[:beta,gamma] or lac[:beta,gamma].
/// Omitted parameters come from the scenario's preset defaults.
inline InsertionPolicy parse_policy(std::string_view text, const ScenarioConfig& defaults) {
    const auto colon = text.find(':');
    const auto kind = text.substr(0, colon);
    const auto args = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);

    auto pair = [&](double b, double g) {
        if (args.empty()) return std::pair{b, g};
        const auto comma = args.find(',');
        if (comma == std::string_view::npos)
            throw std::invalid_argument("policy '" + std::string(text) + "': expected <beta>,<gamma>");
        return std::pair{detail::parse_number(args.substr(0, comma), text),
                         detail::parse_number(args.substr(comma + 1), text)};
    };
    auto prob = [&](double p) { return args.empty() ? p : detail::parse_number(args, text); };

    if (kind == "lru") {
        if (!args.empty()) throw std::invalid_argument("policy 'lru' takes no arguments");
        return InsertionPolicy::always();
    }
    if (kind == "lcp") return InsertionPolicy::fixed_prob(prob(defaults.lcp_p));
    if (kind == "sym") return InsertionPolicy::fixed_prob(prob(defaults.lcp_p), MtfMode::SymmetricHitAndMiss);
    if (kind == "lac") {
        auto [b, g] = pair(defaults.lac_beta, defaults.lac_gamma);
        return InsertionPolicy::latency_aware(b, g);
    }
    if (kind == "sym-la") {
        auto [b, g] = pair(defaults.lac_beta, defaults.lac_gamma);
        return InsertionPolicy::latency_aware(b, g, MtfMode::SymmetricHitAndMiss);
    }
    throw std::invalid_argument("unknown policy '" + std::string(text) + "' (lru, lcp:<p>, sym:<p>, sym-la, lac:<b>,<g>)");
}

inline InsertionPolicy policy_from_json(const nlohmann::json& j, const ScenarioConfig& defaults) {
    const auto kind = j.at("kind").get<std::string>();
    InsertionPolicy pol;
    if (kind == "lru") {
        pol = InsertionPolicy::always();
    } else if (kind == "lcp" || kind == "sym") {
        pol = InsertionPolicy::fixed_prob(j.value("p", defaults.lcp_p),
                                          kind == "sym" ? MtfMode::SymmetricHitAndMiss : MtfMode::AsymmetricMissOnly);
    } else if (kind == "lac" || kind == "sym-la") {
        pol = InsertionPolicy::latency_aware(j.value("beta", defaults.lac_beta), j.value("gamma", defaults.lac_gamma),
                                             kind == "sym-la" ? MtfMode::SymmetricHitAndMiss
                                                              : MtfMode::AsymmetricMissOnly);
    } else {
        throw ConfigError("unknown policy kind '" + kind + "'");
    }
    if (j.contains("mode")) {
        const auto mode = j.at("mode").get<std::string>();
        if (mode == "asym") pol.mode = MtfMode::AsymmetricMissOnly;
        else if (mode == "sym") pol.mode = MtfMode::SymmetricHitAndMiss;
        else throw ConfigError("policy mode must be 'asym' or 'sym'");
    }
    return pol;
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
    try {
        ScenarioConfig cfg = j.contains("preset") ? preset(j.at("preset").get<std::string>()) : ScenarioConfig{};
        cfg.name = j.value("name", cfg.name);
        cfg.catalog_size = j.value("catalog_size", cfg.catalog_size);
        cfg.alpha = j.value("alpha", cfg.alpha);
        cfg.rate_lambda = j.value("rate", cfg.rate_lambda);
        cfg.object_size_bytes = j.value("object_size_bytes", cfg.object_size_bytes);
        cfg.packet_size_bytes = j.value("packet_size_bytes", cfg.packet_size_bytes);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.stats_from_request = j.value("stats_from_request", cfg.stats_from_request);
        cfg.max_wall_seconds = j.value("max_wall_seconds", cfg.max_wall_seconds);
        cfg.lac_beta = j.value("lac_beta", cfg.lac_beta);
        cfg.lac_gamma = j.value("lac_gamma", cfg.lac_gamma);
        cfg.lcp_p = j.value("lcp_p", cfg.lcp_p);

        if (j.contains("nodes") || j.contains("links")) {
            Topology topo;
            for (const auto& n : j.at("nodes")) {
                const auto id = n.at("id").get<std::string>();
                if (topo.find(id)) throw ConfigError("duplicate node id '" + id + "'");
                const auto kind = n.at("kind").get<std::string>();
                if (kind == "user") {
                    std::optional<double> rate;
                    if (n.contains("rate")) rate = n.at("rate").get<double>();
                    topo.add_user(id, rate);
                } else if (kind == "cache") {
                    std::uint64_t slots = 0;
                    if (n.contains("capacity_objects")) slots = n.at("capacity_objects").get<std::uint64_t>();
                    else if (n.contains("capacity_bytes"))
                        slots = n.at("capacity_bytes").get<std::uint64_t>() / cfg.object_size_bytes;
                    else throw ConfigError("cache '" + id + "' needs capacity_objects or capacity_bytes");
                    std::optional<InsertionPolicy> pol;
                    if (n.contains("policy")) pol = policy_from_json(n.at("policy"), cfg);
                    topo.add_cache(id, slots, pol);
                } else if (kind == "repository") {
                    topo.add_repository(id);
                } else {
                    throw ConfigError("node '" + id + "' has unknown kind '" + kind + "'");
                }
            }
            for (const auto& l : j.at("links")) {
                const auto from = topo.find(l.at("from").get<std::string>());
                const auto to = topo.find(l.at("to").get<std::string>());
                if (!from || !to) throw ConfigError("link references an unknown node");
                topo.add_link(*from, *to, l.at("capacity_bps").get<double>(), l.value("prop_delay_s", 0.0));
            }
            cfg.topology = std::move(topo);
        }

        if (j.contains("policy")) cfg.policy = policy_from_json(j.at("policy"), cfg);
        cfg.horizon = j.value("horizon", kDefaultRequestsPerUser * cfg.topology.users().size());
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario file: ") + e.what());
    }
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open scenario file " + path.string());
    nlohmann::json j;
    try {
        is >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario file " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

}  // namespace lac
