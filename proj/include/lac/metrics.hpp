#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lac/workload.hpp"

namespace lac {

inline constexpr int kCsvSchemaVersion = 1;

struct RankCounters {
    std::uint64_t requests = 0;
    std::uint64_t hits = 0;
};

/// Sparse per-(node, rank) request and hit counters.
class RankStats {
public:
    explicit RankStats(std::size_t nodes = 0) : per_node_(nodes) {}

    void record(std::size_t node, Rank rank, bool hit) {
        auto& c = per_node_.at(node)[rank];
        ++c.requests;
        if (hit) ++c.hits;
    }

    RankCounters get(std::size_t node, Rank rank) const {
        const auto& m = per_node_.at(node);
        auto it = m.find(rank);
        return it == m.end() ? RankCounters{} : it->second;
    }

    /// Empirical miss ratio; absent when the rank was never requested there.
    std::optional<double> miss_ratio(std::size_t node, Rank rank) const {
        const auto c = get(node, rank);
        if (c.requests == 0) return std::nullopt;
        return static_cast<double>(c.requests - c.hits) / static_cast<double>(c.requests);
    }

    std::vector<Rank> ranks(std::size_t node) const {
        std::vector<Rank> out;
        out.reserve(per_node_.at(node).size());
        for (const auto& [r, c] : per_node_.at(node)) out.push_back(r);
        std::sort(out.begin(), out.end());
        return out;
    }

    RankCounters totals(std::size_t node) const {
        RankCounters t;
        for (const auto& [r, c] : per_node_.at(node)) {
            t.requests += c.requests;
            t.hits += c.hits;
        }
        return t;
    }

    std::size_t node_count() const { return per_node_.size(); }

private:
    std::vector<std::unordered_map<Rank, RankCounters>> per_node_;
};

inline std::optional<double> miss_ratio(const RankStats& stats, std::size_t node, Rank rank) {
    return stats.miss_ratio(node, rank);
}

struct DeliveryRecord {
    std::uint64_t completion_seq = 0;  // 1-based order of completion
    Rank rank = 0;
    double issued_at = 0.0;
    double completed_at = 0.0;
    double duration = 0.0;
    bool from_repository = false;  // no cache on the path held the object
};

struct LinkStats {
    std::string id;
    double busy_seconds = 0.0;
    std::uint64_t bytes = 0;
};

/// busy / elapsed.
inline double link_load(const LinkStats& link, double elapsed) {
    if (!(elapsed > 0.0)) throw std::domain_error("link_load: elapsed time must be > 0");
    return link.busy_seconds / elapsed;
}

struct RunningPoint {
    std::uint64_t completion_seq;
    double mean;
    double stddev;  // population
};

/// Cumulative mean and population standard deviation after every completion
/// (Welford). A non-zero `window` restricts both to the last `window` records.
inline std::vector<RunningPoint> running_stats(std::span<const DeliveryRecord> series, std::size_t window = 0) {
    if (series.empty()) throw std::invalid_argument("running_stats: empty series");
    std::vector<RunningPoint> out;
    out.reserve(series.size());
    if (window == 0) {
        double mean = 0.0, m2 = 0.0;
        std::uint64_t n = 0;
        for (const auto& rec : series) {
            ++n;
            const double d = rec.duration - mean;
            mean += d / static_cast<double>(n);
            m2 += d * (rec.duration - mean);
            out.push_back({rec.completion_seq, mean, std::sqrt(std::max(0.0, m2 / static_cast<double>(n)))});
        }
        return out;
    }
    std::deque<double> buf;
    double sum = 0.0, sumsq = 0.0;
    for (const auto& rec : series) {
        buf.push_back(rec.duration);
        sum += rec.duration;
        sumsq += rec.duration * rec.duration;
        if (buf.size() > window) {
            sum -= buf.front();
            sumsq -= buf.front() * buf.front();
            buf.pop_front();
        }
        const double n = static_cast<double>(buf.size());
        const double mean = sum / n;
        out.push_back({rec.completion_seq, mean, std::sqrt(std::max(0.0, sumsq / n - mean * mean))});
    }
    return out;
}

struct NodeCounters {
    std::uint64_t interests_received = 0;
    std::uint64_t hits = 0;
    std::uint64_t forwarded = 0;   // interests sent upstream
    std::uint64_t aggregated = 0;  // misses folded into an in-flight retrieval
    std::uint64_t decisions = 0;   // insertion decisions taken
    double decision_prob_sum = 0.0;
    std::uint64_t insertions = 0;
    std::uint64_t evictions = 0;

    double mean_decision_prob() const {
        return decisions ? decision_prob_sum / static_cast<double>(decisions) : 0.0;
    }
};

struct MetricsReport {
    std::string policy;
    std::uint64_t seed = 0;
    std::vector<std::string> node_names;
    std::vector<std::size_t> cache_nodes;  // indices into node_names, in topology order
    RankStats rank_stats;
    std::vector<NodeCounters> nodes;
    std::vector<DeliveryRecord> deliveries;
    std::vector<LinkStats> links;
    double elapsed = 0.0;
    std::uint64_t requests_issued = 0;
    bool truncated = false;  // stopped by the wall-clock cap

    double mean_delivery() const {
        if (deliveries.empty()) return 0.0;
        return running_stats(deliveries).back().mean;
    }
    double stddev_delivery() const {
        if (deliveries.empty()) return 0.0;
        return running_stats(deliveries).back().stddev;
    }
    /// Fraction of completed requests no cache could serve.
    double overall_miss() const {
        if (deliveries.empty()) return 0.0;
        std::uint64_t m = 0;
        for (const auto& d : deliveries) m += d.from_repository ? 1 : 0;
        return static_cast<double>(m) / static_cast<double>(deliveries.size());
    }
    /// Mean caching probability over every insertion decision at every cache.
    double mean_decision_prob() const {
        std::uint64_t n = 0;
        double s = 0.0;
        for (auto i : cache_nodes) {
            n += nodes[i].decisions;
            s += nodes[i].decision_prob_sum;
        }
        return n ? s / static_cast<double>(n) : 0.0;
    }
    double link_rho(std::size_t link) const { return elapsed > 0.0 ? link_load(links.at(link), elapsed) : 0.0; }
};

/// Quotes a CSV field when it contains a separator, quote or newline.
inline std::string csv_field(const std::string& v) {
    if (v.find_first_of(",\"\n") == std::string::npos) return v;
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

namespace detail {
inline std::ofstream open_csv(const std::filesystem::path& p) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("export_csv: cannot write " + p.string());
    return os;
}

inline void write_header_comment(std::ostream& os, const MetricsReport& r, const char* extra = nullptr) {
    os << "# lac-metrics schema=" << kCsvSchemaVersion << " seed=" << r.seed << " policy=" << r.policy;
    if (extra) os << ' ' << extra;
    os << '\n';
}
}  // namespace detail

/// Writes miss_prob.csv, delivery.csv, links.csv and summary.csv into `dir`.
inline std::vector<std::filesystem::path> export_csv(const MetricsReport& report, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("export_csv: cannot create " + dir.string() + ": " + ec.message());

    std::vector<fs::path> written;
    char buf[256];

    {
        auto path = dir / "miss_prob.csv";
        auto os = detail::open_csv(path);
        detail::write_header_comment(os, report);
        os << "node_id,rank,requests,misses,miss_ratio\n";
        for (auto node : report.cache_nodes) {
            for (Rank r : report.rank_stats.ranks(node)) {
                const auto c = report.rank_stats.get(node, r);
                const auto misses = c.requests - c.hits;
                std::snprintf(buf, sizeof buf, ",%u,%llu,%llu,%.6f\n", r,
                              static_cast<unsigned long long>(c.requests), static_cast<unsigned long long>(misses),
                              static_cast<double>(misses) / static_cast<double>(c.requests));
                os << csv_field(report.node_names[node]) << buf;
            }
        }
        written.push_back(path);
    }
    {
        auto path = dir / "delivery.csv";
        auto os = detail::open_csv(path);
        detail::write_header_comment(os, report, "stddev=population");
        os << "completion_seq,rank,duration,cum_mean,cum_stddev\n";
        if (!report.deliveries.empty()) {
            const auto run = running_stats(report.deliveries);
            for (std::size_t i = 0; i < run.size(); ++i) {
                const auto& d = report.deliveries[i];
                std::snprintf(buf, sizeof buf, "%llu,%u,%.6f,%.6f,%.6f\n",
                              static_cast<unsigned long long>(d.completion_seq), d.rank, d.duration, run[i].mean,
                              run[i].stddev);
                os << buf;
            }
        }
        written.push_back(path);
    }
    {
        auto path = dir / "links.csv";
        auto os = detail::open_csv(path);
        detail::write_header_comment(os, report);
        os << "link_id,bytes,rho\n";
        for (std::size_t i = 0; i < report.links.size(); ++i) {
            std::snprintf(buf, sizeof buf, ",%llu,%.6f\n", static_cast<unsigned long long>(report.links[i].bytes),
                          report.link_rho(i));
            os << csv_field(report.links[i].id) << buf;
        }
        written.push_back(path);
    }
    {
        auto path = dir / "summary.csv";
        auto os = detail::open_csv(path);
        detail::write_header_comment(os, report, "stddev=population");
        os << "policy,mean_delivery,stddev_delivery,overall_miss,mean_decision_prob\n";
        std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f\n", report.mean_delivery(), report.stddev_delivery(),
                      report.overall_miss(), report.mean_decision_prob());
        os << csv_field(report.policy) << buf;
        written.push_back(path);
    }
    return written;
}

}  // namespace lac
