#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lac/rng.hpp"
#include "lac/workload.hpp"

namespace lac {

/// Raised when a data packet shows up that nothing is waiting for.
class ProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class MtfMode {
    AsymmetricMissOnly,   // stochastic decision on insertion only, hits always move to front
    SymmetricHitAndMiss,  // the same decision law gates insertion and move-to-front on hit
};

struct InsertionPolicy {
    enum class Kind { Always, FixedProb, LatencyAware };

    Kind kind = Kind::Always;
    double p = 1.0;      // FixedProb
    double beta = 0.0;   // LatencyAware exponent on the measured latency
    double gamma = 0.0;  // LatencyAware exponent on the running mean
    MtfMode mode = MtfMode::AsymmetricMissOnly;

    static InsertionPolicy always() { return {}; }

    static InsertionPolicy fixed_prob(double p, MtfMode mode = MtfMode::AsymmetricMissOnly) {
        InsertionPolicy pol;
        pol.kind = Kind::FixedProb;
        pol.p = p;
        pol.mode = mode;
        pol.validate();
        return pol;
    }

    static InsertionPolicy latency_aware(double beta, double gamma,
                                         MtfMode mode = MtfMode::AsymmetricMissOnly) {
        InsertionPolicy pol;
        pol.kind = Kind::LatencyAware;
        pol.beta = beta;
        pol.gamma = gamma;
        pol.mode = mode;
        pol.validate();
        return pol;
    }

    void validate() const {
        if (kind == Kind::FixedProb && !(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("insertion policy: p must lie in [0,1]");
        if (kind == Kind::LatencyAware && !(beta >= 0.0 && gamma >= 0.0))
            throw std::invalid_argument("insertion policy: beta and gamma must be >= 0");
    }

    bool symmetric() const { return mode == MtfMode::SymmetricHitAndMiss; }

    /// Short label in the same syntax the command line accepts.
    std::string label() const {
        char buf[96];
        switch (kind) {
            case Kind::Always:
                return symmetric() ? "sym:1" : "lru";
            case Kind::FixedProb:
                std::snprintf(buf, sizeof buf, "%s:%g", symmetric() ? "sym" : "lcp", p);
                return buf;
            case Kind::LatencyAware:
                std::snprintf(buf, sizeof buf, "%s:%g,%g", symmetric() ? "sym-la" : "lac", beta, gamma);
                return buf;
        }
        return "?";
    }
};

/// Fixed-capacity LRU list with O(1) lookup, move-to-front, insert and evict.
/// Each entry carries the retrieval latency it was admitted with, which the
/// symmetric latency-aware mode reuses for its hit-time decision.
class LruCache {
public:
    explicit LruCache(std::size_t capacity) : capacity_(capacity) {
        slots_.reserve(capacity);
        index_.reserve(capacity * 2 + 1);
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t occupancy() const { return index_.size(); }
    bool contains(Rank r) const { return index_.count(r) != 0; }

    /// Admission latency stored with `r`, or nullopt when absent.
    std::optional<double> cost(Rank r) const {
        auto it = index_.find(r);
        if (it == index_.end()) return std::nullopt;
        return slots_[it->second].cost;
    }

    /// Moves a present entry to the front. Returns false if absent.
    bool move_to_front(Rank r) {
        auto it = index_.find(r);
        if (it == index_.end()) return false;
        unlink(it->second);
        link_front(it->second);
        return true;
    }

    /// Inserts an absent rank at the front; returns the evicted tail if full.
    /// A zero-capacity cache stores nothing and reports the rank itself as evicted.
    std::optional<Rank> insert(Rank r, double cost = 0.0) {
        if (contains(r)) throw std::logic_error("LruCache::insert: rank already present");
        if (capacity_ == 0) return r;

        std::optional<Rank> evicted;
        std::uint32_t slot;
        if (index_.size() == capacity_) {
            slot = tail_;
            evicted = slots_[slot].rank;
            unlink(slot);
            index_.erase(slots_[slot].rank);
        } else {
            slot = static_cast<std::uint32_t>(slots_.size());
            slots_.push_back({});
        }
        slots_[slot].rank = r;
        slots_[slot].cost = cost;
        link_front(slot);
        index_.emplace(r, slot);
        return evicted;
    }

    /// Ranks front (most recent) to back.
    std::vector<Rank> entries() const {
        std::vector<Rank> out;
        out.reserve(index_.size());
        for (auto s = head_; s != kNil; s = slots_[s].next) out.push_back(slots_[s].rank);
        return out;
    }

private:
    static constexpr std::uint32_t kNil = 0xffffffffu;

    struct Slot {
        Rank rank = 0;
        double cost = 0.0;
        std::uint32_t prev = kNil;
        std::uint32_t next = kNil;
    };

    void unlink(std::uint32_t s) {
        auto& n = slots_[s];
        if (n.prev != kNil) slots_[n.prev].next = n.next; else head_ = n.next;
        if (n.next != kNil) slots_[n.next].prev = n.prev; else tail_ = n.prev;
        n.prev = n.next = kNil;
    }

    void link_front(std::uint32_t s) {
        slots_[s].prev = kNil;
        slots_[s].next = head_;
        if (head_ != kNil) slots_[head_].prev = s;
        head_ = s;
        if (tail_ == kNil) tail_ = s;
    }

    std::size_t capacity_;
    std::vector<Slot> slots_;
    std::unordered_map<Rank, std::uint32_t> index_;
    std::uint32_t head_ = kNil;
    std::uint32_t tail_ = kNil;
};

/// Per-node latency bookkeeping: forward timestamps of in-flight retrievals and
/// the running mean f of the latencies of every object admitted so far.
class LatencyEstimator {
public:
    using Key = std::uint64_t;

    /// Appends `packets` forward timestamps at `now` for `key`.
    void record_forward(Key key, double now, std::uint32_t packets = 1) {
        if (packets == 0) return;
        auto& q = inflight_[key];
        if (!q.empty() && q.back().time == now) {
            q.back().remaining += packets;
        } else {
            q.push_back({now, packets});
        }
    }

    /// Latency of one returning packet, matched FIFO against the forward
    /// timestamps of `key`. The matched timestamp is consumed.
    double measure_delta_t(Key key, double now) {
        auto it = inflight_.find(key);
        if (it == inflight_.end() || it->second.empty())
            throw ProtocolError("measure_delta_t: data received with no recorded forward");
        auto& q = it->second;
        const double sent = q.front().time;
        if (--q.front().remaining == 0) q.pop_front();
        if (q.empty()) inflight_.erase(it);
        return now - sent;
    }

    /// f <- (f*m + dt)/(m+1), m <- m+1. Call on positive decisions only.
    void update(double delta_t) {
        ++cached_count_;
        mean_f_ += (delta_t - mean_f_) / static_cast<double>(cached_count_);
    }

    double mean_f() const { return mean_f_; }
    std::uint64_t cached_count() const { return cached_count_; }
    bool has_inflight(Key key) const { return inflight_.count(key) != 0; }
    std::size_t inflight_keys() const { return inflight_.size(); }

    /// Test hook; the simulator never sets the estimator directly.
    void reset(double mean_f, std::uint64_t cached_count) {
        mean_f_ = mean_f;
        cached_count_ = cached_count;
    }

private:
    struct Stamp {
        double time;
        std::uint32_t remaining;
    };

    double mean_f_ = 0.0;
    std::uint64_t cached_count_ = 0;
    std::unordered_map<Key, std::deque<Stamp>> inflight_;
};

/// Mean of the per-packet latencies of one object retrieval.
struct ObjectLatency {
    double sum = 0.0;
    std::uint32_t count = 0;

    void add(double dt) {
        sum += dt;
        ++count;
    }
    double mean() const { return count ? sum / count : 0.0; }
};

struct Decision {
    bool decision = false;
    double prob_used = 0.0;
};

/// Caching probability of `policy` for an object retrieved in `delta_t`.
inline double insertion_probability(const InsertionPolicy& policy, double delta_t,
                                    const LatencyEstimator& est) {
    switch (policy.kind) {
        case InsertionPolicy::Kind::Always:
            return 1.0;
        case InsertionPolicy::Kind::FixedProb:
            return policy.p;
        case InsertionPolicy::Kind::LatencyAware: {
            if (est.cached_count() == 0) return 1.0;  // bootstrap: seed f with real data
            if (!(est.mean_f() > 0.0))
                throw std::logic_error("decide_insertion: running mean latency is zero after admissions");
            const double ratio = std::pow(delta_t, policy.beta) / std::pow(est.mean_f(), policy.gamma);
            return std::min(ratio, 1.0);
        }
    }
    return 1.0;
}

inline Decision decide_insertion(const InsertionPolicy& policy, double delta_t,
                                 const LatencyEstimator& est, RandomStream& rng) {
    if (delta_t < 0.0) throw std::invalid_argument("decide_insertion: negative latency");
    if (policy.kind == InsertionPolicy::Kind::Always) return {true, 1.0};
    const double prob = insertion_probability(policy, delta_t, est);
    return {rng.uniform() < prob, prob};
}

enum class LookupResult { Hit, Miss };

/// Cache lookup with the policy's move-to-front semantics. A miss leaves the
/// cache untouched; insertion is the caller's business once data returns.
inline LookupResult lookup(LruCache& cache, Rank rank, const InsertionPolicy& policy,
                           const LatencyEstimator& est, RandomStream& rng) {
    auto stored = cache.cost(rank);
    if (!stored) return LookupResult::Miss;
    if (!policy.symmetric()) {
        cache.move_to_front(rank);
        return LookupResult::Hit;
    }
    // Symmetric: the hit-time move is gated by the insertion law, using the
    // latency the entry was admitted with. A failed draw leaves it in place.
    if (decide_insertion(policy, *stored, est, rng).decision) cache.move_to_front(rank);
    return LookupResult::Hit;
}

}  // namespace lac
