#pragma once

// Closed-form models of a single LRU cache under probabilistic insertion
// (characteristic-time approximation, Poisson/IRM requests, Zipf popularity),
// plus the path latency formulas used to reason about networks of caches.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lac/workload.hpp"

namespace lac::analytics {

namespace detail {
inline std::atomic<std::uint64_t>& clamp_counter() {
    static std::atomic<std::uint64_t> n{0};
    return n;
}
}  // namespace detail

/// Number of model evaluations that landed outside [0,1] and were clamped.
inline std::uint64_t clamp_events() { return detail::clamp_counter().load(); }
inline void reset_clamp_events() { detail::clamp_counter().store(0); }

inline double clamp_probability(double v) {
    if (v < 0.0 || v > 1.0) {
        detail::clamp_counter().fetch_add(1, std::memory_order_relaxed);
        return v < 0.0 ? 0.0 : 1.0;
    }
    return v;
}

/// Probability of at least one Poisson(lambda_k) arrival within tau.
inline double phi(double lambda_k, double tau) {
    if (lambda_k < 0.0 || tau < 0.0) throw std::domain_error("phi: rate and window must be >= 0");
    return -std::expm1(-lambda_k * tau);
}

/// Move-to-front probability within a window: (1 - (1-p) pi) phi.
inline double mtf_prob(double pi, double p, double phi_value) {
    return clamp_probability((1.0 - (1.0 - p) * pi) * phi_value);
}

/// Steady-state miss probability of rank k when insertion happens with mean
/// probability mean_p and hits always move to front.
inline double miss_asym(double lambda_k, double tau, double mean_p) {
    if (!(mean_p > 0.0 && mean_p <= 1.0)) throw std::domain_error("miss_asym: mean_p must lie in (0,1]");
    if (tau < 0.0 || lambda_k < 0.0) throw std::domain_error("miss_asym: rate and tau must be >= 0");
    const double e = std::exp(-lambda_k * tau);
    return clamp_probability(e / (1.0 - (1.0 - e) * (1.0 - mean_p)));
}

/// Discrete distribution of per-object caching probabilities.
struct DecisionDistribution {
    std::vector<double> support;
    std::vector<double> masses;

    void validate() const {
        if (support.size() != masses.size() || support.empty())
            throw std::invalid_argument("DecisionDistribution: support and masses must be non-empty and aligned");
        double total = 0.0;
        for (std::size_t i = 0; i < support.size(); ++i) {
            if (support[i] < 0.0 || support[i] > 1.0)
                throw std::invalid_argument("DecisionDistribution: support value outside [0,1]");
            if (masses[i] < 0.0) throw std::invalid_argument("DecisionDistribution: negative mass");
            total += masses[i];
        }
        if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("DecisionDistribution: masses must sum to 1");
    }

    double mean() const {
        double m = 0.0;
        for (std::size_t i = 0; i < support.size(); ++i) m += support[i] * masses[i];
        return m;
    }

    static DecisionDistribution point(double u) { return {{u}, {1.0}}; }
};

/// Mean miss probability averaged over the decision distribution.
inline double miss_mixture(const DecisionDistribution& dist, double phi_value) {
    dist.validate();
    double sum = 0.0;
    for (std::size_t i = 0; i < dist.support.size(); ++i) {
        const double denom = 1.0 - phi_value * (1.0 - dist.support[i]);
        // u == 0 and phi == 1 is 0/0; the term tends to 1 (never admitted).
        const double term = denom > 0.0 ? (1.0 - phi_value) / denom : 1.0;
        sum += dist.masses[i] * term;
    }
    return clamp_probability(sum);
}

struct CheSolution {
    double tau_x = 0.0;
    double residual = 0.0;  // sum_k (1 - pi_k(tau_x)) - x
    int iterations = 0;
};

/// Expected number of cached objects at characteristic time tau.
inline double expected_occupancy(double tau, double lambda, std::span<const double> weights, double mean_p) {
    double s = 0.0;
    for (double q : weights) s += 1.0 - miss_asym(lambda * q, tau, mean_p);
    return s;
}

/// Characteristic time: the root in tau of sum_k (1 - pi_k(tau)) = x, by bisection.
inline CheSolution solve_tau(std::uint32_t x, double lambda, std::span<const double> weights, double mean_p) {
    if (x < 1 || x >= weights.size())
        throw std::domain_error("solve_tau: need 1 <= x < N, otherwise no finite root");
    if (!(lambda > 0.0)) throw std::domain_error("solve_tau: lambda must be > 0");
    if (!(mean_p > 0.0 && mean_p <= 1.0)) throw std::domain_error("solve_tau: mean_p must lie in (0,1]");

    const double target = static_cast<double>(x);
    auto g = [&](double tau) { return expected_occupancy(tau, lambda, weights, mean_p) - target; };

    double lo = 0.0;
    double hi = 1.0;
    while (g(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw std::domain_error("solve_tau: failed to bracket the root");
    }
    if (!(g(lo) < 0.0 && g(hi) >= 0.0)) throw std::logic_error("solve_tau: bracket has no sign change");

    CheSolution sol;
    constexpr double kTolerance = 1e-9;
    constexpr int kMaxIterations = 200;
    while (sol.iterations < kMaxIterations && hi - lo > kTolerance) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        (g(mid) < 0.0 ? lo : hi) = mid;
        ++sol.iterations;
    }
    sol.tau_x = lo + 0.5 * (hi - lo);
    sol.residual = g(sol.tau_x);
    return sol;
}

inline CheSolution solve_tau(std::uint32_t x, double lambda, const PopularityModel& model, double mean_p) {
    return solve_tau(x, lambda, std::span<const double>(model.weights), mean_p);
}

inline double gamma_fn(double z) { return std::tgamma(z); }

inline void require_heavy_tail(double alpha, const char* who) {
    if (!(alpha > 1.0)) throw std::domain_error(std::string(who) + ": alpha must be > 1");
}

/// Miss probability of rank k under the symmetric policy (independent of p).
inline double miss_sym(double k, double x, double alpha) {
    require_heavy_tail(alpha, "miss_sym");
    if (!(k >= 1.0 && x >= 1.0)) throw std::domain_error("miss_sym: k and x must be >= 1");
    const double g = std::pow(gamma_fn(1.0 - 1.0 / alpha), alpha);
    return clamp_probability(std::exp(-std::pow(x, alpha) / (std::pow(k, alpha) * g)));
}

/// Characteristic time of the symmetric policy.
inline double tau_sym(double x, double lambda, double c, double mean_p, double alpha) {
    require_heavy_tail(alpha, "tau_sym");
    if (!(mean_p > 0.0)) throw std::domain_error("tau_sym: mean_p must be > 0");
    return std::pow(x, alpha) / (lambda * c * mean_p * std::pow(gamma_fn(1.0 - 1.0 / alpha), alpha));
}

/// Count of top ranks whose symmetric-policy miss probability stays below eps.
inline double eta_sym(double x, double alpha, double eps) {
    require_heavy_tail(alpha, "eta_sym");
    if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("eta_sym: eps must lie in (0,1)");
    return x / (gamma_fn(1.0 - 1.0 / alpha) * std::pow(-std::log(eps), 1.0 / alpha));
}

/// Same count for the asymmetric policy, given its characteristic time.
inline double eta_asym(double lambda, double c, double tau_asym, double mean_p, double eps, double alpha) {
    if (!(lambda > 0.0 && c > 0.0 && tau_asym > 0.0 && alpha > 0.0))
        throw std::domain_error("eta_asym: lambda, c, tau and alpha must be > 0");
    if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("eta_asym: eps must lie in (0,1)");
    if (!(mean_p > 0.0 && mean_p <= 1.0)) throw std::domain_error("eta_asym: mean_p must lie in (0,1]");
    const double denom = std::log1p((1.0 / mean_p) * (1.0 / eps - 1.0));
    return std::pow(lambda * c * tau_asym / denom, 1.0 / alpha);
}

/// One user-to-repository path: R(i) and per-node miss probabilities; the
/// last node is the repository and must have miss probability 0.
struct PathModel {
    std::vector<double> rtts;
    std::vector<double> miss_probs;
};

/// Weight of node i (0-based) being the first hit along the path.
inline std::vector<double> first_hit_weights(const PathModel& path) {
    if (path.rtts.size() != path.miss_probs.size() || path.rtts.empty())
        throw std::invalid_argument("PathModel: rtts and miss_probs must be non-empty and aligned");
    std::vector<double> w(path.rtts.size());
    double reach = 1.0;  // product of misses before i
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double m = path.miss_probs[i];
        if (m < 0.0 || m > 1.0) throw std::invalid_argument("PathModel: miss probability outside [0,1]");
        w[i] = reach * (1.0 - m);
        total += w[i];
        reach *= m;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw std::invalid_argument("PathModel: first-hit weights do not sum to 1 (repository must never miss)");
    return w;
}

/// Residual virtual round trip time seen from node `l` (1-based).
inline double rvrtt(const PathModel& path, std::size_t l) {
    const auto w = first_hit_weights(path);
    if (l < 1 || l > w.size()) throw std::out_of_range("rvrtt: node index out of range");
    double s = 0.0;
    for (std::size_t i = l - 1; i < w.size(); ++i) s += path.rtts[i] * w[i];
    return s;
}

inline double vrtt(const PathModel& path) { return rvrtt(path, 1); }

struct ModelRow {
    std::uint32_t rank;
    double mean_p;
    double pi;
    double tau_x;
};

/// Miss probability per rank for each mean insertion probability, in the
/// layout of the model curves CSV (rank, mean_p, pi, tau_x).
inline std::vector<ModelRow> fig1_grid(std::uint32_t x, const PopularityModel& model, double lambda,
                                       std::span<const double> mean_p_list, std::uint32_t max_rank) {
    max_rank = std::min(max_rank, model.catalog_size);
    std::vector<ModelRow> rows;
    rows.reserve(static_cast<std::size_t>(max_rank) * mean_p_list.size());
    for (double p : mean_p_list) {
        const auto sol = solve_tau(x, lambda, model, p);
        for (std::uint32_t k = 1; k <= max_rank; ++k)
            rows.push_back({k, p, miss_asym(lambda * model.q(k), sol.tau_x, p), sol.tau_x});
    }
    return rows;
}

inline void write_model_csv(std::ostream& os, std::span<const ModelRow> rows) {
    os << "rank,mean_p,pi,tau_x\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%u,%.6g,%.9f,%.9f\n", r.rank, r.mean_p, r.pi, r.tau_x);
        os << buf;
    }
}

}  // namespace lac::analytics
