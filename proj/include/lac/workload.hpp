#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lac/rng.hpp"

namespace lac {

using Rank = std::uint32_t;

/// Zipf popularity over a catalog of N objects: q(k) = c / k^alpha.
struct PopularityModel {
    double alpha = 0.0;
    std::uint32_t catalog_size = 0;
    double norm_c = 0.0;
    std::vector<double> weights;  // weights[k-1] = q(k)
    std::vector<double> cdf;      // cdf[k-1] = q(1) + ... + q(k), cdf.back() == 1

    double q(Rank k) const { return weights.at(k - 1); }

    /// Inverse CDF: smallest k with cdf(k) > u. u is expected in [0, 1).
    Rank rank_for_uniform(double u) const {
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end()) --it;
        return static_cast<Rank>(it - cdf.begin()) + 1;
    }
};

inline PopularityModel zipf_weights(std::uint32_t n, double alpha) {
    if (n == 0) throw std::domain_error("zipf_weights: catalog size must be >= 1");
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw std::domain_error("zipf_weights: alpha must be > 0");

    PopularityModel m;
    m.alpha = alpha;
    m.catalog_size = n;
    m.weights.resize(n);
    for (std::uint32_t k = 1; k <= n; ++k) m.weights[k - 1] = std::pow(static_cast<double>(k), -alpha);

    // Smallest terms first keeps the harmonic-type sum accurate for large N.
    double sum = 0.0;
    for (std::uint32_t k = n; k >= 1; --k) sum += m.weights[k - 1];
    m.norm_c = 1.0 / sum;
    for (auto& w : m.weights) w *= m.norm_c;

    m.cdf.resize(n);
    double acc = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
        acc += m.weights[i];
        m.cdf[i] = acc;
    }
    m.cdf.back() = 1.0;
    return m;
}

/// Draws a rank with probability q(k). Consumes exactly one uniform.
inline Rank sample_rank(const PopularityModel& model, RandomStream& rng) {
    return model.rank_for_uniform(rng.uniform());
}

/// Poisson request process of one user population.
struct RequestSource {
    double rate_lambda = 1.0;  // requests per second
    std::uint64_t rng_seed = 0;
    std::uint32_t user_id = 0;

    RandomStream make_stream() const { return RandomStream(rng_seed, user_id); }
};

/// Exponential inter-arrival time for a draw u in (0, 1); u -> 1 gives dt -> 0+.
inline double interarrival_for_uniform(double rate_lambda, double u) {
    return -std::log(u) / rate_lambda;
}

inline double next_interarrival(const RequestSource& src, RandomStream& rng) {
    if (!(src.rate_lambda > 0.0)) throw std::domain_error("next_interarrival: rate must be > 0");
    return interarrival_for_uniform(src.rate_lambda, rng.uniform_open());
}

}  // namespace lac
