#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "nitro/column.hpp"

namespace nitro {

//! Deterministic random source. All derived draws (bounded integers,
//! doubles) are implemented here so that a seed pins the exact stream on
//! every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    //! Uniform integer in [0, bound), bound > 0. Unbiased via rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = gen_();
            if (r >= threshold)
                return r % bound;
        }
    }

    //! Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 gen_;
};

//! Zipf distribution over ranks 1..n: P(r) proportional to r^-s.
//! Sampling inverts the cumulative distribution with a binary search over a
//! precomputed table (one double per rank).
class ZipfSampler {
public:
    ZipfSampler(std::size_t n, double s) : cdf_(n) {
        if (n == 0)
            throw std::invalid_argument("ZipfSampler: empty rank domain");
        double acc = 0.0;
        for (std::size_t r = 1; r <= n; ++r) {
            acc += std::pow(static_cast<double>(r), -s);
            cdf_[r - 1] = acc;
        }
        norm_ = acc;
        for (auto& c : cdf_)
            c /= norm_;
        s_ = s;
    }

    //! Probability of rank r (1-based). Sums to 1 over ranks.
    double pmf(std::size_t r) const {
        return std::pow(static_cast<double>(r), -s_) / norm_;
    }

    //! Draws a 1-based rank.
    std::size_t rank(Rng& rng) const {
        const double u = rng.uniform01();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end())
            --it;
        return static_cast<std::size_t>(it - cdf_.begin()) + 1;
    }

private:
    std::vector<double> cdf_;
    double norm_ = 1.0;
    double s_ = 1.0;
};

enum class Distribution { uniform, zipf };

//! Description of a query stream against a column. The same (column,
//! workload) pair always yields the same stream, bit for bit.
struct Workload {
    Distribution distribution = Distribution::uniform;
    double zipf_s = 1.0;         // skew parameter, zipf only
    std::size_t query_count = 0;
    double hit_fraction = 1.0;   // share of queries drawn from present keys
    std::uint64_t seed = 0;
};

//! Generates the query stream for a workload.
//!
//! Hit queries pick a rank from the distribution and map it through a
//! seed-derived shuffle of the column positions, so skewed ranks land on
//! keys scattered across the domain instead of clustering at the front.
//! Miss queries are drawn uniformly from values absent from the column.
inline std::vector<key_type> generate_queries(const SortedColumn& col, const Workload& w) {
    const std::size_t n = col.size();
    if (w.hit_fraction > 0.0 && n == 0)
        throw std::invalid_argument("generate_queries: hits requested from an empty column");
    if (w.hit_fraction < 0.0 || w.hit_fraction > 1.0)
        throw std::invalid_argument("generate_queries: hit_fraction outside [0, 1]");

    Rng rng(w.seed);
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    for (std::size_t i = n; i > 1; --i)
        std::swap(perm[i - 1], perm[rng.below(i)]);

    std::optional<ZipfSampler> zipf;
    if (w.distribution == Distribution::zipf && n > 0)
        zipf.emplace(n, w.zipf_s);

    std::vector<key_type> out;
    out.reserve(w.query_count);
    for (std::size_t q = 0; q < w.query_count; ++q) {
        const bool hit = n > 0 && w.hit_fraction > 0.0 &&
                         (w.hit_fraction >= 1.0 || rng.uniform01() < w.hit_fraction);
        if (hit) {
            const std::size_t r = zipf ? zipf->rank(rng) : rng.below(n) + 1;
            out.push_back(col.keys[perm[r - 1]]);
        } else {
            for (;;) {
                const auto cand = static_cast<key_type>(rng.below(max_sentinel));
                if (!std::binary_search(col.keys.begin(), col.keys.end(), cand)) {
                    out.push_back(cand);
                    break;
                }
            }
        }
    }
    return out;
}

} // namespace nitro
