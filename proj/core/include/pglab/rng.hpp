#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace pglab {

/// Small counter-derived random stream (splitmix64 core). Streams derived
/// from the same root seed and index are identical across runs and
/// platforms, which is what makes every generator and estimator in this
/// library a pure function of its seed. Statistical quality is ample for
/// desk-scale Monte Carlo; this is not a cryptographic generator.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit();

    double next_uniform(double lo, double hi);

    /// Standard normal via Box-Muller (consumes two uniforms).
    double next_gaussian();

    /// Uniform index in [0, n).
    int next_index(int n);

    /// Sample an index from a probability vector by inverse CDF.
    /// Falls back to the last positive entry if rounding leaves the
    /// cumulative sum short of the draw.
    int sample_categorical(const Eigen::VectorXd& probabilities);

private:
    std::uint64_t state_;
};

/// Derive the stream for `stream_index` under `root_seed`. Independent of
/// how many draws other streams consumed, so episodes can be simulated in
/// any order (or in parallel) without changing results.
RngStream derive_stream(std::uint64_t root_seed, std::uint64_t stream_index);

} // namespace pglab
