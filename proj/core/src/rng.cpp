#include "pglab/rng.hpp"

#include "pglab/errors.hpp"

#include <cmath>

namespace pglab {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
}

} // namespace

std::uint64_t RngStream::next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
}

double RngStream::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
}

double RngStream::next_gaussian() {
    // Box-Muller; u clamped away from 0 so log stays finite.
    double u = next_unit();
    double v = next_unit();
    if (u <= 0.0) u = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

int RngStream::next_index(int n) {
    if (n <= 0) throw ContractViolation("next_index: n must be positive");
    return static_cast<int>((static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n)) >> 64);
}

int RngStream::sample_categorical(const Eigen::VectorXd& probabilities) {
    const double u = next_unit();
    double cumulative = 0.0;
    int last_positive = -1;
    for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
        const double p = probabilities(i);
        if (p > 0.0) last_positive = static_cast<int>(i);
        cumulative += p;
        if (u < cumulative) return static_cast<int>(i);
    }
    if (last_positive < 0) throw ContractViolation("sample_categorical: no positive mass");
    return last_positive;
}

RngStream derive_stream(std::uint64_t root_seed, std::uint64_t stream_index) {
    return RngStream(mix64(root_seed ^ mix64(stream_index + 0x9e3779b97f4a7c15ull)));
}

} // namespace pglab
