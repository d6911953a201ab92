#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string_view>
#include <vector>

namespace pglab {

/// Incremental 64-bit content hash (FNV-1a over a canonical byte stream).
/// Doubles are hashed by their IEEE-754 bit pattern, so fingerprints are
/// exact: two tables collide only if they are bit-identical (or by hash
/// accident). Used to detect critic/baseline pairing mistakes, not for
/// security.
class Fingerprint {
public:
    Fingerprint& add(std::uint64_t value);
    Fingerprint& add(std::int64_t value) { return add(static_cast<std::uint64_t>(value)); }
    Fingerprint& add(int value) { return add(static_cast<std::uint64_t>(static_cast<std::int64_t>(value))); }
    Fingerprint& add(double value);
    Fingerprint& add(std::string_view text);
    Fingerprint& add(const Eigen::MatrixXd& m);
    Fingerprint& add(const Eigen::VectorXd& v);
    Fingerprint& add(const std::vector<bool>& flags);

    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;

    void mix_bytes(const unsigned char* data, std::size_t n);
};

} // namespace pglab
