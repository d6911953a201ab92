#include "pglab/fingerprint.hpp"

#include <cstring>

namespace pglab {

namespace {
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;
}

void Fingerprint::mix_bytes(const unsigned char* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        state_ ^= data[i];
        state_ *= kFnvPrime;
    }
}

Fingerprint& Fingerprint::add(std::uint64_t value) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
    mix_bytes(buf, 8);
    return *this;
}

Fingerprint& Fingerprint::add(double value) {
    std::uint64_t bits = 0;
    static_assert(sizeof(bits) == sizeof(value));
    std::memcpy(&bits, &value, sizeof(bits));
    return add(bits);
}

Fingerprint& Fingerprint::add(std::string_view text) {
    add(static_cast<std::uint64_t>(text.size()));
    mix_bytes(reinterpret_cast<const unsigned char*>(text.data()), text.size());
    return *this;
}

Fingerprint& Fingerprint::add(const Eigen::MatrixXd& m) {
    add(static_cast<std::uint64_t>(m.rows()));
    add(static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) add(m(r, c));
    return *this;
}

Fingerprint& Fingerprint::add(const Eigen::VectorXd& v) {
    add(static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) add(v(i));
    return *this;
}

Fingerprint& Fingerprint::add(const std::vector<bool>& flags) {
    add(static_cast<std::uint64_t>(flags.size()));
    for (bool f : flags) add(static_cast<std::uint64_t>(f ? 1 : 0));
    return *this;
}

} // namespace pglab
