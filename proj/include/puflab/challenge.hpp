#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "puflab/rng.hpp"

namespace puflab {

// A challenge is up to 64 bits packed LSB-first: bit i selects the delay
// element of stage i.
struct Challenge {
    std::uint64_t bits = 0;

    int bit(int i) const { return static_cast<int>((bits >> i) & 1u); }

    friend bool operator==(const Challenge&, const Challenge&) = default;
};

inline std::vector<Challenge> random_challenges(const Rng& rng, std::size_t count, int n) {
    if (n < 1 || n > 64) throw std::invalid_argument("challenge width must be in [1,64]");
    std::vector<Challenge> out(count);
    const std::uint64_t mask = (n == 64) ? ~0ULL : ((1ULL << n) - 1);
    for (std::size_t i = 0; i < count; ++i) out[i].bits = rng.bits(i) & mask;
    return out;
}

// rows = challenges, cols = stages, entries in {0,1}
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
challenge_matrix(const std::vector<Challenge>& cs, int n) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(cs.size(), n);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (int c = 0; c < n; ++c) m(r, c) = static_cast<Scalar>(cs[r].bit(c));
    return m;
}

// Parity features of the additive-delay model: phi_i = prod_{j>=i} (1-2c_j)
// for i in [0,n), plus a constant phi_n = 1. Arbiter responses are linear in
// these features, which is what the logistic-regression attack exploits.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
parity_features(const std::vector<Challenge>& cs, int n) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(cs.size(), n + 1);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Scalar acc = 1;
        m(r, n) = 1;
        for (int i = n - 1; i >= 0; --i) {
            acc *= static_cast<Scalar>(1 - 2 * cs[r].bit(i));
            m(r, i) = acc;
        }
    }
    return m;
}

} // namespace puflab
