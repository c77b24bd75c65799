#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "puflab/entropy.hpp"

namespace puflab {

struct ResponseSet {
    std::string instance_id;
    std::vector<Challenge> challenges; // unique within the set
    std::vector<std::uint8_t> bits;    // one per challenge
    EnvironmentCondition env;
    std::vector<std::uint64_t> draws;  // noise draw index per challenge

    void validate() const;
};

// normalized Hamming weight
double uniformity(const ResponseSet& rs);

// Normalized Hamming distance between two instances' responses to the same
// challenge list, reported per 32-bit group; the trailing remainder that
// does not fill a group is dropped. The mean equals the plain NHD over the
// kept prefix - grouping only affects the reported distribution.
double uniqueness(const ResponseSet& a, const ResponseSet& b, int group_bits = 32);

// per-group distances, for inter-instance distance histograms
std::vector<double> uniqueness_groups(const ResponseSet& a, const ResponseSet& b, int group_bits = 32);

struct BerReport {
    double error_ratio = 0;
    double temperature = 20.0;
    EnvironmentCondition enrollment_env;
    int evals_per_challenge = 100;
};

// Re-evaluates every enrolled challenge `evals` times at env.temperature via
// the supplied evaluator (challenge index, draw) -> bit and counts mismatches
// against the enrolled bits. Enrollment must be a single evaluation at the
// enrollment temperature (no temporal majority voting).
BerReport bit_error_rate(const ResponseSet& enrolled,
                         const std::function<int(std::size_t, std::uint64_t)>& reeval,
                         const EnvironmentCondition& env, int evals = 100);

// Authentication with n_crps i.i.d. Bernoulli(1-ber) correct responses;
// failure = fewer than `threshold` correct.
struct AuthFailure {
    double monte_carlo = 0;
    double exact = 0; // binomial tail
};

AuthFailure auth_failure_probability(double ber, int n_crps, int threshold, long trials,
                                     std::uint64_t seed);

double exact_auth_failure(double ber, int n_crps, int threshold);

// floor(n_crps * (1 - ber - 0.05)): threshold sits 5% below the expected
// correct fraction. The tiny epsilon guards against binary-representation
// roundoff (200 * 0.85 evaluates below 170 in doubles).
int auth_threshold(double ber, int n_crps);

// Smallest n such that every n' >= n meets the failure target with the
// auth_threshold rule; the failure probability is sawtoothed in n by the
// integer threshold, so the first crossing alone is not stable.
int required_crps(double ber, double target, int max_n = 2000);

double sample_std(const std::vector<double>& xs); // unbiased (n-1)

} // namespace puflab
