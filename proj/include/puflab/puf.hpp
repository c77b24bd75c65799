#pragma once

#include <cstdint>
#include <vector>

#include "puflab/entropy.hpp"

namespace puflab {

// Arbiter PUF over the same entropy source: side p elements feed the top
// arbiter input, side q the bottom; challenge bit 1 crosses the incoming
// signals (standard additive delay model with path swapping). Response is
// 1 iff the top signal arrives first; an exact tie resolves to 0.
struct ApufInstance {
    EntropySource entropy;
    int n;
};

struct NmqRoInstance {
    EntropySource entropy;
    int g; // trap counter final value
};

// XOR of k independent NMQ-RO members sharing n and g; the same challenge is
// broadcast to every member.
struct XorComposition {
    std::vector<NmqRoInstance> members;

    int k() const { return static_cast<int>(members.size()); }
    void validate() const;
};

struct QuantizerTrace {
    double ratio = 0;        // D_p / D_q
    double scaled = 0;       // g * ratio
    long long toggle_count = 0;
    int response = 0;        // LSB(floor(scaled))
};

struct ApufResult {
    int response = 0;
    double delay_difference = 0; // top minus bottom arrival
};

ApufResult eval_apuf(const ApufInstance& inst, const Challenge& c, const EnvironmentCondition& env,
                     const NoiseModel& noise, std::uint64_t draw);

QuantizerTrace eval_nmq_ro(const NmqRoInstance& inst, const Challenge& c,
                           const EnvironmentCondition& env, const NoiseModel& noise,
                           std::uint64_t draw, std::uint64_t member = 0);

// Discrete-event validation oracle: both oscillators start phase-aligned at
// t=0 (first rising edge after one full period, period = 2 * propagation
// delay, toggling bit initially 0); p's counter stops the system at its g-th
// rising edge; the response is the parity of q's rising-edge count.
struct OracleResult {
    int response = 0;
    long long toggle_count = 0;
};

OracleResult eval_nmq_ro_event_oracle(const NmqRoInstance& inst, const Challenge& c,
                                      const EnvironmentCondition& env, const NoiseModel& noise,
                                      std::uint64_t draw);

int eval_xor(const XorComposition& comp, const Challenge& c, const EnvironmentCondition& env,
             const NoiseModel& noise, std::uint64_t draw);

// g minus toggle count from the closed-form trace (stability margin proxy)
long long toggle_gap(const NmqRoInstance& inst, const Challenge& c, const EnvironmentCondition& env,
                     const NoiseModel& noise, std::uint64_t draw);

// Linear arbiter weights: delay difference = w . parity_features(c), with
// w derived from the stage delay tables. Used by the sensitivity fast path
// and by tests; attacks must learn w from CRPs only.
Eigen::VectorXd apuf_parity_weights(const EntropySource& src, double temperature,
                                    double enrollment_temperature);

// Convenience constructors from config seeds
ApufInstance make_apuf(std::uint64_t seed, const InstanceConfig& config);
NmqRoInstance make_nmq_ro(std::uint64_t seed, const InstanceConfig& config, int g);
// member i is sampled from seed fork i; a 1-XOR is bit-identical to the
// plain instance with the same seed
XorComposition make_xor(std::uint64_t seed, const InstanceConfig& config, int g, int k);

} // namespace puflab
