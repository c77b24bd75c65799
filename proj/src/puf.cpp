#include "puflab/puf.hpp"

#include <cmath>
#include <stdexcept>

namespace puflab {

void XorComposition::validate() const {
    if (members.empty()) throw std::invalid_argument("xor composition needs at least one member");
    for (const auto& m : members) {
        if (m.entropy.n() != members.front().entropy.n())
            throw std::invalid_argument("xor members must share n");
        if (m.g != members.front().g) throw std::invalid_argument("xor members must share g");
    }
}

namespace {

// Per-stage element delay with drift and jitter; APUF shares the element
// model with the oscillators.
double element_delay(const EntropySource& src, Side side, int stage, int bit, double dt,
                     const NoiseModel& noise, const Rng* jitter) {
    double v = src.delay(side, stage, bit) * (1.0 + src.kappa(side, stage, bit) * dt);
    if (jitter) {
        const auto idx = static_cast<std::uint64_t>(static_cast<int>(side)) * src.n() + stage;
        v *= 1.0 + noise.sigma_rel * jitter->normal(idx);
    }
    return v;
}

} // namespace

ApufResult eval_apuf(const ApufInstance& inst, const Challenge& c, const EnvironmentCondition& env,
                     const NoiseModel& noise, std::uint64_t draw) {
    env.validate();
    const double dt = env.temperature - env.enrollment_temperature;
    const Rng jitter_rng = Rng(noise.rng_seed).fork(0).fork(draw);
    const Rng* jitter = noise.sigma_rel == 0.0 ? nullptr : &jitter_rng;

    // top/bottom arrival; challenge bit 1 swaps the incoming signals, side p
    // always drives the top output element of the stage
    double top = 0, bot = 0;
    for (int i = 0; i < inst.n; ++i) {
        const int bit = c.bit(i);
        const double dp = element_delay(inst.entropy, Side::p, i, bit, dt, noise, jitter);
        const double dq = element_delay(inst.entropy, Side::q, i, bit, dt, noise, jitter);
        if (bit == 0) {
            top += dp;
            bot += dq;
        } else {
            const double new_top = bot + dp;
            bot = top + dq;
            top = new_top;
        }
    }
    ApufResult r;
    r.delay_difference = top - bot;
    r.response = r.delay_difference < 0 ? 1 : 0; // tie resolves to 0
    return r;
}

QuantizerTrace eval_nmq_ro(const NmqRoInstance& inst, const Challenge& c,
                           const EnvironmentCondition& env, const NoiseModel& noise,
                           std::uint64_t draw, std::uint64_t member) {
    if (inst.g < 1) throw std::invalid_argument("g must be >= 1");
    const double dp = effective_delay(inst.entropy, c, Side::p, env, noise, draw, member);
    const double dq = effective_delay(inst.entropy, c, Side::q, env, noise, draw, member);
    if (dp <= 0 || dq <= 0) throw std::runtime_error("non-positive oscillator delay (broken config)");
    QuantizerTrace t;
    t.ratio = dp / dq;
    t.scaled = static_cast<double>(inst.g) * t.ratio;
    t.toggle_count = static_cast<long long>(std::floor(t.scaled));
    t.response = static_cast<int>(t.toggle_count & 1);
    return t;
}

OracleResult eval_nmq_ro_event_oracle(const NmqRoInstance& inst, const Challenge& c,
                                      const EnvironmentCondition& env, const NoiseModel& noise,
                                      std::uint64_t draw) {
    const double dp = effective_delay(inst.entropy, c, Side::p, env, noise, draw);
    const double dq = effective_delay(inst.entropy, c, Side::q, env, noise, draw);
    const double period_p = 2.0 * dp; // rising + falling traversal
    const double period_q = 2.0 * dq;

    // Advance whichever oscillator fires next; edge times are computed as
    // count * period rather than accumulated, so no drift over large g.
    long long edges_p = 0, edges_q = 0;
    while (edges_p < inst.g) {
        const double next_p = static_cast<double>(edges_p + 1) * period_p;
        const double next_q = static_cast<double>(edges_q + 1) * period_q;
        if (next_p <= next_q) {
            ++edges_p; // p-edge ties stop the counter before a simultaneous q-edge toggles
        } else {
            ++edges_q;
        }
    }
    OracleResult r;
    r.toggle_count = edges_q;
    r.response = static_cast<int>(edges_q & 1); // toggling bit starts at 0
    return r;
}

int eval_xor(const XorComposition& comp, const Challenge& c, const EnvironmentCondition& env,
             const NoiseModel& noise, std::uint64_t draw) {
    comp.validate();
    int acc = 0;
    for (std::size_t m = 0; m < comp.members.size(); ++m)
        acc ^= eval_nmq_ro(comp.members[m], c, env, noise, draw, m).response;
    return acc;
}

long long toggle_gap(const NmqRoInstance& inst, const Challenge& c, const EnvironmentCondition& env,
                     const NoiseModel& noise, std::uint64_t draw) {
    return inst.g - eval_nmq_ro(inst, c, env, noise, draw).toggle_count;
}

Eigen::VectorXd apuf_parity_weights(const EntropySource& src, double temperature,
                                    double enrollment_temperature) {
    const int n = src.n();
    const double dt = temperature - enrollment_temperature;
    Eigen::VectorXd a(n), b(n);
    for (int i = 0; i < n; ++i) {
        const double s = src.delay(Side::p, i, 0) * (1 + src.kappa(Side::p, i, 0) * dt) -
                         src.delay(Side::q, i, 0) * (1 + src.kappa(Side::q, i, 0) * dt);
        const double x = src.delay(Side::p, i, 1) * (1 + src.kappa(Side::p, i, 1) * dt) -
                         src.delay(Side::q, i, 1) * (1 + src.kappa(Side::q, i, 1) * dt);
        a[i] = 0.5 * (s + x);
        b[i] = 0.5 * (s - x);
    }
    // delay difference = w . phi with phi_i = prod_{j>=i}(1-2c_j), phi_n = 1
    Eigen::VectorXd w(n + 1);
    w[0] = b[0];
    for (int i = 1; i < n; ++i) w[i] = a[i - 1] + b[i];
    w[n] = a[n - 1];
    return w;
}

ApufInstance make_apuf(std::uint64_t seed, const InstanceConfig& config) {
    return {sample_entropy_source(seed, config), config.n};
}

NmqRoInstance make_nmq_ro(std::uint64_t seed, const InstanceConfig& config, int g) {
    return {sample_entropy_source(seed, config), g};
}

XorComposition make_xor(std::uint64_t seed, const InstanceConfig& config, int g, int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    XorComposition comp;
    comp.members.push_back(make_nmq_ro(seed, config, g));
    for (int m = 1; m < k; ++m)
        comp.members.push_back(make_nmq_ro(Rng(seed).fork(0x78726d62ULL + m).key(), config, g));
    return comp;
}

} // namespace puflab
