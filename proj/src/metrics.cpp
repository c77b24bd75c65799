#include "puflab/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace puflab {

void ResponseSet::validate() const {
    if (challenges.empty()) throw std::invalid_argument("empty response set");
    if (bits.size() != challenges.size()) throw std::invalid_argument("one bit per challenge required");
    if (draws.size() != challenges.size()) throw std::invalid_argument("one draw index per challenge required");
    for (const auto b : bits)
        if (b > 1) throw std::invalid_argument("responses must be 0/1");
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(challenges.size());
    for (const auto& c : challenges)
        if (!seen.insert(c.bits).second)
            throw std::invalid_argument("challenges must be unique within a response set");
}

double uniformity(const ResponseSet& rs) {
    if (rs.bits.empty()) throw std::invalid_argument("empty response set");
    long sum = 0;
    for (const auto b : rs.bits) sum += b;
    return static_cast<double>(sum) / static_cast<double>(rs.bits.size());
}

std::vector<double> uniqueness_groups(const ResponseSet& a, const ResponseSet& b, int group_bits) {
    if (group_bits < 1) throw std::invalid_argument("group_bits must be positive");
    if (a.challenges.size() != b.challenges.size())
        throw std::invalid_argument("response sets must share the challenge list");
    for (std::size_t i = 0; i < a.challenges.size(); ++i)
        if (!(a.challenges[i] == b.challenges[i]))
            throw std::invalid_argument("response sets must share the challenge list");
    const std::size_t groups = a.bits.size() / static_cast<std::size_t>(group_bits);
    if (groups == 0) throw std::invalid_argument("need at least one full group");
    std::vector<double> out(groups);
    for (std::size_t gi = 0; gi < groups; ++gi) {
        int diff = 0;
        for (int j = 0; j < group_bits; ++j) {
            const std::size_t at = gi * static_cast<std::size_t>(group_bits) + j;
            diff += a.bits[at] != b.bits[at];
        }
        out[gi] = static_cast<double>(diff) / group_bits;
    }
    return out;
}

double uniqueness(const ResponseSet& a, const ResponseSet& b, int group_bits) {
    const auto groups = uniqueness_groups(a, b, group_bits);
    double sum = 0;
    for (const double v : groups) sum += v;
    return sum / static_cast<double>(groups.size());
}

BerReport bit_error_rate(const ResponseSet& enrolled,
                         const std::function<int(std::size_t, std::uint64_t)>& reeval,
                         const EnvironmentCondition& env, int evals) {
    if (evals < 1) throw std::invalid_argument("evals must be >= 1");
    env.validate();
    long long mismatches = 0;
    for (std::size_t i = 0; i < enrolled.challenges.size(); ++i)
        for (int e = 0; e < evals; ++e)
            mismatches += reeval(i, static_cast<std::uint64_t>(e)) != enrolled.bits[i];
    BerReport report;
    report.error_ratio = static_cast<double>(mismatches) /
                         (static_cast<double>(enrolled.challenges.size()) * evals);
    report.temperature = env.temperature;
    report.enrollment_env = enrolled.env;
    report.evals_per_challenge = evals;
    return report;
}

int auth_threshold(double ber, int n_crps) {
    return static_cast<int>(std::floor(n_crps * (1.0 - ber - 0.05) + 1e-9));
}

double exact_auth_failure(double ber, int n_crps, int threshold) {
    if (threshold <= 0) return 0.0;
    if (ber <= 0.0) return 0.0; // all responses correct
    const double p = 1.0 - ber; // success probability per CRP
    if (p <= 0.0) return threshold > 0 ? 1.0 : 0.0;
    // P(X < threshold), X ~ Binomial(n_crps, p), summed in log space
    double tail = 0;
    for (int k = 0; k < threshold && k <= n_crps; ++k) {
        const double logterm = std::lgamma(n_crps + 1.0) - std::lgamma(k + 1.0) -
                               std::lgamma(n_crps - k + 1.0) + k * std::log(p) +
                               (n_crps - k) * std::log1p(-p);
        tail += std::exp(logterm);
    }
    return std::min(1.0, tail);
}

AuthFailure auth_failure_probability(double ber, int n_crps, int threshold, long trials,
                                     std::uint64_t seed) {
    if (ber < 0 || ber > 1) throw std::invalid_argument("ber must be in [0,1]");
    if (threshold > n_crps) throw std::invalid_argument("threshold cannot exceed n_crps");
    AuthFailure out;
    out.exact = exact_auth_failure(ber, n_crps, threshold);
    const Rng rng(seed);
    long failures = 0;
    for (long t = 0; t < trials; ++t) {
        const Rng tr = rng.fork(static_cast<std::uint64_t>(t));
        int correct = 0;
        for (int i = 0; i < n_crps; ++i) correct += tr.uniform(static_cast<std::uint64_t>(i)) >= ber;
        failures += correct < threshold;
    }
    out.monte_carlo = trials > 0 ? static_cast<double>(failures) / static_cast<double>(trials) : 0.0;
    return out;
}

int required_crps(double ber, double target, int max_n) {
    // stable crossing: smallest n with P(fail) <= target for every n' >= n
    int smallest = -1;
    for (int n = max_n; n >= 1; --n) {
        const double p = exact_auth_failure(ber, n, auth_threshold(ber, n));
        if (p <= target) {
            smallest = n;
        } else {
            break;
        }
    }
    if (smallest < 0) throw std::runtime_error("failure target unreachable within max_n");
    return smallest;
}

double sample_std(const std::vector<double>& xs) {
    if (xs.size() < 2) throw std::invalid_argument("need at least two samples");
    double mean = 0;
    for (const double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double ss = 0;
    for (const double v : xs) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

} // namespace puflab
