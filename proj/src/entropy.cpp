#include "puflab/entropy.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace puflab {

void InstanceConfig::validate() const {
    if (n < 1 || n > 64) throw std::invalid_argument("n must be in [1,64]");
    if (mu_ps <= 0) throw std::invalid_argument("mu_ps must be positive");
    if (sigma_p < 0) throw std::invalid_argument("sigma_p must be non-negative");
    if (overhead_ps < 0) throw std::invalid_argument("overhead_ps must be non-negative");
    if (kappa_sigma < 0) throw std::invalid_argument("kappa_sigma must be non-negative");
    if (sigma_rel < 0) throw std::invalid_argument("sigma_rel must be non-negative");
}

std::string InstanceConfig::describe() const {
    std::ostringstream os;
    os << "n=" << n << "\nmu_ps=" << mu_ps << "\nsigma_p=" << sigma_p
       << "\noverhead_ps=" << overhead_ps << "\nkappa_mean=" << kappa_mean
       << "\nkappa_sigma=" << kappa_sigma << "\nsigma_rel=" << sigma_rel << "\nseed=" << seed
       << "\n";
    return os.str();
}

InstanceConfig InstanceConfig::parse(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r\n");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!kv.emplace(key, value).second)
            throw std::invalid_argument("config: duplicate key '" + key + "'");
    }

    InstanceConfig cfg;
    const std::map<std::string, std::function<void(const std::string&)>> setters = {
        {"n", [&](const std::string& v) { cfg.n = std::stoi(v); }},
        {"mu_ps", [&](const std::string& v) { cfg.mu_ps = std::stod(v); }},
        {"sigma_p", [&](const std::string& v) { cfg.sigma_p = std::stod(v); }},
        {"overhead_ps", [&](const std::string& v) { cfg.overhead_ps = std::stod(v); }},
        {"kappa_mean", [&](const std::string& v) { cfg.kappa_mean = std::stod(v); }},
        {"kappa_sigma", [&](const std::string& v) { cfg.kappa_sigma = std::stod(v); }},
        {"sigma_rel", [&](const std::string& v) { cfg.sigma_rel = std::stod(v); }},
        {"seed", [&](const std::string& v) { cfg.seed = std::stoull(v); }},
    };
    for (const auto& [key, value] : kv) {
        const auto it = setters.find(key);
        if (it == setters.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
        it->second(value);
    }
    for (const auto& [key, setter] : setters)
        if (!kv.count(key)) throw std::invalid_argument("config: missing key '" + key + "'");
    cfg.validate();
    return cfg;
}

InstanceConfig InstanceConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    return parse(in);
}

void EnvironmentCondition::validate() const {
    if (temperature < min_temperature || temperature > max_temperature)
        throw std::invalid_argument("temperature outside configured simulation range");
    if (enrollment_temperature < min_temperature || enrollment_temperature > max_temperature)
        throw std::invalid_argument("enrollment temperature outside configured simulation range");
}

EntropySource::EntropySource(DelayTable dp, DelayTable dq, DelayTable kp, DelayTable kq,
                             double fixed_overhead)
    : delays_{std::move(dp), std::move(dq)}, kappas_{std::move(kp), std::move(kq)},
      fixed_overhead_(fixed_overhead) {
    if (delays_[0].rows() != delays_[1].rows() || delays_[0].rows() != kappas_[0].rows() ||
        delays_[0].rows() != kappas_[1].rows())
        throw std::invalid_argument("delay/kappa tables must share the stage count");
    for (int s = 0; s < 2; ++s)
        if ((delays_[s].array() <= 0.0).any())
            throw std::invalid_argument("nominal delays must be strictly positive");
    if (fixed_overhead_ < 0) throw std::invalid_argument("fixed overhead must be non-negative");
}

Eigen::VectorXd EntropySource::flatten() const {
    const int stages = n();
    Eigen::VectorXd theta(4 * stages + 1);
    Eigen::Index at = 0;
    for (int s = 0; s < 2; ++s)
        for (int i = 0; i < stages; ++i)
            for (int b = 0; b < 2; ++b) theta[at++] = delays_[s](i, b);
    theta[at] = fixed_overhead_;
    return theta;
}

EntropySource EntropySource::with_flattened(const Eigen::VectorXd& theta, double min_delay,
                                            int* clamped) const {
    const int stages = n();
    if (theta.size() != 4 * stages + 1)
        throw std::invalid_argument("flattened parameter vector has wrong length");
    int clamp_count = 0;
    auto take = [&](double v) {
        if (v < min_delay) {
            ++clamp_count;
            return min_delay;
        }
        return v;
    };
    DelayTable dp(stages, 2), dq(stages, 2);
    Eigen::Index at = 0;
    for (int i = 0; i < stages; ++i)
        for (int b = 0; b < 2; ++b) dp(i, b) = take(theta[at++]);
    for (int i = 0; i < stages; ++i)
        for (int b = 0; b < 2; ++b) dq(i, b) = take(theta[at++]);
    const double overhead = std::max(0.0, theta[at]);
    if (theta[at] < 0) ++clamp_count;
    if (clamped) *clamped = clamp_count;
    return EntropySource(std::move(dp), std::move(dq), kappas_[0], kappas_[1], overhead);
}

EntropySource sample_entropy_source(std::uint64_t seed, const InstanceConfig& config) {
    config.validate();
    const double mu = config.mu_ps * 1e-12;
    const double sigma = config.sigma_p * mu;
    const int stages = config.n;

    const Rng rng(seed);
    const Rng delay_rng = rng.fork(0);
    const Rng kappa_rng = rng.fork(1);

    EntropySource::DelayTable d[2] = {EntropySource::DelayTable(stages, 2),
                                      EntropySource::DelayTable(stages, 2)};
    EntropySource::DelayTable k[2] = {EntropySource::DelayTable(stages, 2),
                                      EntropySource::DelayTable(stages, 2)};
    for (int s = 0; s < 2; ++s)
        for (int i = 0; i < stages; ++i)
            for (int b = 0; b < 2; ++b) {
                const std::uint64_t idx =
                    static_cast<std::uint64_t>(s) * 2 * stages + 2 * static_cast<std::uint64_t>(i) + b;
                d[s](i, b) = config.sigma_p == 0 ? mu : positive_normal(delay_rng, idx, mu, sigma);
                k[s](i, b) = config.kappa_mean + config.kappa_sigma * kappa_rng.normal(idx);
            }
    return EntropySource(std::move(d[0]), std::move(d[1]), std::move(k[0]), std::move(k[1]),
                         config.overhead_ps * 1e-12);
}

double effective_delay(const EntropySource& src, const Challenge& c, Side side,
                       const EnvironmentCondition& env, const NoiseModel& noise,
                       std::uint64_t draw, std::uint64_t member) {
    env.validate();
    const int stages = src.n();
    const double dt = env.temperature - env.enrollment_temperature;
    const int s = static_cast<int>(side);

    double total = src.fixed_overhead();
    if (noise.sigma_rel == 0.0) {
        for (int i = 0; i < stages; ++i) {
            const int bit = c.bit(i);
            total += src.delay(side, i, bit) * (1.0 + src.kappa(side, i, bit) * dt);
        }
        return total;
    }
    const Rng jitter = Rng(noise.rng_seed).fork(member).fork(draw);
    for (int i = 0; i < stages; ++i) {
        const int bit = c.bit(i);
        const double eps = noise.sigma_rel * jitter.normal(static_cast<std::uint64_t>(s) * stages + i);
        total += src.delay(side, i, bit) * (1.0 + src.kappa(side, i, bit) * dt) * (1.0 + eps);
    }
    return total;
}

SelectedSums selected_sums(const EntropySource& src, Side side, double temperature,
                           double enrollment_temperature) {
    const int stages = src.n();
    const double dt = temperature - enrollment_temperature;
    SelectedSums out;
    out.base = src.fixed_overhead();
    out.diff.resize(stages);
    for (int i = 0; i < stages; ++i) {
        const double d0 = src.delay(side, i, 0) * (1.0 + src.kappa(side, i, 0) * dt);
        const double d1 = src.delay(side, i, 1) * (1.0 + src.kappa(side, i, 1) * dt);
        out.base += d0;
        out.diff[i] = d1 - d0;
    }
    return out;
}

} // namespace puflab
