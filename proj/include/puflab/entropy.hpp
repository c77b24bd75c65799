#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "puflab/challenge.hpp"
#include "puflab/rng.hpp"

namespace puflab {

// Instance-config file keys (line-oriented key=value). All keys required,
// unknown keys rejected.
struct InstanceConfig {
    int n = 64;
    double mu_ps = 10.0;
    double sigma_p = 0.04;      // process sigma, relative to mu
    double overhead_ps = 20.0;  // control-gate delay, = 2*mu by default
    double kappa_mean = 1e-3;   // 1/degC
    double kappa_sigma = 5e-5;  // 1/degC
    double sigma_rel = 0.0017;  // per-element per-evaluation relative jitter
    std::uint64_t seed = 1;

    void validate() const;
    std::string describe() const;

    static InstanceConfig parse(std::istream& in);
    static InstanceConfig parse_file(const std::string& path);
};

struct EnvironmentCondition {
    double temperature = 20.0;
    double enrollment_temperature = 20.0;
    double min_temperature = 0.0;
    double max_temperature = 50.0;

    void validate() const;
};

struct NoiseModel {
    double sigma_rel = 0.0017;
    std::uint64_t rng_seed = 0;
};

enum class Side : int { p = 0, q = 1 };

// Per-instance delay tables: two oscillators (sides p and q), n stages, two
// selectable elements per stage, one temperature coefficient per element,
// plus a challenge-independent control-gate overhead shared by both sides.
//
// Flattened parameter ordering (consumed by the sensitivity module):
//   [ d_p(0,0), d_p(0,1), d_p(1,0), ..., d_p(n-1,1),
//     d_q(0,0), ..., d_q(n-1,1), fixed_overhead ]     length 4n+1
class EntropySource {
  public:
    using DelayTable = Eigen::Matrix<double, Eigen::Dynamic, 2>;

    EntropySource(DelayTable dp, DelayTable dq, DelayTable kp, DelayTable kq, double fixed_overhead);

    int n() const { return static_cast<int>(delays_[0].rows()); }
    double delay(Side s, int stage, int bit) const { return delays_[static_cast<int>(s)](stage, bit); }
    double kappa(Side s, int stage, int bit) const { return kappas_[static_cast<int>(s)](stage, bit); }
    double fixed_overhead() const { return fixed_overhead_; }
    const DelayTable& delay_table(Side s) const { return delays_[static_cast<int>(s)]; }
    const DelayTable& kappa_table(Side s) const { return kappas_[static_cast<int>(s)]; }

    Eigen::VectorXd flatten() const;

    // Same kappa tables, delays/overhead replaced from a flattened vector.
    // Entries below min_delay are clamped; *clamped (if non-null) receives
    // the number of clamped entries.
    EntropySource with_flattened(const Eigen::VectorXd& theta, double min_delay = 1e-15,
                                 int* clamped = nullptr) const;

  private:
    std::array<DelayTable, 2> delays_;
    std::array<DelayTable, 2> kappas_;
    double fixed_overhead_;
};

EntropySource sample_entropy_source(std::uint64_t seed, const InstanceConfig& config);

// fixed_overhead + sum over stages of d[side][i][c_i] * (1 + kappa*(T - T_enroll)) * (1 + jitter),
// jitter ~ Normal(0, sigma_rel) addressed by (rng_seed, member, draw, side, stage).
// `member` distinguishes XOR composition members sharing one draw index.
double effective_delay(const EntropySource& src, const Challenge& c, Side side,
                       const EnvironmentCondition& env, const NoiseModel& noise,
                       std::uint64_t draw, std::uint64_t member = 0);

// Noiseless batch form: D(c) = base + C * diff for challenge matrix C
// (rows = challenges, entries in {0,1}), with temperature drift baked in.
struct SelectedSums {
    double base = 0;          // overhead + sum of bit-0 elements
    Eigen::VectorXd diff;     // per-stage (bit-1 minus bit-0) element

    double at(const Challenge& c) const {
        double v = base;
        for (int i = 0; i < diff.size(); ++i) v += c.bit(i) * diff[i];
        return v;
    }
};

SelectedSums selected_sums(const EntropySource& src, Side side, double temperature,
                           double enrollment_temperature);

} // namespace puflab
