#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "puflab/dataset.hpp"
#include "puflab/mlp.hpp"

namespace puflab {

// Common result record for every attack. Wall time is the only field exempt
// from bit-for-bit determinism.
struct AttackReport {
    std::string attack_kind;   // lr | mlp | cmaes | fourier
    std::string architecture;  // apuf | nmq_ro | xor_nmq_ro
    int n = 0;
    int g = 0;
    int k = 1;
    std::size_t train_crps = 0;
    std::size_t test_crps = 0;
    double test_accuracy = 0;
    double wall_seconds = 0;
    std::uint64_t seed = 0;
    bool train_test_disjoint = false; // asserted at split time, recorded
    bool failure_flag = false;        // e.g. degenerate reliability fitness
    std::string notes;

    static std::string csv_header();
    std::string csv_row() const;
    std::string text() const;
};

struct SplitDataset {
    CrpDataset train;
    CrpDataset test;
    bool disjoint = false;
};

// Head/tail split; generation already dedups challenges, and disjointness is
// re-verified here rather than assumed.
SplitDataset split_dataset(const CrpDataset& ds, std::size_t test_count);

// prediction = 1 iff w . phi(c) < 0 (matches "top path faster" semantics of
// the additive delay model)
struct LinearModel {
    Eigen::VectorXd weights; // n+1 parity weights

    std::vector<std::uint8_t> predict(const std::vector<Challenge>& cs, int n) const;
};

struct LrConfig {
    double learning_rate = 0.1;
    int epochs = 100; // full batch
    std::uint64_t seed = 1;
};

struct LrOutcome {
    LinearModel model;
    AttackReport report;
};

LrOutcome train_logistic_regression(const SplitDataset& data, const LrConfig& cfg);

struct MlpAttackConfig {
    std::vector<int> hidden = {128, 128, 128, 128};
    typename Mlp<float>::TrainConfig train;
};

struct MlpOutcome {
    Mlp<float> model;
    AttackReport report;
};

MlpOutcome train_mlp_attack(const SplitDataset& data, const MlpAttackConfig& cfg);

// Reliability side channel: each training challenge is evaluated m times;
// reliability r = |2 * (fraction of ones) - 1|. CMA-ES searches parity
// weights maximizing the correlation between thresholded margin |w . phi|
// and r, with the threshold epsilon swept over a fixed quantile grid.
struct CmaesAttackConfig {
    int evals_per_challenge = 11;
    int max_generations = 300;
    int max_restarts = 3;
    std::uint64_t seed = 1;
};

struct CmaesOutcome {
    LinearModel model;
    AttackReport report;
};

// `reliabilities` aligned with data.train records (fraction of ones over m
// evaluations); response bits in the dataset are majority values.
CmaesOutcome cmaes_reliability_attack(const SplitDataset& data,
                                      const std::vector<double>& ones_fraction,
                                      const CmaesAttackConfig& cfg);

// Degree-d Fourier regression over the +/-1 challenge encoding: empirical
// coefficients for every subset of at most d bit positions; prediction is
// the sign of the truncated expansion.
struct FourierModel {
    int n = 0;
    int degree = 0;
    std::vector<std::vector<int>> subsets; // includes the empty set at index 0
    Eigen::VectorXd coefficients;

    std::vector<std::uint8_t> predict(const std::vector<Challenge>& cs, int n_bits) const;
};

struct FourierConfig {
    int degree = 2;
    std::size_t max_subsets = 200000; // reject configs whose subset count exceeds this
    std::uint64_t seed = 1;
};

struct FourierOutcome {
    FourierModel model;
    AttackReport report;
};

FourierOutcome fourier_low_degree_attack(const SplitDataset& data, const FourierConfig& cfg);

double evaluate_accuracy(const std::vector<std::uint8_t>& predictions, const CrpDataset& test);

// Repeated-evaluation capture for the reliability side channel: the dataset
// holds majority responses; ones_fraction[i] is the fraction of ones over
// the m evaluations of record i.
struct ReliabilityCapture {
    CrpDataset dataset;
    std::vector<double> ones_fraction;
};

ReliabilityCapture capture_reliability(const InstanceConfig& config, const GenerateSpec& spec,
                                       const EnvironmentCondition& env, int evals_per_challenge);

} // namespace puflab
