#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "puflab/puf.hpp"

namespace puflab {

// Two random directions in flattened entropy-source space, entries
// Normal(0,1) scaled per-parameter by |theta_i| (relative perturbation).
// For XOR targets the vectors span the concatenated member parameters;
// entries are addressed by (seed, member, parameter index), so member j's
// block is identical across all compositions containing it.
struct DirectionPair {
    Eigen::VectorXd delta;
    Eigen::VectorXd eta;
    std::uint64_t seed = 0;
};

// theta per member, concatenated member-major
DirectionPair random_directions(const std::vector<EntropySource>& members, std::uint64_t seed);

enum class SurfaceKind { apuf, nmq_ro, xor_nmq_ro };

struct GridSpec {
    double alpha_min = -0.25, alpha_max = 0.25;
    double beta_min = -0.25, beta_max = 0.25;
    int resolution = 51;      // >= 3
    std::size_t challenges = 10000; // >= 1000
};

struct SensitivityGrid {
    std::vector<double> alphas;
    std::vector<double> betas;
    Eigen::MatrixXd f;        // f(i,j) = uniqueness at (alphas[i], betas[j])
    std::size_t challenges = 0;
    int clamp_warnings = 0;   // delay entries clamped to the positive floor

    double grid_mean() const { return f.mean(); }
    double boundary_ring_mean() const;
    int count_below(double threshold) const;
};

// f(alpha,beta) = uniqueness between the base instance and the instance with
// flattened parameters theta0 + alpha*delta + beta*eta, evaluated noiselessly
// at the enrollment temperature over a shared seeded challenge set.
// For XOR kinds, `members` holds k sources and g applies to every member;
// for APUF, g is ignored.
SensitivityGrid uniqueness_surface(const std::vector<EntropySource>& members, SurfaceKind kind,
                                   int g, const DirectionPair& dirs, const GridSpec& spec,
                                   std::uint64_t challenge_seed);

// The six shipped contour presets: APUF, 5-XOR-APUF and NMQ-RO g=800 on
// [-0.25,0.25]^2, then NMQ-RO g=200, 2-XOR and 3-XOR (g=200) on the 5x
// narrower [-0.05,0.05]^2.
struct SurfacePreset {
    std::string name;
    SurfaceKind kind;
    int g;
    int k;
    double range;
};

const std::vector<SurfacePreset>& fig10_presets();

SensitivityGrid run_preset(const SurfacePreset& preset, const InstanceConfig& config,
                           std::uint64_t instance_seed, std::uint64_t direction_seed,
                           const GridSpec& overrides);

// Ordering statistic behind the "XOR increases sensitivity" property: grid
// means of f at matched radius 0.05 for single / 2-XOR / 3-XOR NMQ-RO g=200
// with nested members and shared challenges.
struct OrderingTrial {
    double mean_single = 0, mean_xor2 = 0, mean_xor3 = 0;
    bool satisfied() const { return mean_xor3 >= mean_xor2 && mean_xor2 >= mean_single; }
};

OrderingTrial ordering_trial(const InstanceConfig& config, std::uint64_t instance_seed,
                             std::uint64_t direction_seed, std::size_t challenges = 200000,
                             int resolution = 51);

void write_contour_csv(const SensitivityGrid& grid, const std::string& path);

} // namespace puflab
