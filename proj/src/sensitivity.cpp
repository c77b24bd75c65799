#include "puflab/sensitivity.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace puflab {

namespace {

constexpr double kMinDelay = 1e-15;
constexpr std::uint64_t kMemberSeedTag = 0x78726d62ULL; // keep member derivation in sync with make_xor

std::vector<EntropySource> preset_members(const InstanceConfig& config, std::uint64_t seed, int k) {
    std::vector<EntropySource> members;
    members.reserve(k);
    members.push_back(sample_entropy_source(seed, config));
    for (int m = 1; m < k; ++m)
        members.push_back(sample_entropy_source(Rng(seed).fork(kMemberSeedTag + m).key(), config));
    return members;
}

// affine decomposition of the selected-delay sum over a challenge set:
// value(c; alpha, beta) = v0 + alpha*v1 + beta*v2 per challenge
struct AffineSums {
    Eigen::VectorXd v0, v1, v2;
};

// Arbiter parity weights as a linear map of the flattened parameters (the
// overhead entry cancels in the top/bottom difference). Applying it to a
// direction vector yields that direction's weight contribution directly.
Eigen::VectorXd apuf_weights_from_theta(const Eigen::VectorXd& v, int n) {
    Eigen::VectorXd a(n), b(n);
    for (int i = 0; i < n; ++i) {
        const double s = v[2 * i] - v[2 * n + 2 * i];
        const double x = v[2 * i + 1] - v[2 * n + 2 * i + 1];
        a[i] = 0.5 * (s + x);
        b[i] = 0.5 * (s - x);
    }
    Eigen::VectorXd w(n + 1);
    w[0] = b[0];
    for (int i = 1; i < n; ++i) w[i] = a[i - 1] + b[i];
    w[n] = a[n - 1];
    return w;
}

AffineSums affine_sums(const Eigen::VectorXd& theta, const Eigen::VectorXd& delta,
                       const Eigen::VectorXd& eta, int n, Side side,
                       const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>& cmat) {
    const Eigen::Index offset = static_cast<int>(side) * 2 * n;
    auto split = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
        double base = v[4 * n]; // fixed overhead entry
        Eigen::VectorXd diff(n);
        for (int i = 0; i < n; ++i) {
            const double d0 = v[offset + 2 * i];
            const double d1 = v[offset + 2 * i + 1];
            base += d0;
            diff[i] = d1 - d0;
        }
        out = (cmat * diff).array() + base;
    };
    AffineSums s;
    split(theta, s.v0);
    split(delta, s.v1);
    split(eta, s.v2);
    return s;
}

} // namespace

DirectionPair random_directions(const std::vector<EntropySource>& members, std::uint64_t seed) {
    if (members.empty()) throw std::invalid_argument("need at least one member source");
    const int n = members.front().n();
    const Eigen::Index block = 4 * n + 1;
    const Eigen::Index dim = block * static_cast<Eigen::Index>(members.size());

    Eigen::VectorXd scale(dim);
    for (std::size_t m = 0; m < members.size(); ++m)
        scale.segment(block * static_cast<Eigen::Index>(m), block) = members[m].flatten().cwiseAbs();
    if (scale.maxCoeff() == 0.0) throw std::invalid_argument("degenerate all-zero parameter vector");

    const Rng rng(seed);
    for (std::uint64_t attempt = 0;; ++attempt) {
        Eigen::VectorXd delta(dim), eta(dim);
        for (std::size_t m = 0; m < members.size(); ++m) {
            // addressed by (seed, member, parameter): member blocks are
            // identical across compositions sharing a member
            const Rng mr = rng.fork(m).fork(attempt);
            for (Eigen::Index i = 0; i < block; ++i) {
                const Eigen::Index at = block * static_cast<Eigen::Index>(m) + i;
                delta[at] = mr.normal(2 * static_cast<std::uint64_t>(i)) * scale[at];
                eta[at] = mr.normal(2 * static_cast<std::uint64_t>(i) + 1) * scale[at];
            }
        }
        const double cosine = std::abs(delta.dot(eta)) / (delta.norm() * eta.norm());
        if (cosine <= 0.99) return {std::move(delta), std::move(eta), seed};
    }
}

double SensitivityGrid::boundary_ring_mean() const {
    const Eigen::Index r = f.rows(), c = f.cols();
    double sum = 0;
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j)
            if (i == 0 || j == 0 || i == r - 1 || j == c - 1) {
                sum += f(i, j);
                ++count;
            }
    return sum / static_cast<double>(count);
}

int SensitivityGrid::count_below(double threshold) const {
    int count = 0;
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (Eigen::Index j = 0; j < f.cols(); ++j) count += f(i, j) < threshold;
    return count;
}

SensitivityGrid uniqueness_surface(const std::vector<EntropySource>& members, SurfaceKind kind,
                                   int g, const DirectionPair& dirs, const GridSpec& spec,
                                   std::uint64_t challenge_seed) {
    if (members.empty()) throw std::invalid_argument("need at least one member source");
    if (spec.resolution < 3) throw std::invalid_argument("grid resolution must be >= 3");
    if (spec.challenges < 1000) throw std::invalid_argument("challenge budget must be >= 1000");
    if (kind != SurfaceKind::apuf && g < 1) throw std::invalid_argument("g must be >= 1");

    const int n = members.front().n();
    const Eigen::Index block = 4 * n + 1;
    if (dirs.delta.size() != block * static_cast<Eigen::Index>(members.size()) ||
        dirs.eta.size() != dirs.delta.size())
        throw std::invalid_argument("direction dimension must match flattened member parameters");

    SensitivityGrid grid;
    grid.challenges = spec.challenges;
    grid.alphas.resize(spec.resolution);
    grid.betas.resize(spec.resolution);
    for (int i = 0; i < spec.resolution; ++i) {
        const double t = spec.resolution == 1 ? 0.0 : static_cast<double>(i) / (spec.resolution - 1);
        grid.alphas[i] = spec.alpha_min + t * (spec.alpha_max - spec.alpha_min);
        grid.betas[i] = spec.beta_min + t * (spec.beta_max - spec.beta_min);
    }
    grid.f.setZero(spec.resolution, spec.resolution);

    const auto challenges = random_challenges(Rng(challenge_seed), spec.challenges, n);
    const auto cmat = challenge_matrix<double>(challenges, n);
    const Eigen::Index nc = static_cast<Eigen::Index>(spec.challenges);

    // can any delay entry go non-positive anywhere on the grid? (affine in
    // alpha/beta, so extremes sit at the corners)
    bool may_clamp = false;
    for (std::size_t m = 0; m < members.size() && !may_clamp; ++m) {
        const Eigen::VectorXd theta = members[m].flatten();
        const Eigen::VectorXd d = dirs.delta.segment(block * static_cast<Eigen::Index>(m), block);
        const Eigen::VectorXd e = dirs.eta.segment(block * static_cast<Eigen::Index>(m), block);
        for (const double a : {spec.alpha_min, spec.alpha_max})
            for (const double b : {spec.beta_min, spec.beta_max})
                if (((theta + a * d + b * e).array() < kMinDelay).any()) may_clamp = true;
    }

    const auto parity = [&](const Eigen::VectorXd& sp, const Eigen::VectorXd& sq,
                            std::vector<std::uint8_t>& acc) {
        if (kind == SurfaceKind::apuf) {
            // sp holds the signed delay difference; sq unused
            for (Eigen::Index i = 0; i < nc; ++i) acc[i] ^= sp[i] < 0 ? 1 : 0;
        } else {
            for (Eigen::Index i = 0; i < nc; ++i)
                acc[i] ^= static_cast<std::uint8_t>(
                    static_cast<long long>(std::floor(g * sp[i] / sq[i])) & 1);
        }
    };

    std::vector<std::uint8_t> origin(nc), cell(nc);

    if (!may_clamp) {
        // affine fast path: selected sums are linear in (alpha, beta)
        std::vector<AffineSums> p(members.size()), q(members.size());
        std::vector<Eigen::VectorXd> wp; // APUF parity-weight projections
        const auto feats = kind == SurfaceKind::apuf
                               ? parity_features<double>(challenges, n)
                               : Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>();
        for (std::size_t m = 0; m < members.size(); ++m) {
            const Eigen::VectorXd theta = members[m].flatten();
            const Eigen::VectorXd d = dirs.delta.segment(block * static_cast<Eigen::Index>(m), block);
            const Eigen::VectorXd e = dirs.eta.segment(block * static_cast<Eigen::Index>(m), block);
            if (kind == SurfaceKind::apuf) {
                // weights are linear in theta, so the difference is affine too
                AffineSums s;
                s.v0 = feats * apuf_weights_from_theta(theta, n);
                s.v1 = feats * apuf_weights_from_theta(d, n);
                s.v2 = feats * apuf_weights_from_theta(e, n);
                p[m] = std::move(s);
            } else {
                p[m] = affine_sums(theta, d, e, n, Side::p, cmat);
                q[m] = affine_sums(theta, d, e, n, Side::q, cmat);
            }
        }
        // origin bits
        std::fill(origin.begin(), origin.end(), 0);
        for (std::size_t m = 0; m < members.size(); ++m)
            parity(p[m].v0, kind == SurfaceKind::apuf ? p[m].v0 : q[m].v0, origin);

        Eigen::VectorXd sp(nc), sq(nc);
        for (int i = 0; i < spec.resolution; ++i)
            for (int j = 0; j < spec.resolution; ++j) {
                const double a = grid.alphas[i], b = grid.betas[j];
                std::fill(cell.begin(), cell.end(), 0);
                for (std::size_t m = 0; m < members.size(); ++m) {
                    sp = p[m].v0 + a * p[m].v1 + b * p[m].v2;
                    if (kind != SurfaceKind::apuf) sq = q[m].v0 + a * q[m].v1 + b * q[m].v2;
                    parity(sp, sq, cell);
                }
                long long diff = 0;
                for (Eigen::Index t = 0; t < nc; ++t) diff += cell[t] != origin[t];
                grid.f(i, j) = static_cast<double>(diff) / static_cast<double>(nc);
            }
        return grid;
    }

    // exact path: rebuild each perturbed instance and clamp (warned)
    const auto feats = kind == SurfaceKind::apuf ? parity_features<double>(challenges, n)
                                                 : Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>();
    std::fill(origin.begin(), origin.end(), 0);
    for (std::size_t m = 0; m < members.size(); ++m) {
        Eigen::VectorXd sp, sq;
        if (kind == SurfaceKind::apuf) {
            sp = feats * apuf_parity_weights(members[m], 0.0, 0.0);
        } else {
            const auto sums_p = selected_sums(members[m], Side::p, 0.0, 0.0);
            const auto sums_q = selected_sums(members[m], Side::q, 0.0, 0.0);
            sp = (cmat * sums_p.diff).array() + sums_p.base;
            sq = (cmat * sums_q.diff).array() + sums_q.base;
        }
        parity(sp, sq, origin);
    }
    for (int i = 0; i < spec.resolution; ++i)
        for (int j = 0; j < spec.resolution; ++j) {
            const double a = grid.alphas[i], b = grid.betas[j];
            std::fill(cell.begin(), cell.end(), 0);
            for (std::size_t m = 0; m < members.size(); ++m) {
                const Eigen::VectorXd theta =
                    members[m].flatten() +
                    a * dirs.delta.segment(block * static_cast<Eigen::Index>(m), block) +
                    b * dirs.eta.segment(block * static_cast<Eigen::Index>(m), block);
                int clamped = 0;
                const EntropySource pert = members[m].with_flattened(theta, kMinDelay, &clamped);
                grid.clamp_warnings += clamped;
                Eigen::VectorXd sp, sq;
                if (kind == SurfaceKind::apuf) {
                    sp = feats * apuf_parity_weights(pert, 0.0, 0.0);
                } else {
                    const auto sums_p = selected_sums(pert, Side::p, 0.0, 0.0);
                    const auto sums_q = selected_sums(pert, Side::q, 0.0, 0.0);
                    sp = (cmat * sums_p.diff).array() + sums_p.base;
                    sq = (cmat * sums_q.diff).array() + sums_q.base;
                }
                parity(sp, sq, cell);
            }
            long long diff = 0;
            for (Eigen::Index t = 0; t < nc; ++t) diff += cell[t] != origin[t];
            grid.f(i, j) = static_cast<double>(diff) / static_cast<double>(nc);
        }
    return grid;
}

const std::vector<SurfacePreset>& fig10_presets() {
    static const std::vector<SurfacePreset> presets = {
        {"apuf", SurfaceKind::apuf, 0, 1, 0.25},
        {"5-xor-apuf", SurfaceKind::apuf, 0, 5, 0.25},
        {"nmq-ro-g800", SurfaceKind::nmq_ro, 800, 1, 0.25},
        {"nmq-ro-g200", SurfaceKind::nmq_ro, 200, 1, 0.05},
        {"2-xor-nmq-ro-g200", SurfaceKind::xor_nmq_ro, 200, 2, 0.05},
        {"3-xor-nmq-ro-g200", SurfaceKind::xor_nmq_ro, 200, 3, 0.05},
    };
    return presets;
}

SensitivityGrid run_preset(const SurfacePreset& preset, const InstanceConfig& config,
                           std::uint64_t instance_seed, std::uint64_t direction_seed,
                           const GridSpec& overrides) {
    const auto members = preset_members(config, instance_seed, preset.k);
    const auto dirs = random_directions(members, direction_seed);
    GridSpec spec = overrides;
    spec.alpha_min = -preset.range;
    spec.alpha_max = preset.range;
    spec.beta_min = -preset.range;
    spec.beta_max = preset.range;
    return uniqueness_surface(members, preset.kind, preset.g, dirs, spec,
                              Rng(direction_seed).fork(999).key());
}

OrderingTrial ordering_trial(const InstanceConfig& config, std::uint64_t instance_seed,
                             std::uint64_t direction_seed, std::size_t challenges,
                             int resolution) {
    GridSpec spec;
    spec.alpha_min = spec.beta_min = -0.05;
    spec.alpha_max = spec.beta_max = 0.05;
    spec.resolution = resolution;
    spec.challenges = challenges;
    const std::uint64_t challenge_seed = Rng(direction_seed).fork(999).key();

    const auto members = preset_members(config, instance_seed, 3);
    OrderingTrial trial;
    for (int k = 1; k <= 3; ++k) {
        const std::vector<EntropySource> sub(members.begin(), members.begin() + k);
        const auto dirs = random_directions(sub, direction_seed);
        const auto grid = uniqueness_surface(
            sub, k == 1 ? SurfaceKind::nmq_ro : SurfaceKind::xor_nmq_ro, 200, dirs, spec,
            challenge_seed);
        (k == 1 ? trial.mean_single : k == 2 ? trial.mean_xor2 : trial.mean_xor3) = grid.grid_mean();
    }
    return trial;
}

void write_contour_csv(const SensitivityGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "alpha,beta,f\n";
    for (std::size_t i = 0; i < grid.alphas.size(); ++i)
        for (std::size_t j = 0; j < grid.betas.size(); ++j)
            out << grid.alphas[i] << ',' << grid.betas[j] << ',' << grid.f(i, j) << '\n';
}

} // namespace puflab
