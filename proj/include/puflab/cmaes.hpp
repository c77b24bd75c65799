#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "puflab/rng.hpp"

namespace puflab {

// Covariance matrix adaptation evolution strategy (rank-1 + rank-mu update,
// cumulative step-size adaptation), standard parameterization. Minimizes f.
struct CmaEsConfig {
    int lambda = 0;          // population size; 0 = 4 + floor(3 ln n)
    double sigma0 = 0.5;
    int max_generations = 300;
    double stop_sigma = 1e-12;   // step-size collapse
    double stop_flat = 1e-12;    // fitness spread collapse
    std::uint64_t seed = 1;
};

struct CmaEsResult {
    Eigen::VectorXd best;
    double best_fitness = 0;
    int generations = 0;
    bool collapsed = false; // stopped on sigma/fitness collapse, not budget
};

inline CmaEsResult cmaes_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                  const Eigen::VectorXd& x0, const CmaEsConfig& cfg) {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    const int n = static_cast<int>(x0.size());
    const int lambda = cfg.lambda > 0 ? cfg.lambda : 4 + static_cast<int>(std::floor(3.0 * std::log(n)));
    const int mu = lambda / 2;

    VectorXd weights(mu);
    for (int i = 0; i < mu; ++i) weights[i] = std::log(lambda / 2.0 + 0.5) - std::log(i + 1.0);
    weights /= weights.sum();
    const double mueff = 1.0 / weights.squaredNorm();

    const double cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n);
    const double cs = (mueff + 2.0) / (n + mueff + 5.0);
    const double c1 = 2.0 / ((n + 1.3) * (n + 1.3) + mueff);
    const double cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0) * (n + 2.0) + mueff));
    const double damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (n + 1.0)) - 1.0) + cs;
    const double chin = std::sqrt(double(n)) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

    VectorXd mean = x0;
    double sigma = cfg.sigma0;
    MatrixXd C = MatrixXd::Identity(n, n);
    VectorXd pc = VectorXd::Zero(n), ps = VectorXd::Zero(n);

    CmaEsResult result;
    result.best = x0;
    result.best_fitness = f(x0);

    const Rng rng(cfg.seed);
    std::vector<VectorXd> xs(lambda), zs(lambda);
    std::vector<std::pair<double, int>> ranked(lambda);

    for (int gen = 0; gen < cfg.max_generations; ++gen) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(C);
        const VectorXd d = eig.eigenvalues().cwiseMax(1e-20).cwiseSqrt();
        const MatrixXd& B = eig.eigenvectors();

        const Rng gr = rng.fork(static_cast<std::uint64_t>(gen));
        for (int i = 0; i < lambda; ++i) {
            VectorXd z(n);
            for (int j = 0; j < n; ++j)
                z[j] = gr.normal(static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n) + j);
            zs[i] = z;
            xs[i] = mean + sigma * (B * d.cwiseProduct(z));
            ranked[i] = {f(xs[i]), i};
        }
        std::sort(ranked.begin(), ranked.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (ranked[0].first < result.best_fitness) {
            result.best_fitness = ranked[0].first;
            result.best = xs[ranked[0].second];
        }
        result.generations = gen + 1;

        VectorXd zmean = VectorXd::Zero(n);
        VectorXd new_mean = VectorXd::Zero(n);
        for (int i = 0; i < mu; ++i) {
            zmean += weights[i] * zs[ranked[i].second];
            new_mean += weights[i] * xs[ranked[i].second];
        }
        mean = new_mean;

        ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * (B * zmean);
        const double hsig = ps.norm() / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * (gen + 1))) / chin <
                                    1.4 + 2.0 / (n + 1.0)
                                ? 1.0
                                : 0.0;
        pc = (1.0 - cc) * pc + hsig * std::sqrt(cc * (2.0 - cc) * mueff) * (B * d.cwiseProduct(zmean));

        MatrixXd rank_mu = MatrixXd::Zero(n, n);
        for (int i = 0; i < mu; ++i) {
            const VectorXd yi = B * d.cwiseProduct(zs[ranked[i].second]);
            rank_mu += weights[i] * yi * yi.transpose();
        }
        C = (1.0 - c1 - cmu) * C + c1 * (pc * pc.transpose() + (1.0 - hsig) * cc * (2.0 - cc) * C) +
            cmu * rank_mu;
        sigma *= std::exp((cs / damps) * (ps.norm() / chin - 1.0));

        const double spread = ranked[lambda - 1].first - ranked[0].first;
        if (sigma < cfg.stop_sigma || spread < cfg.stop_flat) {
            result.collapsed = true;
            break;
        }
    }
    return result;
}

} // namespace puflab
