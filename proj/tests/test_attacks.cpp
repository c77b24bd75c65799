#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "puflab/attacks.hpp"
#include "puflab/cmaes.hpp"

using namespace puflab;

namespace {

// sequential challenges are distinct by construction, so the split stays
// disjoint without dedup bookkeeping
CrpDataset toy_dataset(std::size_t count, int n, int (*label)(std::uint64_t)) {
    CrpDataset ds;
    ds.header.n = static_cast<std::uint32_t>(n);
    ds.header.arch = ArchTag::nmq_ro;
    ds.header.record_count = count;
    for (std::size_t i = 0; i < count; ++i)
        ds.records.push_back({i, static_cast<std::uint8_t>(label(i))});
    return ds;
}

int count_fields(const std::string& csv) {
    return static_cast<int>(std::count(csv.begin(), csv.end(), ',')) + 1;
}

} // namespace

TEST_CASE("split keeps sizes, order and disjointness") {
    const auto ds = toy_dataset(100, 16, [](std::uint64_t) { return 0; });
    const auto sp = split_dataset(ds, 25);
    CHECK(sp.train.records.size() == 75);
    CHECK(sp.test.records.size() == 25);
    CHECK(sp.disjoint);
    CHECK(sp.train.header.record_count == 75);
    CHECK(sp.test.header.record_count == 25);
    CHECK(sp.train.records.front().challenge == 0);
    CHECK(sp.test.records.front().challenge == 75);

    CHECK_THROWS_AS(split_dataset(ds, 0), std::invalid_argument);
    CHECK_THROWS_AS(split_dataset(ds, 100), std::invalid_argument);

    auto dup = ds;
    dup.records[99].challenge = dup.records[0].challenge; // straddles the cut
    CHECK_THROWS_AS(split_dataset(dup, 25), std::invalid_argument);
}

TEST_CASE("accuracy evaluation counts exact matches") {
    const auto ds = toy_dataset(4, 8, [](std::uint64_t i) { return static_cast<int>(i & 1); });
    CHECK(evaluate_accuracy({0, 1, 0, 1}, ds) == 1.0);
    CHECK(evaluate_accuracy({1, 0, 1, 0}, ds) == 0.0);
    CHECK(evaluate_accuracy({0, 1, 1, 0}, ds) == 0.5);
    CHECK_THROWS_AS(evaluate_accuracy({0, 1}, ds), std::invalid_argument);
    CHECK_THROWS_AS(evaluate_accuracy({}, CrpDataset{}), std::invalid_argument);
}

TEST_CASE("logistic regression nails a constant target") {
    const auto ds = toy_dataset(1000, 16, [](std::uint64_t) { return 0; });
    const auto out = train_logistic_regression(split_dataset(ds, 200), LrConfig{});
    CHECK(out.report.test_accuracy == 1.0);
    CHECK(out.report.train_test_disjoint);
    CHECK(out.report.attack_kind == "lr");
    CHECK(out.report.train_crps == 800);
    CHECK(out.report.test_crps == 200);
}

TEST_CASE("logistic regression breaks a noiseless arbiter") {
    InstanceConfig cfg;
    cfg.n = 32;
    GenerateSpec spec;
    spec.arch = ArchTag::apuf;
    spec.n_crps = 5000;
    spec.seed = 3;
    spec.noiseless = true;
    const auto ds = generate_dataset(cfg, spec, EnvironmentCondition{});
    const auto out = train_logistic_regression(split_dataset(ds, 1000), LrConfig{});
    CHECK(out.report.test_accuracy >= 0.95);
    CHECK(out.report.architecture == "apuf");
    CHECK(out.report.n == 32);
    // the learned weights reproduce their own predictions deterministically
    const auto again = train_logistic_regression(split_dataset(ds, 1000), LrConfig{});
    CHECK(again.model.weights == out.model.weights);
}

TEST_CASE("logistic regression stays near chance against the quantizer") {
    InstanceConfig cfg;
    cfg.n = 32;
    GenerateSpec spec;
    spec.arch = ArchTag::nmq_ro;
    spec.g = 200;
    spec.n_crps = 6000;
    spec.seed = 4;
    spec.noiseless = true;
    const auto ds = generate_dataset(cfg, spec, EnvironmentCondition{});
    const auto out = train_logistic_regression(split_dataset(ds, 1000), LrConfig{});
    CHECK(out.report.test_accuracy > 0.38);
    CHECK(out.report.test_accuracy < 0.65);
}

TEST_CASE("mlp learns the xor of two challenge bits") {
    const auto ds = toy_dataset(2500, 16, [](std::uint64_t i) {
        return static_cast<int>((i ^ (i >> 1)) & 1);
    });
    MlpAttackConfig cfg;
    cfg.hidden = {16};
    cfg.train.learning_rate = 0.01f;
    cfg.train.batch_size = 64;
    cfg.train.max_epochs = 200;
    cfg.train.plateau_epochs = 25;
    cfg.train.seed = 5;
    const auto out = train_mlp_attack(split_dataset(ds, 500), cfg);
    CHECK(out.report.test_accuracy >= 0.98);
    CHECK(out.report.attack_kind == "mlp");
    CHECK_FALSE(out.report.failure_flag);
}

TEST_CASE("analytic mlp gradient matches central differences") {
    Mlp<double> net({3, 4, 2}, 11);
    const Rng rng(13);
    Eigen::MatrixXd x(8, 3);
    std::vector<std::uint8_t> y;
    for (int r = 0; r < 8; ++r) {
        for (int c = 0; c < 3; ++c) x(r, c) = rng.normal(static_cast<std::uint64_t>(r) * 3 + c);
        y.push_back(static_cast<std::uint8_t>(rng.bits(100 + static_cast<std::uint64_t>(r)) & 1));
    }

    const Eigen::VectorXd theta = net.flatten_params();
    const Eigen::VectorXd analytic = net.flat_gradient(x, y);
    const double h = 1e-6;
    double worst = 0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        Eigen::VectorXd t = theta;
        t[i] = theta[i] + h;
        net.set_params(t);
        const double up = net.loss_only(x, y);
        t[i] = theta[i] - h;
        net.set_params(t);
        const double down = net.loss_only(x, y);
        const double numeric = (up - down) / (2 * h);
        const double rel = std::abs(numeric - analytic[i]) /
                           std::max(1e-8, std::abs(numeric) + std::abs(analytic[i]));
        worst = std::max(worst, rel);
    }
    net.set_params(theta);
    CHECK(worst < 1e-4);
}

TEST_CASE("mlp training is deterministic in the seed") {
    const auto ds = toy_dataset(1200, 16, [](std::uint64_t i) {
        return static_cast<int>((i >> 2) & 1);
    });
    MlpAttackConfig cfg;
    cfg.hidden = {8};
    cfg.train.max_epochs = 10;
    cfg.train.seed = 21;
    const auto a = train_mlp_attack(split_dataset(ds, 200), cfg);
    const auto b = train_mlp_attack(split_dataset(ds, 200), cfg);
    CHECK(a.model.flatten_params() == b.model.flatten_params());
    CHECK(a.report.test_accuracy == b.report.test_accuracy);
}

TEST_CASE("degree-1 fourier recovers a dictator bit") {
    const auto ds = toy_dataset(2000, 16, [](std::uint64_t i) {
        return static_cast<int>((i >> 3) & 1);
    });
    FourierConfig cfg;
    cfg.degree = 1;
    const auto out = fourier_low_degree_attack(split_dataset(ds, 400), cfg);
    CHECK(out.report.test_accuracy == 1.0);
    REQUIRE(out.model.subsets.size() == 17); // empty set + 16 singletons
    CHECK(out.model.subsets[0].empty());
    // the dictator coordinate carries all the mass
    int best = -1;
    double best_mag = 0;
    for (int s = 0; s < 17; ++s)
        if (std::abs(out.model.coefficients[s]) > best_mag) {
            best_mag = std::abs(out.model.coefficients[s]);
            best = s;
        }
    REQUIRE(best >= 1);
    CHECK(out.model.subsets[static_cast<std::size_t>(best)] == std::vector<int>{3});
    CHECK(best_mag == doctest::Approx(1.0));
}

TEST_CASE("parity of three bits defeats degree 2 but falls to degree 3") {
    auto parity3 = [](std::uint64_t i) {
        return static_cast<int>((i ^ (i >> 1) ^ (i >> 2)) & 1);
    };
    const auto ds = toy_dataset(2000, 16, parity3);
    FourierConfig cfg;
    cfg.degree = 2;
    const auto low = fourier_low_degree_attack(split_dataset(ds, 400), cfg);
    CHECK(low.report.test_accuracy > 0.35);
    CHECK(low.report.test_accuracy < 0.65);

    cfg.degree = 3;
    const auto high = fourier_low_degree_attack(split_dataset(ds, 400), cfg);
    CHECK(high.report.test_accuracy == 1.0);
}

TEST_CASE("fourier rejects configurations over the subset budget") {
    const auto ds = toy_dataset(1000, 64, [](std::uint64_t) { return 0; });
    FourierConfig cfg;
    cfg.degree = 2;
    cfg.max_subsets = 100; // C(64,2) alone is 2016
    CHECK_THROWS_AS(fourier_low_degree_attack(split_dataset(ds, 200), cfg),
                    std::invalid_argument);
}

TEST_CASE("cma-es minimizes a shifted sphere") {
    Eigen::VectorXd target(5);
    target << 0.5, -1.0, 0.25, 1.5, -0.5;
    CmaEsConfig cfg;
    cfg.max_generations = 250;
    cfg.seed = 3;
    const auto res = cmaes_minimize(
        [&](const Eigen::VectorXd& x) { return (x - target).squaredNorm(); },
        Eigen::VectorXd::Zero(5), cfg);
    CHECK(res.best_fitness < 1e-6);
    CHECK((res.best - target).norm() < 1e-3);
}

TEST_CASE("reliability capture majority bit is consistent with the fractions") {
    InstanceConfig cfg;
    cfg.n = 32;
    GenerateSpec spec;
    spec.arch = ArchTag::apuf;
    spec.n_crps = 400;
    spec.seed = 6;
    const auto cap = capture_reliability(cfg, spec, EnvironmentCondition{}, 11);
    REQUIRE(cap.ones_fraction.size() == 400);
    CHECK(cap.dataset.header.evals_per_challenge == 11);
    int unstable = 0;
    for (std::size_t i = 0; i < 400; ++i) {
        const double f = cap.ones_fraction[i];
        const double scaled = f * 11;
        CHECK(std::abs(scaled - std::round(scaled)) < 1e-9); // multiples of 1/11
        CHECK(cap.dataset.records[i].response == (f > 0.5 ? 1 : 0));
        unstable += f > 0.0 && f < 1.0;
    }
    CHECK(unstable > 0); // default jitter leaves some challenges unstable
}

TEST_CASE("cma-es attack flags the degenerate noiseless side channel") {
    InstanceConfig cfg;
    cfg.n = 32;
    GenerateSpec spec;
    spec.arch = ArchTag::apuf;
    spec.n_crps = 1200;
    spec.seed = 7;
    spec.noiseless = true;
    const auto cap = capture_reliability(cfg, spec, EnvironmentCondition{}, 11);
    for (double f : cap.ones_fraction) CHECK((f == 0.0 || f == 1.0));

    const auto sp = split_dataset(cap.dataset, 200);
    const std::vector<double> train_rel(cap.ones_fraction.begin(),
                                        cap.ones_fraction.begin() + 1000);
    const auto out = cmaes_reliability_attack(sp, train_rel, CmaesAttackConfig{});
    CHECK(out.report.failure_flag);
}

TEST_CASE("cma-es reliability attack breaks a noisy arbiter") {
    InstanceConfig cfg;
    cfg.n = 32;
    GenerateSpec spec;
    spec.arch = ArchTag::apuf;
    spec.n_crps = 11000;
    spec.seed = 8;
    const auto cap = capture_reliability(cfg, spec, EnvironmentCondition{}, 11);
    const auto sp = split_dataset(cap.dataset, 1000);
    const std::vector<double> train_rel(cap.ones_fraction.begin(),
                                        cap.ones_fraction.begin() + 10000);
    CmaesAttackConfig acfg;
    acfg.seed = 2;
    const auto out = cmaes_reliability_attack(sp, train_rel, acfg);
    CHECK_FALSE(out.report.failure_flag);
    CHECK(out.report.test_accuracy >= 0.90);
}

TEST_CASE("cma-es reliability attack stays near chance against the quantizer") {
    InstanceConfig cfg;
    cfg.n = 32;
    GenerateSpec spec;
    spec.arch = ArchTag::nmq_ro;
    spec.g = 400;
    spec.n_crps = 11000;
    spec.seed = 9;
    const auto cap = capture_reliability(cfg, spec, EnvironmentCondition{}, 11);
    const auto sp = split_dataset(cap.dataset, 1000);
    const std::vector<double> train_rel(cap.ones_fraction.begin(),
                                        cap.ones_fraction.begin() + 10000);
    CmaesAttackConfig acfg;
    acfg.seed = 2;
    const auto out = cmaes_reliability_attack(sp, train_rel, acfg);
    CHECK(out.report.test_accuracy >= 0.45);
    CHECK(out.report.test_accuracy <= 0.60);
}

TEST_CASE("attack reports serialize to aligned csv") {
    CHECK(count_fields(AttackReport::csv_header()) == 13);

    AttackReport r;
    r.attack_kind = "lr";
    r.architecture = "apuf";
    r.n = 32;
    r.train_crps = 100;
    r.test_crps = 10;
    r.test_accuracy = 0.5;
    r.seed = 9;
    r.train_test_disjoint = true;
    r.notes = "alpha, beta\ngamma";
    const auto row = r.csv_row();
    CHECK(count_fields(row) == 13);
    CHECK(row.find('\n') == std::string::npos);
    CHECK(row.find("alpha; beta;gamma") != std::string::npos);

    // identical reports serialize identically once wall time is zeroed
    AttackReport s = r;
    s.wall_seconds = 0;
    r.wall_seconds = 0;
    CHECK(r.csv_row() == s.csv_row());
    CHECK(r.text().find("accuracy") != std::string::npos);
}
