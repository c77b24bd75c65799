#include "puflab/attacks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "puflab/cmaes.hpp"

namespace puflab {

namespace {

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string sanitize(std::string s) {
    for (auto& ch : s)
        if (ch == ',' || ch == '\n') ch = ';';
    return s;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

AttackReport base_report(const char* kind, const CrpDataset& train, const CrpDataset& test,
                         bool disjoint, std::uint64_t seed) {
    AttackReport r;
    r.attack_kind = kind;
    r.architecture = arch_name(train.header.arch);
    r.n = static_cast<int>(train.header.n);
    r.g = static_cast<int>(train.header.g);
    r.k = static_cast<int>(train.header.k);
    r.train_crps = train.records.size();
    r.test_crps = test.records.size();
    r.train_test_disjoint = disjoint;
    r.seed = seed;
    return r;
}

} // namespace

std::string AttackReport::csv_header() {
    return "attack,architecture,n,g,k,train_crps,test_crps,test_accuracy,wall_seconds,seed,"
           "train_test_disjoint,failure,notes";
}

std::string AttackReport::csv_row() const {
    std::ostringstream os;
    os << attack_kind << ',' << architecture << ',' << n << ',' << g << ',' << k << ','
       << train_crps << ',' << test_crps << ',' << format_double(test_accuracy) << ','
       << format_double(wall_seconds) << ',' << seed << ',' << (train_test_disjoint ? 1 : 0) << ','
       << (failure_flag ? 1 : 0) << ',' << sanitize(notes);
    return os.str();
}

std::string AttackReport::text() const {
    std::ostringstream os;
    os << "attack: " << attack_kind << "\narchitecture: " << architecture << "\nn: " << n
       << "\ng: " << g << "\nk: " << k << "\ntrain_crps: " << train_crps
       << "\ntest_crps: " << test_crps << "\ntest_accuracy: " << format_double(test_accuracy)
       << "\nwall_seconds: " << format_double(wall_seconds) << "\nseed: " << seed
       << "\ntrain_test_disjoint: " << (train_test_disjoint ? "yes" : "no")
       << "\nfailure: " << (failure_flag ? "yes" : "no") << "\nnotes: " << notes << "\n";
    return os.str();
}

SplitDataset split_dataset(const CrpDataset& ds, std::size_t test_count) {
    if (test_count == 0 || test_count >= ds.records.size())
        throw std::invalid_argument("test split must leave both train and test non-empty");
    SplitDataset out;
    out.train.header = ds.header;
    out.test.header = ds.header;
    const std::size_t train_count = ds.records.size() - test_count;
    out.train.records.assign(ds.records.begin(), ds.records.begin() + train_count);
    out.test.records.assign(ds.records.begin() + train_count, ds.records.end());
    out.train.header.record_count = out.train.records.size();
    out.test.header.record_count = out.test.records.size();

    std::unordered_set<std::uint64_t> train_set;
    train_set.reserve(train_count * 2);
    for (const auto& r : out.train.records) train_set.insert(r.challenge);
    out.disjoint = true;
    for (const auto& r : out.test.records)
        if (train_set.count(r.challenge)) {
            out.disjoint = false;
            break;
        }
    if (!out.disjoint) throw std::invalid_argument("train/test split is not challenge-disjoint");
    return out;
}

std::vector<std::uint8_t> LinearModel::predict(const std::vector<Challenge>& cs, int n) const {
    const auto feats = parity_features<double>(cs, n);
    std::vector<std::uint8_t> out(cs.size());
    const Eigen::VectorXd margin = feats * weights;
    for (std::size_t i = 0; i < cs.size(); ++i) out[i] = margin[static_cast<Eigen::Index>(i)] < 0;
    return out;
}

LrOutcome train_logistic_regression(const SplitDataset& data, const LrConfig& cfg) {
    const double t0 = now_seconds();
    const int n = static_cast<int>(data.train.header.n);
    const auto feats = parity_features<double>(data.train.challenges(), n);
    const auto bits = data.train.responses();
    const Eigen::Index rows = feats.rows();

    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) y[i] = bits[static_cast<std::size_t>(i)];

    // response=1 corresponds to negative margin, p(1) = sigmoid(-w.phi)
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n + 1);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const Eigen::VectorXd z = -(feats * w);
        const Eigen::VectorXd p1 = (1.0 + (-z.array()).exp()).inverse();
        const Eigen::VectorXd grad = feats.transpose() * (y - p1) / static_cast<double>(rows);
        w -= cfg.learning_rate * grad;
    }

    LrOutcome out;
    out.model.weights = w;
    out.report = base_report("lr", data.train, data.test, data.disjoint, cfg.seed);
    const auto preds = out.model.predict(data.test.challenges(), n);
    out.report.test_accuracy = evaluate_accuracy(preds, data.test);
    if (out.report.architecture != "apuf")
        out.report.notes = "parity feature map assumed (native to arbiter targets only)";
    out.report.wall_seconds = now_seconds() - t0;
    return out;
}

MlpOutcome train_mlp_attack(const SplitDataset& data, const MlpAttackConfig& cfg) {
    const double t0 = now_seconds();
    const int n = static_cast<int>(data.train.header.n);

    std::vector<int> sizes;
    sizes.push_back(n);
    for (const int h : cfg.hidden) sizes.push_back(h);
    sizes.push_back(2);

    const auto encode = [n](const CrpDataset& ds) {
        Mlp<float>::Matrix x(ds.records.size(), n);
        for (std::size_t i = 0; i < ds.records.size(); ++i)
            for (int j = 0; j < n; ++j)
                x(static_cast<Eigen::Index>(i), j) = (ds.records[i].challenge >> j) & 1 ? 1.0f : -1.0f;
        return x;
    };

    MlpOutcome out{Mlp<float>(sizes, cfg.train.seed),
                   base_report("mlp", data.train, data.test, data.disjoint, cfg.train.seed)};
    const auto xtrain = encode(data.train);
    const auto result = out.model.train(xtrain, data.train.responses(), cfg.train);
    if (result.diverged) {
        out.report.failure_flag = true;
        out.report.notes = "training diverged (loss became non-finite)";
    }
    const auto preds = out.model.predict(encode(data.test));
    out.report.test_accuracy = evaluate_accuracy(preds, data.test);
    {
        std::ostringstream os;
        os << "hidden=";
        for (std::size_t i = 0; i < cfg.hidden.size(); ++i)
            os << (i ? "x" : "") << cfg.hidden[i];
        os << "; epochs_run=" << result.epochs_run;
        out.report.notes += (out.report.notes.empty() ? "" : "; ") + os.str();
    }
    out.report.wall_seconds = now_seconds() - t0;
    return out;
}

CmaesOutcome cmaes_reliability_attack(const SplitDataset& data,
                                      const std::vector<double>& ones_fraction,
                                      const CmaesAttackConfig& cfg) {
    const double t0 = now_seconds();
    const int n = static_cast<int>(data.train.header.n);
    if (ones_fraction.size() != data.train.records.size())
        throw std::invalid_argument("one reliability value per training record required");

    CmaesOutcome out;
    out.report = base_report("cmaes", data.train, data.test, data.disjoint, cfg.seed);
    out.report.notes = "reliability side channel, m=" + std::to_string(cfg.evals_per_challenge);

    const Eigen::Index rows = static_cast<Eigen::Index>(ones_fraction.size());
    Eigen::VectorXd rel(rows);
    for (Eigen::Index i = 0; i < rows; ++i)
        rel[i] = std::abs(2.0 * ones_fraction[static_cast<std::size_t>(i)] - 1.0);

    const double rel_mean = rel.mean();
    const double rel_var = (rel.array() - rel_mean).square().sum() / static_cast<double>(rows);
    if (rel_var < 1e-12) {
        // noiseless target: every reliability identical, no side channel
        out.report.failure_flag = true;
        out.report.notes += "; degenerate fitness (constant reliability)";
        out.model.weights = Eigen::VectorXd::Zero(n + 1);
        const auto preds = out.model.predict(data.test.challenges(), n);
        out.report.test_accuracy = evaluate_accuracy(preds, data.test);
        out.report.wall_seconds = now_seconds() - t0;
        return out;
    }

    const auto feats = parity_features<double>(data.train.challenges(), n);
    const Eigen::VectorXd rel_centered = rel.array() - rel_mean;
    const double rel_norm = std::sqrt(rel_centered.squaredNorm());

    const auto fitness = [&](const Eigen::VectorXd& w) {
        const Eigen::VectorXd margin = (feats * w).cwiseAbs();
        std::vector<double> sorted(margin.data(), margin.data() + margin.size());
        std::sort(sorted.begin(), sorted.end());
        double best = 0;
        for (const double q : {0.10, 0.25, 0.50, 0.75, 0.90}) {
            const double eps = sorted[static_cast<std::size_t>(q * (sorted.size() - 1))];
            Eigen::VectorXd h(rows);
            for (Eigen::Index i = 0; i < rows; ++i) h[i] = margin[i] > eps ? 1.0 : 0.0;
            const double hm = h.mean();
            const double hnorm = std::sqrt((h.array() - hm).square().sum());
            if (hnorm < 1e-12) continue;
            const double corr = (h.array() - hm).matrix().dot(rel_centered) / (hnorm * rel_norm);
            best = std::max(best, corr);
        }
        return -best; // minimized
    };

    CmaEsConfig es;
    es.max_generations = cfg.max_generations;
    double sigma0 = 0.5;
    Eigen::VectorXd best_w = Eigen::VectorXd::Zero(n + 1);
    double best_fit = 0;
    int restarts = 0;
    for (int attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
        es.sigma0 = sigma0;
        es.seed = Rng(cfg.seed).fork(static_cast<std::uint64_t>(attempt)).key();
        const auto result = cmaes_minimize(fitness, Eigen::VectorXd::Zero(n + 1), es);
        if (result.best_fitness < best_fit) {
            best_fit = result.best_fitness;
            best_w = result.best;
        }
        if (!result.collapsed) break; // normal budget stop
        sigma0 *= 2.0;
        restarts = attempt + 1;
    }
    if (restarts) out.report.notes += "; restarts=" + std::to_string(restarts);

    // global sign of w is unobservable through |margin|; orient by majority
    // agreement on the training responses
    LinearModel candidate{best_w};
    const auto train_challenges = data.train.challenges();
    const auto train_bits = data.train.responses();
    const auto agreement = [&](const LinearModel& m) {
        const auto p = m.predict(train_challenges, n);
        std::size_t ok = 0;
        for (std::size_t i = 0; i < p.size(); ++i) ok += p[i] == train_bits[i];
        return static_cast<double>(ok) / static_cast<double>(p.size());
    };
    const double direct = agreement(candidate);
    LinearModel flipped{-best_w};
    if (agreement(flipped) > direct) candidate = flipped;

    out.model = candidate;
    const auto preds = out.model.predict(data.test.challenges(), n);
    out.report.test_accuracy = evaluate_accuracy(preds, data.test);
    out.report.wall_seconds = now_seconds() - t0;
    return out;
}

std::vector<std::uint8_t> FourierModel::predict(const std::vector<Challenge>& cs, int n_bits) const {
    if (n_bits != n) throw std::invalid_argument("challenge width mismatch");
    std::vector<std::uint8_t> out(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i) {
        double score = 0;
        for (std::size_t s = 0; s < subsets.size(); ++s) {
            double chi = 1;
            for (const int bit : subsets[s]) chi *= cs[i].bit(bit) ? -1.0 : 1.0;
            score += coefficients[static_cast<Eigen::Index>(s)] * chi;
        }
        out[i] = score < 0; // negative expectation of (-1)^y means y=1
    }
    return out;
}

FourierOutcome fourier_low_degree_attack(const SplitDataset& data, const FourierConfig& cfg) {
    const double t0 = now_seconds();
    const int n = static_cast<int>(data.train.header.n);
    if (cfg.degree < 0) throw std::invalid_argument("degree must be non-negative");

    // enumerate subsets of size <= degree
    std::vector<std::vector<int>> subsets = {{}};
    std::vector<std::vector<int>> frontier = {{}};
    for (int d = 1; d <= cfg.degree; ++d) {
        std::vector<std::vector<int>> next;
        for (const auto& s : frontier) {
            const int start = s.empty() ? 0 : s.back() + 1;
            for (int b = start; b < n; ++b) {
                auto t = s;
                t.push_back(b);
                next.push_back(t);
            }
        }
        subsets.insert(subsets.end(), next.begin(), next.end());
        frontier = std::move(next);
        if (subsets.size() > cfg.max_subsets)
            throw std::invalid_argument("subset budget exceeded for degree " +
                                        std::to_string(cfg.degree));
    }

    // +/-1 encoding: challenge bit 1 -> -1 (chi is the parity character)
    const auto& records = data.train.records;
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(subsets.size()));
    constexpr std::size_t kChunk = 16384;
    Eigen::MatrixXd x;
    for (std::size_t lo = 0; lo < records.size(); lo += kChunk) {
        const std::size_t hi = std::min(records.size(), lo + kChunk);
        const Eigen::Index rows = static_cast<Eigen::Index>(hi - lo);
        x.resize(rows, n);
        Eigen::VectorXd ysign(rows);
        for (std::size_t i = lo; i < hi; ++i) {
            const Eigen::Index r = static_cast<Eigen::Index>(i - lo);
            for (int j = 0; j < n; ++j) x(r, j) = (records[i].challenge >> j) & 1 ? -1.0 : 1.0;
            ysign[r] = records[i].response ? -1.0 : 1.0;
        }
        Eigen::VectorXd chi(rows);
        for (std::size_t s = 0; s < subsets.size(); ++s) {
            chi.setOnes();
            for (const int bit : subsets[s]) chi.array() *= x.col(bit).array();
            sums[static_cast<Eigen::Index>(s)] += chi.dot(ysign);
        }
    }

    FourierOutcome out;
    out.model.n = n;
    out.model.degree = cfg.degree;
    out.model.subsets = std::move(subsets);
    out.model.coefficients = sums / static_cast<double>(records.size());
    out.report = base_report("fourier", data.train, data.test, data.disjoint, cfg.seed);
    out.report.notes = "degree=" + std::to_string(cfg.degree) +
                       "; subsets=" + std::to_string(out.model.subsets.size());
    const auto preds = out.model.predict(data.test.challenges(), n);
    out.report.test_accuracy = evaluate_accuracy(preds, data.test);
    out.report.wall_seconds = now_seconds() - t0;
    return out;
}

double evaluate_accuracy(const std::vector<std::uint8_t>& predictions, const CrpDataset& test) {
    if (test.records.empty()) throw std::invalid_argument("empty test set");
    if (predictions.size() != test.records.size())
        throw std::invalid_argument("one prediction per test record required");
    std::size_t ok = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        ok += predictions[i] == test.records[i].response;
    return static_cast<double>(ok) / static_cast<double>(predictions.size());
}

ReliabilityCapture capture_reliability(const InstanceConfig& config, const GenerateSpec& spec,
                                       const EnvironmentCondition& env, int evals_per_challenge) {
    if (evals_per_challenge < 1) throw std::invalid_argument("evals_per_challenge must be >= 1");
    ReliabilityCapture cap;
    cap.dataset = generate_dataset(config, spec, env);
    cap.dataset.header.evals_per_challenge = static_cast<std::uint32_t>(evals_per_challenge);
    cap.ones_fraction.resize(cap.dataset.records.size());

    NoiseModel noise;
    noise.sigma_rel = spec.noiseless ? 0.0 : config.sigma_rel;
    noise.rng_seed = Rng(spec.seed).fork(0x6e6f6973ULL).key();

    std::function<int(const Challenge&, std::uint64_t)> eval_bit;
    std::optional<ApufInstance> apuf;
    std::optional<NmqRoInstance> nmq;
    std::optional<XorComposition> xorc;
    switch (spec.arch) {
        case ArchTag::apuf:
            apuf = make_apuf(spec.seed, config);
            eval_bit = [&](const Challenge& c, std::uint64_t draw) {
                return eval_apuf(*apuf, c, env, noise, draw).response;
            };
            break;
        case ArchTag::nmq_ro:
            nmq = make_nmq_ro(spec.seed, config, spec.g);
            eval_bit = [&](const Challenge& c, std::uint64_t draw) {
                return eval_nmq_ro(*nmq, c, env, noise, draw).response;
            };
            break;
        case ArchTag::xor_nmq_ro:
            xorc = make_xor(spec.seed, config, spec.g, spec.k);
            eval_bit = [&](const Challenge& c, std::uint64_t draw) {
                return eval_xor(*xorc, c, env, noise, draw);
            };
            break;
    }

    const std::size_t count = cap.dataset.records.size();
    for (std::size_t i = 0; i < count; ++i) {
        const Challenge c{cap.dataset.records[i].challenge};
        int ones = 0;
        for (int e = 0; e < evals_per_challenge; ++e) {
            // draw indices continue past the single-eval block used at generation
            const std::uint64_t draw = count + static_cast<std::uint64_t>(e) * count + i;
            ones += eval_bit(c, draw);
        }
        cap.ones_fraction[i] = static_cast<double>(ones) / evals_per_challenge;
        cap.dataset.records[i].response = static_cast<std::uint8_t>(2 * ones >= evals_per_challenge);
    }
    return cap;
}

} // namespace puflab
