#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "puflab/puf.hpp"

using namespace puflab;

namespace {

const EnvironmentCondition kEnv;
const NoiseModel kQuiet{0.0, 0};

EntropySource constant_source(int n, double v, double overhead = 20e-12) {
    EntropySource::DelayTable d(n, 2), k(n, 2);
    d.setConstant(v);
    k.setConstant(1e-3);
    return EntropySource(d, d, k, k, overhead);
}

} // namespace

TEST_CASE("apuf ties resolve to 0") {
    // identical p/q tables -> zero delay difference on every challenge
    const ApufInstance inst{constant_source(16, 10e-12), 16};
    for (const auto& c : random_challenges(Rng(1), 64, 16)) {
        const auto r = eval_apuf(inst, c, kEnv, kQuiet, 0);
        CHECK(r.delay_difference == 0.0);
        CHECK(r.response == 0);
    }
}

TEST_CASE("apuf crossing model, two stages by hand") {
    // stage delays chosen so each path is hand-computable
    EntropySource::DelayTable dp(2, 2), dq(2, 2), k(2, 2);
    k.setConstant(0.0);
    // stage 0: p = {1, 10}, q = {2, 20}; stage 1: p = {3, 30}, q = {5, 50} (ps)
    dp << 1e-12, 10e-12, 3e-12, 30e-12;
    dq << 2e-12, 20e-12, 5e-12, 50e-12;
    const ApufInstance inst{EntropySource(dp, dq, k, k, 0.0), 2};

    // c = 00: straight both stages, top = 1+3, bot = 2+5 -> diff -3 ps, response 1
    auto r = eval_apuf(inst, Challenge{0b00}, kEnv, kQuiet, 0);
    CHECK(r.delay_difference * 1e12 == doctest::Approx(-3.0));
    CHECK(r.response == 1);

    // c = 01 (bit0 = 1 crosses first stage): after stage 0 top = 0+10, bot = 0+20;
    // stage 1 straight: top = 10+3 = 13, bot = 20+5 = 25 -> diff -12 ps
    r = eval_apuf(inst, Challenge{0b01}, kEnv, kQuiet, 0);
    CHECK(r.delay_difference * 1e12 == doctest::Approx(-12.0));
    CHECK(r.response == 1);

    // c = 10 (bit1 crosses second stage): stage 0 top = 1, bot = 2;
    // stage 1 crossed: top = bot + 30 = 32, bot = top + 50 = 51 -> diff -19 ps
    r = eval_apuf(inst, Challenge{0b10}, kEnv, kQuiet, 0);
    CHECK(r.delay_difference * 1e12 == doctest::Approx(-19.0));
    CHECK(r.response == 1);

    // c = 11: stage 0 crossed: top = 10, bot = 20; stage 1 crossed:
    // top = 20 + 30 = 50, bot = 10 + 50 = 60 -> diff -10 ps
    r = eval_apuf(inst, Challenge{0b11}, kEnv, kQuiet, 0);
    CHECK(r.delay_difference * 1e12 == doctest::Approx(-10.0));
    CHECK(r.response == 1);
}

TEST_CASE("apuf delay difference equals parity weights dot features") {
    const InstanceConfig cfg;
    const ApufInstance inst = make_apuf(77, cfg);
    EnvironmentCondition env;
    env.temperature = 35;
    const auto w = apuf_parity_weights(inst.entropy, env.temperature, env.enrollment_temperature);
    const auto cs = random_challenges(Rng(8), 500, cfg.n);
    const auto phi = parity_features<double>(cs, cfg.n);
    for (std::size_t i = 0; i < cs.size(); ++i) {
        const auto r = eval_apuf(inst, cs[i], env, kQuiet, 0);
        const double lin = phi.row(static_cast<Eigen::Index>(i)).dot(w);
        // compare in ps so the tolerance is relative to the actual magnitude
        CHECK(r.delay_difference * 1e12 == doctest::Approx(lin * 1e12).epsilon(1e-9));
        if (std::abs(lin) > 1e-20) CHECK(r.response == (lin < 0 ? 1 : 0));
    }
}

TEST_CASE("nmq response is the lsb of the floored scaled ratio") {
    // ratio forced to 401.5/400 = 1.00375; g=400 -> floor(401.5) = 401 -> 1
    EntropySource::DelayTable dp(1, 2), dq(1, 2), k(1, 2);
    k.setConstant(0.0);
    dp.setConstant(401.5e-12);
    dq.setConstant(400e-12);
    const NmqRoInstance inst{EntropySource(dp, dq, k, k, 0.0), 400};
    const auto t = eval_nmq_ro(inst, Challenge{0}, kEnv, kQuiet, 0);
    CHECK(t.ratio == doctest::Approx(1.00375).epsilon(1e-12));
    CHECK(t.scaled == doctest::Approx(401.5).epsilon(1e-12));
    CHECK(t.toggle_count == 401);
    CHECK(t.response == 1);

    // same ratio, g=200 -> floor(200.75) = 200 -> 0
    const NmqRoInstance inst200{EntropySource(dp, dq, k, k, 0.0), 200};
    CHECK(eval_nmq_ro(inst200, Challenge{0}, kEnv, kQuiet, 0).response == 0);
}

TEST_CASE("nmq responses are invariant to a global delay rescale") {
    const InstanceConfig cfg;
    const auto base = make_nmq_ro(5, cfg, 400);
    const NmqRoInstance doubled{base.entropy.with_flattened(2.0 * base.entropy.flatten()), 400};
    for (std::size_t i = 0; i < 256; ++i) {
        const Challenge c{Rng(4).bits(i)};
        CHECK(eval_nmq_ro(base, c, kEnv, kQuiet, i).response ==
              eval_nmq_ro(doubled, c, kEnv, kQuiet, i).response);
    }
}

TEST_CASE("closed form and discrete-event oracle agree off the band edges") {
    const InstanceConfig cfg;
    for (const int g : {100, 200, 400}) {
        const auto inst = make_nmq_ro(100 + static_cast<std::uint64_t>(g), cfg, g);
        const auto cs = random_challenges(Rng(g), 500, cfg.n);
        for (std::size_t i = 0; i < cs.size(); ++i) {
            const auto closed = eval_nmq_ro(inst, cs[i], kEnv, kQuiet, i);
            if (std::abs(closed.scaled - std::round(closed.scaled)) < 1e-6) continue;
            const auto event = eval_nmq_ro_event_oracle(inst, cs[i], kEnv, kQuiet, i);
            CHECK(event.response == closed.response);
            CHECK(event.toggle_count == closed.toggle_count);
        }
    }
}

TEST_CASE("alternating response bands along the sorted ratio axis at g=400") {
    const InstanceConfig cfg;
    const auto inst = make_nmq_ro(11, cfg, 400);
    const auto cs = random_challenges(Rng(12), 10000, cfg.n);
    std::vector<std::pair<double, int>> traces(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i) {
        const auto t = eval_nmq_ro(inst, cs[i], kEnv, kQuiet, i);
        traces[i] = {t.ratio, t.response};
    }
    std::sort(traces.begin(), traces.end());
    int alternations = 0;
    for (std::size_t i = 1; i < traces.size(); ++i)
        alternations += traces[i].second != traces[i - 1].second;
    CHECK(alternations >= 3); // non-monotonic striping, not a single threshold
}

TEST_CASE("toggle gap is g minus the closed-form toggle count") {
    const InstanceConfig cfg;
    const auto inst = make_nmq_ro(13, cfg, 800);
    for (std::size_t i = 0; i < 200; ++i) {
        const Challenge c{Rng(14).bits(i)};
        const auto t = eval_nmq_ro(inst, c, kEnv, kQuiet, i);
        CHECK(toggle_gap(inst, c, kEnv, kQuiet, i) == 800 - t.toggle_count);
    }
}

TEST_CASE("1-xor composition is bit-identical to the plain instance") {
    const InstanceConfig cfg;
    const auto comp = make_xor(9, cfg, 200, 1);
    const auto plain = make_nmq_ro(9, cfg, 200);
    CHECK(comp.members.size() == 1);
    CHECK(comp.members[0].entropy.flatten() == plain.entropy.flatten());
    NoiseModel noisy{0.0017, 77};
    for (std::size_t i = 0; i < 500; ++i) {
        const Challenge c{Rng(10).bits(i)};
        CHECK(eval_xor(comp, c, kEnv, noisy, i) == eval_nmq_ro(plain, c, kEnv, noisy, i).response);
    }
}

TEST_CASE("xor of two identical members cancels noiselessly") {
    const InstanceConfig cfg;
    const auto m = make_nmq_ro(15, cfg, 200);
    const XorComposition comp{{m, m}};
    for (std::size_t i = 0; i < 500; ++i)
        CHECK(eval_xor(comp, Challenge{Rng(16).bits(i)}, kEnv, kQuiet, i) == 0);
}

TEST_CASE("xor members share n and g or validation throws") {
    const InstanceConfig cfg;
    XorComposition comp;
    CHECK_THROWS_AS(comp.validate(), std::invalid_argument);
    comp.members.push_back(make_nmq_ro(1, cfg, 200));
    comp.members.push_back(make_nmq_ro(2, cfg, 400));
    CHECK_THROWS_AS(comp.validate(), std::invalid_argument);
    CHECK_THROWS_AS(make_xor(1, cfg, 200, 0), std::invalid_argument);
}

TEST_CASE("xor members beyond the first get independent forked seeds") {
    const InstanceConfig cfg;
    const auto comp = make_xor(21, cfg, 200, 3);
    REQUIRE(comp.members.size() == 3);
    CHECK(comp.members[0].entropy.flatten() != comp.members[1].entropy.flatten());
    CHECK(comp.members[1].entropy.flatten() != comp.members[2].entropy.flatten());
    // member list is nested: a 2-xor from the same seed shares members 0 and 1
    const auto comp2 = make_xor(21, cfg, 200, 2);
    CHECK(comp2.members[1].entropy.flatten() == comp.members[1].entropy.flatten());
}

TEST_CASE("noisy evaluation is deterministic per draw and member") {
    const InstanceConfig cfg;
    const auto inst = make_nmq_ro(30, cfg, 200);
    const NoiseModel noisy{0.01, 5};
    const Challenge c{0x1234};
    const auto a = eval_nmq_ro(inst, c, kEnv, noisy, 7, 2);
    const auto b = eval_nmq_ro(inst, c, kEnv, noisy, 7, 2);
    CHECK(a.ratio == b.ratio);
    CHECK(a.response == b.response);
    CHECK(eval_nmq_ro(inst, c, kEnv, noisy, 8, 2).ratio != a.ratio);
}

TEST_CASE("invalid g is rejected") {
    const InstanceConfig cfg;
    const auto inst = make_nmq_ro(1, cfg, 0);
    CHECK_THROWS_AS(eval_nmq_ro(inst, Challenge{0}, kEnv, kQuiet, 0), std::invalid_argument);
}
