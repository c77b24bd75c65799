#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "puflab/challenge.hpp"

using namespace puflab;

TEST_CASE("bit extraction is LSB-first") {
    const Challenge c{0b1011};
    CHECK(c.bit(0) == 1);
    CHECK(c.bit(1) == 1);
    CHECK(c.bit(2) == 0);
    CHECK(c.bit(3) == 1);
    CHECK(c.bit(63) == 0);
}

TEST_CASE("random_challenges masks to n bits and reproduces") {
    const auto a = random_challenges(Rng(5), 1000, 8);
    const auto b = random_challenges(Rng(5), 1000, 8);
    CHECK(a == b);
    for (const auto& c : a) CHECK(c.bits < 256);
    CHECK_THROWS(random_challenges(Rng(5), 10, 0));
    CHECK_THROWS(random_challenges(Rng(5), 10, 65));
}

TEST_CASE("challenge_matrix mirrors bit()") {
    const auto cs = random_challenges(Rng(2), 50, 16);
    const auto m = challenge_matrix<double>(cs, 16);
    REQUIRE(m.rows() == 50);
    REQUIRE(m.cols() == 16);
    for (int r = 0; r < 50; ++r)
        for (int c = 0; c < 16; ++c) CHECK(m(r, c) == cs[static_cast<std::size_t>(r)].bit(c));
}

TEST_CASE("parity features of the all-zero challenge are all +1") {
    const std::vector<Challenge> cs = {Challenge{0}};
    const auto m = parity_features<double>(cs, 12);
    REQUIRE(m.cols() == 13);
    for (int i = 0; i <= 12; ++i) CHECK(m(0, i) == 1.0);
}

TEST_CASE("flipping challenge bit j negates features 0..j only") {
    const int n = 10;
    for (int j = 0; j < n; ++j) {
        const std::vector<Challenge> cs = {Challenge{0}, Challenge{1ULL << j}};
        const auto m = parity_features<double>(cs, n);
        for (int i = 0; i < n; ++i) {
            if (i <= j)
                CHECK(m(1, i) == -m(0, i));
            else
                CHECK(m(1, i) == m(0, i));
        }
        CHECK(m(1, n) == 1.0); // constant feature untouched
    }
}

TEST_CASE("parity features match the direct product definition") {
    const int n = 20;
    const auto cs = random_challenges(Rng(77), 200, n);
    const auto m = parity_features<double>(cs, n);
    for (std::size_t r = 0; r < cs.size(); ++r) {
        for (int i = 0; i < n; ++i) {
            double prod = 1;
            for (int j = i; j < n; ++j) prod *= 1 - 2 * cs[r].bit(j);
            CHECK(m(static_cast<Eigen::Index>(r), i) == prod);
        }
        CHECK(m(static_cast<Eigen::Index>(r), n) == 1.0);
    }
}
