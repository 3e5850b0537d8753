#include <doctest.h>

#include <initializer_list>
#include <stdexcept>

#include <cmath>

#include "powmfg/protocol.hpp"

using namespace powmfg;

namespace {

// Epoch index by literally counting halvings block window by block window.
std::int64_t epoch_by_counting(std::int64_t windows) {
    std::int64_t blocks = 2016 * windows;
    std::int64_t epoch = 0;
    while (blocks >= 210000) {
        blocks -= 210000;
        ++epoch;
    }
    return epoch;
}

}  // namespace

TEST_CASE("block reward schedule") {
    ProtocolParams p;
    CHECK(block_reward(0, p) == 50.0);

    p.fee_floor = 0.001;
    CHECK(block_reward(1'000'000'000, p) == 0.001);

    p.fee_floor = 0.0;
    // One full halving epoch: floor(2016*105/210000) = 1.
    CHECK(epoch_by_counting(105) == 1);
    CHECK(halving_epoch(105, p) == 1);
    CHECK(block_reward(105, p) == 25.0);

    for (std::int64_t n : {0, 1, 104, 105, 500, 3000, 3400}) {
        CHECK(halving_epoch(n, p) == epoch_by_counting(n));
    }
}

TEST_CASE("block reward is nonincreasing and floored") {
    ProtocolParams p;
    p.fee_floor = 0.25;
    double prev = block_reward(0, p);
    for (std::int64_t n = 1; n < 4000; n += 7) {
        const double r = block_reward(n, p);
        CHECK(r <= prev);
        CHECK(r >= p.fee_floor);
        prev = r;
    }
    CHECK(block_reward(4000, p) == p.fee_floor);  // epoch 32 reached
}

TEST_CASE("cumulative supply closed form") {
    ProtocolParams p;
    // Epoch 0: a full leading window of 2016 blocks at 50 tokens.
    CHECK(cumulative_supply(0, p) == doctest::Approx(100800.0).epsilon(1e-14));
    // Epoch 1: 210000*50 plus (2016 - mod(210000, 2016)) * 25.
    const double expect_l1 = 210000.0 * 50.0 + (2016.0 - 336.0) * 25.0;
    CHECK(cumulative_supply(105, p) == doctest::Approx(expect_l1).epsilon(1e-14));
    CHECK(expect_l1 == 10'542'000.0);
    // Far past the last halving the supply settles at 2.1e7.
    CHECK(cumulative_supply(4'000'000, p) ==
          doctest::Approx(2.1e7).epsilon(1e-9));
}

TEST_CASE("cumulative supply is nondecreasing and bounded") {
    ProtocolParams p;
    double prev = 0.0;
    for (std::int64_t n = 0; n < 4200; ++n) {
        const double s = cumulative_supply(n, p);
        CHECK(s >= prev);
        CHECK(s <= 2.1e7 + 2016.0 * 50.0);
        prev = s;
    }
}

TEST_CASE("halving epoch partial sums reach the supply limit") {
    double acc = 0.0;
    for (int l = 0; l < 60; ++l) acc += 210000.0 * 50.0 / std::pow(2.0, l);
    CHECK(acc == doctest::Approx(2.1e7).epsilon(1e-12));
}

TEST_CASE("difficulty retarget") {
    ProtocolParams p;
    CHECK(difficulty_retarget(1.0, 1209600.0, p) == 1.0);
    CHECK(difficulty_retarget(1.0, 604800.0, p) == 2.0);
    CHECK(difficulty_retarget(3.0, 2419200.0, p) == 1.5);
    CHECK_THROWS_AS(difficulty_retarget(1.0, 0.0, p), std::domain_error);
    CHECK_THROWS_AS(difficulty_retarget(1.0, -5.0, p), std::domain_error);
    CHECK_THROWS_AS(difficulty_retarget(0.0, 100.0, p), std::domain_error);
}

TEST_CASE("initial hash target") {
    ProtocolParams p;
    CHECK(initial_hash_target(1.0, p) ==
          doctest::Approx(2016.0 * 4294967296.0).epsilon(1e-12));
    CHECK(initial_hash_target(1e15, p) == doctest::Approx(2016.0).epsilon(1e-6));
    // Strictly decreasing in the node count.
    const double h1 = initial_hash_target(1.0, p);
    const double h10 = initial_hash_target(10.0, p);
    const double h100 = initial_hash_target(100.0, p);
    CHECK(h1 > h10);
    CHECK(h10 > h100);
    CHECK(h100 > 2016.0);
    CHECK_THROWS_AS(initial_hash_target(0.0, p), std::domain_error);
}

TEST_CASE("difficulty from hashes") {
    ProtocolParams p;
    // The seed hash total collapses the expression to difficulty one.
    for (double m : {1.0, 10.0, 1e3, 1e6}) {
        const HashSegment seg{0, initial_hash_target(m, p), 1209600.0};
        CHECK(difficulty_from_hashes(seg, m, p) ==
              doctest::Approx(1.0).epsilon(1e-9));
    }
    // Single miner: the root drops out and d = H / (2016 * 2^32).
    const HashSegment seg{1, 2.0 * 2016.0, 1209600.0};
    CHECK(difficulty_from_hashes(seg, 1.0, p) ==
          doctest::Approx(2.0 / 4294967296.0).epsilon(1e-12));
    // More work in a window means higher difficulty.
    double prev = 0.0;
    for (double h = 4032.0; h < 4e6; h *= 2.0) {
        const double d = difficulty_from_hashes({0, h, 0.0}, 7.0, p);
        CHECK(d > prev);
        prev = d;
    }
    CHECK_THROWS_AS(difficulty_from_hashes({0, 2016.0, 0.0}, 1.0, p),
                    std::domain_error);
}

TEST_CASE("block arrival intensity") {
    ProtocolParams p;
    // Identical windows pin the rate at one block per target interval, exactly.
    for (double h : {5000.0, 1e9, 3.7e14}) {
        for (double m : {1.0, 17.0, 1e6}) {
            CHECK(block_arrival_intensity(h, h, m, p) == 1.0 / 600.0);
        }
    }
    // Single miner doubling its work doubles the rate.
    CHECK(block_arrival_intensity(4032.0, 8064.0, 1.0, p) ==
          doctest::Approx(1.0 / 300.0).epsilon(1e-12));
    CHECK_THROWS_AS(block_arrival_intensity(2016.0, 4032.0, 1.0, p),
                    std::domain_error);
}

TEST_CASE("inflation rate") {
    ProtocolParams p;
    CHECK(inflation_rate(50.0, 1.0 / 600.0, 100800.0) ==
          doctest::Approx(50.0 / (600.0 * 100800.0)).epsilon(1e-15));
    CHECK(inflation_rate(0.0, 1.0 / 600.0, 2.1e7) == 0.0);
    CHECK_THROWS_AS(inflation_rate(50.0, 1.0 / 600.0, 0.0), std::domain_error);

    // Decays across halving epochs at the steady arrival rate.
    const double r0 = inflation_rate(block_reward(0, p), 1.0 / 600.0,
                                     cumulative_supply(0, p));
    const double r1 = inflation_rate(block_reward(105, p), 1.0 / 600.0,
                                     cumulative_supply(105, p));
    const double r2 = inflation_rate(block_reward(209, p), 1.0 / 600.0,
                                     cumulative_supply(209, p));
    CHECK(halving_epoch(209, ProtocolParams{}) == 2);
    CHECK(r0 > r1);
    CHECK(r1 > r2);
}

TEST_CASE("protocol params validation") {
    ProtocolParams p;
    p.fee_floor = 1.5;
    CHECK_THROWS_AS(p.validate(), std::domain_error);
    p = ProtocolParams{};
    p.retarget_blocks = 0;
    CHECK_THROWS_AS(p.validate(), std::domain_error);
}
