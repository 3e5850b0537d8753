#pragma once

#include <cstdint>

namespace powmfg {

inline constexpr double kSecondsPerFortnight = 1209600.0;

// Proof-of-Work reward-schedule constants. Defaults are the Bitcoin values;
// fee_floor is the voluntary transaction-fee level the per-block reward
// decays to once the coin-creation schedule is exhausted.
struct ProtocolParams {
    std::int64_t retarget_blocks = 2016;
    std::int64_t halving_blocks = 210000;
    double base_reward = 50.0;
    double fee_floor = 0.0;
    std::int64_t max_halvings = 32;
    double target_block_seconds = 600.0;
    double two_pow_32 = 4294967296.0;

    void validate() const;
};

// Aggregate hash work over one retarget window. total_hashes must exceed
// retarget_blocks or the difficulty expression leaves its domain.
struct HashSegment {
    std::int64_t index = 0;
    double total_hashes = 0.0;
    double elapsed_seconds = 0.0;
};

// Halving epoch for a given number of completed retarget windows. The
// schedule indexes epochs by windows, not raw blocks: one window holds
// retarget_blocks blocks, so the epoch advances every
// halving_blocks / retarget_blocks windows.
std::int64_t halving_epoch(std::int64_t blocks_found, const ProtocolParams& p);

// Tokens minted per block after blocks_found windows, floored at fee_floor
// once max_halvings epochs have passed.
double block_reward(std::int64_t blocks_found, const ProtocolParams& p);

// Closed-form circulating supply after blocks_found windows.
double cumulative_supply(std::int64_t blocks_found, const ProtocolParams& p);

// Difficulty rescaled so the elapsed window time is pulled back to the
// two-week target. elapsed_seconds must be positive.
double difficulty_retarget(double d_prev, double elapsed_seconds,
                           const ProtocolParams& p);

// Difficulty implied by the hash work of one window shared by node_count
// simultaneous miners.
double difficulty_from_hashes(const HashSegment& seg, double node_count,
                              const ProtocolParams& p);

// Window hash total that seeds the difficulty sequence at d = 1.
double initial_hash_target(double node_count, const ProtocolParams& p);

// Block arrival rate (blocks per second) over a window, given the previous
// and current window hash totals. Equals 1/target_block_seconds when the
// totals agree.
double block_arrival_intensity(double hashes_prev, double hashes_cur,
                               double node_count, const ProtocolParams& p);

// Token inflation rate per second: reward per block times blocks per second
// over circulating supply.
double inflation_rate(double reward, double arrival_rate, double supply);

}  // namespace powmfg
