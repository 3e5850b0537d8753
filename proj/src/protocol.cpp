#include "powmfg/protocol.hpp"

#include <cmath>
#include <stdexcept>

namespace powmfg {

void ProtocolParams::validate() const {
    if (retarget_blocks <= 0 || halving_blocks <= 0 || max_halvings <= 0) {
        throw std::domain_error("protocol: block counts must be positive");
    }
    if (base_reward <= 0.0) {
        throw std::domain_error("protocol: base_reward must be positive");
    }
    if (fee_floor < 0.0 || fee_floor > 1.0) {
        throw std::domain_error("protocol: fee_floor must lie in [0, 1]");
    }
    if (target_block_seconds <= 0.0) {
        throw std::domain_error("protocol: target_block_seconds must be positive");
    }
}

std::int64_t halving_epoch(std::int64_t blocks_found, const ProtocolParams& p) {
    if (blocks_found < 0) {
        throw std::domain_error("protocol: blocks_found must be nonnegative");
    }
    // floor(retarget_blocks * N / halving_blocks) in exact integer arithmetic.
    // Guard the product against overflow: past ~2^62 windows the epoch is
    // astronomically large anyway, so saturate.
    const std::int64_t limit = INT64_MAX / p.retarget_blocks;
    if (blocks_found > limit) {
        return INT64_MAX / p.halving_blocks;
    }
    return (p.retarget_blocks * blocks_found) / p.halving_blocks;
}

double block_reward(std::int64_t blocks_found, const ProtocolParams& p) {
    const std::int64_t l = halving_epoch(blocks_found, p);
    if (l >= p.max_halvings) {
        return p.fee_floor;
    }
    return std::ldexp(p.base_reward, static_cast<int>(-l)) + p.fee_floor;
}

double cumulative_supply(std::int64_t blocks_found, const ProtocolParams& p) {
    const std::int64_t l = halving_epoch(blocks_found, p);
    const double half_pow_l =
        l < 2048 ? std::ldexp(1.0, static_cast<int>(-l)) : 0.0;
    const double geometric = static_cast<double>(p.halving_blocks) *
                             p.base_reward * (1.0 - half_pow_l) / 0.5;
    // mod(halving_blocks * l, retarget_blocks) without overflowing the
    // product: reduce both factors first.
    const std::int64_t rem =
        ((p.halving_blocks % p.retarget_blocks) * (l % p.retarget_blocks)) %
        p.retarget_blocks;
    const double head = static_cast<double>(p.retarget_blocks - rem) *
                        p.base_reward * half_pow_l;
    return geometric + head;
}

double difficulty_retarget(double d_prev, double elapsed_seconds,
                           const ProtocolParams& p) {
    if (d_prev <= 0.0) {
        throw std::domain_error("protocol: difficulty must be positive");
    }
    if (elapsed_seconds <= 0.0) {
        throw std::domain_error("protocol: elapsed time must be positive");
    }
    const double target_seconds =
        static_cast<double>(p.retarget_blocks) * p.target_block_seconds;
    return target_seconds * d_prev / elapsed_seconds;
}

namespace {

// 1 - (1 - retarget/H)^(1/M), evaluated through logs so the M-th root keeps
// precision for node counts far beyond 1e6.
double root_deficit(double hashes, double node_count, const ProtocolParams& p) {
    const double ratio = static_cast<double>(p.retarget_blocks) / hashes;
    return -std::expm1(std::log1p(-ratio) / node_count);
}

}  // namespace

double difficulty_from_hashes(const HashSegment& seg, double node_count,
                              const ProtocolParams& p) {
    if (!(seg.total_hashes > static_cast<double>(p.retarget_blocks))) {
        throw std::domain_error(
            "protocol: window hash total must exceed the retarget block count");
    }
    if (!(node_count >= 1.0)) {
        throw std::domain_error("protocol: node_count must be at least 1");
    }
    return 1.0 / (p.two_pow_32 * root_deficit(seg.total_hashes, node_count, p));
}

double initial_hash_target(double node_count, const ProtocolParams& p) {
    if (!(node_count >= 1.0)) {
        throw std::domain_error("protocol: node_count must be at least 1");
    }
    const double deficit =
        -std::expm1(node_count * std::log1p(-1.0 / p.two_pow_32));
    return static_cast<double>(p.retarget_blocks) / deficit;
}

double block_arrival_intensity(double hashes_prev, double hashes_cur,
                               double node_count, const ProtocolParams& p) {
    if (!(hashes_prev > static_cast<double>(p.retarget_blocks)) ||
        !(hashes_cur > static_cast<double>(p.retarget_blocks))) {
        throw std::domain_error(
            "protocol: window hash totals must exceed the retarget block count");
    }
    if (!(node_count >= 1.0)) {
        throw std::domain_error("protocol: node_count must be at least 1");
    }
    const double num = root_deficit(hashes_prev, node_count, p);
    const double den = root_deficit(hashes_cur, node_count, p);
    return (num / den) / p.target_block_seconds;
}

double inflation_rate(double reward, double arrival_rate, double supply) {
    if (!(supply > 0.0)) {
        throw std::domain_error("protocol: circulating supply must be positive");
    }
    return reward * arrival_rate / supply;
}

}  // namespace powmfg
