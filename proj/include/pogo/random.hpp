#ifndef POGO_RANDOM_HPP
#define POGO_RANDOM_HPP

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "pogo/bytes.hpp"
#include "pogo/hash.hpp"

namespace pogo {

enum class SeedPurpose : uint8_t {
    Leader = 0,
    ModelPick = 1,
    MiniBatch = 2,
    VerSet = 3,
    LeafChallenge = 4,
};

struct Seed {
    Hash256 bytes{};
    uint64_t height = 0;
    SeedPurpose purpose = SeedPurpose::Leader;
};

// Seed = H(parentBlockHash || height || purposeTag). Anyone holding the chain
// can recompute it; nobody can compute it before the parent hash exists.
inline Seed derive_seed(const Hash256& parent_hash, uint64_t height, SeedPurpose purpose) {
    ByteWriter w;
    w.raw(parent_hash);
    w.u64(height);
    w.u8(static_cast<uint8_t>(purpose));
    return Seed{sha256(w.bytes()), height, purpose};
}

// Counter-mode stream over the system hash. All simulator randomness flows
// through this; no std:: distributions, whose outputs are implementation
// defined, appear anywhere in consensus-visible paths.
class SeedStream {
public:
    explicit SeedStream(const Seed& seed) : state_(seed.bytes) {}
    explicit SeedStream(const Hash256& raw) : state_(raw) {}

    uint64_t next_u64() {
        if (offset_ + 8 > 32) refill();
        uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | block_[offset_ + i];
        offset_ += 8;
        return v;
    }

    // Uniform in [0, n) via rejection sampling, so no modulo bias.
    uint64_t next_below(uint64_t n) {
        if (n == 0) throw std::runtime_error("next_below: empty range");
        uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
        for (;;) {
            uint64_t v = next_u64();
            if (v < limit) return v % n;
        }
    }

    // 53-bit mantissa uniform in [0, 1).
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    void refill() {
        ByteWriter w;
        w.raw(state_);
        w.u64(counter_++);
        block_ = sha256(w.bytes());
        offset_ = 0;
    }

    Hash256 state_;
    Hash256 block_{};
    uint64_t counter_ = 0;
    size_t offset_ = 32; // force refill on first use
};

// k distinct indices from [0, n): the first k slots of a seeded Fisher-Yates
// shuffle. Uniform without replacement.
inline std::vector<uint64_t> pick_indices(const Seed& seed, uint64_t population, uint64_t count) {
    if (count > population) throw std::runtime_error("pick_indices: count exceeds population");
    std::vector<uint64_t> idx(population);
    std::iota(idx.begin(), idx.end(), 0);
    SeedStream rng(seed);
    for (uint64_t i = 0; i < count; ++i) {
        uint64_t j = i + rng.next_below(population - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    return idx;
}

struct StakeEntry {
    std::string id;
    double stake = 0.0;
};

// Weighted draw with P(i) = stake_i / totalStake; entries are walked in the
// order given, which callers must keep deterministic (sorted by id).
inline std::string pick_stake_weighted(const Seed& seed, const std::vector<StakeEntry>& entries) {
    double total = 0.0;
    for (const auto& e : entries) total += e.stake;
    if (total <= 0.0) throw std::runtime_error("pick_stake_weighted: zero total stake");
    SeedStream rng(seed);
    double x = rng.next_unit() * total;
    double acc = 0.0;
    for (const auto& e : entries) {
        acc += e.stake;
        if (x < acc) return e.id;
    }
    // x landed on the extreme end of the last positive-stake entry.
    for (auto it = entries.rbegin(); it != entries.rend(); ++it)
        if (it->stake > 0.0) return it->id;
    throw std::runtime_error("pick_stake_weighted: no positive stake");
}

// Keyed-hash stand-in for an elliptic-curve VRF. The proof is recomputable by
// anyone holding the participant's registered key material, which in the
// simulator is the stake table. The interface matches what a real VRF would
// expose so the construction can be swapped out.
inline Hash256 vrf_prove(const Hash256& secret_key, const Seed& seed) {
    ByteWriter w;
    w.raw(secret_key);
    w.raw(seed.bytes);
    w.u64(seed.height);
    w.u8(static_cast<uint8_t>(seed.purpose));
    return sha256(w.bytes());
}

inline bool vrf_verify(const Hash256& registered_key, const Seed& seed, const Hash256& proof) {
    return vrf_prove(registered_key, seed) == proof;
}

} // namespace pogo

#endif // POGO_RANDOM_HPP
