#ifndef POGO_PROTOCOL_HPP
#define POGO_PROTOCOL_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pogo/bytes.hpp"
#include "pogo/hash.hpp"
#include "pogo/random.hpp"

namespace pogo {

enum class ReasonCode : uint8_t {
    None = 0,
    QuantHashMismatch = 1,
    QuantLossNotImproved = 2,
    LeafProofInvalid = 3,
    LeafQuantMismatch = 4,
    DataUnavailable = 5,
};

inline const char* reason_name(ReasonCode r) {
    switch (r) {
        case ReasonCode::None: return "None";
        case ReasonCode::QuantHashMismatch: return "QuantHashMismatch";
        case ReasonCode::QuantLossNotImproved: return "QuantLossNotImproved";
        case ReasonCode::LeafProofInvalid: return "LeafProofInvalid";
        case ReasonCode::LeafQuantMismatch: return "LeafQuantMismatch";
        case ReasonCode::DataUnavailable: return "DataUnavailable";
    }
    return "?";
}

enum class Verdict : uint8_t { Positive = 0, Negative = 1 };

struct Block {
    uint64_t height = 0;
    Hash256 parent_hash{};
    std::string proposer;
    std::string model_id;
    Hash256 hash_full_model32{};
    Hash256 hash_quant4{};
    Hash256 vrf_proof{};
    float claimed_loss_before = 0.0f;
    float claimed_loss_after = 0.0f;

    Bytes serialize() const {
        ByteWriter w;
        w.u64(height);
        w.raw(parent_hash);
        w.lp_string(proposer);
        w.lp_string(model_id);
        w.raw(hash_full_model32);
        w.raw(hash_quant4);
        w.raw(vrf_proof);
        w.f32(claimed_loss_before);
        w.f32(claimed_loss_after);
        return w.take();
    }

    Hash256 hash() const { return sha256(serialize()); }
};

struct Attestation {
    std::string verifier;
    uint64_t block_height = 0;
    Verdict verdict = Verdict::Positive;
    ReasonCode reason = ReasonCode::None;
    Hash256 auth_tag{};
};

inline Hash256 attestation_tag(const Hash256& key, const std::string& verifier, uint64_t height,
                               Verdict verdict, ReasonCode reason) {
    ByteWriter w;
    w.raw(key);
    w.lp_string(verifier);
    w.u64(height);
    w.u8(static_cast<uint8_t>(verdict));
    w.u8(static_cast<uint8_t>(reason));
    return sha256(w.bytes());
}

inline Attestation make_attestation(const Hash256& key, const std::string& verifier, uint64_t height,
                                    Verdict verdict, ReasonCode reason) {
    return {verifier, height, verdict, reason, attestation_tag(key, verifier, height, verdict, reason)};
}

struct StakeTable {
    struct Entry {
        double stake = 0.0;
        Hash256 key{}; // registered key material; doubles as the VRF secret in the simulator
    };
    std::map<std::string, Entry> entries; // map order gives the deterministic participant order

    double total_stake() const {
        double t = 0.0;
        for (const auto& [id, e] : entries) t += e.stake;
        return t;
    }

    std::vector<StakeEntry> weighted() const {
        std::vector<StakeEntry> v;
        for (const auto& [id, e] : entries) v.push_back({id, e.stake});
        return v;
    }

    bool verify_attestation(const Attestation& a) const {
        auto it = entries.find(a.verifier);
        if (it == entries.end()) return false;
        return attestation_tag(it->second.key, a.verifier, a.block_height, a.verdict, a.reason) == a.auth_tag;
    }
};

struct FinalizationPolicy {
    uint64_t w = 8; // finalization window; challenge happens at N + w/2
    double positive_threshold = 2.0 / 3.0;
    double slash_fraction = 0.1;
    double miner_share = 0.8;
    uint64_t challenges_per_block = 1;

    void validate() const {
        if (w < 2 || w % 2 != 0) throw std::runtime_error("policy: w must be even and >= 2");
        if (!(positive_threshold > 0.0 && positive_threshold <= 1.0))
            throw std::runtime_error("policy: positiveThreshold must be in (0, 1]");
        if (slash_fraction < 0.0 || slash_fraction > 1.0)
            throw std::runtime_error("policy: slashFraction must be in [0, 1]");
        if (miner_share < 0.0 || miner_share > 1.0)
            throw std::runtime_error("policy: minerShare must be in [0, 1]");
        if (challenges_per_block < 1) throw std::runtime_error("policy: challengesPerBlock must be >= 1");
    }
};

// Verdict components in their fixed precedence order. A negative attestation
// reports the first failing component, so the ordering is consensus-visible.
struct VerdictComponents {
    bool quant_hash_ok = true;
    bool quant_loss_ok = true;
    bool leaf_proof_ok = true;
    bool leaf_consistency_ok = true;
    bool data_available = true;

    std::pair<Verdict, ReasonCode> combine() const {
        if (!quant_hash_ok) return {Verdict::Negative, ReasonCode::QuantHashMismatch};
        if (!quant_loss_ok) return {Verdict::Negative, ReasonCode::QuantLossNotImproved};
        if (!leaf_proof_ok) return {Verdict::Negative, ReasonCode::LeafProofInvalid};
        if (!leaf_consistency_ok) return {Verdict::Negative, ReasonCode::LeafQuantMismatch};
        if (!data_available) return {Verdict::Negative, ReasonCode::DataUnavailable};
        return {Verdict::Positive, ReasonCode::None};
    }
};

struct FinalizeOutcome {
    bool finalized = false;
    double positive_stake = 0.0;
    double slash_amount = 0.0;                      // burned from the proposer on rejection
    std::map<std::string, double> reward_transfers; // credited on finalization
};

// Tally attestations at block N + w. Only the first attestation per verifier
// binds; tags that fail verification against the registered keys never count.
inline FinalizeOutcome finalize(const std::vector<Attestation>& attestations, const StakeTable& stakes,
                                const FinalizationPolicy& policy, const std::string& proposer,
                                double reward_pool) {
    std::map<std::string, const Attestation*> bound;
    for (const auto& a : attestations) {
        if (a.verifier == proposer) continue;
        if (!stakes.verify_attestation(a)) continue;
        bound.emplace(a.verifier, &a); // emplace keeps the first one
    }
    double positive = 0.0;
    std::vector<std::pair<std::string, double>> positive_attesters;
    for (const auto& [id, a] : bound) {
        if (a->verdict == Verdict::Positive) {
            double s = stakes.entries.at(id).stake;
            positive += s;
            positive_attesters.push_back({id, s});
        }
    }
    FinalizeOutcome out;
    out.positive_stake = positive;
    double total = stakes.total_stake();
    if (positive >= policy.positive_threshold * total) {
        out.finalized = true;
        double miner_cut = policy.miner_share * reward_pool;
        out.reward_transfers[proposer] += miner_cut;
        double verifier_pool = reward_pool - miner_cut;
        double attester_stake = 0.0;
        for (const auto& [id, s] : positive_attesters) attester_stake += s;
        if (attester_stake > 0.0) {
            for (const auto& [id, s] : positive_attesters)
                out.reward_transfers[id] += verifier_pool * (s / attester_stake);
        } else {
            out.reward_transfers[proposer] += verifier_pool;
        }
    } else {
        out.finalized = false;
        auto it = stakes.entries.find(proposer);
        if (it != stakes.entries.end())
            out.slash_amount = it->second.stake * policy.slash_fraction;
    }
    return out;
}

} // namespace pogo

#endif // POGO_PROTOCOL_HPP
