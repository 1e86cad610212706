#ifndef POGO_PROPERTIES_HPP
#define POGO_PROPERTIES_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pogo/merkle.hpp"
#include "pogo/simnet.hpp"

namespace pogo {

struct PropertyResult {
    std::string name;
    std::string status; // "pass" | "fail" | "skipped"
    std::string detail;

    bool failed() const { return status == "fail"; }
};

// Small, fast canonical scenario: three honest stakers plus one node whose
// strategy the individual properties override. Adversary stake is 1/4, below
// the 1/3 honest-majority boundary.
inline ScenarioConfig canonical_config(uint64_t seed) {
    ScenarioConfig c;
    c.seed = seed;
    c.block_count = 16;
    c.leaf_size_bytes = 64;
    c.alpha = 0.25;
    c.policy.w = 4;
    // Two distinct challenge indices make a (numLeaves - 1)-leaf tamper a
    // certain catch, which keeps the catalog safety assertions exact.
    c.policy.challenges_per_block = 2;
    c.nodes = {
        {"v0", 100.0, 0.0, {}},
        {"v1", 100.0, 0.0, {}},
        {"v2", 100.0, 0.0, {}},
        {"adv", 100.0, 0.0, {}},
    };
    TaskSpec t;
    t.name = "toy";
    t.arch = {8, {16}, 4, LossKind::SquaredError};
    t.samples = 96;
    t.dataset_seed = seed;
    t.noise = 0.05f;
    t.eta = 0.1f;
    t.epsilon = 1e-4f;
    t.epsilon_quant = 1e-5f;
    t.batch_size = 24;
    t.owner = "v0";
    t.deposit = 2000.0;
    c.nodes[0].balance = 2500.0;
    c.tasks = {t};
    return c;
}

namespace detail {

inline ScenarioConfig with_adversary(const ScenarioConfig& base, uint64_t seed, Strategy strategy,
                                     bool force) {
    ScenarioConfig c = base;
    c.seed = seed;
    c.nodes.back().strategy = strategy;
    if (force) c.force_proposer = c.nodes.back().id;
    return c;
}

inline double adversary_stake_fraction(const ScenarioConfig& c) {
    double adv = 0.0, total = 0.0;
    for (const auto& n : c.nodes) {
        total += n.stake;
        if (n.strategy.adversarial()) adv += n.stake;
    }
    return total > 0.0 ? adv / total : 0.0;
}

} // namespace detail

// Property 1: a proposer that fabricates its loss decrement never gets
// finalized while honest stake holds the threshold.
inline PropertyResult property_authentic_training(const ScenarioConfig& base, uint64_t base_seed,
                                                  uint64_t runs) {
    PropertyResult res{"authentic-training", "pass", ""};
    uint64_t proposed = 0;
    for (uint64_t r = 0; r < runs; ++r) {
        ScenarioConfig c = detail::with_adversary(base, base_seed + r, {StrategyKind::ForgeLoss, 0}, true);
        if (detail::adversary_stake_fraction(c) > 1.0 - c.policy.positive_threshold)
            return {"authentic-training", "skipped", "byzantine-majority"};
        SimReport rep = run_scenario(c);
        auto it = rep.strategy_stats.find("ForgeLoss");
        if (it != rep.strategy_stats.end()) {
            proposed += it->second.proposed;
            if (it->second.finalized > 0) {
                res.status = "fail";
                res.detail = "forged block finalized at seed " + std::to_string(base_seed + r);
                return res;
            }
        }
    }
    if (proposed == 0) {
        res.status = "fail";
        res.detail = "adversary never proposed; property untested";
    } else {
        res.detail = std::to_string(proposed) + " forged proposals, 0 finalized";
    }
    return res;
}

// Property 2: exhaustive single-bit tampering on a small tree. Every bit of
// every leaf, every path element, and the root must break verification, and
// every untampered proof must verify.
inline PropertyResult property_merkle_integrity() {
    PropertyResult res{"merkle-integrity", "pass", ""};
    Bytes data;
    for (int i = 0; i < 8 * 4; ++i) data.push_back(static_cast<uint8_t>(i * 37 + 1));
    MerkleTree tree(data, 4); // 8 leaves of 4 bytes
    Hash256 root = tree.commitment().root;
    uint64_t tampers = 0;
    for (uint64_t leaf = 0; leaf < 8; ++leaf) {
        LeafProof proof = tree.prove(leaf);
        if (!verify(proof, root)) {
            return {"merkle-integrity", "fail", "completeness broke at leaf " + std::to_string(leaf)};
        }
        for (size_t byte = 0; byte < proof.leaf_bytes.size(); ++byte) {
            for (int bit = 0; bit < 8; ++bit) {
                LeafProof bad = proof;
                bad.leaf_bytes[byte] ^= static_cast<uint8_t>(1 << bit);
                if (verify(bad, root))
                    return {"merkle-integrity", "fail", "leaf bit flip went undetected"};
                ++tampers;
            }
        }
        for (size_t e = 0; e < proof.path.size(); ++e) {
            for (size_t byte = 0; byte < 32; ++byte) {
                for (int bit = 0; bit < 8; ++bit) {
                    LeafProof bad = proof;
                    bad.path[e].sibling[byte] ^= static_cast<uint8_t>(1 << bit);
                    if (verify(bad, root))
                        return {"merkle-integrity", "fail", "path bit flip went undetected"};
                    ++tampers;
                }
            }
        }
        for (size_t byte = 0; byte < 32; ++byte) {
            for (int bit = 0; bit < 8; ++bit) {
                Hash256 bad_root = root;
                bad_root[byte] ^= static_cast<uint8_t>(1 << bit);
                if (verify(proof, bad_root))
                    return {"merkle-integrity", "fail", "root bit flip went undetected"};
                ++tampers;
            }
        }
    }
    res.detail = std::to_string(tampers) + " tampered proofs all rejected";
    return res;
}

// Property 3: withholding either the quantized model or the leaf answer gets
// the block rejected whenever honest stake meets the threshold.
inline PropertyResult property_data_availability(const ScenarioConfig& base, uint64_t base_seed,
                                                 uint64_t runs) {
    for (StrategyKind kind : {StrategyKind::WithholdQuant, StrategyKind::WithholdLeafAnswer}) {
        uint64_t proposed = 0;
        for (uint64_t r = 0; r < runs; ++r) {
            ScenarioConfig c = detail::with_adversary(base, base_seed + r, {kind, 0}, true);
            SimReport rep = run_scenario(c);
            Strategy s{kind, 0};
            auto it = rep.strategy_stats.find(s.name());
            if (it != rep.strategy_stats.end()) {
                proposed += it->second.proposed;
                if (it->second.finalized > 0 || it->second.rejected != it->second.proposed)
                    return {"data-availability", "fail", s.name() + " block not rejected"};
            }
        }
        if (proposed == 0) return {"data-availability", "fail", "withholding adversary never proposed"};
    }
    return {"data-availability", "pass", "all withholding blocks rejected"};
}

// Property 4: every rejection slashes exactly the proposer by exactly
// slashFraction, and the token supply balances at every height.
inline PropertyResult property_slashing(const ScenarioConfig& base, uint64_t base_seed,
                                        uint64_t runs) {
    std::vector<Strategy> catalog = {
        {StrategyKind::Honest, 0},        {StrategyKind::ForgeLoss, 0},
        {StrategyKind::TamperLeaves, 13}, {StrategyKind::WithholdQuant, 0},
        {StrategyKind::WithholdLeafAnswer, 0}, {StrategyKind::PublishWrongQuant, 0},
        {StrategyKind::LateNudgeAbuse, 0},
    };
    uint64_t rejections = 0;
    for (const Strategy& strat : catalog) {
        for (uint64_t r = 0; r < runs; ++r) {
            ScenarioConfig c = detail::with_adversary(base, base_seed + r, strat, strat.adversarial());
            SimReport rep = run_scenario(c);
            for (const auto& rec : rep.records) {
                if (std::fabs(rec.supply_residual) > 1e-6)
                    return {"slash-for-dishonesty", "fail",
                            "supply residual " + std::to_string(rec.supply_residual) + " at height " +
                                std::to_string(rec.height)};
            }
            for (const auto& rec : rep.records) {
                if (rec.outcome != Outcome::Rejected) continue;
                ++rejections;
                uint64_t fin_h = rec.height + c.policy.w;
                if (fin_h >= rep.records.size()) continue;
                const auto& before = rep.records[fin_h - 1].stakes;
                const auto& after = rep.records[fin_h].stakes;
                for (const auto& [id, s_before] : before) {
                    double expect = (id == rec.proposer)
                                        ? s_before * (1.0 - c.policy.slash_fraction)
                                        : s_before;
                    if (std::fabs(after.at(id) - expect) > 1e-9 * std::max(1.0, s_before))
                        return {"slash-for-dishonesty", "fail",
                                "stake of " + id + " wrong after rejection at height " +
                                    std::to_string(rec.height)};
                }
            }
        }
    }
    if (rejections == 0) return {"slash-for-dishonesty", "fail", "catalog produced no rejections"};
    return {"slash-for-dishonesty", "pass", std::to_string(rejections) + " rejections, all slashed exactly"};
}

inline std::vector<PropertyResult> property_suite(const ScenarioConfig& base, uint64_t runs = 5) {
    return {
        property_authentic_training(base, base.seed, runs),
        property_merkle_integrity(),
        property_data_availability(base, base.seed, runs),
        property_slashing(base, base.seed, runs),
    };
}

inline std::vector<PropertyResult> property_suite(uint64_t base_seed = 1, uint64_t runs = 5) {
    return property_suite(canonical_config(base_seed), runs);
}

} // namespace pogo

#endif // POGO_PROPERTIES_HPP
