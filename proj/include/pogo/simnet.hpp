#ifndef POGO_SIMNET_HPP
#define POGO_SIMNET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "pogo/content_store.hpp"
#include "pogo/market.hpp"
#include "pogo/merkle.hpp"
#include "pogo/model.hpp"
#include "pogo/protocol.hpp"
#include "pogo/quant.hpp"
#include "pogo/random.hpp"
#include "pogo/scenario.hpp"

namespace pogo {

enum class Outcome : uint8_t { Skipped = 0, Finalized = 1, Rejected = 2 };

inline const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Skipped: return "Skipped";
        case Outcome::Finalized: return "Finalized";
        case Outcome::Rejected: return "Rejected";
    }
    return "?";
}

struct HeightRecord {
    uint64_t height = 0;
    std::string proposer;  // empty when no block was proposed
    std::string model_id;
    Outcome outcome = Outcome::Skipped;
    ReasonCode primary_reason = ReasonCode::None;
    std::map<std::string, uint64_t> reasons; // attestation reason histogram
    std::map<std::string, double> stakes;    // snapshot at end of height
    std::map<std::string, double> balances;
    double giga_price = 0.0;
    double compute_price = 0.0;
    std::map<std::string, double> model_loss; // canonical full-dataset loss per live model
    double full_decrement = 0.0;      // loss drop claimed by the block proposed here
    double quant_ver_decrement = 0.0; // quantized-loss drop on this block's D_ver
    double supply_residual = 0.0;

    json to_json() const {
        json j;
        j["height"] = height;
        j["proposer"] = proposer;
        j["modelId"] = model_id;
        j["outcome"] = outcome_name(outcome);
        j["reason"] = reason_name(primary_reason);
        j["reasons"] = reasons;
        j["stakes"] = stakes;
        j["balances"] = balances;
        j["gigaPrice"] = giga_price;
        j["computePrice"] = compute_price;
        j["modelLoss"] = model_loss;
        j["fullDecrement"] = full_decrement;
        j["quantVerDecrement"] = quant_ver_decrement;
        j["supplyResidual"] = supply_residual;
        return j;
    }
};

struct StrategyStats {
    uint64_t proposed = 0;
    uint64_t finalized = 0;
    uint64_t rejected = 0;
};

struct SimReport {
    uint64_t seed = 0;
    double initial_supply = 0.0;
    std::vector<HeightRecord> records;
    std::map<std::string, StrategyStats> strategy_stats;
    std::map<std::string, std::vector<double>> quant_ver_loss; // per model, at finalized heights

    json to_json() const {
        json j;
        j["seed"] = seed;
        j["initialSupply"] = initial_supply;
        j["records"] = json::array();
        for (const auto& r : records) j["records"].push_back(r.to_json());
        json stats;
        for (const auto& [name, s] : strategy_stats) {
            stats[name] = {{"proposed", s.proposed}, {"finalized", s.finalized}, {"rejected", s.rejected}};
        }
        j["strategyStats"] = stats;
        j["quantVerLoss"] = quant_ver_loss;
        return j;
    }

    std::string csv() const {
        std::string out = "height,proposer,modelId,outcome,reason,gigaPrice,computePrice,supplyResidual\n";
        for (const auto& r : records) {
            out += std::to_string(r.height) + ',' + r.proposer + ',' + r.model_id + ',' +
                   outcome_name(r.outcome) + ',' + reason_name(r.primary_reason) + ',' +
                   json(r.giga_price).dump() + ',' + json(r.compute_price).dump() + ',' +
                   json(r.supply_residual).dump() + '\n';
        }
        return out;
    }

    std::string transcript() const {
        std::string out;
        for (const auto& r : records) out += r.to_json().dump() + '\n';
        return out;
    }
};

// ---------------------------------------------------------------------------
// The deterministic chain simulation
// ---------------------------------------------------------------------------

class Simulation {
public:
    explicit Simulation(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        setup();
    }

    // Anchors are the chain-state hashes seeds derive from. Asking for one
    // that does not exist yet is a protocol violation, not a default value:
    // the leaf-challenge seed for block N must be underivable before N + w/2.
    Hash256 anchor_at(int64_t h) const {
        if (h < -1 || h >= static_cast<int64_t>(anchors_.size()) - 1)
            throw std::runtime_error("anchor not derivable yet at height " + std::to_string(h));
        return anchors_[static_cast<size_t>(h + 1)];
    }

    Seed challenge_seed_for(uint64_t proposal_height) const {
        uint64_t ch = proposal_height + cfg_.policy.w / 2;
        return derive_seed(anchor_at(static_cast<int64_t>(ch)), ch, SeedPurpose::LeafChallenge);
    }

    uint64_t current_height() const { return height_; }

    // Advances one height; returns false once blockCount heights have run.
    bool step() {
        if (height_ >= cfg_.block_count) return false;
        run_height(height_);
        ++height_;
        return true;
    }

    SimReport run() {
        while (step()) {
        }
        finalize_report();
        return report_;
    }

private:
    struct ModelState {
        const TaskSpec* task = nullptr;
        Dataset ds;
        ParamVector theta;
        QuantModel quant;        // canonical quantized model, recomputable by all
        Hash256 commit_root{};   // hashFullModel32 of the canonical model
        Hash256 content_hash{};  // hash of the uploaded serialized model
        float loss = 0.0f;
        bool in_flight = false;
        bool alive = true;
    };

    struct Pending {
        Block block;
        Strategy strategy;
        std::string model_id;
        std::optional<MerkleTree> tree; // proposer's committed tree (over possibly tampered bytes)
        ParamVector theta_next;
        QuantModel quant_next;
        std::optional<Hash256> announced_quant; // what was actually published
        double fee = 0.0;
        double giga_proposal = 0.0;
        double compute_proposal = 0.0;
        VerdictComponents honest_view;
        std::vector<uint64_t> ver_indices;
        float quant_ver_loss_next = 0.0f;
        size_t record_index = 0;
    };

    void setup() {
        genesis_ = [&] {
            ByteWriter w;
            w.lp_string("pogo-genesis");
            w.u64(cfg_.seed);
            return sha256(w.bytes());
        }();
        anchors_.push_back(genesis_);
        market_.prices = cfg_.prices;

        for (const auto& n : cfg_.nodes) {
            ByteWriter w;
            w.lp_string("node-key");
            w.lp_string(n.id);
            w.raw(genesis_);
            stakes_.entries[n.id] = {n.stake, sha256(w.bytes())};
            balances_[n.id] = n.balance;
            strategies_[n.id] = n.strategy;
        }

        for (const auto& t : cfg_.tasks) {
            ModelState m;
            m.task = &t;
            Hash256 ds_seed = [&] {
                ByteWriter w;
                w.lp_string("dataset");
                w.u64(t.dataset_seed);
                w.raw(genesis_);
                return sha256(w.bytes());
            }();
            if (t.dataset_kind == "synthetic-regression")
                m.ds = make_synthetic_regression(t.arch, t.samples, ds_seed, t.noise);
            else if (t.dataset_kind == "synthetic-classification")
                m.ds = make_synthetic_classification(t.arch, t.samples, ds_seed);
            else
                throw std::runtime_error("config: unknown dataset kind '" + t.dataset_kind + "'");
            Hash256 init_seed = [&] {
                ByteWriter w;
                w.lp_string("init");
                w.lp_string(t.name);
                w.raw(genesis_);
                return sha256(w.bytes());
            }();
            m.theta = init_params(t.arch, init_seed);
            m.quant = quantize(m.theta, cfg_.chunk_size());
            MerkleTree tree(m.theta.value_bytes(), cfg_.leaf_size_bytes);
            m.commit_root = tree.commitment().root;
            m.loss = full_loss(t.arch, m.theta, m.ds);

            // Owner escrows the rent and publishes the initial model bytes.
            auto bit = balances_.find(t.owner);
            if (bit == balances_.end()) throw std::runtime_error("config: task owner is not a node");
            if (bit->second < t.deposit) throw std::runtime_error("config: owner cannot fund deposit");
            bit->second -= t.deposit;
            market_.upload_model(t.name, t.owner, t.size_gb, t.rented_blocks, t.deposit, 0,
                                 cfg_.upload_window);
            m.content_hash = store_.put(m.theta.serialize(), t.owner);
            models_.emplace(t.name, std::move(m));
        }

        initial_supply_ = 0.0;
        for (const auto& [id, e] : stakes_.entries) initial_supply_ += e.stake;
        for (const auto& [id, b] : balances_) initial_supply_ += b;
        initial_supply_ += market_.escrow_total() + market_.compute_total();
        report_.seed = cfg_.seed;
        report_.initial_supply = initial_supply_;
        report_.records.resize(cfg_.block_count);
        for (uint64_t h = 0; h < cfg_.block_count; ++h) report_.records[h].height = h;
    }

    void run_height(uint64_t h) {
        // 1. storage bookkeeping
        for (const auto& id : market_.expire_leases(h)) {
            auto it = models_.find(id);
            if (it != models_.end()) it->second.alive = false;
        }
        for (auto& [id, m] : models_) {
            if (!m.alive || !market_.has_lease(id)) continue;
            double refund = market_.enforce_upload_window(id, store_.contains(m.content_hash), h);
            if (refund > 0.0) {
                balances_[market_.lease(id).owner] += refund;
                m.alive = false;
            }
        }

        // 2. proposal for height h (builds on the last finalized state)
        std::optional<Pending> proposed = propose(h);
        Hash256 anchor;
        if (proposed) {
            anchor = proposed->block.hash();
        } else {
            ByteWriter w;
            w.raw(anchors_.back());
            w.u64(h);
            w.lp_string("skip");
            anchor = sha256(w.bytes());
        }
        anchors_.push_back(anchor);
        if (proposed) {
            proposed->record_index = h;
            pending_.emplace(h, std::move(*proposed));
        }

        // 3. leaf challenge for the block proposed at h - w/2
        if (h >= cfg_.policy.w / 2) {
            auto it = pending_.find(h - cfg_.policy.w / 2);
            if (it != pending_.end()) run_challenge(it->second);
        }

        // 4. finalization for the block proposed at h - w
        if (h >= cfg_.policy.w) {
            auto it = pending_.find(h - cfg_.policy.w);
            if (it != pending_.end()) {
                run_finalization(it->second, h);
                pending_.erase(it);
            }
        }

        // 5. end-of-height snapshot
        HeightRecord& rec = report_.records[h];
        for (const auto& [id, e] : stakes_.entries) rec.stakes[id] = e.stake;
        for (const auto& [id, b] : balances_) rec.balances[id] = b;
        rec.giga_price = market_.prices.giga_price;
        rec.compute_price = market_.prices.basic_compute_price;
        for (const auto& [id, m] : models_)
            if (m.alive) rec.model_loss[id] = static_cast<double>(m.loss);
        rec.supply_residual = supply_residual();
    }

    std::optional<Pending> propose(uint64_t h) {
        // Blocks only get proposed when their full lifecycle fits in the run.
        if (h + cfg_.policy.w >= cfg_.block_count) return std::nullopt;

        std::vector<std::string> eligible;
        for (const auto& [id, m] : models_) {
            if (!m.alive || m.in_flight) continue;
            if (!market_.can_fund_step(id, m.task->is_fine_tune)) continue;
            eligible.push_back(id);
        }
        if (eligible.empty()) return std::nullopt;

        Hash256 parent = anchors_.back();
        Seed model_seed = derive_seed(parent, h, SeedPurpose::ModelPick);
        Seed leader_seed = derive_seed(parent, h, SeedPurpose::Leader);
        Seed batch_seed = derive_seed(parent, h, SeedPurpose::MiniBatch);
        Seed verset_seed = derive_seed(parent, h, SeedPurpose::VerSet);

        std::string model_id = eligible[pick_indices(model_seed, eligible.size(), 1)[0]];
        std::string leader = cfg_.force_proposer ? *cfg_.force_proposer
                                                 : pick_stake_weighted(leader_seed, stakes_.weighted());
        ModelState& m = models_.at(model_id);
        const TaskSpec& task = *m.task;
        const Strategy strat = strategies_.at(leader);

        uint64_t ver_count = std::max<uint64_t>(1, static_cast<uint64_t>(std::llround(cfg_.alpha * m.ds.rows)));
        std::vector<uint64_t> ver_indices = pick_indices(verset_seed, m.ds.rows, ver_count);

        Pending p;
        p.strategy = strat;
        p.model_id = model_id;
        p.ver_indices = ver_indices;

        TrainPolicy tp{task.eta, task.epsilon, task.epsilon_fine, task.batch_size};
        float eps = task.effective_epsilon();
        float qloss0 = quantized_loss(task.arch, m.quant, m.ds, ver_indices).mean;

        bool trained = false;
        float loss_after = m.loss;
        if (strat.kind == StrategyKind::ForgeLoss) {
            // No work at all: reuse theta_t, fabricate the claimed decrement.
            p.theta_next = m.theta;
            p.quant_next = m.quant;
            loss_after = m.loss - 2.0f * eps;
            trained = true;
        } else {
            ParamVector cur = m.theta;
            for (uint64_t step = 0; step < cfg_.max_train_steps && !trained; ++step) {
                Hash256 sub;
                {
                    ByteWriter w;
                    w.raw(batch_seed.bytes);
                    w.u64(step);
                    sub = sha256(w.bytes());
                }
                auto batch = pick_indices(Seed{sub, h, SeedPurpose::MiniBatch}, m.ds.rows, task.batch_size);
                cur = sgd_step(task.arch, cur, m.ds, batch, tp);
                float loss = full_loss(task.arch, cur, m.ds);
                if (loss < m.loss - eps) {
                    QuantModel q = quantize(cur, cfg_.chunk_size());
                    float qloss = quantized_loss(task.arch, q, m.ds, ver_indices).mean;
                    if (qloss < qloss0 - task.epsilon_quant) {
                        p.theta_next = std::move(cur);
                        p.quant_next = std::move(q);
                        loss_after = loss;
                        p.quant_ver_loss_next = qloss;
                        trained = true;
                    }
                }
            }
            if (!trained) return std::nullopt; // honest no-progress: the height is skipped
        }

        // Commitment. TamperLeaves corrupts k leaves of the 32-bit bytes
        // before building the tree; everything else commits faithfully.
        Bytes value_bytes = p.theta_next.value_bytes();
        MerkleTree tree(value_bytes, cfg_.leaf_size_bytes);
        if (strat.kind == StrategyKind::TamperLeaves) {
            uint64_t L = tree.num_leaves();
            uint64_t k = std::min<uint64_t>(strat.tamper_leaves, L > 1 ? L - 1 : 1);
            Hash256 tseed = [&] {
                ByteWriter w;
                w.lp_string("tamper");
                w.raw(parent);
                w.u64(h);
                return sha256(w.bytes());
            }();
            for (uint64_t leaf : pick_indices(Seed{tseed, h, SeedPurpose::LeafChallenge}, L, k)) {
                Bytes garbage = tree.leaf(leaf);
                // push every float far outside the quantization tolerance
                for (size_t off = 0; off + 4 <= garbage.size(); off += 4) {
                    float v;
                    std::memcpy(&v, garbage.data() + off, 4);
                    v += 1000.0f;
                    std::memcpy(garbage.data() + off, &v, 4);
                }
                tree.corrupt_leaf(leaf, std::move(garbage));
            }
        }

        p.fee = market_.charge_training_step(model_id, task.is_fine_tune);

        Block b;
        b.height = h;
        b.parent_hash = parent;
        b.proposer = leader;
        b.model_id = model_id;
        b.hash_full_model32 = tree.commitment().root;
        b.hash_quant4 = p.quant_next.hash();
        b.vrf_proof = vrf_prove(stakes_.entries.at(leader).key, leader_seed);
        b.claimed_loss_before = m.loss;
        b.claimed_loss_after = loss_after;
        p.block = b;
        p.tree.emplace(std::move(tree));

        // Publication window: honest proposers publish right away.
        switch (strat.kind) {
            case StrategyKind::WithholdQuant:
                p.announced_quant = std::nullopt;
                break;
            case StrategyKind::PublishWrongQuant: {
                Bytes garbage = p.quant_next.serialize();
                if (!garbage.empty()) garbage[garbage.size() / 2] ^= 0xff;
                p.announced_quant = store_.put(std::move(garbage), leader);
                break;
            }
            default:
                p.announced_quant = store_.put(p.quant_next.serialize(), leader);
                break;
        }
        if (cfg_.publish_full32 && !strat.adversarial())
            store_.put(p.theta_next.serialize(), leader);

        // Price proposal carried by this block; applied only on finalization.
        double nudge = (strat.kind == StrategyKind::LateNudgeAbuse) ? 0.05 : cfg_.honest_nudge_fraction;
        p.giga_proposal = market_.prices.giga_price * (1.0 + nudge);
        p.compute_proposal = market_.prices.basic_compute_price * (1.0 + nudge);

        // Verifier work for the publication window (hash + quantized loss).
        verify_quant_phase(p);

        m.in_flight = true;
        report_.strategy_stats[strat.name()].proposed++;
        HeightRecord& rec = report_.records[h];
        rec.proposer = leader;
        rec.model_id = model_id;
        rec.full_decrement = static_cast<double>(m.loss) - static_cast<double>(loss_after);
        if (strat.kind != StrategyKind::ForgeLoss)
            rec.quant_ver_decrement = static_cast<double>(qloss0) - static_cast<double>(p.quant_ver_loss_next);
        return p;
    }

    void verify_quant_phase(Pending& p) {
        const ModelState& m = models_.at(p.model_id);
        const TaskSpec& task = *m.task;
        VerdictComponents& c = p.honest_view;
        if (!p.announced_quant) {
            c.data_available = false;
            return;
        }
        auto bytes = store_.fetch(*p.announced_quant);
        if (!bytes) {
            c.data_available = false;
            return;
        }
        if (sha256(*bytes) != p.block.hash_quant4) {
            c.quant_hash_ok = false;
            return;
        }
        QuantModel q;
        try {
            q = QuantModel::deserialize(*bytes);
            q.layout = m.theta.layout;
        } catch (const std::exception&) {
            c.quant_hash_ok = false;
            return;
        }
        // Verifiers recompute the predecessor's quantized loss themselves.
        float qloss_prev = quantized_loss(task.arch, m.quant, m.ds, p.ver_indices).mean;
        float qloss_next = quantized_loss(task.arch, q, m.ds, p.ver_indices).mean;
        if (!(qloss_next < qloss_prev - task.epsilon_quant)) c.quant_loss_ok = false;
    }

    void run_challenge(Pending& p) {
        uint64_t ch = p.block.height + cfg_.policy.w / 2;
        Seed seed = derive_seed(anchors_[ch + 1], ch, SeedPurpose::LeafChallenge);
        uint64_t L = p.tree->num_leaves();
        uint64_t m_count = std::min<uint64_t>(cfg_.policy.challenges_per_block, L);
        auto indices = pick_indices(seed, L, m_count);

        if (p.strategy.kind == StrategyKind::WithholdLeafAnswer) {
            p.honest_view.data_available = false;
            return;
        }

        const ModelState& model = models_.at(p.model_id);
        const TaskSpec& task = *model.task;
        QuantPolicy qp{task.epsilon_quant, 0.0f};

        for (uint64_t idx : indices) {
            LeafProof proof = p.tree->prove(idx);
            if (proof.leaf_index != idx || !verify(proof, p.block.hash_full_model32)) {
                p.honest_view.leaf_proof_ok = false;
                continue;
            }
            // Leaf-vs-quant consistency: one leaf is exactly one quant chunk.
            if (!p.honest_view.quant_hash_ok || !p.honest_view.data_available) continue;
            std::vector<float> leaf_vals(proof.leaf_bytes.size() / 4);
            std::memcpy(leaf_vals.data(), proof.leaf_bytes.data(), leaf_vals.size() * 4);
            auto codes = chunk_codes(p.quant_next, idx);
            if (leaf_vals.size() != codes.size()) {
                p.honest_view.leaf_consistency_ok = false;
                continue;
            }
            auto res = check_consistency(leaf_vals, codes, p.quant_next.scales[idx], qp);
            if (!res.pass) p.honest_view.leaf_consistency_ok = false;
        }
    }

    void run_finalization(Pending& p, uint64_t h) {
        HeightRecord& rec = report_.records[p.record_index];
        std::vector<Attestation> atts;
        auto [honest_verdict, honest_reason] = p.honest_view.combine();
        bool proposer_adversarial = p.strategy.adversarial();
        for (const auto& [id, entry] : stakes_.entries) {
            if (id == p.block.proposer) continue;
            Verdict v = honest_verdict;
            ReasonCode r = honest_reason;
            // Adversarial stakers collude: they vouch for other adversaries'
            // blocks no matter what their checks said.
            if (proposer_adversarial && strategies_.at(id).adversarial()) {
                v = Verdict::Positive;
                r = ReasonCode::None;
            }
            atts.push_back(make_attestation(entry.key, id, p.block.height, v, r));
            rec.reasons[reason_name(r)]++;
        }

        FinalizeOutcome out = finalize(atts, stakes_, cfg_.policy, p.block.proposer, p.fee);
        ModelState& m = models_.at(p.model_id);
        auto& stats = report_.strategy_stats[p.strategy.name()];
        if (out.finalized) {
            rec.outcome = Outcome::Finalized;
            rec.primary_reason = ReasonCode::None;
            stats.finalized++;
            for (const auto& [id, amount] : out.reward_transfers) balances_[id] += amount;
            m.theta = p.theta_next;
            m.quant = p.quant_next;
            m.commit_root = p.block.hash_full_model32;
            m.loss = p.block.claimed_loss_after;
            if (!p.strategy.adversarial())
                report_.quant_ver_loss[p.model_id].push_back(p.quant_ver_loss_next);
            market_.prices = nudge_prices(market_.prices, p.giga_proposal, p.compute_proposal);
        } else {
            rec.outcome = Outcome::Rejected;
            rec.primary_reason = honest_reason;
            stats.rejected++;
            auto& entry = stakes_.entries.at(p.block.proposer);
            entry.stake -= out.slash_amount;
            burned_slashes_ += out.slash_amount;
            market_.refund_step_fee(p.model_id, p.fee);
            // model state rolls back (it never moved): just clear the flight flag
        }
        m.in_flight = false;
    }

    double supply_residual() const {
        double total = burned_slashes_ + market_.burned() + market_.escrow_total() + market_.compute_total();
        for (const auto& [id, e] : stakes_.entries) total += e.stake;
        for (const auto& [id, b] : balances_) total += b;
        for (const auto& [h, p] : pending_) total += p.fee;
        return total - initial_supply_;
    }

    void finalize_report() {
        // Blocks still pending at the end cannot exist: proposals are gated
        // on h + w < blockCount. Guard anyway.
        for (auto& [h, p] : pending_) market_.refund_step_fee(p.model_id, p.fee);
        pending_.clear();
    }

    ScenarioConfig cfg_;
    Hash256 genesis_{};
    std::vector<Hash256> anchors_; // anchors_[h + 1] is the anchor after height h
    uint64_t height_ = 0;
    StakeTable stakes_;
    std::map<std::string, double> balances_;
    std::map<std::string, Strategy> strategies_;
    std::map<std::string, ModelState> models_;
    std::map<uint64_t, Pending> pending_;
    Market market_;
    ContentStore store_;
    double initial_supply_ = 0.0;
    double burned_slashes_ = 0.0;
    SimReport report_;
};

inline SimReport run_scenario(const ScenarioConfig& cfg) {
    Simulation sim(cfg);
    return sim.run();
}

// ---------------------------------------------------------------------------
// Leaf-challenge detection calibration
// ---------------------------------------------------------------------------

struct DetectionResult {
    double empirical = 0.0;
    double analytic = 0.0;
    double std_error = 0.0;
    uint64_t trials = 0;
};

// Monte Carlo over the real commitment + challenge machinery: an adversary
// who fabricated k of L leaves commits to its tampered bytes (so every
// Merkle proof verifies) and is caught exactly when a challenged leaf fails
// the leaf-vs-quant consistency check.
inline DetectionResult detection_rate(uint64_t num_leaves, uint64_t tampered, uint64_t challenges,
                                      uint64_t trials, uint64_t seed, uint64_t threads = 1) {
    if (trials < 1) throw std::runtime_error("detection_rate: trials must be >= 1");
    if (tampered > num_leaves) throw std::runtime_error("detection_rate: k exceeds leaf count");

    const uint64_t leaf_bytes = 64; // 16 params per leaf/chunk
    const uint64_t chunk = leaf_bytes / 4;
    // A flat parameter buffer is all the machinery needs here.
    ParamVector params;
    params.layout = {{"flat", 0, {num_leaves * chunk}}};
    Hash256 base = [&] {
        ByteWriter w;
        w.lp_string("detect");
        w.u64(seed);
        return sha256(w.bytes());
    }();
    SeedStream init(base);
    params.values.resize(num_leaves * chunk);
    for (auto& v : params.values) v = static_cast<float>(2.0 * init.next_unit() - 1.0);
    QuantModel quant = quantize(params, chunk);
    QuantPolicy qp;

    // Each trial is keyed by its own index, so the outcome is independent of
    // how trials are partitioned across worker threads.
    auto run_trial = [&](uint64_t t) -> bool {
        Hash256 trial_seed = [&] {
            ByteWriter w;
            w.raw(base);
            w.u64(t);
            return sha256(w.bytes());
        }();
        MerkleTree tree(params.value_bytes(), leaf_bytes);
        Seed tamper_seed{sha256([&] {
                             ByteWriter w;
                             w.raw(trial_seed);
                             w.lp_string("tamper");
                             return w.take();
                         }()),
                         t, SeedPurpose::LeafChallenge};
        for (uint64_t leaf : pick_indices(tamper_seed, num_leaves, tampered)) {
            Bytes garbage = tree.leaf(leaf);
            for (size_t off = 0; off + 4 <= garbage.size(); off += 4) {
                float v;
                std::memcpy(&v, garbage.data() + off, 4);
                v += 1000.0f;
                std::memcpy(garbage.data() + off, &v, 4);
            }
            tree.corrupt_leaf(leaf, std::move(garbage));
        }
        Hash256 root = tree.commitment().root;
        Seed challenge_seed{sha256([&] {
                                ByteWriter w;
                                w.raw(trial_seed);
                                w.lp_string("challenge");
                                return w.take();
                            }()),
                            t, SeedPurpose::LeafChallenge};
        bool caught = false;
        for (uint64_t idx : pick_indices(challenge_seed, num_leaves, std::min(challenges, num_leaves))) {
            LeafProof proof = tree.prove(idx);
            if (!verify(proof, root)) {
                caught = true;
                continue;
            }
            std::vector<float> vals(proof.leaf_bytes.size() / 4);
            std::memcpy(vals.data(), proof.leaf_bytes.data(), vals.size() * 4);
            auto res = check_consistency(vals, chunk_codes(quant, idx), quant.scales[idx], qp);
            if (!res.pass) caught = true;
        }
        return caught;
    };

    uint64_t detected = 0;
    uint64_t n_threads = std::max<uint64_t>(1, std::min(threads, trials));
    if (n_threads == 1) {
        for (uint64_t t = 0; t < trials; ++t)
            if (run_trial(t)) ++detected;
    } else {
        std::vector<uint64_t> counts(n_threads, 0);
        std::vector<std::thread> workers;
        for (uint64_t w = 0; w < n_threads; ++w) {
            workers.emplace_back([&, w] {
                for (uint64_t t = w; t < trials; t += n_threads)
                    if (run_trial(t)) ++counts[w];
            });
        }
        for (auto& th : workers) th.join();
        for (uint64_t c : counts) detected += c;
    }

    DetectionResult r;
    r.trials = trials;
    r.empirical = static_cast<double>(detected) / static_cast<double>(trials);
    double frac = static_cast<double>(tampered) / static_cast<double>(num_leaves);
    r.analytic = 1.0 - std::pow(1.0 - frac, static_cast<double>(std::min(challenges, num_leaves)));
    r.std_error = std::sqrt(std::max(r.analytic * (1.0 - r.analytic), 1e-12) / static_cast<double>(trials));
    return r;
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

struct ReplayResult {
    bool verified = false;
    int64_t divergence_height = -1;
};

inline ReplayResult replay(const ScenarioConfig& cfg, const std::vector<std::string>& transcript_lines) {
    SimReport fresh = run_scenario(cfg);
    for (size_t h = 0; h < fresh.records.size(); ++h) {
        std::string expect = fresh.records[h].to_json().dump();
        if (h >= transcript_lines.size() || transcript_lines[h] != expect)
            return {false, static_cast<int64_t>(h)};
    }
    if (transcript_lines.size() != fresh.records.size())
        return {false, static_cast<int64_t>(fresh.records.size())};
    return {true, -1};
}

} // namespace pogo

#endif // POGO_SIMNET_HPP
