#ifndef POGO_SCENARIO_HPP
#define POGO_SCENARIO_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pogo/market.hpp"
#include "pogo/model.hpp"
#include "pogo/protocol.hpp"

namespace pogo {

using json = nlohmann::ordered_json;

enum class StrategyKind : uint8_t {
    Honest = 0,
    ForgeLoss,
    TamperLeaves,
    WithholdQuant,
    WithholdLeafAnswer,
    PublishWrongQuant,
    LateNudgeAbuse,
};

struct Strategy {
    StrategyKind kind = StrategyKind::Honest;
    uint64_t tamper_leaves = 0; // k, for TamperLeaves

    bool adversarial() const { return kind != StrategyKind::Honest; }

    std::string name() const {
        switch (kind) {
            case StrategyKind::Honest: return "Honest";
            case StrategyKind::ForgeLoss: return "ForgeLoss";
            case StrategyKind::TamperLeaves: return "TamperLeaves";
            case StrategyKind::WithholdQuant: return "WithholdQuant";
            case StrategyKind::WithholdLeafAnswer: return "WithholdLeafAnswer";
            case StrategyKind::PublishWrongQuant: return "PublishWrongQuant";
            case StrategyKind::LateNudgeAbuse: return "LateNudgeAbuse";
        }
        return "?";
    }
};

struct NodeSpec {
    std::string id;
    double stake = 0.0;
    double balance = 0.0;
    Strategy strategy;
};

struct TaskSpec {
    std::string name;
    MlpArch arch;
    std::string dataset_kind = "synthetic-regression";
    uint64_t samples = 128;
    uint64_t dataset_seed = 0;
    float noise = 0.05f;
    float eta = 0.05f;
    float epsilon = 1e-4f;
    float epsilon_quant = 5e-5f;
    float epsilon_fine = 1e-4f;
    uint64_t batch_size = 32;
    bool is_fine_tune = false;
    double size_gb = 0.001;
    uint64_t rented_blocks = 1000;
    double deposit = 100.0;
    std::string owner;

    float effective_epsilon() const { return is_fine_tune ? epsilon_fine : epsilon; }
};

struct ScenarioConfig {
    uint64_t seed = 0;
    uint64_t block_count = 30;
    uint64_t leaf_size_bytes = 1024; // must be a multiple of 4; one leaf = one quant chunk
    double alpha = 0.25;
    uint64_t upload_window = 4;
    uint64_t max_train_steps = 64;
    double block_time_hours = 1.0; // recorded for cost reports only
    double honest_nudge_fraction = 0.0; // relative price proposal made by honest leaders
    bool publish_full32 = false;        // optional full-precision publication; no effect on finalization
    std::optional<std::string> force_proposer;
    FinalizationPolicy policy;
    PriceState prices;
    std::vector<NodeSpec> nodes;
    std::vector<TaskSpec> tasks;

    uint64_t chunk_size() const { return leaf_size_bytes / 4; }

    void validate() const {
        policy.validate();
        prices.validate();
        if (block_count < policy.w) throw std::runtime_error("config: blockCount must be >= w");
        if (leaf_size_bytes < 4 || leaf_size_bytes % 4 != 0)
            throw std::runtime_error("config: leafSizeBytes must be a positive multiple of 4");
        if (!(alpha > 0.0 && alpha <= 1.0)) throw std::runtime_error("config: alpha must be in (0, 1]");
        if (nodes.empty()) throw std::runtime_error("config: at least one node required");
        bool any_stake = false;
        for (const auto& n : nodes) {
            if (n.stake < 0.0 || n.balance < 0.0) throw std::runtime_error("config: negative stake/balance");
            if (n.stake > 0.0) any_stake = true;
            if (n.strategy.kind == StrategyKind::TamperLeaves && n.strategy.tamper_leaves == 0)
                throw std::runtime_error("config: TamperLeaves needs k >= 1");
        }
        if (!any_stake) throw std::runtime_error("config: need a node with positive stake");
        if (tasks.empty()) throw std::runtime_error("config: at least one task required");
        for (const auto& t : tasks) {
            if (t.arch.input_dim == 0 || t.arch.output_dim == 0)
                throw std::runtime_error("config: task arch dims must be positive");
            if (t.eta <= 0.0f || t.epsilon <= 0.0f || t.epsilon_quant <= 0.0f || t.epsilon_fine <= 0.0f)
                throw std::runtime_error("config: eta/epsilon values must be positive");
            if (t.batch_size < 1 || t.batch_size > t.samples)
                throw std::runtime_error("config: batchSize must be in [1, samples]");
            if (t.owner.empty()) throw std::runtime_error("config: task needs an owner");
        }
        if (force_proposer) {
            bool found = false;
            for (const auto& n : nodes)
                if (n.id == *force_proposer) found = true;
            if (!found) throw std::runtime_error("config: forceProposer names an unknown node");
        }
    }
};

// ---------------------------------------------------------------------------
// JSON (de)serialization of the scenario schema
// ---------------------------------------------------------------------------

inline Strategy strategy_from_json(const json& j) {
    Strategy s;
    std::string v = j.is_string() ? j.get<std::string>() : j.at("variant").get<std::string>();
    if (v == "Honest") s.kind = StrategyKind::Honest;
    else if (v == "ForgeLoss") s.kind = StrategyKind::ForgeLoss;
    else if (v == "TamperLeaves") s.kind = StrategyKind::TamperLeaves;
    else if (v == "WithholdQuant") s.kind = StrategyKind::WithholdQuant;
    else if (v == "WithholdLeafAnswer") s.kind = StrategyKind::WithholdLeafAnswer;
    else if (v == "PublishWrongQuant") s.kind = StrategyKind::PublishWrongQuant;
    else if (v == "LateNudgeAbuse") s.kind = StrategyKind::LateNudgeAbuse;
    else throw std::runtime_error("config: unknown strategy '" + v + "'");
    if (!j.is_string() && j.contains("k")) s.tamper_leaves = j.at("k").get<uint64_t>();
    return s;
}

inline ScenarioConfig scenario_from_json(const json& j) {
    ScenarioConfig c;
    c.seed = j.at("seed").get<uint64_t>();
    c.block_count = j.at("blockCount").get<uint64_t>();
    c.leaf_size_bytes = j.value("leafSizeBytes", c.leaf_size_bytes);
    c.alpha = j.value("alpha", c.alpha);
    c.upload_window = j.value("uploadWindow", c.upload_window);
    c.max_train_steps = j.value("maxTrainSteps", c.max_train_steps);
    c.block_time_hours = j.value("blockTimeHours", c.block_time_hours);
    c.honest_nudge_fraction = j.value("honestNudgeFraction", c.honest_nudge_fraction);
    c.publish_full32 = j.value("publishFull32", c.publish_full32);
    if (j.contains("forceProposer")) c.force_proposer = j.at("forceProposer").get<std::string>();
    if (j.contains("policy")) {
        const auto& p = j.at("policy");
        c.policy.w = p.value("w", c.policy.w);
        c.policy.positive_threshold = p.value("positiveThreshold", c.policy.positive_threshold);
        c.policy.slash_fraction = p.value("slashFraction", c.policy.slash_fraction);
        c.policy.miner_share = p.value("minerShare", c.policy.miner_share);
        c.policy.challenges_per_block = p.value("challengesPerBlock", c.policy.challenges_per_block);
    }
    if (j.contains("prices")) {
        const auto& p = j.at("prices");
        c.prices.giga_price = p.value("gigaPrice", c.prices.giga_price);
        c.prices.basic_compute_price = p.value("basicComputePrice", c.prices.basic_compute_price);
        c.prices.max_nudge_fraction = p.value("maxNudgeFraction", c.prices.max_nudge_fraction);
    }
    for (const auto& n : j.at("nodes")) {
        NodeSpec spec;
        spec.id = n.at("id").get<std::string>();
        spec.stake = n.at("stake").get<double>();
        spec.balance = n.value("balance", 0.0);
        if (n.contains("strategy")) spec.strategy = strategy_from_json(n.at("strategy"));
        c.nodes.push_back(std::move(spec));
    }
    for (const auto& t : j.at("tasks")) {
        TaskSpec task;
        task.name = t.at("name").get<std::string>();
        const auto& a = t.at("arch");
        task.arch.input_dim = a.at("inputDim").get<uint64_t>();
        task.arch.hidden = a.value("hidden", std::vector<uint64_t>{});
        task.arch.output_dim = a.at("outputDim").get<uint64_t>();
        std::string loss = a.value("loss", std::string("mse"));
        if (loss == "mse") task.arch.loss = LossKind::SquaredError;
        else if (loss == "cross-entropy") task.arch.loss = LossKind::CrossEntropy;
        else throw std::runtime_error("config: unknown loss '" + loss + "'");
        if (t.contains("dataset")) {
            const auto& d = t.at("dataset");
            task.dataset_kind = d.value("kind", task.dataset_kind);
            task.samples = d.value("samples", task.samples);
            task.dataset_seed = d.value("seed", task.dataset_seed);
            task.noise = d.value("noise", task.noise);
        }
        task.eta = t.value("eta", task.eta);
        task.epsilon = t.value("epsilon", task.epsilon);
        task.epsilon_quant = t.value("epsilonQuant", task.epsilon_quant);
        task.epsilon_fine = t.value("epsilonFine", task.epsilon_fine);
        task.batch_size = t.value("batchSize", task.batch_size);
        task.is_fine_tune = t.value("isFineTune", task.is_fine_tune);
        task.size_gb = t.value("sizeGB", task.size_gb);
        task.rented_blocks = t.value("rentedBlocks", task.rented_blocks);
        task.deposit = t.value("deposit", task.deposit);
        task.owner = t.at("owner").get<std::string>();
        c.tasks.push_back(std::move(task));
    }
    c.validate();
    return c;
}

} // namespace pogo

#endif // POGO_SCENARIO_HPP
