#ifndef POGO_MARKET_HPP
#define POGO_MARKET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pogo/hash.hpp"

namespace pogo {

// Consensus-governed prices. Each block's leader may nudge both by at most
// maxNudgeFraction relative (default 0.01%); proposals beyond the bound are
// clamped, not rejected, and apply only when the leader's block finalizes.
struct PriceState {
    double giga_price = 1.0;          // POGO per GB per block
    double basic_compute_price = 1.0; // POGO per training step
    double max_nudge_fraction = 0.0001;

    void validate() const {
        if (giga_price <= 0.0 || basic_compute_price <= 0.0)
            throw std::runtime_error("prices: must be strictly positive");
        if (max_nudge_fraction < 0.0) throw std::runtime_error("prices: negative nudge bound");
    }
};

inline double clamp_nudge(double current, double proposal, double max_fraction) {
    double lo = current * (1.0 - max_fraction);
    double hi = current * (1.0 + max_fraction);
    return std::min(std::max(proposal, lo), hi);
}

inline PriceState nudge_prices(const PriceState& cur, double giga_proposal, double compute_proposal) {
    PriceState next = cur;
    next.giga_price = clamp_nudge(cur.giga_price, giga_proposal, cur.max_nudge_fraction);
    next.basic_compute_price = clamp_nudge(cur.basic_compute_price, compute_proposal, cur.max_nudge_fraction);
    return next;
}

struct ModelLease {
    std::string model_id;
    std::string owner;
    double size_gb = 0.0;
    uint64_t created_at = 0;
    uint64_t rented_until = 0;   // alive through this height, inclusive
    uint64_t upload_deadline = 0;
    double escrow = 0.0;         // prepaid rent, burned at expiry
    double compute_balance = 0.0;
    double fine_tuning_fraction = 0.25;
    bool voided = false;
};

// Storage-rental ledger. Escrowed rent is burned when a lease expires; the
// only refund path is a voided upload window, which returns the escrow minus
// a penalty fraction. Token movements in and out of the market are returned
// to the caller so the chain-level conservation check can see them.
class Market {
public:
    PriceState prices;
    double voided_penalty_fraction = 0.05;

    const std::map<std::string, ModelLease>& leases() const { return leases_; }
    double burned() const { return burned_; }

    bool has_lease(const std::string& model_id) const { return leases_.count(model_id) > 0; }
    ModelLease& lease(const std::string& model_id) { return leases_.at(model_id); }
    const ModelLease& lease(const std::string& model_id) const { return leases_.at(model_id); }

    // Deposit must cover sizeGB * gigaPrice * rentedBlocks; the excess lands
    // in the lease's compute balance. Returns the created lease.
    ModelLease& upload_model(const std::string& model_id, const std::string& owner, double size_gb,
                             uint64_t rented_blocks, double deposit, uint64_t now, uint64_t upload_window) {
        if (leases_.count(model_id)) throw std::runtime_error("upload_model: duplicate model id");
        double rent = size_gb * prices.giga_price * static_cast<double>(rented_blocks);
        if (deposit < rent) throw std::runtime_error("upload_model: insufficient deposit");
        ModelLease l;
        l.model_id = model_id;
        l.owner = owner;
        l.size_gb = size_gb;
        l.created_at = now;
        l.rented_until = now + rented_blocks;
        l.upload_deadline = now + upload_window;
        l.escrow = rent;
        l.compute_balance = deposit - rent;
        return leases_.emplace(model_id, std::move(l)).first->second;
    }

    // Strict boundary: content arriving even one block after the deadline
    // still voids the lease. Returns the refund owed to the owner (0 if the
    // lease stays alive); the penalty share of the escrow is burned.
    double enforce_upload_window(const std::string& model_id, bool content_available, uint64_t now) {
        ModelLease& l = leases_.at(model_id);
        if (l.voided) return 0.0;
        if (now > l.upload_deadline && !content_available) {
            l.voided = true;
            double refund = l.escrow * (1.0 - voided_penalty_fraction) + l.compute_balance;
            burned_ += l.escrow * voided_penalty_fraction;
            l.escrow = 0.0;
            l.compute_balance = 0.0;
            return refund;
        }
        return 0.0;
    }

    // Extends by whole blocks at the current gigaPrice; any remainder tops up
    // the compute balance rather than vanishing.
    void topup_rental(const std::string& model_id, double tokens, uint64_t now) {
        ModelLease& l = leases_.at(model_id);
        if (l.voided || l.rented_until < now) throw std::runtime_error("topup_rental: lease expired");
        double per_block = l.size_gb * prices.giga_price;
        uint64_t blocks = static_cast<uint64_t>(std::floor(tokens / per_block));
        double rent = static_cast<double>(blocks) * per_block;
        l.rented_until += blocks;
        l.escrow += rent;
        l.compute_balance += tokens - rent;
    }

    ModelLease& fork_model(const std::string& parent_id, const std::string& new_model_id,
                           const std::string& new_owner, uint64_t rented_blocks, double deposit,
                           uint64_t now, uint64_t upload_window) {
        const ModelLease& parent = leases_.at(parent_id);
        if (parent.voided || parent.rented_until < now) throw std::runtime_error("fork_model: parent not alive");
        ModelLease& l = upload_model(new_model_id, new_owner, parent.size_gb, rented_blocks, deposit,
                                     now, upload_window);
        l.fine_tuning_fraction = parent.fine_tuning_fraction;
        return l;
    }

    double training_fee(const ModelLease& l, bool is_fine_tune) const {
        return prices.basic_compute_price * (is_fine_tune ? l.fine_tuning_fraction : 1.0);
    }

    bool can_fund_step(const std::string& model_id, bool is_fine_tune) const {
        auto it = leases_.find(model_id);
        if (it == leases_.end() || it->second.voided) return false;
        return it->second.compute_balance >= training_fee(it->second, is_fine_tune);
    }

    // Deducts the step fee; the returned amount becomes the block's reward pool.
    double charge_training_step(const std::string& model_id, bool is_fine_tune) {
        ModelLease& l = leases_.at(model_id);
        double fee = training_fee(l, is_fine_tune);
        if (l.compute_balance < fee) throw std::runtime_error("charge_training_step: insufficient balance");
        l.compute_balance -= fee;
        return fee;
    }

    void refund_step_fee(const std::string& model_id, double fee) {
        auto it = leases_.find(model_id);
        if (it != leases_.end())
            it->second.compute_balance += fee;
        else
            burned_ += fee; // lease vanished mid-flight; burn rather than lose track
    }

    // A lease is alive through rented_until inclusive; anything older is
    // dropped and its remaining escrow and compute balance burned.
    std::vector<std::string> expire_leases(uint64_t now) {
        std::vector<std::string> dropped;
        for (auto it = leases_.begin(); it != leases_.end();) {
            if (it->second.rented_until < now || it->second.voided) {
                burned_ += it->second.escrow + it->second.compute_balance;
                dropped.push_back(it->first);
                it = leases_.erase(it);
            } else {
                ++it;
            }
        }
        return dropped;
    }

    double escrow_total() const {
        double t = 0.0;
        for (const auto& [id, l] : leases_) t += l.escrow;
        return t;
    }

    double compute_total() const {
        double t = 0.0;
        for (const auto& [id, l] : leases_) t += l.compute_balance;
        return t;
    }

private:
    std::map<std::string, ModelLease> leases_;
    double burned_ = 0.0;
};

} // namespace pogo

#endif // POGO_MARKET_HPP
