#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pogo/market.hpp"

using namespace pogo;

TEST_CASE("nudge clamps to the per-block bound in both directions") {
    REQUIRE(clamp_nudge(100.0, 150.0, 0.0001) == 100.0 * 1.0001);
    REQUIRE(clamp_nudge(100.0, 50.0, 0.0001) == 100.0 * 0.9999);
    REQUIRE(clamp_nudge(100.0, 100.005, 0.0001) == 100.005); // inside the band
    PriceState p;
    p.giga_price = 2.0;
    p.basic_compute_price = 3.0;
    PriceState next = nudge_prices(p, 10.0, 0.1);
    REQUIRE(next.giga_price == 2.0 * 1.0001);
    REQUIRE(next.basic_compute_price == 3.0 * 0.9999);
}

TEST_CASE("upload requires the deposit to cover the rent exactly") {
    Market m;
    // rent = 2 GB * 1.0 * 10 blocks = 20
    REQUIRE_THROWS(m.upload_model("m1", "alice", 2.0, 10, 19.999, 0, 4));
    auto& l = m.upload_model("m1", "alice", 2.0, 10, 25.0, 0, 4);
    REQUIRE(l.escrow == 20.0);
    REQUIRE(l.compute_balance == 5.0);
    REQUIRE(l.rented_until == 10);
    REQUIRE(l.upload_deadline == 4);
    REQUIRE_THROWS(m.upload_model("m1", "alice", 2.0, 10, 25.0, 0, 4)); // duplicate id
}

TEST_CASE("upload window boundary is strict") {
    Market m;
    m.upload_model("m1", "alice", 1.0, 10, 12.0, 0, 4);
    // at the deadline itself the lease survives even without content
    REQUIRE(m.enforce_upload_window("m1", false, 4) == 0.0);
    REQUIRE_FALSE(m.lease("m1").voided);
    // one block later it voids: refund = (escrow * 0.95) + compute balance
    double refund = m.enforce_upload_window("m1", false, 5);
    REQUIRE(m.lease("m1").voided);
    REQUIRE(std::fabs(refund - (10.0 * 0.95 + 2.0)) < 1e-12);
    REQUIRE(std::fabs(m.burned() - 10.0 * 0.05) < 1e-12);
    // idempotent once voided
    REQUIRE(m.enforce_upload_window("m1", false, 6) == 0.0);
}

TEST_CASE("content present at the deadline keeps the lease alive") {
    Market m;
    m.upload_model("m1", "alice", 1.0, 10, 12.0, 0, 4);
    REQUIRE(m.enforce_upload_window("m1", true, 9) == 0.0);
    REQUIRE_FALSE(m.lease("m1").voided);
}

TEST_CASE("topup extends by whole blocks and banks the remainder") {
    Market m;
    m.upload_model("m1", "alice", 2.0, 5, 10.0, 0, 4); // per-block rent = 2
    m.topup_rental("m1", 7.0, 3);                      // 3 whole blocks + 1 left over
    auto& l = m.lease("m1");
    REQUIRE(l.rented_until == 8);
    REQUIRE(l.escrow == 16.0);
    REQUIRE(l.compute_balance == 1.0);
    REQUIRE_THROWS(m.topup_rental("m1", 2.0, 20)); // already expired at height 20
}

TEST_CASE("fork copies size and fine-tuning fraction from the parent") {
    Market m;
    auto& parent = m.upload_model("base", "alice", 3.0, 10, 40.0, 0, 4);
    parent.fine_tuning_fraction = 0.5;
    auto& child = m.fork_model("base", "fork", "bob", 5, 20.0, 2, 4);
    REQUIRE(child.size_gb == 3.0);
    REQUIRE(child.fine_tuning_fraction == 0.5);
    REQUIRE(child.owner == "bob");
    REQUIRE(child.rented_until == 7);
    REQUIRE_THROWS(m.fork_model("base", "fork2", "bob", 5, 20.0, 99, 4)); // parent expired
}

TEST_CASE("training fees honor the fine-tuning fraction") {
    Market m;
    m.prices.basic_compute_price = 4.0;
    auto& l = m.upload_model("m1", "alice", 1.0, 10, 20.0, 0, 4);
    REQUIRE(m.training_fee(l, false) == 4.0);
    REQUIRE(m.training_fee(l, true) == 1.0); // default fraction 0.25
    REQUIRE(m.can_fund_step("m1", false));
    double fee = m.charge_training_step("m1", false);
    REQUIRE(fee == 4.0);
    REQUIRE(l.compute_balance == 6.0);
    m.refund_step_fee("m1", fee);
    REQUIRE(l.compute_balance == 10.0);
    REQUIRE_FALSE(m.can_fund_step("missing", false));
}

TEST_CASE("a lease is alive through rented_until inclusive") {
    Market m;
    m.upload_model("m1", "alice", 1.0, 5, 6.0, 0, 4);
    REQUIRE(m.expire_leases(5).empty()); // alive at its last height
    auto dropped = m.expire_leases(6);
    REQUIRE(dropped == std::vector<std::string>{"m1"});
    REQUIRE_FALSE(m.has_lease("m1"));
    // remaining escrow + compute balance burned
    REQUIRE(std::fabs(m.burned() - 6.0) < 1e-12);
}

TEST_CASE("market token flows balance") {
    Market m;
    double paid_in = 0.0, paid_out = 0.0;
    m.upload_model("a", "alice", 1.0, 4, 10.0, 0, 2);
    paid_in += 10.0;
    m.upload_model("b", "bob", 2.0, 3, 8.5, 0, 2);
    paid_in += 8.5;
    paid_out += m.enforce_upload_window("a", false, 3); // voids a
    m.topup_rental("b", 4.4, 1);
    paid_in += 4.4;
    paid_out += m.charge_training_step("b", false);
    m.expire_leases(50); // burn what's left of b
    double held = m.escrow_total() + m.compute_total();
    REQUIRE(std::fabs((held + m.burned() + paid_out) - paid_in) < 1e-12);
}

TEST_CASE("price state validation") {
    PriceState p;
    p.giga_price = 0.0;
    REQUIRE_THROWS(p.validate());
    p = {};
    p.max_nudge_fraction = -0.1;
    REQUIRE_THROWS(p.validate());
}
