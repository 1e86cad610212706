#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

#include "pogo/quant.hpp"

using namespace pogo;

static Hash256 h256(const std::string& s) { return sha256(Bytes(s.begin(), s.end())); }

static ParamVector flat(std::vector<float> values) {
    ParamVector p;
    p.layout = {{"flat", 0, {values.size()}}};
    p.values = std::move(values);
    return p;
}

TEST_CASE("hand-worked quantization example") {
    // max |v| = 7.0, so scale = 1.0 and codes are just rounded values.
    ParamVector p = flat({7.0f, -3.5f, 0.0f, 2.4f});
    QuantModel q = quantize(p, 4);
    REQUIRE(q.num_chunks() == 1);
    REQUIRE(q.scales[0] == 1.0f);
    REQUIRE(q.codes[0] == 7);
    REQUIRE(q.codes[1] == -4); // -3.5 rounds half-to-even to -4
    REQUIRE(q.codes[2] == 0);
    REQUIRE(q.codes[3] == 2);
}

TEST_CASE("round half to even at the .5 boundaries") {
    ParamVector p = flat({7.0f, 0.5f, 1.5f, 2.5f, -0.5f, -2.5f});
    QuantModel q = quantize(p, 6);
    REQUIRE(q.scales[0] == 1.0f);
    REQUIRE(q.codes[1] == 0);  // 0.5 -> 0
    REQUIRE(q.codes[2] == 2);  // 1.5 -> 2
    REQUIRE(q.codes[3] == 2);  // 2.5 -> 2
    REQUIRE(q.codes[4] == 0);
    REQUIRE(q.codes[5] == -2);
}

TEST_CASE("codes never leave [-7, 7] and the extreme value maps to 7") {
    SeedStream rng(h256("codes"));
    std::vector<float> vals(64);
    for (auto& v : vals) v = static_cast<float>(20.0 * rng.next_unit() - 10.0);
    QuantModel q = quantize(flat(vals), 16);
    for (int8_t c : q.codes) {
        REQUIRE(c >= -7);
        REQUIRE(c <= 7);
    }
}

TEST_CASE("zero chunks quantize to zero codes and zero scale") {
    QuantModel q = quantize(flat({0.0f, 0.0f, 0.0f}), 3);
    REQUIRE(q.scales[0] == 0.0f);
    for (int8_t c : q.codes) REQUIRE(c == 0);
    ParamVector back = dequantize(q);
    for (float v : back.values) REQUIRE(v == 0.0f);
}

TEST_CASE("round-trip error is bounded by half the chunk scale") {
    SeedStream rng(h256("roundtrip"));
    for (int trial = 0; trial < 20; ++trial) {
        uint64_t dim = 1 + rng.next_below(200);
        uint64_t chunk = 1 + rng.next_below(32);
        std::vector<float> vals(dim);
        for (auto& v : vals) v = static_cast<float>(8.0 * rng.next_unit() - 4.0);
        ParamVector p = flat(vals);
        QuantModel q = quantize(p, chunk);
        ParamVector back = dequantize(q);
        for (uint64_t i = 0; i < dim; ++i) {
            float scale = q.scales[i / chunk];
            // tiny slack for the float divide/multiply round trip
            REQUIRE(std::fabs(back.values[i] - p.values[i]) <= scale / 2.0f * (1.0f + 1e-5f));
        }
    }
}

TEST_CASE("serialization round trips including odd dimensions") {
    SeedStream rng(h256("serialize"));
    for (uint64_t dim : {1, 2, 15, 16, 17, 33}) {
        std::vector<float> vals(dim);
        for (auto& v : vals) v = static_cast<float>(2.0 * rng.next_unit() - 1.0);
        QuantModel q = quantize(flat(vals), 8);
        Bytes b = q.serialize();
        QuantModel r = QuantModel::deserialize(b);
        REQUIRE(r.source_dim == q.source_dim);
        REQUIRE(r.chunk_size == q.chunk_size);
        REQUIRE(r.codes == q.codes);
        REQUIRE(r.scales.size() == q.scales.size());
        for (size_t i = 0; i < q.scales.size(); ++i) REQUIRE(r.scales[i] == q.scales[i]);
        REQUIRE(r.hash() == q.hash());
    }
}

TEST_CASE("deserialization rejects malformed payloads") {
    QuantModel q = quantize(flat({1.0f, -1.0f, 0.5f}), 2);
    Bytes b = q.serialize();

    Bytes trailing = b;
    trailing.push_back(0);
    REQUIRE_THROWS(QuantModel::deserialize(trailing));

    Bytes truncated(b.begin(), b.end() - 1);
    REQUIRE_THROWS(QuantModel::deserialize(truncated));

    // Odd dimension: nonzero spare nibble in the last packed byte.
    Bytes bad_nibble = b;
    bad_nibble.back() |= 0xf0;
    REQUIRE_THROWS(QuantModel::deserialize(bad_nibble));
}

TEST_CASE("the -8 nibble pattern is rejected") {
    QuantModel q = quantize(flat({7.0f, 1.0f}), 2);
    Bytes b = q.serialize();
    b.back() = 0x88; // both nibbles decode to -8
    REQUIRE_THROWS(QuantModel::deserialize(b));
}

TEST_CASE("consistency check accepts committed values and flags perturbations") {
    std::vector<float> vals = {1.0f, -0.5f, 0.25f, 0.7f};
    ParamVector p = flat(vals);
    QuantModel q = quantize(p, 4);
    QuantPolicy policy;
    auto codes = chunk_codes(q, 0);
    REQUIRE(check_consistency(vals, codes, q.scales[0], policy).pass);

    // Push one value just past the half-step tolerance.
    std::vector<float> bad = vals;
    bad[2] += q.scales[0]; // a full step off its code
    auto res = check_consistency(bad, codes, q.scales[0], policy);
    REQUIRE_FALSE(res.pass);
    REQUIRE(res.first_bad_index == 2);

    std::vector<float> short_leaf(vals.begin(), vals.end() - 1);
    REQUIRE_THROWS(check_consistency(short_leaf, codes, q.scales[0], policy));
}

TEST_CASE("diff and apply reconstruct the successor bit-exactly") {
    SeedStream rng(h256("diff"));
    std::vector<float> base_vals(96);
    for (auto& v : base_vals) v = static_cast<float>(2.0 * rng.next_unit() - 1.0);
    std::vector<float> next_vals = base_vals;
    // change a couple of chunks only
    next_vals[5] += 0.4f;
    next_vals[70] -= 0.6f;
    QuantModel base = quantize(flat(base_vals), 16);
    QuantModel next = quantize(flat(next_vals), 16);

    QuantDiff d = diff(base, next);
    REQUIRE(d.changed_chunks.size() >= 1);
    REQUIRE(d.changed_chunks.size() < base.num_chunks());
    QuantModel rebuilt = apply(base, d);
    REQUIRE(rebuilt.codes == next.codes);
    REQUIRE(std::memcmp(rebuilt.scales.data(), next.scales.data(), next.scales.size() * 4) == 0);
    REQUIRE(rebuilt.hash() == next.hash());

    // Identical models diff to nothing, and apply is the identity.
    QuantDiff empty = diff(base, base);
    REQUIRE(empty.changed_chunks.empty());
    REQUIRE(apply(base, empty).hash() == base.hash());
}

TEST_CASE("apply refuses the wrong predecessor") {
    QuantModel a = quantize(flat({1.0f, 2.0f}), 2);
    QuantModel b = quantize(flat({3.0f, 4.0f}), 2);
    QuantDiff d = diff(a, b);
    REQUIRE_THROWS(apply(b, d)); // d was built against a, not b
}

TEST_CASE("quantized loss equals forward over the dequantized parameters") {
    MlpArch arch{4, {6}, 2, LossKind::SquaredError};
    ParamVector p = init_params(arch, h256("qloss"));
    Dataset ds = make_synthetic_regression(arch, 16, h256("qloss-data"), 0.05f);
    QuantModel q = quantize(p, 8);
    auto rows = all_rows(ds);
    REQUIRE(quantized_loss(arch, q, ds, rows).mean == forward(arch, dequantize(q), ds, rows).mean);
}
