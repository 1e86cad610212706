#ifndef POGO_QUANT_HPP
#define POGO_QUANT_HPP

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <vector>

#include "pogo/bytes.hpp"
#include "pogo/hash.hpp"
#include "pogo/model.hpp"

namespace pogo {

// Per-chunk symmetric linear 4-bit quantization. Codes live in [-7, +7]
// (the -8 pattern is never produced), scale = chunkMaxAbs / 7, rounding is
// half-to-even. Chunk granularity mirrors the Merkle leaf chunking so one
// leaf maps onto whole chunks.
struct QuantModel {
    std::vector<int8_t> codes;   // one per parameter, unpacked view
    std::vector<float> scales;   // one per chunk
    uint64_t chunk_size = 0;
    uint64_t source_dim = 0;
    std::vector<LayoutEntry> layout; // carried alongside, not serialized

    uint64_t num_chunks() const { return scales.size(); }

    // Header (sourceDim, chunkSize), scales, then two's-complement nibbles
    // packed low-nibble-first. hashQuant4 is the hash of exactly these bytes.
    Bytes serialize() const {
        ByteWriter w;
        w.u64(source_dim);
        w.u64(chunk_size);
        for (float s : scales) w.f32(s);
        for (size_t i = 0; i < codes.size(); i += 2) {
            uint8_t lo = static_cast<uint8_t>(codes[i]) & 0x0f;
            uint8_t hi = (i + 1 < codes.size()) ? (static_cast<uint8_t>(codes[i + 1]) & 0x0f) : 0;
            w.u8(static_cast<uint8_t>(lo | (hi << 4)));
        }
        return w.take();
    }

    static QuantModel deserialize(std::span<const uint8_t> bytes) {
        ByteReader r(bytes);
        QuantModel q;
        q.source_dim = r.u64();
        q.chunk_size = r.u64();
        if (q.chunk_size == 0) throw std::runtime_error("quant codec: zero chunk size");
        uint64_t n_chunks = (q.source_dim + q.chunk_size - 1) / q.chunk_size;
        q.scales.resize(n_chunks);
        for (auto& s : q.scales) s = r.f32();
        uint64_t n_bytes = (q.source_dim + 1) / 2;
        auto packed = r.take(n_bytes);
        if (!r.done()) throw std::runtime_error("quant codec: trailing bytes");
        q.codes.resize(q.source_dim);
        for (uint64_t i = 0; i < q.source_dim; ++i) {
            uint8_t nib = (i % 2 == 0) ? (packed[i / 2] & 0x0f) : (packed[i / 2] >> 4);
            // sign-extend the 4-bit two's-complement value
            int8_t v = static_cast<int8_t>(nib >= 8 ? static_cast<int>(nib) - 16 : static_cast<int>(nib));
            if (v < -7 || v > 7) throw std::runtime_error("quant codec: code out of range");
            q.codes[i] = v;
        }
        // odd dimension: the unused high nibble of the last byte must be zero
        if (q.source_dim % 2 == 1 && (packed[n_bytes - 1] >> 4) != 0)
            throw std::runtime_error("quant codec: nonzero trailing nibble");
        return q;
    }

    Hash256 hash() const { return sha256(serialize()); }
};

struct QuantPolicy {
    float epsilon_quant = 1e-4f;
    float consistency_slack = 0.0f;
};

namespace detail {
inline float round_half_even(float x) {
    // nearbyint honors the current rounding mode; the default
    // (FE_TONEAREST) is round-half-to-even, which is what consensus pins.
    return std::nearbyintf(x);
}
} // namespace detail

inline QuantModel quantize(const ParamVector& params, uint64_t chunk_size) {
    if (chunk_size < 1) throw std::runtime_error("quantize: chunkSize must be >= 1");
    params.validate();
    QuantModel q;
    q.chunk_size = chunk_size;
    q.source_dim = params.dim();
    q.layout = params.layout;
    uint64_t n_chunks = (q.source_dim + chunk_size - 1) / chunk_size;
    q.scales.resize(n_chunks);
    q.codes.resize(q.source_dim);
    for (uint64_t c = 0; c < n_chunks; ++c) {
        uint64_t begin = c * chunk_size;
        uint64_t end = std::min(begin + chunk_size, q.source_dim);
        float max_abs = 0.0f;
        for (uint64_t i = begin; i < end; ++i)
            max_abs = std::max(max_abs, std::fabs(params.values[i]));
        float scale = max_abs / 7.0f;
        q.scales[c] = scale;
        for (uint64_t i = begin; i < end; ++i) {
            if (scale == 0.0f) {
                q.codes[i] = 0;
                continue;
            }
            int code = static_cast<int>(detail::round_half_even(params.values[i] / scale));
            if (code > 7) code = 7;
            if (code < -7) code = -7;
            q.codes[i] = static_cast<int8_t>(code);
        }
    }
    return q;
}

inline ParamVector dequantize(const QuantModel& q) {
    ParamVector p;
    p.layout = q.layout;
    p.values.resize(q.source_dim);
    for (uint64_t i = 0; i < q.source_dim; ++i)
        p.values[i] = static_cast<float>(q.codes[i]) * q.scales[i / q.chunk_size];
    return p;
}

// Definitionally forward() over the dequantized weights; asserting anything
// else would give verifiers a different number than proposers.
inline ForwardResult quantized_loss(const MlpArch& arch, const QuantModel& q, const Dataset& ds,
                                    std::span<const uint64_t> batch) {
    return forward(arch, dequantize(q), ds, batch);
}

struct ConsistencyResult {
    bool pass = true;
    uint64_t first_bad_index = 0;
};

// Leaf-vs-quant check of one chunk: each committed 32-bit value must sit
// within half a quantization step of its code (plus configured slack).
inline ConsistencyResult check_consistency(std::span<const float> leaf32, std::span<const int8_t> codes,
                                           float scale, const QuantPolicy& policy) {
    if (leaf32.size() != codes.size())
        throw std::runtime_error("check_consistency: chunk length mismatch");
    for (size_t j = 0; j < leaf32.size(); ++j) {
        float expect = static_cast<float>(codes[j]) * scale;
        if (std::fabs(leaf32[j] - expect) > scale / 2.0f + policy.consistency_slack)
            return {false, j};
    }
    return {true, 0};
}

// ---------------------------------------------------------------------------
// Binary diffs between consecutive quantized models
// ---------------------------------------------------------------------------

struct QuantDiff {
    struct ChunkUpdate {
        uint64_t chunk_index = 0;
        float new_scale = 0.0f;
        std::vector<int8_t> new_codes;
    };
    std::vector<ChunkUpdate> changed_chunks;
    Hash256 base_hash{};

    Bytes serialize() const {
        ByteWriter w;
        w.raw(base_hash);
        w.u64(changed_chunks.size());
        for (const auto& c : changed_chunks) {
            w.u64(c.chunk_index);
            w.f32(c.new_scale);
            w.u64(c.new_codes.size());
            for (int8_t v : c.new_codes) w.u8(static_cast<uint8_t>(v));
        }
        return w.take();
    }
};

inline std::span<const int8_t> chunk_codes(const QuantModel& q, uint64_t c) {
    uint64_t begin = c * q.chunk_size;
    uint64_t end = std::min(begin + q.chunk_size, q.source_dim);
    return {q.codes.data() + begin, end - begin};
}

inline QuantDiff diff(const QuantModel& base, const QuantModel& next) {
    if (base.chunk_size != next.chunk_size || base.source_dim != next.source_dim)
        throw std::runtime_error("quant diff: incompatible chunking");
    QuantDiff d;
    d.base_hash = base.hash();
    for (uint64_t c = 0; c < base.num_chunks(); ++c) {
        auto b = chunk_codes(base, c);
        auto n = chunk_codes(next, c);
        bool same_codes = std::equal(b.begin(), b.end(), n.begin(), n.end());
        bool same_scale = std::memcmp(&base.scales[c], &next.scales[c], 4) == 0;
        if (!same_codes || !same_scale) {
            d.changed_chunks.push_back({c, next.scales[c], std::vector<int8_t>(n.begin(), n.end())});
        }
    }
    return d;
}

inline QuantModel apply(const QuantModel& base, const QuantDiff& d) {
    if (base.hash() != d.base_hash)
        throw std::runtime_error("quant diff: wrong predecessor model");
    QuantModel next = base;
    for (const auto& c : d.changed_chunks) {
        if (c.chunk_index >= base.num_chunks())
            throw std::runtime_error("quant diff: chunk index out of range");
        uint64_t begin = c.chunk_index * base.chunk_size;
        uint64_t end = std::min(begin + base.chunk_size, base.source_dim);
        if (c.new_codes.size() != end - begin)
            throw std::runtime_error("quant diff: chunk length mismatch");
        next.scales[c.chunk_index] = c.new_scale;
        std::copy(c.new_codes.begin(), c.new_codes.end(), next.codes.begin() + begin);
    }
    return next;
}

} // namespace pogo

#endif // POGO_QUANT_HPP
