#ifndef POGO_MODEL_HPP
#define POGO_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pogo/bytes.hpp"
#include "pogo/hash.hpp"
#include "pogo/random.hpp"

namespace pogo {

// ---------------------------------------------------------------------------
// Parameter vectors
// ---------------------------------------------------------------------------

struct LayoutEntry {
    std::string name;
    uint64_t offset = 0;
    std::vector<uint64_t> shape;

    uint64_t size() const {
        uint64_t n = 1;
        for (uint64_t d : shape) n *= d;
        return n;
    }
};

// Full-precision model parameters plus the named layout that maps flat
// offsets back to layers. The serialized bytes are consensus-visible: they
// are what gets chunked into Merkle leaves.
struct ParamVector {
    std::vector<float> values;
    std::vector<LayoutEntry> layout;

    uint64_t dim() const { return values.size(); }

    void validate() const {
        uint64_t expect = 0;
        for (const auto& e : layout) {
            if (e.offset != expect) throw std::runtime_error("param layout: offsets not contiguous");
            expect += e.size();
        }
        if (expect != values.size()) throw std::runtime_error("param layout: size mismatch");
        for (float v : values)
            if (!std::isfinite(v)) throw std::runtime_error("param vector: non-finite value");
    }

    Bytes serialize() const {
        ByteWriter w;
        w.u64(layout.size());
        for (const auto& e : layout) {
            w.lp_string(e.name);
            w.u64(e.offset);
            w.u64(e.shape.size());
            for (uint64_t d : e.shape) w.u64(d);
        }
        w.u64(values.size());
        for (float v : values) w.f32(v);
        return w.take();
    }

    static ParamVector deserialize(std::span<const uint8_t> bytes) {
        ByteReader r(bytes);
        ParamVector p;
        uint64_t n_entries = r.u64();
        for (uint64_t i = 0; i < n_entries; ++i) {
            LayoutEntry e;
            e.name = r.lp_string();
            e.offset = r.u64();
            uint64_t nd = r.u64();
            for (uint64_t j = 0; j < nd; ++j) e.shape.push_back(r.u64());
            p.layout.push_back(std::move(e));
        }
        uint64_t n_values = r.u64();
        p.values.resize(n_values);
        for (uint64_t i = 0; i < n_values; ++i) p.values[i] = r.f32();
        return p;
    }

    // Raw 32-bit value bytes in layout order, the input to Merkle chunking.
    Bytes value_bytes() const {
        ByteWriter w;
        for (float v : values) w.f32(v);
        return w.take();
    }
};

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct Dataset {
    std::vector<float> inputs;   // rows * in_dim, row-major
    std::vector<float> targets;  // rows * out_dim, row-major
    uint64_t rows = 0;
    uint64_t in_dim = 0;
    uint64_t out_dim = 0;
    Hash256 id{};

    Bytes serialize() const {
        ByteWriter w;
        w.u64(rows);
        w.u64(in_dim);
        w.u64(out_dim);
        for (float v : inputs) w.f32(v);
        for (float v : targets) w.f32(v);
        return w.take();
    }

    void seal() {
        if (rows < 1 || inputs.size() != rows * in_dim || targets.size() != rows * out_dim)
            throw std::runtime_error("dataset: shape mismatch");
        id = sha256(serialize());
    }

    std::span<const float> input_row(uint64_t r) const { return {inputs.data() + r * in_dim, in_dim}; }
    std::span<const float> target_row(uint64_t r) const { return {targets.data() + r * out_dim, out_dim}; }
};

inline std::vector<uint64_t> all_rows(const Dataset& ds) {
    std::vector<uint64_t> idx(ds.rows);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

// ---------------------------------------------------------------------------
// MLP
// ---------------------------------------------------------------------------

enum class LossKind : uint8_t { SquaredError = 0, CrossEntropy = 1 };

struct MlpArch {
    uint64_t input_dim = 0;
    std::vector<uint64_t> hidden;
    uint64_t output_dim = 0;
    LossKind loss = LossKind::SquaredError;

    std::vector<uint64_t> widths() const {
        std::vector<uint64_t> w{input_dim};
        w.insert(w.end(), hidden.begin(), hidden.end());
        w.push_back(output_dim);
        return w;
    }

    uint64_t param_count() const {
        auto w = widths();
        uint64_t n = 0;
        for (size_t l = 0; l + 1 < w.size(); ++l) n += w[l] * w[l + 1] + w[l + 1];
        return n;
    }
};

inline std::vector<LayoutEntry> mlp_layout(const MlpArch& arch) {
    std::vector<LayoutEntry> layout;
    auto w = arch.widths();
    uint64_t off = 0;
    for (size_t l = 0; l + 1 < w.size(); ++l) {
        LayoutEntry wt{"layer" + std::to_string(l) + ".weight", off, {w[l + 1], w[l]}};
        off += wt.size();
        LayoutEntry bs{"layer" + std::to_string(l) + ".bias", off, {w[l + 1]}};
        off += bs.size();
        layout.push_back(std::move(wt));
        layout.push_back(std::move(bs));
    }
    return layout;
}

// Keyed deterministic init: uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
// drawn from the hash stream so the same scenario seed always produces the
// same network on every platform.
inline ParamVector init_params(const MlpArch& arch, const Hash256& seed) {
    ParamVector p;
    p.layout = mlp_layout(arch);
    p.values.resize(arch.param_count());
    SeedStream rng(seed);
    auto w = arch.widths();
    uint64_t off = 0;
    for (size_t l = 0; l + 1 < w.size(); ++l) {
        float bound = 1.0f / std::sqrt(static_cast<float>(w[l]));
        uint64_t n = w[l] * w[l + 1] + w[l + 1];
        for (uint64_t i = 0; i < n; ++i)
            p.values[off + i] = bound * static_cast<float>(2.0 * rng.next_unit() - 1.0);
        off += n;
    }
    return p;
}

struct ForwardResult {
    std::vector<float> per_sample;
    float mean = 0.0f;
};

namespace detail {

// Single-sample forward pass; fills per-layer activations when acts != null
// (needed for backprop). All arithmetic is 32-bit with a fixed accumulation
// order: consensus recomputes these numbers bit-for-bit.
inline void mlp_eval(const MlpArch& arch, std::span<const float> params, std::span<const float> x,
                     std::vector<std::vector<float>>* acts, std::vector<float>& out) {
    auto widths = arch.widths();
    std::vector<float> cur(x.begin(), x.end());
    if (acts) {
        acts->clear();
        acts->push_back(cur);
    }
    uint64_t off = 0;
    for (size_t l = 0; l + 1 < widths.size(); ++l) {
        uint64_t nin = widths[l], nout = widths[l + 1];
        std::vector<float> next(nout);
        for (uint64_t o = 0; o < nout; ++o) {
            float z = params[off + nin * nout + o]; // bias
            const float* wrow = params.data() + off + o * nin;
            for (uint64_t i = 0; i < nin; ++i) z += wrow[i] * cur[i];
            bool last = (l + 2 == widths.size());
            next[o] = last ? z : std::tanh(z);
        }
        off += nin * nout + nout;
        cur = std::move(next);
        if (acts) acts->push_back(cur);
    }
    out = std::move(cur);
}

inline void softmax_inplace(std::vector<float>& v) {
    float mx = v[0];
    for (float x : v) mx = std::max(mx, x);
    float sum = 0.0f;
    for (float& x : v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (float& x : v) x /= sum;
}

// Per-sample loss: mean over output coordinates (keeps epsilon thresholds
// stable across output widths).
inline float sample_loss(const MlpArch& arch, std::span<const float> pred, std::span<const float> tgt) {
    float inv = 1.0f / static_cast<float>(arch.output_dim);
    if (arch.loss == LossKind::SquaredError) {
        float s = 0.0f;
        for (uint64_t j = 0; j < arch.output_dim; ++j) {
            float d = pred[j] - tgt[j];
            s += d * d;
        }
        return s * inv;
    }
    std::vector<float> p(pred.begin(), pred.end());
    softmax_inplace(p);
    float s = 0.0f;
    for (uint64_t j = 0; j < arch.output_dim; ++j)
        s -= tgt[j] * std::log(std::max(p[j], 1e-30f));
    return s * inv;
}

} // namespace detail

inline void check_dims(const MlpArch& arch, const ParamVector& params, const Dataset& ds) {
    if (params.dim() != arch.param_count())
        throw std::runtime_error("forward: params do not match architecture");
    if (ds.in_dim != arch.input_dim || ds.out_dim != arch.output_dim)
        throw std::runtime_error("forward: dataset width does not match architecture");
}

inline ForwardResult forward(const MlpArch& arch, const ParamVector& params, const Dataset& ds,
                             std::span<const uint64_t> batch) {
    if (batch.empty()) throw std::runtime_error("forward: empty batch");
    check_dims(arch, params, ds);
    ForwardResult res;
    res.per_sample.reserve(batch.size());
    float sum = 0.0f;
    std::vector<float> out;
    for (uint64_t r : batch) {
        detail::mlp_eval(arch, params.values, ds.input_row(r), nullptr, out);
        float l = detail::sample_loss(arch, out, ds.target_row(r));
        res.per_sample.push_back(l);
        sum += l;
    }
    res.mean = sum / static_cast<float>(batch.size());
    return res;
}

inline float full_loss(const MlpArch& arch, const ParamVector& params, const Dataset& ds) {
    return forward(arch, params, ds, all_rows(ds)).mean;
}

inline ParamVector gradient(const MlpArch& arch, const ParamVector& params, const Dataset& ds,
                            std::span<const uint64_t> batch) {
    if (batch.empty()) throw std::runtime_error("gradient: empty batch");
    check_dims(arch, params, ds);
    ParamVector grad;
    grad.layout = params.layout;
    grad.values.assign(params.values.size(), 0.0f);

    auto widths = arch.widths();
    size_t n_layers = widths.size() - 1;
    std::vector<std::vector<float>> acts;
    std::vector<float> out;
    float inv_out = 1.0f / static_cast<float>(arch.output_dim);

    for (uint64_t r : batch) {
        detail::mlp_eval(arch, params.values, ds.input_row(r), &acts, out);
        auto tgt = ds.target_row(r);

        // dL/dz at the output layer.
        std::vector<float> delta(arch.output_dim);
        if (arch.loss == LossKind::SquaredError) {
            for (uint64_t j = 0; j < arch.output_dim; ++j)
                delta[j] = 2.0f * (out[j] - tgt[j]) * inv_out;
        } else {
            std::vector<float> p(out);
            detail::softmax_inplace(p);
            for (uint64_t j = 0; j < arch.output_dim; ++j)
                delta[j] = (p[j] - tgt[j]) * inv_out;
        }

        // Walk layers backwards; activations[l] feeds layer l.
        uint64_t off_end = params.values.size();
        for (size_t l = n_layers; l-- > 0;) {
            uint64_t nin = widths[l], nout = widths[l + 1];
            uint64_t off = off_end - (nin * nout + nout);
            const auto& a = acts[l];
            for (uint64_t o = 0; o < nout; ++o) {
                float d = delta[o];
                float* grow = grad.values.data() + off + o * nin;
                for (uint64_t i = 0; i < nin; ++i) grow[i] += d * a[i];
                grad.values[off + nin * nout + o] += d;
            }
            if (l > 0) {
                std::vector<float> prev(nin, 0.0f);
                for (uint64_t i = 0; i < nin; ++i) {
                    float s = 0.0f;
                    for (uint64_t o = 0; o < nout; ++o)
                        s += params.values[off + o * nin + i] * delta[o];
                    float h = a[i];
                    prev[i] = s * (1.0f - h * h); // tanh'
                }
                delta = std::move(prev);
            }
            off_end = off;
        }
    }
    float inv_b = 1.0f / static_cast<float>(batch.size());
    for (float& g : grad.values) g *= inv_b;
    return grad;
}

struct TrainPolicy {
    float eta = 0.05f;
    float epsilon = 1e-4f;
    float epsilon_fine = 1e-4f;
    uint64_t batch_size = 32;
};

inline ParamVector sgd_step(const MlpArch& arch, const ParamVector& params, const Dataset& ds,
                            std::span<const uint64_t> batch, const TrainPolicy& policy) {
    ParamVector grad = gradient(arch, params, ds, batch);
    ParamVector next = params;
    for (size_t i = 0; i < next.values.size(); ++i)
        next.values[i] = params.values[i] - policy.eta * grad.values[i];
    return next;
}

struct TrainResult {
    ParamVector params;
    uint64_t steps = 0;
    float loss_before = 0.0f;
    float loss_after = 0.0f;
};

// Run SGD steps on seeded mini-batches until the full-dataset loss has
// dropped by at least epsilon below the starting loss. Failure after
// maxSteps is a defined outcome: the simulator turns it into a skipped
// height, not an error.
inline std::optional<TrainResult> train_until_decrement(const MlpArch& arch, const ParamVector& start,
                                                        const Dataset& ds, const TrainPolicy& policy,
                                                        uint64_t max_steps, const Seed& batch_seed,
                                                        float epsilon) {
    if (max_steps < 1) throw std::runtime_error("train_until_decrement: maxSteps must be >= 1");
    if (policy.batch_size < 1 || policy.batch_size > ds.rows)
        throw std::runtime_error("train_until_decrement: bad batch size");
    float loss0 = full_loss(arch, start, ds);
    ParamVector cur = start;
    for (uint64_t step = 0; step < max_steps; ++step) {
        Hash256 sub;
        {
            ByteWriter w;
            w.raw(batch_seed.bytes);
            w.u64(step);
            sub = sha256(w.bytes());
        }
        Seed step_seed{sub, batch_seed.height, batch_seed.purpose};
        auto batch = pick_indices(step_seed, ds.rows, policy.batch_size);
        cur = sgd_step(arch, cur, ds, batch, policy);
        float loss = full_loss(arch, cur, ds);
        if (loss < loss0 - epsilon)
            return TrainResult{std::move(cur), step + 1, loss0, loss};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Synthetic tasks
// ---------------------------------------------------------------------------

// Regression targets come from a randomly initialized teacher network plus
// uniform noise; a student of the same shape can always make progress.
inline Dataset make_synthetic_regression(const MlpArch& arch, uint64_t samples, const Hash256& seed,
                                         float noise) {
    Dataset ds;
    ds.rows = samples;
    ds.in_dim = arch.input_dim;
    ds.out_dim = arch.output_dim;
    Hash256 teacher_seed = sha256([&] {
        ByteWriter w;
        w.raw(seed);
        w.lp_string("teacher");
        return w.take();
    }());
    ParamVector teacher = init_params(arch, teacher_seed);
    SeedStream rng(seed);
    std::vector<float> out;
    for (uint64_t r = 0; r < samples; ++r) {
        std::vector<float> x(arch.input_dim);
        for (auto& v : x) v = static_cast<float>(2.0 * rng.next_unit() - 1.0);
        ds.inputs.insert(ds.inputs.end(), x.begin(), x.end());
        detail::mlp_eval(arch, teacher.values, x, nullptr, out);
        for (float y : out)
            ds.targets.push_back(y + noise * static_cast<float>(2.0 * rng.next_unit() - 1.0));
    }
    ds.seal();
    return ds;
}

// Classification labels are the teacher's argmax, one-hot encoded.
inline Dataset make_synthetic_classification(const MlpArch& arch, uint64_t samples, const Hash256& seed) {
    Dataset ds;
    ds.rows = samples;
    ds.in_dim = arch.input_dim;
    ds.out_dim = arch.output_dim;
    Hash256 teacher_seed = sha256([&] {
        ByteWriter w;
        w.raw(seed);
        w.lp_string("teacher");
        return w.take();
    }());
    ParamVector teacher = init_params(arch, teacher_seed);
    SeedStream rng(seed);
    std::vector<float> out;
    for (uint64_t r = 0; r < samples; ++r) {
        std::vector<float> x(arch.input_dim);
        for (auto& v : x) v = static_cast<float>(2.0 * rng.next_unit() - 1.0);
        ds.inputs.insert(ds.inputs.end(), x.begin(), x.end());
        detail::mlp_eval(arch, teacher.values, x, nullptr, out);
        uint64_t best = 0;
        for (uint64_t j = 1; j < arch.output_dim; ++j)
            if (out[j] > out[best]) best = j;
        for (uint64_t j = 0; j < arch.output_dim; ++j)
            ds.targets.push_back(j == best ? 1.0f : 0.0f);
    }
    ds.seal();
    return ds;
}

} // namespace pogo

#endif // POGO_MODEL_HPP
