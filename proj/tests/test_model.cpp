#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "pogo/model.hpp"

using namespace pogo;

static Hash256 h256(const std::string& s) { return sha256(Bytes(s.begin(), s.end())); }

// ---------------------------------------------------------------------------
// Independent double-precision reference network, used as the oracle for the
// finite-difference gradient check. Written from the math, not from the
// library code: plain loops, double accumulation.
// ---------------------------------------------------------------------------

static std::vector<double> ref_eval(const MlpArch& arch, const std::vector<double>& params,
                                    std::span<const float> x) {
    auto widths = arch.widths();
    std::vector<double> cur(x.begin(), x.end());
    size_t off = 0;
    for (size_t l = 0; l + 1 < widths.size(); ++l) {
        size_t nin = widths[l], nout = widths[l + 1];
        std::vector<double> next(nout);
        for (size_t o = 0; o < nout; ++o) {
            double z = params[off + nin * nout + o];
            for (size_t i = 0; i < nin; ++i) z += params[off + o * nin + i] * cur[i];
            next[o] = (l + 2 == widths.size()) ? z : std::tanh(z);
        }
        off += nin * nout + nout;
        cur = std::move(next);
    }
    return cur;
}

static double ref_batch_loss(const MlpArch& arch, const std::vector<double>& params,
                             const Dataset& ds, std::span<const uint64_t> batch) {
    double total = 0.0;
    for (uint64_t r : batch) {
        auto pred = ref_eval(arch, params, ds.input_row(r));
        auto tgt = ds.target_row(r);
        double s = 0.0;
        if (arch.loss == LossKind::SquaredError) {
            for (uint64_t j = 0; j < arch.output_dim; ++j) {
                double d = pred[j] - tgt[j];
                s += d * d;
            }
        } else {
            double mx = pred[0];
            for (double v : pred) mx = std::max(mx, v);
            double denom = 0.0;
            for (double v : pred) denom += std::exp(v - mx);
            for (uint64_t j = 0; j < arch.output_dim; ++j)
                s -= tgt[j] * (pred[j] - mx - std::log(denom));
        }
        total += s / static_cast<double>(arch.output_dim);
    }
    return total / static_cast<double>(batch.size());
}

TEST_CASE("param vector serialization round trips") {
    MlpArch arch{3, {4}, 2, LossKind::SquaredError};
    ParamVector p = init_params(arch, h256("params"));
    p.validate();
    ParamVector q = ParamVector::deserialize(p.serialize());
    REQUIRE(q.values == p.values);
    REQUIRE(q.layout.size() == p.layout.size());
    for (size_t i = 0; i < p.layout.size(); ++i) {
        REQUIRE(q.layout[i].name == p.layout[i].name);
        REQUIRE(q.layout[i].offset == p.layout[i].offset);
        REQUIRE(q.layout[i].shape == p.layout[i].shape);
    }
    REQUIRE(p.value_bytes().size() == p.values.size() * 4);
}

TEST_CASE("layout validation catches gaps and non-finite values") {
    ParamVector p;
    p.layout = {{"a", 0, {2}}, {"b", 3, {1}}}; // gap at offset 2
    p.values.assign(4, 0.0f);
    REQUIRE_THROWS(p.validate());

    p.layout = {{"a", 0, {4}}};
    p.values[2] = std::numeric_limits<float>::infinity();
    REQUIRE_THROWS(p.validate());
}

TEST_CASE("mlp layout covers the parameter count contiguously") {
    MlpArch arch{8, {16, 8}, 4, LossKind::SquaredError};
    auto layout = mlp_layout(arch);
    uint64_t total = 0;
    for (const auto& e : layout) {
        REQUIRE(e.offset == total);
        total += e.size();
    }
    REQUIRE(total == arch.param_count());
    // 8*16+16 + 16*8+8 + 8*4+4 = 316
    REQUIRE(arch.param_count() == 316);
}

TEST_CASE("init is deterministic in the seed and bounded by fan-in") {
    MlpArch arch{8, {16}, 4, LossKind::SquaredError};
    ParamVector a = init_params(arch, h256("init"));
    ParamVector b = init_params(arch, h256("init"));
    REQUIRE(a.values == b.values);
    REQUIRE(init_params(arch, h256("other")).values != a.values);
    float bound0 = 1.0f / std::sqrt(8.0f);
    for (uint64_t i = 0; i < 8 * 16 + 16; ++i)
        REQUIRE(std::fabs(a.values[i]) <= bound0);
}

TEST_CASE("forward pass is deterministic and matches the reference") {
    MlpArch arch{6, {10}, 3, LossKind::SquaredError};
    ParamVector p = init_params(arch, h256("fw"));
    Dataset ds = make_synthetic_regression(arch, 32, h256("fw-data"), 0.05f);
    auto rows = all_rows(ds);
    ForwardResult a = forward(arch, p, ds, rows);
    ForwardResult b = forward(arch, p, ds, rows);
    REQUIRE(a.per_sample == b.per_sample);
    REQUIRE(a.mean == b.mean);

    std::vector<double> pd(p.values.begin(), p.values.end());
    double ref = ref_batch_loss(arch, pd, ds, rows);
    REQUIRE(std::fabs(static_cast<double>(a.mean) - ref) < 1e-5);
}

TEST_CASE("analytic gradient of a linear probe is exact") {
    // No hidden layers: mean-over-outputs squared error of w*x + b has a
    // closed-form gradient we can write down directly.
    MlpArch arch{2, {}, 1, LossKind::SquaredError};
    ParamVector p;
    p.layout = mlp_layout(arch);
    p.values = {0.5f, -0.25f, 0.1f}; // w0, w1, b
    Dataset ds;
    ds.rows = 2;
    ds.in_dim = 2;
    ds.out_dim = 1;
    ds.inputs = {1.0f, 2.0f, -1.0f, 0.5f};
    ds.targets = {1.0f, 0.0f};
    ds.seal();
    std::vector<uint64_t> batch = {0, 1};
    ParamVector g = gradient(arch, p, ds, batch);
    // residuals: r0 = (0.5*1 - 0.25*2 + 0.1) - 1 = -0.9
    //            r1 = (0.5*-1 - 0.25*0.5 + 0.1) - 0 = -0.525
    // dL/dw_i = mean over samples of 2 * r * x_i
    double r0 = -0.9, r1 = -0.525;
    REQUIRE(std::fabs(g.values[0] - (2 * r0 * 1.0 + 2 * r1 * -1.0) / 2) < 1e-6);
    REQUIRE(std::fabs(g.values[1] - (2 * r0 * 2.0 + 2 * r1 * 0.5) / 2) < 1e-6);
    REQUIRE(std::fabs(g.values[2] - (2 * r0 + 2 * r1) / 2) < 1e-6);
}

static void fd_check(LossKind loss, const char* tag) {
    MlpArch arch{5, {8}, 3, loss};
    ParamVector p = init_params(arch, h256(std::string("fd-") + tag));
    Dataset ds = (loss == LossKind::SquaredError)
                     ? make_synthetic_regression(arch, 24, h256(std::string("fdd-") + tag), 0.05f)
                     : make_synthetic_classification(arch, 24, h256(std::string("fdd-") + tag));
    std::vector<uint64_t> batch = all_rows(ds);
    ParamVector g = gradient(arch, p, ds, batch);

    std::vector<double> pd(p.values.begin(), p.values.end());
    SeedStream probe(h256(std::string("probe-") + tag));
    const double h = 1e-5;
    int checked = 0;
    for (int t = 0; t < 120; ++t) {
        uint64_t i = probe.next_below(p.values.size());
        std::vector<double> hi = pd, lo = pd;
        hi[i] += h;
        lo[i] -= h;
        double fd = (ref_batch_loss(arch, hi, ds, batch) - ref_batch_loss(arch, lo, ds, batch)) / (2 * h);
        double got = g.values[i];
        REQUIRE(std::fabs(got - fd) <= std::max(1e-6, 1e-3 * std::fabs(fd)));
        ++checked;
    }
    REQUIRE(checked >= 100);
}

TEST_CASE("backprop agrees with double-precision finite differences (mse)") {
    fd_check(LossKind::SquaredError, "mse");
}

TEST_CASE("backprop agrees with double-precision finite differences (cross-entropy)") {
    fd_check(LossKind::CrossEntropy, "ce");
}

TEST_CASE("an sgd step with a small rate lowers the batch loss") {
    MlpArch arch{6, {12}, 2, LossKind::SquaredError};
    ParamVector p = init_params(arch, h256("step"));
    Dataset ds = make_synthetic_regression(arch, 48, h256("step-data"), 0.02f);
    auto batch = all_rows(ds);
    TrainPolicy tp{0.05f, 1e-4f, 1e-4f, 48};
    float before = forward(arch, p, ds, batch).mean;
    ParamVector next = sgd_step(arch, p, ds, batch, tp);
    float after = forward(arch, next, ds, batch).mean;
    REQUIRE(after < before);
}

TEST_CASE("train_until_decrement achieves the decrement or reports failure") {
    MlpArch arch{6, {12}, 2, LossKind::SquaredError};
    ParamVector p = init_params(arch, h256("train"));
    Dataset ds = make_synthetic_regression(arch, 64, h256("train-data"), 0.05f);
    TrainPolicy tp{0.1f, 1e-3f, 1e-3f, 16};
    Seed batch_seed = derive_seed(h256("batches"), 0, SeedPurpose::MiniBatch);
    auto res = train_until_decrement(arch, p, ds, tp, 64, batch_seed, tp.epsilon);
    REQUIRE(res.has_value());
    REQUIRE(res->loss_after < res->loss_before - tp.epsilon);
    REQUIRE(res->steps >= 1);
    REQUIRE(res->loss_after == full_loss(arch, res->params, ds));

    // Same inputs, same result: the training path is deterministic.
    auto res2 = train_until_decrement(arch, p, ds, tp, 64, batch_seed, tp.epsilon);
    REQUIRE(res2->params.values == res->params.values);
    REQUIRE(res2->steps == res->steps);

    // An unreachable decrement must fail cleanly, not loop or throw.
    auto fail = train_until_decrement(arch, p, ds, tp, 2, batch_seed, 1e9f);
    REQUIRE_FALSE(fail.has_value());
}

TEST_CASE("synthetic datasets are sealed and reproducible") {
    MlpArch arch{4, {6}, 3, LossKind::SquaredError};
    Dataset a = make_synthetic_regression(arch, 20, h256("ds"), 0.1f);
    Dataset b = make_synthetic_regression(arch, 20, h256("ds"), 0.1f);
    REQUIRE(a.id == b.id);
    REQUIRE(a.inputs == b.inputs);
    REQUIRE(a.targets == b.targets);
    REQUIRE(a.id != make_synthetic_regression(arch, 20, h256("ds2"), 0.1f).id);

    MlpArch carch{4, {6}, 3, LossKind::CrossEntropy};
    Dataset c = make_synthetic_classification(carch, 20, h256("cls"));
    // one-hot targets
    for (uint64_t r = 0; r < c.rows; ++r) {
        float sum = 0.0f;
        for (uint64_t j = 0; j < c.out_dim; ++j) {
            float v = c.targets[r * c.out_dim + j];
            REQUIRE((v == 0.0f || v == 1.0f));
            sum += v;
        }
        REQUIRE(sum == 1.0f);
    }
}

TEST_CASE("dimension mismatches are rejected") {
    MlpArch arch{4, {6}, 3, LossKind::SquaredError};
    ParamVector p = init_params(arch, h256("dims"));
    Dataset ds = make_synthetic_regression(arch, 8, h256("dims-data"), 0.0f);
    MlpArch wrong{5, {6}, 3, LossKind::SquaredError};
    std::vector<uint64_t> batch = {0};
    REQUIRE_THROWS(forward(wrong, p, ds, batch));
    REQUIRE_THROWS(forward(arch, p, ds, std::vector<uint64_t>{}));
}
