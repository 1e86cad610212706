#ifndef POGO_COSTMODEL_HPP
#define POGO_COSTMODEL_HPP

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pogo {

// Analytical cost accounting. GB here means 10^9 bytes, matching the usual
// parameter-count arithmetic (175e9 params * 4 bytes = 700e9 bytes).

struct CostParams {
    double full_forward_cost = 10.0;  // GPU-hours for one 32-bit forward pass over the full dataset
    double backward_multiplier = 2.0; // backward cost as a multiple of forward
    double update_cost = 0.0;
    double alpha = 0.01;              // verification fraction of the dataset
    double quant_speedup = 8.0;       // 4-bit vs 32-bit throughput ratio
    double merk_cost = 0.0;           // constant per-block Merkle check cost

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw std::runtime_error("cost: alpha must be in (0, 1]");
        if (!(quant_speedup > 0.0)) throw std::runtime_error("cost: quantSpeedup must be positive");
        if (full_forward_cost < 0.0 || backward_multiplier < 0.0 || update_cost < 0.0 || merk_cost < 0.0)
            throw std::runtime_error("cost: negative cost component");
    }
};

inline double model_bytes(double param_count, double bits_per_param) {
    if (param_count < 0.0 || bits_per_param < 0.0) throw std::runtime_error("model_bytes: negative input");
    return param_count * bits_per_param / 8.0;
}

inline double verify_cost(const CostParams& p) {
    p.validate();
    return p.alpha * p.full_forward_cost / p.quant_speedup + p.merk_cost;
}

inline double train_cost(const CostParams& p) {
    p.validate();
    return p.full_forward_cost * (1.0 + p.backward_multiplier) + p.update_cost;
}

inline double cost_ratio(const CostParams& p) {
    double v = verify_cost(p);
    if (v <= 0.0) throw std::runtime_error("cost_ratio: verify cost is zero");
    return train_cost(p) / v;
}

struct SizeRow {
    std::string model;
    double params;
    double bytes32;
    double bytes4;
};

inline std::vector<SizeRow> size_table() {
    std::vector<SizeRow> rows;
    for (auto& [name, count] : std::vector<std::pair<std::string, double>>{
             {"GPT-3 (175B)", 175e9}, {"Gemma 3 (27B)", 27e9}}) {
        rows.push_back({name, count, model_bytes(count, 32), model_bytes(count, 4)});
    }
    return rows;
}

inline std::string size_table_csv() {
    std::ostringstream os;
    os << "model,params,bytes_32bit,gb_32bit,bytes_4bit,gb_4bit\n";
    for (const auto& r : size_table()) {
        os << r.model << ',' << r.params << ',' << r.bytes32 << ',' << r.bytes32 / 1e9 << ','
           << r.bytes4 << ',' << r.bytes4 / 1e9 << '\n';
    }
    return os.str();
}

inline std::string cost_sweep_csv(const CostParams& base, const std::vector<double>& alphas) {
    std::ostringstream os;
    os << "alpha,train_cost_gpuh,verify_cost_gpuh,ratio\n";
    for (double a : alphas) {
        CostParams p = base;
        p.alpha = a;
        os << a << ',' << train_cost(p) << ',' << verify_cost(p) << ',' << cost_ratio(p) << '\n';
    }
    return os.str();
}

} // namespace pogo

#endif // POGO_COSTMODEL_HPP
