// Command-line front end: scenario runs, the protocol property suite,
// leaf-challenge detection calibration, cost reports and transcript replay.
//
// Exit codes: 0 success, 1 assertion failure, 2 usage/config error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pogo/costmodel.hpp"
#include "pogo/properties.hpp"
#include "pogo/scenario.hpp"
#include "pogo/simnet.hpp"

namespace fs = std::filesystem;
using pogo::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssert = 1;
constexpr int kExitUsage = 2;

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

// --set a.b.c=value updates the raw config JSON before parsing. Values parse
// as JSON when possible, otherwise as plain strings.
void apply_overrides(json& j, const std::vector<std::string>& overrides) {
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::runtime_error("override must be key=value: " + kv);
        std::string key = kv.substr(0, eq);
        std::string val = kv.substr(eq + 1);
        std::string pointer = "/";
        for (char c : key) pointer += (c == '.') ? '/' : c;
        json parsed;
        try {
            parsed = json::parse(val);
        } catch (const json::parse_error&) {
            parsed = val;
        }
        j[json::json_pointer(pointer)] = parsed;
    }
}

pogo::ScenarioConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    json j = load_json_file(path);
    apply_overrides(j, overrides);
    return pogo::scenario_from_json(j);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

uint64_t thread_cap() {
    if (const char* env = std::getenv("POGO_SIM_THREADS")) {
        long v = std::atol(env);
        if (v >= 1) return static_cast<uint64_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::vector<std::string>& overrides) {
    pogo::ScenarioConfig cfg = load_config(config_path, overrides);
    pogo::SimReport report = pogo::run_scenario(cfg);
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "report.json", report.to_json().dump(2) + "\n");
    write_file(fs::path(out_dir) / "report.csv", report.csv());
    write_file(fs::path(out_dir) / "transcript.jsonl", report.transcript());
    uint64_t finalized = 0, rejected = 0, skipped = 0;
    for (const auto& r : report.records) {
        if (r.outcome == pogo::Outcome::Finalized) ++finalized;
        else if (r.outcome == pogo::Outcome::Rejected) ++rejected;
        else ++skipped;
    }
    std::cout << "heights=" << report.records.size() << " finalized=" << finalized
              << " rejected=" << rejected << " skipped=" << skipped << "\n"
              << "wrote " << out_dir << "/report.json, report.csv, transcript.jsonl\n";
    return kExitOk;
}

int cmd_properties(const std::string& config_path, const std::vector<std::string>& overrides,
                   uint64_t runs) {
    pogo::ScenarioConfig cfg = load_config(config_path, overrides);
    auto results = pogo::property_suite(cfg, runs);
    bool failed = false;
    for (const auto& r : results) {
        std::cout << r.name << ": " << r.status;
        if (!r.detail.empty()) std::cout << " (" << r.detail << ")";
        std::cout << "\n";
        failed |= r.failed();
    }
    return failed ? kExitAssert : kExitOk;
}

int cmd_detect(uint64_t leaves, uint64_t tampered, uint64_t challenges, uint64_t trials,
               double sigma, uint64_t seed) {
    auto res = pogo::detection_rate(leaves, tampered, challenges, trials, seed, thread_cap());
    double dev = std::fabs(res.empirical - res.analytic);
    bool ok = dev <= sigma * res.std_error;
    std::cout << "leaves=" << leaves << " tampered=" << tampered << " challenges=" << challenges
              << " trials=" << trials << "\n"
              << "empirical=" << res.empirical << " analytic=" << res.analytic
              << " stderr=" << res.std_error << " deviation=" << dev / res.std_error << " sigma\n"
              << (ok ? "within" : "OUTSIDE") << " " << sigma << " sigma tolerance\n";
    return ok ? kExitOk : kExitAssert;
}

int cmd_costs(const pogo::CostParams& params, const std::string& out_dir) {
    params.validate();
    std::cout << "Model size table (GB = 1e9 bytes):\n";
    for (const auto& row : pogo::size_table()) {
        std::cout << "  " << row.model << ": 32-bit " << row.bytes32 / 1e9 << " GB, 4-bit "
                  << row.bytes4 / 1e9 << " GB\n";
    }
    double verify = pogo::verify_cost(params);
    double train = pogo::train_cost(params);
    std::cout << "train cost = " << train << " GPU-hours\n"
              << "verify cost = " << verify << " GPU-hours\n"
              << "ratio = " << pogo::cost_ratio(params) << "x\n";
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "size_table.csv", pogo::size_table_csv());
        write_file(fs::path(out_dir) / "cost_sweep.csv",
                   pogo::cost_sweep_csv(params, {0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0}));
        std::cout << "wrote " << out_dir << "/size_table.csv, cost_sweep.csv\n";
    }
    return kExitOk;
}

int cmd_replay(const std::string& config_path, const std::string& transcript_path,
               const std::vector<std::string>& overrides) {
    pogo::ScenarioConfig cfg = load_config(config_path, overrides);
    std::ifstream in(transcript_path);
    if (!in) throw std::runtime_error("cannot open " + transcript_path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    auto res = pogo::replay(cfg, lines);
    if (res.verified) {
        std::cout << "transcript verified (" << lines.size() << " heights)\n";
        return kExitOk;
    }
    std::cout << "divergence at height " << res.divergence_height << "\n";
    return kExitAssert;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PoGO consensus simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, transcript_path;
    std::vector<std::string> overrides;
    uint64_t trials = 2000, runs = 5, leaves = 64, tampered = 16, challenges = 1, seed = 1;
    double sigma = 3.0;
    pogo::CostParams cost_params;

    auto* run = app.add_subcommand("run", "run a scenario and write report + transcript");
    run->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
    run->add_option("--out", out_dir)->default_val("out");
    run->add_option("--set", overrides, "dotted-path config override, key=value");

    auto* props = app.add_subcommand("properties", "run the protocol property suite");
    props->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
    props->add_option("--set", overrides);
    props->add_option("--runs", runs, "seeded runs per property");

    auto* detect = app.add_subcommand("detect", "leaf-challenge detection calibration");
    detect->add_option("--leaves", leaves);
    detect->add_option("--tampered", tampered);
    detect->add_option("--challenges", challenges);
    detect->add_option("--trials", trials);
    detect->add_option("--tolerance-sigma", sigma);
    detect->add_option("--seed", seed);

    auto* costs = app.add_subcommand("costs", "size table and train/verify cost model");
    costs->add_option("--forward", cost_params.full_forward_cost, "32-bit full forward pass, GPU-hours");
    costs->add_option("--backward-multiplier", cost_params.backward_multiplier);
    costs->add_option("--update", cost_params.update_cost);
    costs->add_option("--alpha", cost_params.alpha);
    costs->add_option("--speedup", cost_params.quant_speedup);
    costs->add_option("--merk", cost_params.merk_cost);
    costs->add_option("--out", out_dir)->default_val("");

    auto* rep = app.add_subcommand("replay", "re-execute a scenario against a transcript");
    rep->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
    rep->add_option("--transcript", transcript_path)->required()->check(CLI::ExistingFile);
    rep->add_option("--set", overrides);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*run) return cmd_run(config_path, out_dir, overrides);
        if (*props) return cmd_properties(config_path, overrides, runs);
        if (*detect) return cmd_detect(leaves, tampered, challenges, trials, sigma, seed);
        if (*costs) return cmd_costs(cost_params, out_dir);
        if (*rep) return cmd_replay(config_path, transcript_path, overrides);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
